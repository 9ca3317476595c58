#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hemo/npe/model.hpp"
#include "hemo/signal/pipeline.hpp"

namespace hemo::npe {

// Normalization applied before the networks: per-biomarker mean/std, one
// scalar mean/std per modality over the time dimension, and the fixed age
// mapping (age - 50)/25.
struct NormStats {
    std::array<double, kPhiDim> phi_mean{0.0, 0.0, 0.0, 0.0};
    std::array<double, kPhiDim> phi_std{1.0, 1.0, 1.0, 1.0};
    double x_mean = 0.0;
    double x_std = 1.0;
    double age_center = 50.0;
    double age_scale = 25.0;
};

// Biomarker vector order used throughout: HR [bpm], CO [L/min],
// SVR [Pa s / m^3], LVET [ms].
using Phi = std::array<double, kPhiDim>;

template <typename T>
struct Workspace {
    EncoderWs<T> enc;
    FlowWs<T> flow;
    Vec<T> embed, ctx, g_ctx, g_embed;
    CondWs<T> sample_scratch;
};

// The trained posterior estimator. Parameters are visited in a fixed order
// (encoder convs, then flow steps) by the optimizer, the serializer and the
// finite-difference checks.
template <typename T>
struct Npe {
    Encoder<T> enc;
    Flow<T> flow;
    NormStats norm;
    signal::Modality modality = signal::Modality::apw;

    void init(std::uint64_t seed) {
        Rng rng(seed);
        enc.init(rng);
        flow.init(rng);
    }

    template <typename F>
    void visit_params(F&& f) {
        auto mat = [&](Mat<T>& m) { f(m.data(), static_cast<std::size_t>(m.size())); };
        auto vec = [&](Vec<T>& v) { f(v.data(), static_cast<std::size_t>(v.size())); };
        for (Conv1d<T>* c : {&enc.c1, &enc.c2, &enc.c3, &enc.c4, &enc.c5}) {
            mat(c->W);
            vec(c->b);
        }
        for (auto& s : flow.steps)
            for (MaskedLinear<T>* l : {&s.l1, &s.l2, &s.l3, &s.lout}) {
                mat(l->W);
                vec(l->b);
            }
    }

    std::size_t param_count() {
        std::size_t n = 0;
        visit_params([&](T*, std::size_t k) { n += k; });
        return n;
    }

    // gradients from the workspace in the matching visitation order
    template <typename F>
    static void visit_grads(Workspace<T>& ws, F&& f) {
        auto mat = [&](Mat<T>& m) { f(m.data(), static_cast<std::size_t>(m.size())); };
        auto vec = [&](Vec<T>& v) { f(v.data(), static_cast<std::size_t>(v.size())); };
        mat(ws.enc.gW1); vec(ws.enc.gb1);
        mat(ws.enc.gW2); vec(ws.enc.gb2);
        mat(ws.enc.gW3); vec(ws.enc.gb3);
        mat(ws.enc.gW4); vec(ws.enc.gb4);
        mat(ws.enc.gW5); vec(ws.enc.gb5);
        for (auto& c : ws.flow.cond) {
            mat(c.gW1); vec(c.gb1);
            mat(c.gW2); vec(c.gb2);
            mat(c.gW3); vec(c.gb3);
            mat(c.gWo); vec(c.gbo);
        }
    }

    double normalize_age(double age) const { return (age - norm.age_center) / norm.age_scale; }

    // x_norm must already be normalized; appends normalized age
    void conditioning(const Vec<T>& x_norm, double age, Workspace<T>& ws) const {
        enc.forward(x_norm, ws.enc, ws.embed);
        ws.ctx.resize(kCtxDim);
        ws.ctx.head(kEmbedDim) = ws.embed;
        ws.ctx(kEmbedDim) = static_cast<T>(normalize_age(age));
    }

    // negative log-likelihood of one (phi, x, age) triple in normalized space
    T nll(const Vec<T>& x_norm, double age, const Vec<T>& phi_norm, Workspace<T>& ws) const {
        conditioning(x_norm, age, ws);
        const T logdet = flow.forward(phi_norm, ws.ctx, ws.flow);
        const T quad = T(0.5) * ws.flow.z.squaredNorm();
        return quad + T(0.5 * kPhiDim * std::log(2.0 * M_PI)) - logdet;
    }

    // reverse pass of nll; per-sample parameter grads land in ws
    void nll_backward(Workspace<T>& ws) const {
        flow.backward(ws.flow, ws.g_ctx);
        ws.g_embed = ws.g_ctx.head(kEmbedDim);
        enc.backward(ws.g_embed, ws.enc);
    }

    Vec<T> normalize_x(const std::vector<float>& samples) const {
        Vec<T> x(kInputLen);
        for (int i = 0; i < kInputLen; ++i)
            x(i) = static_cast<T>((samples[i] - norm.x_mean) / norm.x_std);
        return x;
    }

    Vec<T> normalize_phi(const Phi& phi) const {
        Vec<T> p(kPhiDim);
        for (int i = 0; i < kPhiDim; ++i)
            p(i) = static_cast<T>((phi[i] - norm.phi_mean[i]) / norm.phi_std[i]);
        return p;
    }
};

// ------------------------- public inference ops ---------------------------

// 91-dim conditioning vector (normalized embedding + normalized age)
std::vector<double> encode(const Npe<float>& est, const signal::WaveformSegment& x,
                           double age);

// log p(phi | x, age) in physical units (normalization Jacobian included)
double log_density(const Npe<float>& est, const Phi& phi,
                   const signal::WaveformSegment& x, double age);

// n posterior draws in physical units; deterministic per seed
std::vector<Phi> sample(const Npe<float>& est, const signal::WaveformSegment& x,
                        double age, int n, std::uint64_t seed);

} // namespace hemo::npe
