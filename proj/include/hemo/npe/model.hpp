#pragma once

#include <array>
#include <cstdint>

#include "hemo/npe/nn.hpp"

namespace hemo::npe {

// Architecture constants. The conv stack maps 1000 input samples to a
// 90-dim embedding (length trace 1000-499-249-124-41-20-9 at 10 channels);
// age is appended to give the 91-dim conditioning vector.
inline constexpr int kInputLen = 1000;
inline constexpr int kEmbedDim = 90;
inline constexpr int kCtxDim = 91;
inline constexpr int kPhiDim = 4;
inline constexpr int kHidden = 350;
inline constexpr int kFlowSteps = 3;
inline constexpr double kScaleClamp = 7.0;

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

template <typename T>
struct EncoderWs {
    Mat<T> x;  // 1 x 1000
    Mat<T> cols1, y1, cols2, y2, cols3, y3, yp, cols4, y4, cols5, y5;
    Eigen::MatrixXi argmax;
    // backward scratch
    Mat<T> g5, g4, gp, g3, g2, g1, gx, gcols;
    Mat<T> gW1, gW2, gW3, gW4, gW5;
    Vec<T> gb1, gb2, gb3, gb4, gb5;
};

template <typename T>
struct Encoder {
    Conv1d<T> c1{1, 40, 3, 2};
    Conv1d<T> c2{40, 40, 3, 2};
    Conv1d<T> c3{40, 40, 3, 2};
    MaxPool1d<T> pool{3, 3};
    Conv1d<T> c4{40, 20, 3, 2};
    Conv1d<T> c5{20, 10, 3, 2};

    void init(Rng& rng) {
        c1.init(rng);
        c2.init(rng);
        c3.init(rng);
        c4.init(rng);
        c5.init(rng);
    }

    // x_norm: normalized input samples; writes the 90-dim embedding
    void forward(const Vec<T>& x_norm, EncoderWs<T>& ws, Vec<T>& embed) const {
        ws.x = x_norm.transpose();
        c1.forward(ws.x, ws.cols1, ws.y1);
        relu_forward(ws.y1);
        c2.forward(ws.y1, ws.cols2, ws.y2);
        relu_forward(ws.y2);
        c3.forward(ws.y2, ws.cols3, ws.y3);
        relu_forward(ws.y3);
        pool.forward(ws.y3, ws.yp, ws.argmax);
        c4.forward(ws.yp, ws.cols4, ws.y4);
        relu_forward(ws.y4);
        c5.forward(ws.y4, ws.cols5, ws.y5);
        relu_forward(ws.y5);
        embed = Eigen::Map<const Vec<T>>(ws.y5.data(), kEmbedDim);
    }

    void backward(const Vec<T>& g_embed, EncoderWs<T>& ws) const {
        ws.g5 = Eigen::Map<const Mat<T>>(g_embed.data(), ws.y5.rows(), ws.y5.cols());
        relu_backward(ws.y5, ws.g5);
        c5.backward(ws.cols5, ws.g5, static_cast<int>(ws.y4.cols()), ws.gW5, ws.gb5,
                    ws.gcols, ws.g4);
        relu_backward(ws.y4, ws.g4);
        c4.backward(ws.cols4, ws.g4, static_cast<int>(ws.yp.cols()), ws.gW4, ws.gb4,
                    ws.gcols, ws.gp);
        pool.backward(ws.argmax, ws.gp, static_cast<int>(ws.y3.cols()), ws.g3);
        relu_backward(ws.y3, ws.g3);
        c3.backward(ws.cols3, ws.g3, static_cast<int>(ws.y2.cols()), ws.gW3, ws.gb3,
                    ws.gcols, ws.g2);
        relu_backward(ws.y2, ws.g2);
        c2.backward(ws.cols2, ws.g2, static_cast<int>(ws.y1.cols()), ws.gW2, ws.gb2,
                    ws.gcols, ws.g1);
        relu_backward(ws.y1, ws.g1);
        c1.backward(ws.cols1, ws.g1, kInputLen, ws.gW1, ws.gb1, ws.gcols, ws.gx);
    }
};

// ---------------------------------------------------------------------------
// MADE conditioner: [phi(4); ctx(91)] -> 350 -> 350 -> 350 -> (mu, log-scale)
// ---------------------------------------------------------------------------

template <typename T>
struct CondWs {
    Mat<T> in;            // 95 x n
    Mat<T> a1, a2, a3;    // post-ReLU activations
    Mat<T> out;           // 8 x n
    Mat<T> g3, g2, g1, gin;
    Mat<T> gW1, gW2, gW3, gWo;
    Vec<T> gb1, gb2, gb3, gbo;
};

template <typename T>
struct Conditioner {
    MaskedLinear<T> l1, l2, l3, lout;

    // Hidden degrees cycle 0..3; degree-0 units read only the context, so
    // every output (including dimension 1) can see the conditioning vector.
    static int hidden_degree(int j) { return j % kPhiDim; }

    void build_masks() {
        l1.mask.resize(kHidden, kPhiDim + kCtxDim);
        for (int j = 0; j < kHidden; ++j) {
            for (int i = 0; i < kPhiDim; ++i)
                l1.mask(j, i) = (i + 1 <= hidden_degree(j)) ? T(1) : T(0);
            for (int i = 0; i < kCtxDim; ++i) l1.mask(j, kPhiDim + i) = T(1);
        }
        l2.mask.resize(kHidden, kHidden);
        l3.mask.resize(kHidden, kHidden);
        for (int j = 0; j < kHidden; ++j)
            for (int i = 0; i < kHidden; ++i) {
                const T m = (hidden_degree(i) <= hidden_degree(j)) ? T(1) : T(0);
                l2.mask(j, i) = m;
                l3.mask(j, i) = m;
            }
        lout.mask.resize(2 * kPhiDim, kHidden);
        for (int o = 0; o < 2 * kPhiDim; ++o) {
            const int deg_out = (o % kPhiDim) + 1;  // rows: mu_1..4, sigma_1..4
            for (int j = 0; j < kHidden; ++j)
                lout.mask(o, j) = (hidden_degree(j) < deg_out) ? T(1) : T(0);
        }
    }

    void init(Rng& rng) {
        build_masks();
        l1.init(rng, kHidden, kPhiDim + kCtxDim);
        l2.init(rng, kHidden, kHidden);
        l3.init(rng, kHidden, kHidden);
        lout.init_zero(2 * kPhiDim, kHidden);  // flow starts at the identity
    }

    // phi: kPhiDim x n, ctx: kCtxDim x n; out rows [mu_1..4, sraw_1..4]
    void forward(const Mat<T>& phi, const Mat<T>& ctx, CondWs<T>& ws) const {
        const auto n = phi.cols();
        ws.in.resize(kPhiDim + kCtxDim, n);
        ws.in.topRows(kPhiDim) = phi;
        ws.in.bottomRows(kCtxDim) = ctx;
        l1.forward(ws.in, ws.a1);
        relu_forward(ws.a1);
        l2.forward(ws.a1, ws.a2);
        relu_forward(ws.a2);
        l3.forward(ws.a2, ws.a3);
        relu_forward(ws.a3);
        lout.forward(ws.a3, ws.out);
    }

    // g_out: 8 x n; writes grads and the input gradient split
    void backward(const Mat<T>& g_out, CondWs<T>& ws, Mat<T>& g_phi, Mat<T>& g_ctx) const {
        lout.backward(ws.a3, g_out, ws.gWo, ws.gbo, ws.g3);
        relu_backward(ws.a3, ws.g3);
        l3.backward(ws.a2, ws.g3, ws.gW3, ws.gb3, ws.g2);
        relu_backward(ws.a2, ws.g2);
        l2.backward(ws.a1, ws.g2, ws.gW2, ws.gb2, ws.g1);
        relu_backward(ws.a1, ws.g1);
        l1.backward(ws.in, ws.g1, ws.gW1, ws.gb1, ws.gin);
        g_phi = ws.gin.topRows(kPhiDim);
        g_ctx = ws.gin.bottomRows(kCtxDim);
    }
};

// ---------------------------------------------------------------------------
// Three-step autoregressive affine flow with fixed shuffles between steps
// ---------------------------------------------------------------------------

template <typename T>
struct FlowWs {
    std::array<CondWs<T>, kFlowSteps> cond;
    std::array<Mat<T>, kFlowSteps> phi_in;  // step inputs, 4 x 1
    std::array<Vec<T>, kFlowSteps> mu, sraw, sig;
    Vec<T> z;
    // backward scratch
    Mat<T> g_out, g_phi, g_ctx;
    Vec<T> g_cur, g_prev;
};

template <typename T>
struct Flow {
    std::array<Conditioner<T>, kFlowSteps> steps;
    std::array<std::array<int, kPhiDim>, kFlowSteps - 1> perms{};

    void init(Rng& rng) {
        for (auto& s : steps) s.init(rng);
        for (auto& p : perms) {
            for (int i = 0; i < kPhiDim; ++i) p[i] = i;
            for (int i = kPhiDim - 1; i > 0; --i)
                std::swap(p[i], p[rng.uniform_index(static_cast<std::uint64_t>(i) + 1)]);
        }
    }

    static T clamp_scale(T s) {
        return std::min(std::max(s, T(-kScaleClamp)), T(kScaleClamp));
    }

    // phi_norm -> z; returns log |J| (sum of log-scales over steps and dims)
    T forward(const Vec<T>& phi_norm, const Vec<T>& ctx, FlowWs<T>& ws) const {
        Vec<T> cur = phi_norm;
        T logdet = T(0);
        for (int k = 0; k < kFlowSteps; ++k) {
            ws.phi_in[k] = cur;
            steps[k].forward(ws.phi_in[k], ctx, ws.cond[k]);
            ws.mu[k] = ws.cond[k].out.col(0).head(kPhiDim);
            ws.sraw[k] = ws.cond[k].out.col(0).tail(kPhiDim);
            ws.sig[k].resize(kPhiDim);
            Vec<T> u(kPhiDim);
            for (int i = 0; i < kPhiDim; ++i) {
                ws.sig[k](i) = clamp_scale(ws.sraw[k](i));
                u(i) = cur(i) * std::exp(ws.sig[k](i)) + ws.mu[k](i);
                logdet += ws.sig[k](i);
            }
            if (k + 1 < kFlowSteps) {
                Vec<T> shuffled(kPhiDim);
                for (int i = 0; i < kPhiDim; ++i) shuffled(i) = u(perms[k][i]);
                cur = shuffled;
            } else {
                cur = u;
            }
        }
        ws.z = cur;
        return logdet;
    }

    // backward of nll = z^T z / 2 + const - logdet; g_ctx_total accumulates
    // the conditioning-vector gradient over the three steps
    void backward(FlowWs<T>& ws, Vec<T>& g_ctx_total) const {
        g_ctx_total = Vec<T>::Zero(kCtxDim);
        ws.g_cur = ws.z;  // d(0.5 z^2)/dz
        for (int k = kFlowSteps - 1; k >= 0; --k) {
            if (k + 1 < kFlowSteps) {
                // undo the shuffle: s(i) = u(perm(i))
                ws.g_prev.resize(kPhiDim);
                for (int i = 0; i < kPhiDim; ++i) ws.g_prev(perms[k][i]) = ws.g_cur(i);
                ws.g_cur = ws.g_prev;
            }
            ws.g_out.resize(2 * kPhiDim, 1);
            Vec<T> g_phi_direct(kPhiDim);
            for (int i = 0; i < kPhiDim; ++i) {
                const T gu = ws.g_cur(i);
                const T es = std::exp(ws.sig[k](i));
                const T phi_i = ws.phi_in[k](i, 0);
                g_phi_direct(i) = gu * es;
                ws.g_out(i, 0) = gu;  // d/d mu
                const bool inside = std::abs(ws.sraw[k](i)) < T(kScaleClamp);
                ws.g_out(kPhiDim + i, 0) = inside ? gu * phi_i * es - T(1) : T(0);
            }
            steps[k].backward(ws.g_out, ws.cond[k], ws.g_phi, ws.g_ctx);
            g_ctx_total += ws.g_ctx.col(0);
            ws.g_cur = g_phi_direct + ws.g_phi.col(0);
        }
    }

    // batched inversion z -> phi_norm (columns are independent samples)
    void invert(const Mat<T>& z, const Mat<T>& ctx, Mat<T>& phi_norm,
                CondWs<T>& scratch) const {
        Mat<T> u = z;
        Mat<T> cur(kPhiDim, z.cols());
        for (int k = kFlowSteps - 1; k >= 0; --k) {
            cur.setZero();
            for (int i = 0; i < kPhiDim; ++i) {
                steps[k].forward(cur, ctx, scratch);
                for (Eigen::Index c = 0; c < z.cols(); ++c) {
                    const T mu = scratch.out(i, c);
                    const T sg = clamp_scale(scratch.out(kPhiDim + i, c));
                    cur(i, c) = (u(i, c) - mu) * std::exp(-sg);
                }
            }
            if (k > 0) {
                // undo the shuffle feeding this step
                for (Eigen::Index c = 0; c < z.cols(); ++c)
                    for (int i = 0; i < kPhiDim; ++i) u(perms[k - 1][i], c) = cur(i, c);
            }
        }
        phi_norm = cur;
    }
};

} // namespace hemo::npe
