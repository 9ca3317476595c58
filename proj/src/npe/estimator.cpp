#include "hemo/npe/estimator.hpp"

#include <cmath>

#include "hemo/common/error.hpp"

namespace hemo::npe {

std::vector<double> encode(const Npe<float>& est, const signal::WaveformSegment& x,
                           double age) {
    x.check();
    thread_local Workspace<float> ws;
    est.conditioning(est.normalize_x(x.samples), age, ws);
    std::vector<double> h(kCtxDim);
    for (int i = 0; i < kCtxDim; ++i) h[i] = ws.ctx(i);
    return h;
}

double log_density(const Npe<float>& est, const Phi& phi,
                   const signal::WaveformSegment& x, double age) {
    x.check();
    for (double v : phi)
        if (!std::isfinite(v)) throw Error("npe", "nonfinite_phi", "phi must be finite");
    thread_local Workspace<float> ws;
    const float nll = est.nll(est.normalize_x(x.samples), age, est.normalize_phi(phi), ws);
    double log_p = -static_cast<double>(nll);
    for (int i = 0; i < kPhiDim; ++i) log_p -= std::log(est.norm.phi_std[i]);
    return log_p;
}

std::vector<Phi> sample(const Npe<float>& est, const signal::WaveformSegment& x,
                        double age, int n, std::uint64_t seed) {
    if (n < 1) throw Error("npe", "bad_request", "sample count must be >= 1");
    x.check();
    thread_local Workspace<float> ws;
    est.conditioning(est.normalize_x(x.samples), age, ws);

    Rng rng(seed);
    Mat<float> z(kPhiDim, n);
    for (int c = 0; c < n; ++c)
        for (int i = 0; i < kPhiDim; ++i) z(i, c) = static_cast<float>(rng.normal());

    Mat<float> ctx(kCtxDim, n);
    ctx.colwise() = ws.ctx;

    Mat<float> phi_norm;
    est.flow.invert(z, ctx, phi_norm, ws.sample_scratch);

    std::vector<Phi> out(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c)
        for (int i = 0; i < kPhiDim; ++i)
            out[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
                static_cast<double>(phi_norm(i, c)) * est.norm.phi_std[static_cast<std::size_t>(i)] +
                est.norm.phi_mean[static_cast<std::size_t>(i)];
    return out;
}

} // namespace hemo::npe
