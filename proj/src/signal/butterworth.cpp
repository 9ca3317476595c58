#include "hemo/signal/butterworth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "hemo/common/error.hpp"

namespace hemo::signal {

namespace {

using cplx = std::complex<double>;

// expand a polynomial from its roots (leading coefficient 1)
std::vector<cplx> poly_from_roots(const std::vector<cplx>& roots) {
    std::vector<cplx> p{1.0};
    for (const auto& r : roots) {
        std::vector<cplx> q(p.size() + 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            q[i] += p[i];
            q[i + 1] -= p[i] * r;
        }
        p = std::move(q);
    }
    return p;
}

cplx eval_poly(const std::array<double, 5>& c, cplx z) {
    cplx acc = 0.0;
    for (double v : c) acc = acc * z + v;
    return acc;
}

} // namespace

BandpassFilter BandpassFilter::design(double f_low_hz, double f_high_hz, double fs_hz) {
    if (!(0.0 < f_low_hz && f_low_hz < f_high_hz && f_high_hz < 0.5 * fs_hz))
        throw Error("signal", "bad_filter", "need 0 < f_low < f_high < fs/2");

    const double fs2 = 2.0 * fs_hz;
    const double w1 = fs2 * std::tan(M_PI * f_low_hz / fs_hz);
    const double w2 = fs2 * std::tan(M_PI * f_high_hz / fs_hz);
    const double bw = w2 - w1;
    const double w0sq = w1 * w2;

    // order-2 Butterworth prototype poles, mapped lowpass -> bandpass
    std::vector<cplx> s_poles;
    for (int k = 0; k < 2; ++k) {
        const double theta = M_PI * (2.0 * k + 1.0) / 4.0 + M_PI / 2.0;
        const cplx p(std::cos(theta), std::sin(theta));
        const cplx pb = p * bw;
        const cplx disc = std::sqrt(pb * pb - 4.0 * w0sq);
        s_poles.push_back(0.5 * (pb + disc));
        s_poles.push_back(0.5 * (pb - disc));
    }

    // bilinear transform; the two zeros at s = 0 map to z = 1, the two
    // zeros at infinity map to z = -1
    std::vector<cplx> z_poles;
    for (const auto& s : s_poles) z_poles.push_back((fs2 + s) / (fs2 - s));
    const std::vector<cplx> z_zeros{1.0, 1.0, -1.0, -1.0};

    const auto num = poly_from_roots(z_zeros);
    const auto den = poly_from_roots(z_poles);

    BandpassFilter f;
    for (int i = 0; i < 5; ++i) {
        f.b[i] = num[i].real();
        f.a[i] = den[i].real();
    }
    // normalize to unit gain at the (warped) centre frequency
    const double wc = 2.0 * std::atan(std::sqrt(w0sq) / fs2);
    const cplx zc(std::cos(wc), std::sin(wc));
    const double gain = std::abs(eval_poly(f.b, zc) / eval_poly(f.a, zc));
    for (auto& v : f.b) v /= gain;
    return f;
}

double BandpassFilter::magnitude(double f_hz, double fs_hz) const {
    const double w = 2.0 * M_PI * f_hz / fs_hz;
    const cplx z(std::cos(w), std::sin(w));
    return std::abs(eval_poly(b, z) / eval_poly(a, z));
}

namespace {

// direct-form II transposed with initial conditions (state length 4)
void lfilter(const BandpassFilter& f, const std::vector<double>& x,
             std::array<double, 4> z, std::vector<double>& y) {
    y.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        const double yi = f.b[0] * xi + z[0];
        z[0] = f.b[1] * xi + z[1] - f.a[1] * yi;
        z[1] = f.b[2] * xi + z[2] - f.a[2] * yi;
        z[2] = f.b[3] * xi + z[3] - f.a[3] * yi;
        z[3] = f.b[4] * xi - f.a[4] * yi;
        y[i] = yi;
    }
}

// steady-state filter state for a unit step input: solve (I - A^T) zi = B
// with A the companion matrix of the denominator
std::array<double, 4> lfilter_zi(const BandpassFilter& f) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    for (int i = 0; i < 4; ++i) m(i, 0) += f.a[i + 1];  // -(-a[i+1])
    for (int i = 0; i + 1 < 4; ++i) m(i, i + 1) -= 1.0;

    Eigen::Vector4d B;
    for (int i = 0; i < 4; ++i) B(i) = f.b[i + 1] - f.a[i + 1] * f.b[0];
    const Eigen::Vector4d zi = m.partialPivLu().solve(B);
    return {zi(0), zi(1), zi(2), zi(3)};
}

} // namespace

std::vector<double> filtfilt(const BandpassFilter& f, const std::vector<double>& x) {
    const std::size_t n = x.size();
    const std::size_t padlen = 15;
    if (n <= padlen)
        throw Error("signal", "too_short", "filtfilt needs more than 15 samples");

    // odd reflection padding at both ends
    std::vector<double> ext;
    ext.reserve(n + 2 * padlen);
    for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 2; i <= padlen + 1; ++i) ext.push_back(2.0 * x[n - 1] - x[n - i]);

    const auto zi = lfilter_zi(f);
    auto scale_state = [&](double x0) {
        auto z = zi;
        for (auto& v : z) v *= x0;
        return z;
    };

    std::vector<double> fwd, bwd;
    lfilter(f, ext, scale_state(ext.front()), fwd);
    std::reverse(fwd.begin(), fwd.end());
    lfilter(f, fwd, scale_state(fwd.front()), bwd);
    std::reverse(bwd.begin(), bwd.end());

    return {bwd.begin() + static_cast<std::ptrdiff_t>(padlen),
            bwd.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

} // namespace hemo::signal
