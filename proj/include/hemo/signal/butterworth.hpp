#pragma once

#include <array>
#include <vector>

namespace hemo::signal {

// Digital Butterworth bandpass (order-2 prototype -> degree-4 transfer
// function) designed by pole prewarping + bilinear transform. Coefficients
// are a pure function of (f_low, f_high, fs) and bit-stable across runs.
struct BandpassFilter {
    std::array<double, 5> b{};  // numerator, b[0] x[n] + ...
    std::array<double, 5> a{};  // denominator, a[0] = 1

    static BandpassFilter design(double f_low_hz, double f_high_hz, double fs_hz);

    // |H(e^{j 2 pi f / fs})| of a single pass
    double magnitude(double f_hz, double fs_hz) const;
};

// Zero-phase (forward-backward) filtering with odd-reflection padding and
// steady-state initial conditions; a linear map of the input.
std::vector<double> filtfilt(const BandpassFilter& f, const std::vector<double>& x);

} // namespace hemo::signal
