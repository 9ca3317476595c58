#include "hemo/signal/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "hemo/common/error.hpp"
#include "hemo/common/rng.hpp"

namespace hemo::signal {

void NoiseSpec::validate() const {
    if (!(p_additive >= 0.0 && p_additive <= 1.0 && p_flip >= 0.0 && p_flip <= 1.0))
        throw Error("signal", "bad_noise_spec", "probabilities must lie in [0, 1]");
    if (!(intensity_mean >= 0.0))
        throw Error("signal", "bad_noise_spec", "intensity must be non-negative");
    if (!(red_ar_coefficient >= 0.0 && red_ar_coefficient < 1.0))
        throw Error("signal", "bad_noise_spec", "AR(1) coefficient must lie in [0, 1)");
    if (!(window_fraction_min > 0.0 && window_fraction_min <= window_fraction_max &&
          window_fraction_max <= 1.0))
        throw Error("signal", "bad_noise_spec", "window fractions must satisfy 0 < lo <= hi <= 1");
}

void WaveformSegment::check() const {
    if (samples.size() != kSamples)
        throw Error("signal", "bad_segment",
                    "segment must hold exactly " + std::to_string(kSamples) + " samples");
}

WaveformSegment stack_and_crop(const std::vector<double>& beat, Modality modality,
                               std::uint64_t subject_id, std::uint64_t seed) {
    const std::size_t blen = beat.size();
    if (blen < 2) throw Error("signal", "bad_beat", "beat must hold at least 2 samples");

    Rng rng(seed);
    const auto offset = static_cast<std::uint32_t>(rng.uniform_index(blen));

    WaveformSegment seg;
    seg.modality = modality;
    seg.subject_id = subject_id;
    seg.crop_offset = offset;
    seg.samples.resize(WaveformSegment::kSamples);
    for (std::size_t i = 0; i < WaveformSegment::kSamples; ++i)
        seg.samples[i] = static_cast<float>(beat[(offset + i) % blen]);
    return seg;
}

namespace {

double mean_of(const std::vector<float>& x) {
    double m = 0.0;
    for (float v : x) m += v;
    return m / static_cast<double>(x.size());
}

double std_of(const std::vector<float>& x) {
    const double m = mean_of(x);
    double s = 0.0;
    for (float v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size()));
}

} // namespace

WaveformSegment apply_noise(const WaveformSegment& clean, const NoiseSpec& spec,
                            std::uint64_t seed) {
    clean.check();
    spec.validate();
    Rng rng(seed);

    WaveformSegment out = clean;
    const bool additive = rng.bernoulli(spec.p_additive);
    const bool flip = rng.bernoulli(spec.p_flip);

    if (additive) {
        const double sd = std_of(clean.samples);
        const double frac_g =
            spec.fixed_intensity ? spec.intensity_mean : rng.exponential(spec.intensity_mean);
        const double frac_r =
            spec.fixed_intensity ? spec.intensity_mean : rng.exponential(spec.intensity_mean);
        const double sigma_g = frac_g * sd;
        const double sigma_r = frac_r * sd;

        const double wfrac = rng.uniform(spec.window_fraction_min, spec.window_fraction_max);
        auto wlen = static_cast<std::uint32_t>(
            std::clamp<double>(std::lround(wfrac * WaveformSegment::kSamples), 1.0,
                               WaveformSegment::kSamples));
        const auto wstart = static_cast<std::uint32_t>(
            rng.uniform_index(WaveformSegment::kSamples - wlen + 1));

        // AR(1) red noise started from its stationary distribution
        const double rho = spec.red_ar_coefficient;
        const double innov = sigma_r * std::sqrt(1.0 - rho * rho);
        double red = sigma_r * rng.normal();
        for (std::uint32_t i = 0; i < wlen; ++i) {
            const double w = sigma_g * rng.normal();
            out.samples[wstart + i] =
                static_cast<float>(static_cast<double>(out.samples[wstart + i]) + w + red);
            red = rho * red + innov * rng.normal();
        }
        out.noise.additive = true;
        out.noise.sigma_gauss = sigma_g;
        out.noise.sigma_red = sigma_r;
        out.noise.window_start = wstart;
        out.noise.window_len = wlen;
    }

    if (flip) {
        const double m = mean_of(out.samples);
        for (auto& v : out.samples) v = static_cast<float>(2.0 * m - static_cast<double>(v));
        out.noise.flipped = true;
    }
    return out;
}

std::vector<double> derive_ppg(const std::vector<double>& bed_volume_series) {
    if (bed_volume_series.size() < 2)
        throw Error("signal", "bad_series", "need at least one beat of volume samples");
    const auto [mn, mx] =
        std::minmax_element(bed_volume_series.begin(), bed_volume_series.end());
    if (!(*mx > *mn))
        throw Error("signal", "degenerate_signal", "constant volume series has no pulsation");
    std::vector<double> ppg(bed_volume_series.size());
    const double inv = 1.0 / (*mx - *mn);
    for (std::size_t i = 0; i < ppg.size(); ++i) ppg[i] = (bed_volume_series[i] - *mn) * inv;
    return ppg;
}

const BandpassFilter& default_bandpass_filter() {
    static const BandpassFilter f =
        BandpassFilter::design(0.5, 10.0, WaveformSegment::kSampleRate);
    return f;
}

WaveformSegment bandpass(const WaveformSegment& seg) {
    seg.check();
    std::vector<double> x(seg.samples.begin(), seg.samples.end());
    const auto y = filtfilt(default_bandpass_filter(), x);
    WaveformSegment out = seg;
    for (std::size_t i = 0; i < y.size(); ++i) out.samples[i] = static_cast<float>(y[i]);
    return out;
}

double snr_db(const std::vector<float>& clean, const std::vector<float>& noisy) {
    if (clean.size() != noisy.size() || clean.empty())
        throw Error("signal", "length_mismatch", "snr needs equal-length series");
    const auto n = clean.size();
    double mc = 0.0, md = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mc += clean[i];
        md += static_cast<double>(noisy[i]) - clean[i];
    }
    mc /= static_cast<double>(n);
    md /= static_cast<double>(n);
    double pc = 0.0, pd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = clean[i] - mc;
        const double d = (static_cast<double>(noisy[i]) - clean[i]) - md;
        pc += c * c;
        pd += d * d;
    }
    if (pd <= 0.0) return kSnrSaturationDb;
    const double v = 10.0 * std::log10(pc / pd);
    return std::min(v, kSnrSaturationDb);
}

} // namespace hemo::signal
