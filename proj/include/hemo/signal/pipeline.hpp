#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hemo/signal/butterworth.hpp"

namespace hemo::signal {

enum class Modality : std::uint8_t { apw = 0, ppg = 1 };

// Stochastic measurement model parameters. Additive Gaussian + AR(1) red
// noise hit a random contiguous sub-window of 80% of segments; 30% are
// vertically flipped about their mean. Intensities are exponentially
// distributed as a fraction of the clean segment's standard deviation
// (fixed_intensity pins the fraction instead, for controlled-SNR sets).
struct NoiseSpec {
    double p_additive = 0.8;
    double p_flip = 0.3;
    double intensity_mean = 0.1;
    bool fixed_intensity = false;
    double red_ar_coefficient = 0.95;
    double window_fraction_min = 0.3;
    double window_fraction_max = 1.0;

    void validate() const;
};

struct NoiseRecord {
    bool additive = false;
    bool flipped = false;
    double sigma_gauss = 0.0;       // absolute std of the white component
    double sigma_red = 0.0;         // absolute std of the red component
    std::uint32_t window_start = 0; // additive sub-window [start, start+len)
    std::uint32_t window_len = 0;
};

// An 8-second biosignal at 125 Hz (1000 samples) plus provenance.
struct WaveformSegment {
    static constexpr std::size_t kSamples = 1000;
    static constexpr double kSampleRate = 125.0;

    std::vector<float> samples;   // exactly kSamples
    Modality modality = Modality::apw;
    std::uint64_t subject_id = 0;
    std::uint32_t crop_offset = 0;  // samples into the source beat
    NoiseRecord noise;

    void check() const;  // throws unless samples.size() == kSamples
};

// Tile one beat periodically and crop 1000 samples at a uniformly random
// offset within the beat, so every intra-beat phase can start a segment.
WaveformSegment stack_and_crop(const std::vector<double>& beat, Modality modality,
                               std::uint64_t subject_id, std::uint64_t seed);

// Apply the stochastic measurement model; deterministic per seed, the
// record makes the draw reproducible/auditable.
WaveformSegment apply_noise(const WaveformSegment& clean, const NoiseSpec& spec,
                            std::uint64_t seed);

// PPG from the stored-volume series of a terminal bed: min-max normalized
// pulsatile variation, range exactly [0, 1]. Feeds stack_and_crop.
std::vector<double> derive_ppg(const std::vector<double>& bed_volume_series);

// Zero-phase second-order Butterworth bandpass, 0.5-10 Hz at 125 Hz.
WaveformSegment bandpass(const WaveformSegment& seg);
const BandpassFilter& default_bandpass_filter();

// 10 log10( P(clean) / P(noisy - clean) ) with mean-removed powers,
// saturated at +100 dB for identical inputs.
double snr_db(const std::vector<float>& clean, const std::vector<float>& noisy);

inline constexpr double kSnrSaturationDb = 100.0;

} // namespace hemo::signal
