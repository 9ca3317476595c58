#pragma once

#include <string>

#include "hemo/npe/train.hpp"

namespace hemo::npe {

// model.bin: versioned little-endian container with the architecture
// fingerprint, flow permutations, normalization statistics, float32
// weights, and the TrainConfig + split provenance.
void save_model(const std::string& path, const Npe<float>& model, const TrainConfig& tc,
                const SplitIndices& split, const LossCurve& curve);

struct LoadedModel {
    Npe<float> model;
    TrainConfig config;
    SplitIndices split;
    LossCurve curve;
};

LoadedModel load_model(const std::string& path);

} // namespace hemo::npe
