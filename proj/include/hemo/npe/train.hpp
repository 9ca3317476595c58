#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hemo/npe/estimator.hpp"
#include "hemo/population/dataset.hpp"

namespace hemo::npe {

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-6;
    int batch_size = 100;
    int epochs = 500;
    double split_train = 0.7;
    double split_val = 0.1;
    double split_test = 0.2;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

// Labeled samples in physical units.
struct SampleSet {
    std::vector<std::vector<float>> x;  // each kInputLen samples
    std::vector<double> age;
    std::vector<Phi> phi;

    std::size_t size() const { return x.size(); }
};

SampleSet samples_from_dataset(const population::FinalDataset& ds,
                               signal::Modality modality);

struct SplitIndices {
    std::vector<std::uint32_t> train, val, test;
    nlohmann::json to_json() const;
};

struct LossCurve {
    std::vector<double> train_nll;
    std::vector<double> val_nll;
    int best_epoch = -1;
};

struct TrainResult {
    Npe<float> model;
    LossCurve curve;
    SplitIndices split;
};

// Pre-normalized training tensors (built once per run).
struct Tensors {
    Mat<float> X;              // kInputLen x N
    std::vector<double> age;   // raw years
    Mat<float> PhiN;           // kPhiDim x N
};

Tensors normalize_set(const SampleSet& set, const NormStats& norm);

// Mean NLL and mean parameter gradient over one minibatch. The parallel
// path shards samples over OpenMP threads with per-thread float64
// accumulators reduced in thread order; nthreads == 1 is the serial
// reference used by the equivalence tests and the benchmark.
double batch_loss_grad(const Npe<float>& model, const Tensors& data,
                       const std::vector<std::uint32_t>& batch,
                       std::vector<double>& grad_mean, int nthreads);

// Forward-only mean NLL over an index set.
double mean_nll(const Npe<float>& model, const Tensors& data,
                const std::vector<std::uint32_t>& idx, int nthreads = -1);
double mean_nll_set(const Npe<float>& model, const SampleSet& set);

// Maximum-likelihood training with Adam; checkpoints every epoch and
// returns the weights with the lowest validation NLL.
TrainResult train(const SampleSet& data, signal::Modality modality,
                  const TrainConfig& tc, std::uint64_t seed);
TrainResult train(const population::FinalDataset& ds, signal::Modality modality,
                  const TrainConfig& tc, std::uint64_t seed);

// Hybrid fine-tuning: equal-weight sum of the calibration-set NLL and the
// synthetic-set NLL, with the flow weights frozen (encoder-only updates).
// Normalization statistics stay exactly as stored in the input model.
TrainResult finetune_hybrid(const Npe<float>& est, const SampleSet& calibration,
                            const SampleSet& synthetic, const TrainConfig& tc,
                            std::uint64_t seed);

} // namespace hemo::npe
