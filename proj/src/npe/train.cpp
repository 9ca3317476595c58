#include "hemo/npe/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hemo/common/error.hpp"
#include "hemo/common/parallel.hpp"
#include "hemo/common/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hemo::npe {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw Error("npe", "bad_config", "learning rate must be > 0");
    if (weight_decay < 0.0) throw Error("npe", "bad_config", "weight decay must be >= 0");
    if (batch_size < 1) throw Error("npe", "bad_config", "batch size must be >= 1");
    if (epochs < 1) throw Error("npe", "bad_config", "epochs must be >= 1");
    const double s = split_train + split_val + split_test;
    if (std::abs(s - 1.0) > 1e-9)
        throw Error("npe", "bad_config", "split fractions must sum to 1");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"learning_rate", learning_rate}, {"weight_decay", weight_decay},
            {"batch_size", batch_size},       {"epochs", epochs},
            {"split_train", split_train},     {"split_val", split_val},
            {"split_test", split_test}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig tc;
    tc.learning_rate = j.value("learning_rate", tc.learning_rate);
    tc.weight_decay = j.value("weight_decay", tc.weight_decay);
    tc.batch_size = j.value("batch_size", tc.batch_size);
    tc.epochs = j.value("epochs", tc.epochs);
    tc.split_train = j.value("split_train", tc.split_train);
    tc.split_val = j.value("split_val", tc.split_val);
    tc.split_test = j.value("split_test", tc.split_test);
    tc.validate();
    return tc;
}

nlohmann::json SplitIndices::to_json() const {
    return {{"train", train}, {"val", val}, {"test", test}};
}

SampleSet samples_from_dataset(const population::FinalDataset& ds,
                               signal::Modality modality) {
    SampleSet s;
    s.x.reserve(ds.records.size());
    for (const auto& r : ds.records) {
        const auto& seg = modality == signal::Modality::apw ? r.apw : r.ppg;
        s.x.emplace_back(seg.samples);
        s.age.push_back(r.subject.age_years);
        s.phi.push_back(Phi{r.subject.hr_bpm, r.subject.co_lpm, r.subject.svr_pa_s_m3,
                            r.subject.lvet_ms});
    }
    return s;
}

Tensors normalize_set(const SampleSet& set, const NormStats& norm) {
    const auto n = static_cast<Eigen::Index>(set.size());
    Tensors t;
    t.X.resize(kInputLen, n);
    t.PhiN.resize(kPhiDim, n);
    t.age = set.age;
    for (Eigen::Index c = 0; c < n; ++c) {
        for (int i = 0; i < kInputLen; ++i)
            t.X(i, c) = static_cast<float>((set.x[c][i] - norm.x_mean) / norm.x_std);
        for (int i = 0; i < kPhiDim; ++i)
            t.PhiN(i, c) =
                static_cast<float>((set.phi[c][i] - norm.phi_mean[i]) / norm.phi_std[i]);
    }
    return t;
}

namespace {

NormStats compute_norm(const SampleSet& set, const std::vector<std::uint32_t>& train_idx) {
    NormStats norm;
    double xm = 0.0;
    std::size_t count = 0;
    for (auto i : train_idx) {
        for (float v : set.x[i]) xm += v;
        count += set.x[i].size();
    }
    xm /= static_cast<double>(count);
    double xv = 0.0;
    for (auto i : train_idx)
        for (float v : set.x[i]) xv += (v - xm) * (v - xm);
    norm.x_mean = xm;
    norm.x_std = std::max(std::sqrt(xv / static_cast<double>(count)), 1e-12);

    for (int d = 0; d < kPhiDim; ++d) {
        double m = 0.0;
        for (auto i : train_idx) m += set.phi[i][d];
        m /= static_cast<double>(train_idx.size());
        double v = 0.0;
        for (auto i : train_idx) v += (set.phi[i][d] - m) * (set.phi[i][d] - m);
        norm.phi_mean[d] = m;
        norm.phi_std[d] = std::max(std::sqrt(v / static_cast<double>(train_idx.size())), 1e-12);
    }
    return norm;
}

Vec<float> column(const Mat<float>& m, std::uint32_t c) { return m.col(c); }

struct WorkspacePool {
    std::vector<Workspace<float>> ws;
    explicit WorkspacePool(int n) : ws(static_cast<std::size_t>(n)) {}
};

// Adam with L2-style weight decay folded into the gradient. A per-scalar
// trainable mask supports the frozen-flow fine-tuning mode.
struct Adam {
    double lr, wd;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<double> m, v;
    std::vector<std::uint8_t> trainable;
    long t = 0;

    Adam(std::size_t n, double lr_, double wd_) : lr(lr_), wd(wd_), m(n, 0.0), v(n, 0.0),
                                                  trainable(n, 1) {}

    void step(Npe<float>& model, const std::vector<double>& grad) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, t);
        const double bc2 = 1.0 - std::pow(beta2, t);
        std::size_t off = 0;
        model.visit_params([&](float* p, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t k = off + i;
                if (!trainable[k]) continue;
                const double g = grad[k] + wd * static_cast<double>(p[i]);
                m[k] = beta1 * m[k] + (1.0 - beta1) * g;
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
                const double update = lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
                p[i] = static_cast<float>(static_cast<double>(p[i]) - update);
            }
            off += n;
        });
    }
};

std::vector<float> snapshot_params(Npe<float>& model) {
    std::vector<float> out;
    model.visit_params([&](float* p, std::size_t n) { out.insert(out.end(), p, p + n); });
    return out;
}

void restore_params(Npe<float>& model, const std::vector<float>& snap) {
    std::size_t off = 0;
    model.visit_params([&](float* p, std::size_t n) {
        std::copy(snap.begin() + static_cast<std::ptrdiff_t>(off),
                  snap.begin() + static_cast<std::ptrdiff_t>(off + n), p);
        off += n;
    });
}

} // namespace

double batch_loss_grad(const Npe<float>& model, const Tensors& data,
                       const std::vector<std::uint32_t>& batch,
                       std::vector<double>& grad_mean, int nthreads) {
    if (nthreads < 0) nthreads = effective_threads();
    auto& mut = const_cast<Npe<float>&>(model);
    const std::size_t n_params = mut.param_count();
    grad_mean.assign(n_params, 0.0);
    const auto nb = static_cast<std::int64_t>(batch.size());
    double nll_sum = 0.0;

#ifdef _OPENMP
    if (nthreads > 1) {
        std::vector<std::vector<double>> partial(
            static_cast<std::size_t>(nthreads), std::vector<double>(n_params, 0.0));
        std::vector<double> partial_nll(static_cast<std::size_t>(nthreads), 0.0);
#pragma omp parallel num_threads(nthreads)
        {
            const int tid = omp_get_thread_num();
            thread_local Workspace<float> ws;
            auto& acc = partial[static_cast<std::size_t>(tid)];
            double local_nll = 0.0;
            // contiguous static shards keep the reduction order fixed
            const std::int64_t lo = nb * tid / nthreads;
            const std::int64_t hi = nb * (tid + 1) / nthreads;
            for (std::int64_t s = lo; s < hi; ++s) {
                const auto c = batch[static_cast<std::size_t>(s)];
                const Vec<float> x = column(data.X, c);
                const Vec<float> phi = column(data.PhiN, c);
                local_nll += static_cast<double>(mut.nll(x, data.age[c], phi, ws));
                mut.nll_backward(ws);
                std::size_t off = 0;
                Npe<float>::visit_grads(ws, [&](float* g, std::size_t k) {
                    for (std::size_t i = 0; i < k; ++i) acc[off + i] += g[i];
                    off += k;
                });
            }
            partial_nll[static_cast<std::size_t>(tid)] = local_nll;
        }
        for (int tjoin = 0; tjoin < nthreads; ++tjoin) {
            nll_sum += partial_nll[static_cast<std::size_t>(tjoin)];
            const auto& acc = partial[static_cast<std::size_t>(tjoin)];
            for (std::size_t i = 0; i < n_params; ++i) grad_mean[i] += acc[i];
        }
        for (auto& g : grad_mean) g /= static_cast<double>(nb);
        return nll_sum / static_cast<double>(nb);
    }
#endif

    thread_local Workspace<float> ws;
    for (std::int64_t s = 0; s < nb; ++s) {
        const auto c = batch[static_cast<std::size_t>(s)];
        const Vec<float> x = column(data.X, c);
        const Vec<float> phi = column(data.PhiN, c);
        nll_sum += static_cast<double>(mut.nll(x, data.age[c], phi, ws));
        mut.nll_backward(ws);
        std::size_t off = 0;
        Npe<float>::visit_grads(ws, [&](float* g, std::size_t k) {
            for (std::size_t i = 0; i < k; ++i) grad_mean[off + i] += g[i];
            off += k;
        });
    }
    for (auto& g : grad_mean) g /= static_cast<double>(nb);
    return nll_sum / static_cast<double>(nb);
}

double mean_nll(const Npe<float>& model, const Tensors& data,
                const std::vector<std::uint32_t>& idx, int nthreads) {
    if (nthreads < 0) nthreads = effective_threads();
    auto& mut = const_cast<Npe<float>&>(model);
    const auto n = static_cast<std::int64_t>(idx.size());
    std::vector<double> nlls(idx.size());
    parallel_for(
        n,
        [&](std::int64_t i) {
            thread_local Workspace<float> ws;
            const auto c = idx[static_cast<std::size_t>(i)];
            nlls[static_cast<std::size_t>(i)] = static_cast<double>(
                mut.nll(column(data.X, c), data.age[c], column(data.PhiN, c), ws));
        },
        nthreads);
    double s = 0.0;
    for (double v : nlls) s += v;
    return s / static_cast<double>(idx.size());
}

double mean_nll_set(const Npe<float>& model, const SampleSet& set) {
    const Tensors t = normalize_set(set, model.norm);
    std::vector<std::uint32_t> idx(set.size());
    std::iota(idx.begin(), idx.end(), 0u);
    return mean_nll(model, t, idx);
}

namespace {

TrainResult train_core(Npe<float> model, const Tensors& tensors,
                       const SplitIndices& split, const TrainConfig& tc,
                       std::uint64_t seed, const SampleSet* calib, bool freeze_flow) {
    const std::size_t n_params = model.param_count();
    Adam adam(n_params, tc.learning_rate, tc.weight_decay);

    if (freeze_flow) {
        // only encoder parameters stay trainable
        std::size_t off = 0;
        int block = 0;
        model.visit_params([&](float*, std::size_t n) {
            const bool encoder_block = block < 10;  // 5 convs x (W, b)
            if (!encoder_block)
                std::fill(adam.trainable.begin() + static_cast<std::ptrdiff_t>(off),
                          adam.trainable.begin() + static_cast<std::ptrdiff_t>(off + n), 0);
            off += n;
            ++block;
        });
    }

    Tensors calib_tensors;
    std::vector<std::uint32_t> calib_idx;
    if (calib && calib->size() > 0) {
        calib_tensors = normalize_set(*calib, model.norm);
        calib_idx.resize(calib->size());
        std::iota(calib_idx.begin(), calib_idx.end(), 0u);
    }

    TrainResult res;
    res.split = split;
    const int nthreads = effective_threads();

    std::vector<std::uint32_t> order = split.train;
    std::vector<double> grad(n_params), grad_calib;
    std::vector<float> best;
    double best_val = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

        double epoch_nll = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(tc.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
            const std::vector<std::uint32_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                   order.begin() + static_cast<std::ptrdiff_t>(stop));
            double nll = batch_loss_grad(model, tensors, batch, grad, nthreads);

            if (calib && !calib_idx.empty()) {
                // equal-weight calibration term on top of the synthetic loss
                std::vector<std::uint32_t> cbatch = calib_idx;
                if (cbatch.size() > static_cast<std::size_t>(tc.batch_size)) {
                    for (std::size_t i = cbatch.size(); i > 1; --i)
                        std::swap(cbatch[i - 1], cbatch[shuffle_rng.uniform_index(i)]);
                    cbatch.resize(static_cast<std::size_t>(tc.batch_size));
                }
                const double cnll =
                    batch_loss_grad(model, calib_tensors, cbatch, grad_calib, nthreads);
                for (std::size_t i = 0; i < n_params; ++i) grad[i] += grad_calib[i];
                nll += cnll;
            }

            if (!std::isfinite(nll)) {
                std::string ids;
                for (std::size_t i = 0; i < std::min<std::size_t>(8, batch.size()); ++i)
                    ids += (i ? "," : "") + std::to_string(batch[i]);
                throw Error("npe", "nonfinite_loss",
                            "non-finite loss in epoch " + std::to_string(epoch) +
                                ", batch sample ids [" + ids + "]");
            }
            epoch_nll += nll;
            ++n_batches;
            adam.step(model, grad);
        }
        res.curve.train_nll.push_back(epoch_nll / static_cast<double>(n_batches));

        double val = mean_nll(model, tensors, split.val.empty() ? split.train : split.val,
                              nthreads);
        if (calib && !calib_idx.empty())
            val += mean_nll(model, calib_tensors, calib_idx, nthreads);
        res.curve.val_nll.push_back(val);
        if (val < best_val) {
            best_val = val;
            best = snapshot_params(model);
            res.curve.best_epoch = epoch;
        }
    }
    if (!best.empty()) restore_params(model, best);
    res.model = std::move(model);
    return res;
}

} // namespace

TrainResult train(const SampleSet& data, signal::Modality modality, const TrainConfig& tc,
                  std::uint64_t seed) {
    tc.validate();
    if (data.size() < 10)
        throw Error("npe", "too_few_samples", "training needs at least 10 samples");

    // split 70/10/20 with recorded indices
    std::vector<std::uint32_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0u);
    Rng rng(derive_seed(seed, 7));
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    SplitIndices split;
    const auto n_train = static_cast<std::size_t>(std::floor(tc.split_train * data.size()));
    const auto n_val = static_cast<std::size_t>(std::floor(tc.split_val * data.size()));
    split.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                     idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());

    Npe<float> model;
    model.init(derive_seed(seed, 13));
    model.modality = modality;
    model.norm = compute_norm(data, split.train);

    const Tensors tensors = normalize_set(data, model.norm);
    return train_core(std::move(model), tensors, split, tc, seed, nullptr, false);
}

TrainResult train(const population::FinalDataset& ds, signal::Modality modality,
                  const TrainConfig& tc, std::uint64_t seed) {
    return train(samples_from_dataset(ds, modality), modality, tc, seed);
}

TrainResult finetune_hybrid(const Npe<float>& est, const SampleSet& calibration,
                            const SampleSet& synthetic, const TrainConfig& tc,
                            std::uint64_t seed) {
    tc.validate();
    Npe<float> model = est;  // normalization stats and weights carried over

    std::vector<std::uint32_t> idx(synthetic.size());
    std::iota(idx.begin(), idx.end(), 0u);
    Rng rng(derive_seed(seed, 7));
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    SplitIndices split;
    const auto n_train = static_cast<std::size_t>(std::floor(tc.split_train * idx.size()));
    const auto n_val = static_cast<std::size_t>(std::floor(tc.split_val * idx.size()));
    split.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                     idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());

    const Tensors tensors = normalize_set(synthetic, model.norm);
    return train_core(std::move(model), tensors, split, tc, seed, &calibration, true);
}

} // namespace hemo::npe
