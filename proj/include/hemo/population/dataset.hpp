#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hemo/population/population.hpp"
#include "hemo/signal/pipeline.hpp"
#include "hemo/solver/types.hpp"
#include "hemo/vascular/types.hpp"

namespace hemo::population {

// One accepted subject before the measurement model: clean single beats in
// physical units (APW in mmHg, PPG normalized to [0,1]).
struct CleanRecord {
    VirtualSubject subject;
    double sbp_mmhg = 0.0, dbp_mmhg = 0.0;
    std::vector<float> apw_beat_mmhg;
    std::vector<float> ppg_beat;
};

// One finalized training/eval record: 8-second noisy bandpassed segments.
struct FinalRecord {
    VirtualSubject subject;
    double sbp_mmhg = 0.0, dbp_mmhg = 0.0;
    signal::WaveformSegment apw;
    signal::WaveformSegment ppg;
    float apw_snr_db = 0.0f;
    float ppg_snr_db = 0.0f;
};

struct GenerateOptions {
    std::uint64_t n_attempts = 0;
    PriorSpec prior;
    vascular::ArterialNetwork network;
    solver::SolverConfig solver;
    AcceptanceFilter filter;
    std::uint64_t seed = 0;
    std::uint64_t chunk_size = 256;
};

struct GenerateSummary {
    std::uint64_t attempted = 0;
    std::uint64_t accepted = 0;
    std::uint64_t solver_failures = 0;
    std::uint64_t resumed_chunks = 0;
    double acceptance_rate = 0.0;
};

// Sampler -> solver -> acceptance filter over n_attempts subjects, written
// as chunked binary records plus metadata.json. Deterministic per seed
// (per-attempt derived streams); resumable chunk by chunk. The OpenMP path
// and the serial reference produce byte-identical chunks.
GenerateSummary generate_population(const GenerateOptions& opt, const std::string& out_dir);
GenerateSummary generate_population_serial(const GenerateOptions& opt,
                                           const std::string& out_dir);

// Runs sampler + solver + filter for one attempt index; nullopt when the
// subject is rejected by the filter or the solver fails (failure flagged).
std::optional<CleanRecord> run_attempt(const GenerateOptions& opt, std::uint64_t index,
                                       bool& solver_failed);

struct FinalizeOptions {
    signal::NoiseSpec noise;
    std::uint64_t seed = 0;
    bool apply_bandpass = true;
};

struct FinalizeSummary {
    std::uint64_t records = 0;
};

// Fig.-style steps 4-6 over a clean dataset: stack/crop, stochastic noise,
// zero-phase bandpass; SNR of each segment recorded post-filter.
FinalizeSummary finalize_dataset(const std::string& clean_dir, const FinalizeOptions& opt,
                                 const std::string& out_dir);
FinalizeSummary finalize_dataset_serial(const std::string& clean_dir,
                                        const FinalizeOptions& opt,
                                        const std::string& out_dir);

// Produces one finalized record from a clean one (crop + noise + filter).
FinalRecord finalize_record(const CleanRecord& rec, const FinalizeOptions& opt,
                            std::uint64_t index);

struct CleanDataset {
    nlohmann::json metadata;
    std::vector<CleanRecord> records;
};

struct FinalDataset {
    nlohmann::json metadata;
    std::vector<FinalRecord> records;
};

CleanDataset load_clean_dataset(const std::string& dir);
FinalDataset load_final_dataset(const std::string& dir);

nlohmann::json read_dataset_metadata(const std::string& dir);

} // namespace hemo::population

namespace hemo::solver {
nlohmann::json solver_config_to_json(const SolverConfig& cfg);
SolverConfig solver_config_from_json(const nlohmann::json& j);
std::vector<ProbeRequest> probes_from_json(const nlohmann::json& j);
} // namespace hemo::solver
