#include "hemo/population/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hemo/common/binary_io.hpp"
#include "hemo/common/error.hpp"
#include "hemo/common/parallel.hpp"
#include "hemo/common/rng.hpp"
#include "hemo/common/sha256.hpp"
#include "hemo/common/units.hpp"
#include "hemo/common/version.hpp"
#include "hemo/solver/scheme.hpp"
#include "hemo/vascular/network_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hemo::solver {

json solver_config_to_json(const SolverConfig& cfg) {
    return {{"cells_per_segment_min", cfg.cells_per_segment_min},
            {"cfl_number", cfg.cfl_number},
            {"duration_s", cfg.duration},
            {"transient_beats_to_discard", cfg.transient_beats_to_discard},
            {"output_sample_rate_hz", cfg.output_sample_rate},
            {"limiter", "minmod"},
            {"flux", cfg.flux == Flux::hll ? "hll" : "llf"},
            {"periodicity_threshold_pa", cfg.periodicity_threshold}};
}

SolverConfig solver_config_from_json(const json& j) {
    SolverConfig cfg;
    cfg.cells_per_segment_min = j.value("cells_per_segment_min", cfg.cells_per_segment_min);
    cfg.cfl_number = j.value("cfl_number", cfg.cfl_number);
    cfg.duration = j.value("duration_s", cfg.duration);
    cfg.transient_beats_to_discard =
        j.value("transient_beats_to_discard", cfg.transient_beats_to_discard);
    cfg.output_sample_rate = j.value("output_sample_rate_hz", cfg.output_sample_rate);
    if (j.contains("limiter") && j.at("limiter") != "minmod")
        throw Error("solver", "bad_config", "only the minmod limiter is available");
    if (j.contains("flux")) {
        const std::string f = j.at("flux");
        if (f == "hll") cfg.flux = Flux::hll;
        else if (f == "llf") cfg.flux = Flux::llf;
        else throw Error("solver", "bad_config", "flux must be 'hll' or 'llf'");
    }
    cfg.periodicity_threshold = j.value("periodicity_threshold_pa", cfg.periodicity_threshold);
    cfg.validate();
    return cfg;
}

std::vector<ProbeRequest> probes_from_json(const json& j) {
    std::vector<ProbeRequest> out;
    for (const auto& e : j) {
        ProbeRequest p;
        p.segment_id = e.at("segment").get<std::string>();
        p.xi = e.value("xi", 0.5);
        const std::string q = e.value("quantity", "pressure");
        if (q == "pressure") p.quantity = Quantity::pressure;
        else if (q == "flow") p.quantity = Quantity::flow;
        else if (q == "area") p.quantity = Quantity::area;
        else if (q == "bed_volume") p.quantity = Quantity::bed_volume;
        else throw Error("solver", "bad_probe", "unknown quantity '" + q + "'");
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace hemo::solver

namespace hemo::population {

namespace {

constexpr std::uint32_t kChunkMagic = 0x31434448;  // "HDC1"
constexpr std::uint32_t kCleanVersion = 1;
constexpr std::uint32_t kFinalVersion = 2;

void write_subject(std::ostream& os, const VirtualSubject& s) {
    io::write_pod(os, s.subject_id);
    io::write_pod(os, s.rng_seed);
    io::write_pod(os, s.hr_bpm);
    io::write_pod(os, s.co_lpm);
    io::write_pod(os, s.svr_pa_s_m3);
    io::write_pod(os, s.lvet_ms);
    io::write_pod(os, s.sv_ml);
    io::write_pod(os, s.pft_s);
    io::write_pod(os, s.rfv);
    io::write_pod(os, s.height_cm);
    io::write_pod(os, s.height_eps_cm);
    io::write_pod(os, s.age_years);
    io::write_pod(os, s.eps1_ms);
    io::write_pod(os, s.eps2);
    io::write_pod(os, s.eps3);
    io::write_pod(os, s.bed_r2_scale);
    io::write_pod(os, s.probe_xi);
    io::write_pod(os, s.arm);
}

VirtualSubject read_subject(std::istream& is) {
    VirtualSubject s;
    s.subject_id = io::read_pod<std::uint64_t>(is);
    s.rng_seed = io::read_pod<std::uint64_t>(is);
    s.hr_bpm = io::read_pod<double>(is);
    s.co_lpm = io::read_pod<double>(is);
    s.svr_pa_s_m3 = io::read_pod<double>(is);
    s.lvet_ms = io::read_pod<double>(is);
    s.sv_ml = io::read_pod<double>(is);
    s.pft_s = io::read_pod<double>(is);
    s.rfv = io::read_pod<double>(is);
    s.height_cm = io::read_pod<double>(is);
    s.height_eps_cm = io::read_pod<double>(is);
    s.age_years = io::read_pod<double>(is);
    s.eps1_ms = io::read_pod<double>(is);
    s.eps2 = io::read_pod<double>(is);
    s.eps3 = io::read_pod<double>(is);
    s.bed_r2_scale = io::read_pod<double>(is);
    s.probe_xi = io::read_pod<double>(is);
    s.arm = io::read_pod<std::uint8_t>(is);
    return s;
}

void write_segment(std::ostream& os, const signal::WaveformSegment& w) {
    io::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(w.modality));
    io::write_pod(os, w.subject_id);
    io::write_pod(os, w.crop_offset);
    io::write_pod<std::uint8_t>(os, w.noise.additive ? 1 : 0);
    io::write_pod<std::uint8_t>(os, w.noise.flipped ? 1 : 0);
    io::write_pod(os, w.noise.sigma_gauss);
    io::write_pod(os, w.noise.sigma_red);
    io::write_pod(os, w.noise.window_start);
    io::write_pod(os, w.noise.window_len);
    io::write_vec(os, w.samples);
}

signal::WaveformSegment read_segment(std::istream& is) {
    signal::WaveformSegment w;
    w.modality = static_cast<signal::Modality>(io::read_pod<std::uint8_t>(is));
    w.subject_id = io::read_pod<std::uint64_t>(is);
    w.crop_offset = io::read_pod<std::uint32_t>(is);
    w.noise.additive = io::read_pod<std::uint8_t>(is) != 0;
    w.noise.flipped = io::read_pod<std::uint8_t>(is) != 0;
    w.noise.sigma_gauss = io::read_pod<double>(is);
    w.noise.sigma_red = io::read_pod<double>(is);
    w.noise.window_start = io::read_pod<std::uint32_t>(is);
    w.noise.window_len = io::read_pod<std::uint32_t>(is);
    w.samples = io::read_vec<float>(is);
    w.check();
    return w;
}

struct ChunkHeader {
    std::uint32_t version = 0;
    std::uint64_t first = 0, last = 0;  // attempt/record index range [first, last)
    std::uint32_t n_records = 0;
};

std::string chunk_name(std::uint64_t idx) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "chunk_%05llu.bin",
                  static_cast<unsigned long long>(idx));
    return buf;
}

void write_chunk_header(std::ostream& os, const ChunkHeader& h) {
    io::write_pod(os, kChunkMagic);
    io::write_pod(os, h.version);
    io::write_pod(os, h.first);
    io::write_pod(os, h.last);
    io::write_pod(os, h.n_records);
}

bool read_chunk_header(std::istream& is, ChunkHeader& h) {
    if (io::read_pod<std::uint32_t>(is) != kChunkMagic) return false;
    h.version = io::read_pod<std::uint32_t>(is);
    h.first = io::read_pod<std::uint64_t>(is);
    h.last = io::read_pod<std::uint64_t>(is);
    h.n_records = io::read_pod<std::uint32_t>(is);
    return true;
}

void write_clean_record(std::ostream& os, const CleanRecord& r) {
    write_subject(os, r.subject);
    io::write_pod(os, r.sbp_mmhg);
    io::write_pod(os, r.dbp_mmhg);
    io::write_vec(os, r.apw_beat_mmhg);
    io::write_vec(os, r.ppg_beat);
}

CleanRecord read_clean_record(std::istream& is) {
    CleanRecord r;
    r.subject = read_subject(is);
    r.sbp_mmhg = io::read_pod<double>(is);
    r.dbp_mmhg = io::read_pod<double>(is);
    r.apw_beat_mmhg = io::read_vec<float>(is);
    r.ppg_beat = io::read_vec<float>(is);
    return r;
}

void write_final_record(std::ostream& os, const FinalRecord& r) {
    write_subject(os, r.subject);
    io::write_pod(os, r.sbp_mmhg);
    io::write_pod(os, r.dbp_mmhg);
    write_segment(os, r.apw);
    write_segment(os, r.ppg);
    io::write_pod(os, r.apw_snr_db);
    io::write_pod(os, r.ppg_snr_db);
}

FinalRecord read_final_record(std::istream& is) {
    FinalRecord r;
    r.subject = read_subject(is);
    r.sbp_mmhg = io::read_pod<double>(is);
    r.dbp_mmhg = io::read_pod<double>(is);
    r.apw = read_segment(is);
    r.ppg = read_segment(is);
    r.apw_snr_db = io::read_pod<float>(is);
    r.ppg_snr_db = io::read_pod<float>(is);
    return r;
}

} // namespace

std::optional<CleanRecord> run_attempt(const GenerateOptions& opt, std::uint64_t index,
                                       bool& solver_failed) {
    solver_failed = false;
    const std::uint64_t seed = derive_seed(opt.seed, index);
    VirtualSubject subj = sample_subject(opt.prior, seed);
    subj.subject_id = index;

    const auto net = subject_network(opt.network, subj, opt.prior);
    const std::string radial = subj.arm == 0 ? "radial_l" : "radial_r";

    std::vector<solver::ProbeRequest> probes = {
        {radial, subj.probe_xi, solver::Quantity::pressure},
        {radial, 1.0, solver::Quantity::bed_volume},
        {opt.network.root_segment_id, 0.0, solver::Quantity::pressure},
    };

    solver::SimulationResult sim;
    try {
        sim = solver::run_simulation(net, subj.heart(), opt.solver, probes);
    } catch (const Error&) {
        solver_failed = true;
        return std::nullopt;
    }

    const std::size_t b0 = sim.beat_boundaries.back();
    const std::size_t n = sim.series.front().size();
    if (b0 + 8 >= n) {
        solver_failed = true;
        return std::nullopt;
    }

    std::vector<double> apw_beat(sim.series[0].begin() + b0, sim.series[0].end());
    for (auto& v : apw_beat) v *= units::pa_to_mmhg;

    const auto decision = apply_acceptance_filter(apw_beat, opt.filter);
    if (!decision.accepted) return std::nullopt;

    const std::vector<double> vol_beat(sim.series[1].begin() + b0, sim.series[1].end());
    const auto ppg_beat = signal::derive_ppg(vol_beat);

    // SVR ground truth: (mean aortic pressure - P_out) / CO
    double map_pa = 0.0;
    for (std::size_t j = b0; j < n; ++j) map_pa += sim.series[2][j];
    map_pa /= static_cast<double>(n - b0);
    const double p_out = net.beds.begin()->second.outflow_pressure;
    const double co_si = subj.co_lpm * units::lpm_to_m3s;
    subj.svr_pa_s_m3 = (map_pa - p_out) / co_si;

    CleanRecord rec;
    rec.subject = subj;
    rec.sbp_mmhg = decision.sbp_mmhg;
    rec.dbp_mmhg = decision.dbp_mmhg;
    rec.apw_beat_mmhg.assign(apw_beat.begin(), apw_beat.end());
    rec.ppg_beat.assign(ppg_beat.begin(), ppg_beat.end());
    return rec;
}

namespace {

GenerateSummary generate_impl(const GenerateOptions& opt, const std::string& out_dir,
                              bool parallel) {
    opt.prior.validate();
    opt.solver.validate();
    if (opt.n_attempts == 0)
        throw Error("population", "bad_request", "n_attempts must be >= 1");

    fs::create_directories(out_dir);
    GenerateSummary sum;
    sum.attempted = opt.n_attempts;

    const std::uint64_t n_chunks = (opt.n_attempts + opt.chunk_size - 1) / opt.chunk_size;
    json chunk_list = json::array();

    for (std::uint64_t c = 0; c < n_chunks; ++c) {
        const std::uint64_t first = c * opt.chunk_size;
        const std::uint64_t last = std::min(opt.n_attempts, first + opt.chunk_size);
        const fs::path path = fs::path(out_dir) / chunk_name(c);

        bool reused = false;
        if (fs::exists(path)) {
            std::ifstream is(path, std::ios::binary);
            ChunkHeader h;
            if (is && read_chunk_header(is, h) && h.version == kCleanVersion &&
                h.first == first && h.last == last) {
                std::uint32_t failures = 0;
                try {
                    failures = io::read_pod<std::uint32_t>(is);
                    for (std::uint32_t r = 0; r < h.n_records; ++r) (void)read_clean_record(is);
                    sum.accepted += h.n_records;
                    sum.solver_failures += failures;
                    sum.resumed_chunks += 1;
                    reused = true;
                } catch (const Error&) {
                    reused = false;
                }
            }
        }
        if (reused) {
            chunk_list.push_back({{"file", chunk_name(c)},
                                  {"sha256", sha256_file(path.string())}});
            continue;
        }

        const auto count = static_cast<std::int64_t>(last - first);
        std::vector<std::optional<CleanRecord>> results(count);
        std::vector<std::uint8_t> failed(count, 0);
        parallel_for(
            count,
            [&](std::int64_t i) {
                bool f = false;
                results[i] = run_attempt(opt, first + static_cast<std::uint64_t>(i), f);
                failed[i] = f ? 1 : 0;
            },
            parallel ? -1 : 1);

        std::uint32_t n_rec = 0, n_fail = 0;
        for (std::int64_t i = 0; i < count; ++i) {
            if (results[i]) ++n_rec;
            if (failed[i]) ++n_fail;
        }
        std::ofstream os(path, std::ios::binary);
        if (!os) throw Error("io", "open_failed", "cannot write " + path.string());
        write_chunk_header(os, ChunkHeader{kCleanVersion, first, last, n_rec});
        io::write_pod<std::uint32_t>(os, n_fail);
        for (std::int64_t i = 0; i < count; ++i)
            if (results[i]) write_clean_record(os, *results[i]);
        os.close();

        sum.accepted += n_rec;
        sum.solver_failures += n_fail;
        chunk_list.push_back({{"file", chunk_name(c)}, {"sha256", sha256_file(path.string())}});
    }

    sum.acceptance_rate =
        static_cast<double>(sum.accepted) / static_cast<double>(sum.attempted);

    json meta;
    meta["format"] = "hemo-dataset";
    meta["version"] = kCleanVersion;
    meta["stage"] = "clean";
    meta["tool_version"] = kVersion;
    meta["git_describe"] = kGitDescribe;
    meta["seed"] = opt.seed;
    meta["n_attempts"] = opt.n_attempts;
    meta["chunk_size"] = opt.chunk_size;
    meta["accepted"] = sum.accepted;
    meta["solver_failures"] = sum.solver_failures;
    meta["acceptance_rate"] = sum.acceptance_rate;
    meta["prior"] = opt.prior.to_json();
    meta["filter"] = {{"dbp_max_mmhg", opt.filter.dbp_max_mmhg},
                      {"sbp_min_mmhg", opt.filter.sbp_min_mmhg},
                      {"sbp_max_mmhg", opt.filter.sbp_max_mmhg}};
    meta["solver"] = solver::solver_config_to_json(opt.solver);
    meta["network"] = vascular::network_to_json(opt.network);
    meta["chunks"] = chunk_list;
    std::ofstream ms(fs::path(out_dir) / "metadata.json");
    ms << meta.dump(2) << "\n";
    return sum;
}

} // namespace

GenerateSummary generate_population(const GenerateOptions& opt, const std::string& out_dir) {
    return generate_impl(opt, out_dir, true);
}

GenerateSummary generate_population_serial(const GenerateOptions& opt,
                                           const std::string& out_dir) {
    return generate_impl(opt, out_dir, false);
}

FinalRecord finalize_record(const CleanRecord& rec, const FinalizeOptions& opt,
                            std::uint64_t index) {
    const std::uint64_t crop_seed = derive_seed(opt.seed, index * 4 + 0);
    const std::uint64_t apw_noise_seed = derive_seed(opt.seed, index * 4 + 1);
    const std::uint64_t ppg_noise_seed = derive_seed(opt.seed, index * 4 + 2);

    const std::vector<double> apw_beat(rec.apw_beat_mmhg.begin(), rec.apw_beat_mmhg.end());
    const std::vector<double> ppg_beat(rec.ppg_beat.begin(), rec.ppg_beat.end());

    // APW and PPG are simultaneous recordings of the same beat: one crop
    // phase per subject, independent noise per modality.
    auto apw_clean = signal::stack_and_crop(apw_beat, signal::Modality::apw,
                                            rec.subject.subject_id, crop_seed);
    auto ppg_clean = signal::stack_and_crop(ppg_beat, signal::Modality::ppg,
                                            rec.subject.subject_id, crop_seed);

    auto apw_noisy = signal::apply_noise(apw_clean, opt.noise, apw_noise_seed);
    auto ppg_noisy = signal::apply_noise(ppg_clean, opt.noise, ppg_noise_seed);

    FinalRecord out;
    out.subject = rec.subject;
    out.sbp_mmhg = rec.sbp_mmhg;
    out.dbp_mmhg = rec.dbp_mmhg;
    if (opt.apply_bandpass) {
        out.apw = signal::bandpass(apw_noisy);
        out.ppg = signal::bandpass(ppg_noisy);
        out.apw_snr_db = static_cast<float>(
            signal::snr_db(signal::bandpass(apw_clean).samples, out.apw.samples));
        out.ppg_snr_db = static_cast<float>(
            signal::snr_db(signal::bandpass(ppg_clean).samples, out.ppg.samples));
    } else {
        out.apw = apw_noisy;
        out.ppg = ppg_noisy;
        out.apw_snr_db = static_cast<float>(signal::snr_db(apw_clean.samples, out.apw.samples));
        out.ppg_snr_db = static_cast<float>(signal::snr_db(ppg_clean.samples, out.ppg.samples));
    }
    return out;
}

namespace {

FinalizeSummary finalize_impl(const std::string& clean_dir, const FinalizeOptions& opt,
                              const std::string& out_dir, bool parallel) {
    opt.noise.validate();
    auto clean = load_clean_dataset(clean_dir);
    fs::create_directories(out_dir);

    const auto n = static_cast<std::int64_t>(clean.records.size());
    std::vector<FinalRecord> finals(n);
    parallel_for(
        n,
        [&](std::int64_t i) {
            finals[i] = finalize_record(clean.records[i], opt, static_cast<std::uint64_t>(i));
        },
        parallel ? -1 : 1);

    const std::uint64_t chunk_size = clean.metadata.value("chunk_size", std::uint64_t(256));
    const std::uint64_t n_chunks =
        (static_cast<std::uint64_t>(n) + chunk_size - 1) / std::max<std::uint64_t>(1, chunk_size);
    json chunk_list = json::array();
    for (std::uint64_t c = 0; c < n_chunks; ++c) {
        const std::uint64_t first = c * chunk_size;
        const std::uint64_t last = std::min<std::uint64_t>(n, first + chunk_size);
        const fs::path path = fs::path(out_dir) / chunk_name(c);
        std::ofstream os(path, std::ios::binary);
        if (!os) throw Error("io", "open_failed", "cannot write " + path.string());
        write_chunk_header(os, ChunkHeader{kFinalVersion, first, last,
                                           static_cast<std::uint32_t>(last - first)});
        io::write_pod<std::uint32_t>(os, 0);
        for (std::uint64_t i = first; i < last; ++i) write_final_record(os, finals[i]);
        os.close();
        chunk_list.push_back({{"file", chunk_name(c)}, {"sha256", sha256_file(path.string())}});
    }

    json meta = clean.metadata;
    meta["stage"] = "final";
    meta["version"] = kFinalVersion;
    meta["records"] = n;
    meta["noise"] = {{"p_additive", opt.noise.p_additive},
                     {"p_flip", opt.noise.p_flip},
                     {"intensity_mean", opt.noise.intensity_mean},
                     {"fixed_intensity", opt.noise.fixed_intensity},
                     {"red_ar_coefficient", opt.noise.red_ar_coefficient},
                     {"window_fraction_min", opt.noise.window_fraction_min},
                     {"window_fraction_max", opt.noise.window_fraction_max}};
    meta["finalize_seed"] = opt.seed;
    meta["bandpass"] = opt.apply_bandpass;
    meta["source_dir"] = clean_dir;
    meta["chunks"] = chunk_list;
    std::ofstream ms(fs::path(out_dir) / "metadata.json");
    ms << meta.dump(2) << "\n";

    FinalizeSummary s;
    s.records = static_cast<std::uint64_t>(n);
    return s;
}

json load_metadata(const std::string& dir) {
    std::ifstream is(fs::path(dir) / "metadata.json");
    if (!is)
        throw Error("population", "not_a_dataset", dir + " has no metadata.json");
    json j;
    is >> j;
    return j;
}

} // namespace

FinalizeSummary finalize_dataset(const std::string& clean_dir, const FinalizeOptions& opt,
                                 const std::string& out_dir) {
    return finalize_impl(clean_dir, opt, out_dir, true);
}

FinalizeSummary finalize_dataset_serial(const std::string& clean_dir,
                                        const FinalizeOptions& opt,
                                        const std::string& out_dir) {
    return finalize_impl(clean_dir, opt, out_dir, false);
}

nlohmann::json read_dataset_metadata(const std::string& dir) { return load_metadata(dir); }

CleanDataset load_clean_dataset(const std::string& dir) {
    CleanDataset ds;
    ds.metadata = load_metadata(dir);
    if (ds.metadata.value("stage", "") != "clean")
        throw Error("population", "wrong_stage", dir + " is not a clean dataset");
    for (const auto& ce : ds.metadata.at("chunks")) {
        const fs::path path = fs::path(dir) / ce.at("file").get<std::string>();
        std::ifstream is(path, std::ios::binary);
        ChunkHeader h;
        if (!is || !read_chunk_header(is, h))
            throw Error("population", "bad_chunk", "cannot read " + path.string());
        (void)io::read_pod<std::uint32_t>(is);
        for (std::uint32_t r = 0; r < h.n_records; ++r)
            ds.records.push_back(read_clean_record(is));
    }
    return ds;
}

FinalDataset load_final_dataset(const std::string& dir) {
    FinalDataset ds;
    ds.metadata = load_metadata(dir);
    if (ds.metadata.value("stage", "") != "final")
        throw Error("population", "wrong_stage", dir + " is not a finalized dataset");
    for (const auto& ce : ds.metadata.at("chunks")) {
        const fs::path path = fs::path(dir) / ce.at("file").get<std::string>();
        std::ifstream is(path, std::ios::binary);
        ChunkHeader h;
        if (!is || !read_chunk_header(is, h))
            throw Error("population", "bad_chunk", "cannot read " + path.string());
        (void)io::read_pod<std::uint32_t>(is);
        for (std::uint32_t r = 0; r < h.n_records; ++r)
            ds.records.push_back(read_final_record(is));
    }
    return ds;
}

} // namespace hemo::population
