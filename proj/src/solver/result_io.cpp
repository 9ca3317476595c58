#include "hemo/solver/result_io.hpp"

#include <cstring>
#include <fstream>

#include "hemo/common/binary_io.hpp"
#include "hemo/common/error.hpp"

namespace hemo::solver {

namespace {
const char kMagic[4] = {'H', 'S', 'R', '1'};

const char* quantity_name(Quantity q) {
    switch (q) {
        case Quantity::pressure: return "pressure";
        case Quantity::flow: return "flow";
        case Quantity::area: return "area";
        case Quantity::bed_volume: return "bed_volume";
    }
    return "?";
}
} // namespace

void write_result_binary(const SimulationResult& res, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("io", "open_failed", "cannot write " + path);
    os.write(kMagic, 4);
    io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(res.series.size()));
    const std::uint64_t n = res.series.empty() ? 0 : res.series.front().size();
    io::write_pod<std::uint64_t>(os, n);
    io::write_pod<double>(os, res.sample_rate);
    for (const auto& s : res.series) {
        for (double v : s) io::write_pod<float>(os, static_cast<float>(v));
    }
    // trailing metadata (not part of the fixed header contract)
    io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(res.beat_boundaries.size()));
    for (auto b : res.beat_boundaries) io::write_pod<std::uint64_t>(os, b);
    io::write_pod<std::uint8_t>(os, res.periodic_converged ? 1 : 0);
    io::write_pod<double>(os, res.last_beat_pressure_delta);
    io::write_pod<std::int32_t>(os, res.beats_simulated);
    io::write_pod<double>(os, res.mass_error_relative);
    for (const auto& p : res.probes) {
        io::write_string(os, p.segment_id);
        io::write_pod<double>(os, p.xi);
        io::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(p.quantity));
    }
}

SimulationResult read_result_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("io", "open_failed", "cannot read " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw Error("io", "bad_magic", path + " is not an HSR1 container");
    SimulationResult res;
    const auto n_probes = io::read_pod<std::uint32_t>(is);
    const auto n = io::read_pod<std::uint64_t>(is);
    res.sample_rate = io::read_pod<double>(is);
    res.series.resize(n_probes);
    for (auto& s : res.series) {
        s.resize(n);
        for (auto& v : s) v = io::read_pod<float>(is);
    }
    const auto n_beats = io::read_pod<std::uint32_t>(is);
    res.beat_boundaries.resize(n_beats);
    for (auto& b : res.beat_boundaries) b = io::read_pod<std::uint64_t>(is);
    res.periodic_converged = io::read_pod<std::uint8_t>(is) != 0;
    res.last_beat_pressure_delta = io::read_pod<double>(is);
    res.beats_simulated = io::read_pod<std::int32_t>(is);
    res.mass_error_relative = io::read_pod<double>(is);
    res.probes.resize(n_probes);
    for (auto& p : res.probes) {
        p.segment_id = io::read_string(is);
        p.xi = io::read_pod<double>(is);
        p.quantity = static_cast<Quantity>(io::read_pod<std::uint8_t>(is));
    }
    return res;
}

void write_result_csv(const SimulationResult& res, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("io", "open_failed", "cannot write " + path);
    os << "time_s";
    for (const auto& p : res.probes)
        os << "," << p.segment_id << "@" << p.xi << ":" << quantity_name(p.quantity);
    os << "\n";
    const std::size_t n = res.series.empty() ? 0 : res.series.front().size();
    os.precision(9);
    for (std::size_t j = 0; j < n; ++j) {
        os << (static_cast<double>(j) / res.sample_rate);
        for (const auto& s : res.series) os << "," << s[j];
        os << "\n";
    }
}

} // namespace hemo::solver
