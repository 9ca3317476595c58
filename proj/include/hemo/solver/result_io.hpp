#pragma once

#include <string>

#include "hemo/solver/types.hpp"

namespace hemo::solver {

// Binary container: little-endian, magic "HSR1", u32 probe count,
// u64 sample count, float64 sample rate, then one float32 series per probe.
void write_result_binary(const SimulationResult& res, const std::string& path);
SimulationResult read_result_binary(const std::string& path);

// One column per probe, header row with segment/xi/quantity labels.
void write_result_csv(const SimulationResult& res, const std::string& path);

} // namespace hemo::solver
