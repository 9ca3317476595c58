#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hemo::solver {

enum class Limiter { minmod };
enum class Flux { hll, llf };

struct SolverConfig {
    int cells_per_segment_min = 12;
    double cfl_number = 0.9;
    double duration = 14.0;              // s, hard cap on simulated time
    int transient_beats_to_discard = 3;
    double output_sample_rate = 125.0;   // Hz
    Limiter limiter = Limiter::minmod;
    Flux flux = Flux::hll;
    // beat-to-beat max |dP| threshold for periodic steady state, Pa
    double periodicity_threshold = 66.661;  // 0.5 mmHg

    void validate() const;
};

enum class Quantity { pressure, flow, area, bed_volume };

struct ProbeRequest {
    std::string segment_id;
    double xi = 0.5;           // fractional position in [0,1]
    Quantity quantity = Quantity::pressure;
};

// Discretized state of one segment. Cell-centred A and Q plus the
// reference geometry sampled at cell centres and faces (n+1 face values,
// linear taper in radius).
struct SegmentState {
    std::string segment_id;
    int n = 0;
    double dz = 0.0;
    std::vector<double> A, Q;                 // state, size n
    std::vector<double> z;                    // cell centres, size n
    std::vector<double> A0c, betac, gammac;   // reference at centres
    std::vector<double> A0f, betaf;           // reference at faces, size n+1
    std::vector<double> dA_dt_prev;           // previous step's dA/dt (viscous split)
};

struct SimulationResult {
    double sample_rate = 125.0;
    std::vector<ProbeRequest> probes;
    std::vector<std::vector<double>> series;   // one per probe, equal lengths
    std::vector<std::size_t> beat_boundaries;  // sample indices of beat starts
    // convergence diagnostics
    double last_beat_pressure_delta = 0.0;     // max |dP| between last two beats, Pa
    bool periodic_converged = false;
    int beats_simulated = 0;
    double mass_error_relative = 0.0;          // |dV - integral(in-out)| / V(0)
};

} // namespace hemo::solver
