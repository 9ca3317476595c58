#pragma once

#include <map>
#include <string>
#include <vector>

#include "hemo/solver/kernels.hpp"
#include "hemo/solver/types.hpp"
#include "hemo/vascular/types.hpp"

namespace hemo::solver {

// ---------------------------------------------------------------------------
// Boundary sub-models
// ---------------------------------------------------------------------------

struct WindkesselState {
    vascular::WindkesselBed bed;
    double pc = 0.0;  // pressure at the compliance node, Pa
    double volume() const { return bed.compliance * pc; }
};

struct WindkesselUpdate {
    double q_out = 0.0;   // flow from the artery into the bed, m^3/s
    double pc_new = 0.0;  // updated compliance-node pressure
    double q_venous = 0.0; // flow leaving through R2 (out of the system)
};

// Backward-Euler update of the RCR bed driven by the terminal artery
// pressure:  C dPc/dt = (P_t - Pc)/R1 - (Pc - P_out)/R2, Pc implicit.
WindkesselUpdate windkessel_outflow(const WindkesselState& wk, double p_terminal,
                                    double dt);

// One side of a junction interface.
struct JunctionSide {
    double A = 0.0, u = 0.0;       // incoming face state
    double beta = 0.0, A0 = 0.0;   // face geometry
    double pext = 0.0;
};

struct JunctionSolution {
    std::vector<double> A, u;      // parent first, then children
    double residual = 0.0;         // scaled max-norm at convergence
    int iterations = 0;
};

// Conservation coupling at a 1-parent / m-children junction: mass balance
// plus continuity of total pressure P + rho u^2 / 2, closed with the
// outgoing characteristic invariants of each vessel. Damped Newton;
// throws after 100 iterations without convergence.
JunctionSolution junction_couple(const JunctionSide& parent,
                                 const std::vector<JunctionSide>& children,
                                 double rho, double tol = 1e-10);

// ---------------------------------------------------------------------------
// Network time stepper
// ---------------------------------------------------------------------------

struct StepDiagnostics {
    double mass_inflow = 0.0;   // root boundary mass flux used this step
    double mass_outflow = 0.0;  // summed venous outflow of all beds
};

class NetworkSolver {
public:
    NetworkSolver(const vascular::ArterialNetwork& net, const vascular::HeartFunction& hf,
                  const SolverConfig& cfg);

    // One explicit MUSCL-Hancock step. dt must satisfy the CFL bound.
    void step(double dt);

    double max_stable_dt() const;
    double time() const { return time_; }

    // total blood volume: sum of A dz over all cells plus bed volumes
    double total_volume() const;

    double probe_value(const ProbeRequest& p) const;

    const std::vector<SegmentState>& states() const { return states_; }
    std::vector<SegmentState>& states() { return states_; }
    const std::map<std::string, WindkesselState>& bed_states() const { return beds_; }

    const StepDiagnostics& last_step() const { return diag_; }

    // pressure at the root segment's mid cell (periodicity monitor)
    double monitor_pressure() const;

private:
    struct Junction {
        int parent = -1;
        std::vector<int> children;
    };

    int index_of(const std::string& segment_id) const;

    vascular::HeartFunction hf_;
    vascular::BloodProperties blood_;
    SolverConfig cfg_;
    std::vector<SegmentState> states_;
    std::vector<const vascular::ArterySegment*> segs_;
    std::map<std::string, int> seg_index_;
    std::map<std::string, WindkesselState> beds_;
    std::vector<Junction> junctions_;
    int root_ = 0;
    double time_ = 0.0;
    StepDiagnostics diag_;
    std::vector<std::vector<FacePair>> faces_;
    const vascular::ArterialNetwork* net_ = nullptr;
    std::vector<vascular::ArterySegment> owned_segs_;
};

// Full orchestration: step to periodic steady state (or cfg.duration),
// discard transient beats, resample probes to the output rate.
SimulationResult run_simulation(const vascular::ArterialNetwork& net,
                                const vascular::HeartFunction& hf,
                                const SolverConfig& cfg,
                                const std::vector<ProbeRequest>& probes);

} // namespace hemo::solver
