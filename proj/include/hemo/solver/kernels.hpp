#pragma once

#include <utility>

#include "hemo/solver/types.hpp"
#include "hemo/vascular/types.hpp"

// Low-level finite-volume kernels for one segment. The network driver in
// scheme.hpp composes these with boundary solves; tests drive them directly
// (closed tubes, convergence studies).

namespace hemo::solver {

struct FacePair {
    // reconstructed + half-step-evolved states at the cell's two faces
    double A_left, Q_left, A_right, Q_right;
};

struct BoundaryFlux {
    double mass = 0.0;      // m^3/s
    double momentum = 0.0;  // m^4/s^2
};

// Momentum flux  alpha Q^2/A + beta A^(3/2) / (3 rho).
double momentum_flux(double A, double Q, double beta, double rho, double alpha);

// Characteristic speeds lambda-+ = alpha u -+ sqrt(c^2 + alpha(alpha-1)u^2).
std::pair<double, double> char_speeds(double A, double Q, double beta,
                                      const vascular::BloodProperties& blood);

double minmod(double a, double b);

// MUSCL-Hancock predictor: limited reconstruction of (A - A0, Q) and a
// half-step evolution of the face states including sources. Boundary cells
// use first-order (zero-slope) reconstruction.
void predictor_phase(const SegmentState& s, const vascular::BloodProperties& blood,
                     double dt, std::vector<FacePair>& out);

// HLL (or Rusanov) flux between two face states sharing face geometry.
BoundaryFlux numerical_flux(double A_l, double Q_l, double A_r, double Q_r,
                            double beta_face, const vascular::BloodProperties& blood,
                            Flux flux);

// Conservative corrector update with friction, geometric-taper and
// operator-split visco-elastic sources. Throws on non-positive area.
void corrector_phase(SegmentState& s, const vascular::BloodProperties& blood,
                     double dt, const std::vector<FacePair>& faces,
                     const BoundaryFlux& left_bc, const BoundaryFlux& right_bc,
                     Flux flux);

// Reflective end-wall flux (mirror state, zero mass flux) used by tests
// and closed-tube setups. side < 0 for the left wall, > 0 for the right.
BoundaryFlux wall_flux(const FacePair& edge_faces, double beta_face,
                       const vascular::BloodProperties& blood, int side, Flux flux);

// Largest stable dt for this segment under the given CFL number.
double max_stable_dt(const SegmentState& s, const vascular::BloodProperties& blood,
                     double cfl);

// Builds the discrete grid for a segment (linear taper in radius; at least
// min_cells cells, scaled up for longer segments relative to ref_length).
SegmentState discretize_segment(const vascular::ArterySegment& seg, int min_cells,
                                double ref_length);

// Pressure at cell i including the visco-elastic term.
double cell_pressure(const SegmentState& s, int i);

} // namespace hemo::solver
