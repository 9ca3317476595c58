#include "hemo/solver/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "hemo/common/error.hpp"
#include "hemo/vascular/physics.hpp"

namespace hemo::solver {

using vascular::BloodProperties;

double momentum_flux(double A, double Q, double beta, double rho, double alpha) {
    return alpha * Q * Q / A + beta * A * std::sqrt(A) / (3.0 * rho);
}

std::pair<double, double> char_speeds(double A, double Q, double beta,
                                      const BloodProperties& blood) {
    const double u = Q / A;
    const double c2 = beta * std::sqrt(A) / (2.0 * blood.density);
    const double a = blood.coriolis_coefficient;
    const double disc = std::sqrt(c2 + a * (a - 1.0) * u * u);
    return {a * u - disc, a * u + disc};
}

double minmod(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    return std::abs(a) < std::abs(b) ? a : b;
}

namespace {

// Geometric + friction + visco-elastic momentum source for cell i.
// The taper term is split so that the A == A0 rest state cancels the face
// flux differences exactly (the first bracket telescopes with the rest-state
// flux); the remaining terms vanish at rest.
double momentum_source(const SegmentState& s, const BloodProperties& blood,
                       int i, double A, double Q) {
    const double rho = blood.density;
    const double inv_dz = 1.0 / s.dz;
    const double rest_flux_r = s.betaf[i + 1] * std::pow(s.A0f[i + 1], 1.5) / (3.0 * rho);
    const double rest_flux_l = s.betaf[i] * std::pow(s.A0f[i], 1.5) / (3.0 * rho);
    double src = (rest_flux_r - rest_flux_l) * inv_dz;

    const double dbeta_dz = (s.betaf[i + 1] - s.betaf[i]) * inv_dz;
    const double dA0_dz = (s.A0f[i + 1] - s.A0f[i]) * inv_dz;
    const double sqA = std::sqrt(A);
    const double sqA0 = std::sqrt(s.A0c[i]);
    src += (A * sqA - s.A0c[i] * sqA0) / (3.0 * rho) * dbeta_dz;
    src -= A / rho * (sqA - sqA0) * dbeta_dz;
    src += s.betac[i] / (2.0 * rho) * (A / sqA0 - sqA0) * dA0_dz;

    // friction
    src -= 2.0 * (blood.dynamic_viscosity / rho) * (blood.velocity_profile_shape + 2.0) * Q / A;

    // visco-elastic wall term, operator-split with the previous step's dA/dt:
    // -(A/rho) d/dz [ Gamma/sqrt(A) dA/dt ]
    if (s.gammac[i] > 0.0) {
        const int n = s.n;
        auto p_visc = [&](int j) {
            return s.gammac[j] / std::sqrt(s.A[j]) * s.dA_dt_prev[j];
        };
        double dpv_dz;
        if (i == 0)
            dpv_dz = (p_visc(1) - p_visc(0)) * inv_dz;
        else if (i == n - 1)
            dpv_dz = (p_visc(n - 1) - p_visc(n - 2)) * inv_dz;
        else
            dpv_dz = (p_visc(i + 1) - p_visc(i - 1)) * 0.5 * inv_dz;
        src -= A / rho * dpv_dz;
    }
    return src;
}

} // namespace

void predictor_phase(const SegmentState& s, const BloodProperties& blood,
                     double dt, std::vector<FacePair>& out) {
    const int n = s.n;
    out.resize(n);
    const double rho = blood.density;
    const double alpha = blood.coriolis_coefficient;
    const double half_dt_dz = 0.5 * dt / s.dz;

    for (int i = 0; i < n; ++i) {
        const double a_c = s.A[i] - s.A0c[i];
        double da = 0.0, dq = 0.0;
        if (i > 0 && i < n - 1) {
            const double a_m = s.A[i - 1] - s.A0c[i - 1];
            const double a_p = s.A[i + 1] - s.A0c[i + 1];
            da = minmod(a_c - a_m, a_p - a_c);
            dq = minmod(s.Q[i] - s.Q[i - 1], s.Q[i + 1] - s.Q[i]);
        }
        double A_l = s.A0f[i] + (a_c - 0.5 * da);
        double A_r = s.A0f[i + 1] + (a_c + 0.5 * da);
        double Q_l = s.Q[i] - 0.5 * dq;
        double Q_r = s.Q[i] + 0.5 * dq;

        // half-step evolution using the cell's own face fluxes
        const double f_mass = Q_r - Q_l;
        const double f_mom = momentum_flux(A_r, Q_r, s.betaf[i + 1], rho, alpha) -
                             momentum_flux(A_l, Q_l, s.betaf[i], rho, alpha);
        const double src = momentum_source(s, blood, i, s.A[i], s.Q[i]);

        const double dA_half = -half_dt_dz * f_mass;
        const double dQ_half = -half_dt_dz * f_mom + 0.5 * dt * src;
        out[i] = FacePair{A_l + dA_half, Q_l + dQ_half, A_r + dA_half, Q_r + dQ_half};
    }
}

BoundaryFlux numerical_flux(double A_l, double Q_l, double A_r, double Q_r,
                            double beta_face, const BloodProperties& blood, Flux flux) {
    const double rho = blood.density;
    const double alpha = blood.coriolis_coefficient;
    const double fm_l = momentum_flux(A_l, Q_l, beta_face, rho, alpha);
    const double fm_r = momentum_flux(A_r, Q_r, beta_face, rho, alpha);
    const auto [lm_l, lp_l] = char_speeds(A_l, Q_l, beta_face, blood);
    const auto [lm_r, lp_r] = char_speeds(A_r, Q_r, beta_face, blood);

    if (flux == Flux::llf) {
        const double smax = std::max(std::max(std::abs(lm_l), std::abs(lp_l)),
                                     std::max(std::abs(lm_r), std::abs(lp_r)));
        return {0.5 * (Q_l + Q_r) - 0.5 * smax * (A_r - A_l),
                0.5 * (fm_l + fm_r) - 0.5 * smax * (Q_r - Q_l)};
    }

    const double s_l = std::min(lm_l, lm_r);
    const double s_r = std::max(lp_l, lp_r);
    if (s_l >= 0.0) return {Q_l, fm_l};
    if (s_r <= 0.0) return {Q_r, fm_r};
    const double inv = 1.0 / (s_r - s_l);
    return {(s_r * Q_l - s_l * Q_r + s_l * s_r * (A_r - A_l)) * inv,
            (s_r * fm_l - s_l * fm_r + s_l * s_r * (Q_r - Q_l)) * inv};
}

BoundaryFlux wall_flux(const FacePair& edge, double beta_face,
                       const BloodProperties& blood, int side, Flux flux) {
    if (side < 0) {
        // ghost state mirrors the first cell's left face with Q negated
        return numerical_flux(edge.A_left, -edge.Q_left, edge.A_left, edge.Q_left,
                              beta_face, blood, flux);
    }
    return numerical_flux(edge.A_right, edge.Q_right, edge.A_right, -edge.Q_right,
                          beta_face, blood, flux);
}

void corrector_phase(SegmentState& s, const BloodProperties& blood, double dt,
                     const std::vector<FacePair>& faces, const BoundaryFlux& left_bc,
                     const BoundaryFlux& right_bc, Flux flux) {
    const int n = s.n;
    const double dt_dz = dt / s.dz;

    thread_local std::vector<BoundaryFlux> F;
    F.resize(static_cast<std::size_t>(n) + 1);
    F[0] = left_bc;
    F[n] = right_bc;
    for (int j = 1; j < n; ++j)
        F[j] = numerical_flux(faces[j - 1].A_right, faces[j - 1].Q_right,
                              faces[j].A_left, faces[j].Q_left, s.betaf[j], blood, flux);

    for (int i = 0; i < n; ++i) {
        // half-time cell average for the source terms
        const double A_half = 0.5 * (faces[i].A_left + faces[i].A_right);
        const double Q_half = 0.5 * (faces[i].Q_left + faces[i].Q_right);
        const double src = momentum_source(s, blood, i, A_half, Q_half);

        const double A_old = s.A[i];
        s.A[i] -= dt_dz * (F[i + 1].mass - F[i].mass);
        s.Q[i] += -dt_dz * (F[i + 1].momentum - F[i].momentum) + dt * src;

        if (!(s.A[i] > 0.0) || !std::isfinite(s.A[i]) || !std::isfinite(s.Q[i]))
            throw Error("solver", "instability",
                        "non-positive or non-finite area in segment '" + s.segment_id +
                            "' cell " + std::to_string(i));
        s.dA_dt_prev[i] = (s.A[i] - A_old) / dt;
    }
}

double max_stable_dt(const SegmentState& s, const BloodProperties& blood, double cfl) {
    double dt = std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.n; ++i) {
        const auto [lm, lp] = char_speeds(s.A[i], s.Q[i], s.betac[i], blood);
        const double speed = std::max(std::abs(lm), std::abs(lp));
        if (speed > 0.0) dt = std::min(dt, s.dz / speed);
        if (s.gammac[i] > 0.0) {
            // the split visco-elastic term behaves as momentum diffusion with
            // D = Gamma sqrt(A) / rho; explicit treatment needs dt <= dz^2/(2D)
            const double diff = s.gammac[i] * std::sqrt(s.A[i]) / blood.density;
            dt = std::min(dt, 0.5 * s.dz * s.dz / diff);
        }
    }
    return cfl * dt;
}

SegmentState discretize_segment(const vascular::ArterySegment& seg, int min_cells,
                                double ref_length) {
    SegmentState s;
    s.segment_id = seg.id;
    int n = min_cells;
    if (ref_length > 0.0 && seg.length > ref_length)
        n = std::max(min_cells, static_cast<int>(std::lround(min_cells * seg.length / ref_length)));
    s.n = n;
    s.dz = seg.length / n;
    s.A.resize(n);
    s.Q.assign(n, 0.0);
    s.z.resize(n);
    s.A0c.resize(n);
    s.betac.resize(n);
    s.gammac.resize(n);
    s.A0f.resize(n + 1);
    s.betaf.resize(n + 1);
    s.dA_dt_prev.assign(n, 0.0);

    for (int j = 0; j <= n; ++j) {
        const double xi = static_cast<double>(j) / n;
        const double A0 = vascular::ref_area_at(seg, xi);
        s.A0f[j] = A0;
        s.betaf[j] = vascular::beta_coefficient(seg.elastic_modulus, seg.wall_thickness_ref, A0);
    }
    for (int i = 0; i < n; ++i) {
        const double xi = (i + 0.5) / n;
        const double A0 = vascular::ref_area_at(seg, xi);
        s.z[i] = xi * seg.length;
        s.A0c[i] = A0;
        s.A[i] = A0;
        s.betac[i] = vascular::beta_coefficient(seg.elastic_modulus, seg.wall_thickness_ref, A0);
        s.gammac[i] = vascular::gamma_coefficient(seg.wall_viscosity, seg.wall_thickness_ref, A0);
    }
    return s;
}

double cell_pressure(const SegmentState& s, int i) {
    // external pressure is folded into beta-relative form by the caller that
    // built the grid; centre pressure here is the tube-law value with Pext = 0
    // plus the visco-elastic contribution. NetworkSolver adds Pext back.
    return s.betac[i] * (std::sqrt(s.A[i]) - std::sqrt(s.A0c[i])) +
           s.gammac[i] / std::sqrt(s.A[i]) * s.dA_dt_prev[i];
}

} // namespace hemo::solver
