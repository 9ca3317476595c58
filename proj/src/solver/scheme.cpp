#include "hemo/solver/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "hemo/common/error.hpp"
#include "hemo/vascular/physics.hpp"

namespace hemo::solver {

using vascular::ArterialNetwork;
using vascular::BloodProperties;
using vascular::HeartFunction;

void SolverConfig::validate() const {
    if (!(cfl_number > 0.0 && cfl_number <= 1.0))
        throw Error("solver", "bad_config", "cfl_number must be in (0, 1]");
    if (cells_per_segment_min < 4)
        throw Error("solver", "bad_config", "cells_per_segment_min must be >= 4");
    if (!(output_sample_rate > 0.0))
        throw Error("solver", "bad_config", "output_sample_rate must be positive");
    if (!(duration > 0.0))
        throw Error("solver", "bad_config", "duration must be positive");
    if (transient_beats_to_discard < 0)
        throw Error("solver", "bad_config", "transient_beats_to_discard must be >= 0");
}

// ---------------------------------------------------------------------------
// Windkessel
// ---------------------------------------------------------------------------

WindkesselUpdate windkessel_outflow(const WindkesselState& wk, double p_terminal,
                                    double dt) {
    if (!(dt > 0.0)) throw Error("solver", "bad_dt", "windkessel update needs dt > 0");
    const auto& b = wk.bed;
    const double a = dt / b.compliance;
    const double denom = 1.0 + a * (1.0 / b.proximal_resistance + 1.0 / b.distal_resistance);
    const double pc_new = (wk.pc + a * (p_terminal / b.proximal_resistance +
                                        b.outflow_pressure / b.distal_resistance)) /
                          denom;
    WindkesselUpdate u;
    u.pc_new = pc_new;
    u.q_out = (p_terminal - pc_new) / b.proximal_resistance;
    u.q_venous = (pc_new - b.outflow_pressure) / b.distal_resistance;
    return u;
}

// ---------------------------------------------------------------------------
// Junction coupling
// ---------------------------------------------------------------------------

namespace {

inline double face_wave_speed(double A, double beta, double rho) {
    return std::sqrt(beta * std::sqrt(A) / (2.0 * rho));
}

inline double face_pressure(const JunctionSide& s, double A) {
    return s.pext + s.beta * (std::sqrt(A) - std::sqrt(s.A0));
}

} // namespace

JunctionSolution junction_couple(const JunctionSide& parent,
                                 const std::vector<JunctionSide>& children,
                                 double rho, double tol) {
    const int m = static_cast<int>(children.size());
    if (m < 1) throw Error("solver", "bad_junction", "junction needs at least one child");
    const int dim = 2 * (m + 1);

    // outgoing characteristic invariants, frozen during the solve
    const double w_parent =
        parent.u + 4.0 * face_wave_speed(parent.A, parent.beta, rho);
    std::vector<double> w_child(m);
    for (int j = 0; j < m; ++j)
        w_child[j] = children[j].u - 4.0 * face_wave_speed(children[j].A, children[j].beta, rho);

    // residual scaling (characteristic / mass / total-pressure equations)
    const double c_ref = face_wave_speed(parent.A0, parent.beta, rho);
    const double s_char = 1.0 / (4.0 * c_ref);
    const double s_mass = 1.0 / (parent.A0 * c_ref);
    const double s_press = 1.0 / (rho * c_ref * c_ref);

    Eigen::VectorXd x(dim);
    x(0) = parent.A;
    x(1) = parent.u;
    for (int j = 0; j < m; ++j) {
        x(2 + 2 * j) = children[j].A;
        x(3 + 2 * j) = children[j].u;
    }

    auto residual = [&](const Eigen::VectorXd& v, Eigen::VectorXd& r) {
        const double Ap = v(0), up = v(1);
        r.resize(dim);
        r(0) = (up + 4.0 * face_wave_speed(Ap, parent.beta, rho) - w_parent) * s_char;
        double mass = Ap * up;
        const double ptot_p = face_pressure(parent, Ap) + 0.5 * rho * up * up;
        for (int j = 0; j < m; ++j) {
            const double Aj = v(2 + 2 * j), uj = v(3 + 2 * j);
            r(1 + j) = (uj - 4.0 * face_wave_speed(Aj, children[j].beta, rho) - w_child[j]) * s_char;
            mass -= Aj * uj;
            const double ptot_j = face_pressure(children[j], Aj) + 0.5 * rho * uj * uj;
            r(1 + m + j) = (ptot_p - ptot_j) * s_press;
        }
        r(dim - 1) = mass * s_mass;
    };

    auto jacobian = [&](const Eigen::VectorXd& v, Eigen::MatrixXd& J) {
        J.setZero(dim, dim);
        const double Ap = v(0), up = v(1);
        const double cp = face_wave_speed(Ap, parent.beta, rho);
        J(0, 0) = (cp / Ap) * s_char;  // d(4c)/dA = c/A
        J(0, 1) = s_char;
        J(dim - 1, 0) = up * s_mass;
        J(dim - 1, 1) = Ap * s_mass;
        for (int j = 0; j < m; ++j) {
            const double Aj = v(2 + 2 * j), uj = v(3 + 2 * j);
            const double cj = face_wave_speed(Aj, children[j].beta, rho);
            J(1 + j, 2 + 2 * j) = -(cj / Aj) * s_char;
            J(1 + j, 3 + 2 * j) = s_char;
            J(dim - 1, 2 + 2 * j) = -uj * s_mass;
            J(dim - 1, 3 + 2 * j) = -Aj * s_mass;
            J(1 + m + j, 0) = parent.beta / (2.0 * std::sqrt(Ap)) * s_press;
            J(1 + m + j, 1) = rho * up * s_press;
            J(1 + m + j, 2 + 2 * j) = -children[j].beta / (2.0 * std::sqrt(Aj)) * s_press;
            J(1 + m + j, 3 + 2 * j) = -rho * uj * s_press;
        }
    };

    Eigen::VectorXd r(dim), r_new(dim);
    Eigen::MatrixXd J(dim, dim);
    residual(x, r);
    double rnorm = r.lpNorm<Eigen::Infinity>();

    JunctionSolution sol;
    for (int iter = 0; iter < 100; ++iter) {
        if (rnorm < tol) {
            sol.A.resize(m + 1);
            sol.u.resize(m + 1);
            sol.A[0] = x(0);
            sol.u[0] = x(1);
            for (int j = 0; j < m; ++j) {
                sol.A[j + 1] = x(2 + 2 * j);
                sol.u[j + 1] = x(3 + 2 * j);
            }
            sol.residual = rnorm;
            sol.iterations = iter;
            return sol;
        }
        jacobian(x, J);
        Eigen::VectorXd dx = J.partialPivLu().solve(-r);

        double lambda = 1.0;
        bool accepted = false;
        while (lambda >= 1.0 / 1024.0) {
            Eigen::VectorXd x_try = x + lambda * dx;
            bool positive = true;
            for (int q = 0; q < m + 1; ++q)
                if (!(x_try(2 * q) > 0.0)) positive = false;
            if (positive) {
                residual(x_try, r_new);
                const double n_new = r_new.lpNorm<Eigen::Infinity>();
                if (n_new < rnorm || n_new < tol) {
                    x = x_try;
                    r = r_new;
                    rnorm = n_new;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            // take the smallest damped step that keeps areas positive
            double l = 1.0 / 1024.0;
            Eigen::VectorXd x_try = x + l * dx;
            for (int q = 0; q < m + 1; ++q)
                if (!(x_try(2 * q) > 0.0)) x_try(2 * q) = 0.5 * x(2 * q);
            x = x_try;
            residual(x, r);
            rnorm = r.lpNorm<Eigen::Infinity>();
        }
    }
    throw Error("solver", "junction_nonconvergence",
                "damped Newton failed after 100 iterations, scaled residual = " +
                    std::to_string(rnorm));
}

// ---------------------------------------------------------------------------
// NetworkSolver
// ---------------------------------------------------------------------------

NetworkSolver::NetworkSolver(const ArterialNetwork& net, const HeartFunction& hf,
                             const SolverConfig& cfg)
    : hf_(hf), blood_(net.blood), cfg_(cfg) {
    cfg_.validate();
    vascular::check_heart_function(hf_);
    const auto violations = vascular::validate_network(net);
    if (!violations.empty())
        throw Error("solver", "invalid_network", violations.front());

    // discretize with a cell size tied to the root segment's length
    const double ref_len = net.segments.at(net.root_segment_id).length;
    for (const auto& [id, seg] : net.segments) {
        seg_index_[id] = static_cast<int>(states_.size());
        states_.push_back(discretize_segment(seg, cfg_.cells_per_segment_min, ref_len));
        owned_segs_.push_back(seg);
    }
    for (auto& s : owned_segs_) segs_.push_back(&s);
    root_ = seg_index_.at(net.root_segment_id);
    for (const auto& [id, bed] : net.beds) beds_[id] = WindkesselState{bed, 0.0};

    for (std::size_t i = 0; i < owned_segs_.size(); ++i) {
        if (owned_segs_[i].children.empty()) continue;
        Junction jc;
        jc.parent = static_cast<int>(i);
        for (const auto& c : owned_segs_[i].children) jc.children.push_back(seg_index_.at(c));
        junctions_.push_back(std::move(jc));
    }
    faces_.resize(states_.size());

    // warm start near the expected mean pressure so the compliance charging
    // transient stays short
    double conductance = 0.0;
    double p_out_ref = 0.0;
    for (const auto& [id, wk] : beds_) {
        conductance += 1.0 / (wk.bed.proximal_resistance + wk.bed.distal_resistance);
        p_out_ref = wk.bed.outflow_pressure;
    }
    const double co = hf_.stroke_volume * hf_.heart_rate / 60.0;
    const double map_est = p_out_ref + co / conductance;
    for (std::size_t i = 0; i < states_.size(); ++i) {
        auto& s = states_[i];
        const double pext = owned_segs_[i].external_pressure;
        for (int c = 0; c < s.n; ++c) {
            const double root_term = std::sqrt(s.A0c[c]) + (map_est - pext) / s.betac[c];
            s.A[c] = root_term * root_term;
        }
    }
    for (auto& [id, wk] : beds_) {
        const double q = (map_est - wk.bed.outflow_pressure) /
                         (wk.bed.proximal_resistance + wk.bed.distal_resistance);
        wk.pc = wk.bed.outflow_pressure + q * wk.bed.distal_resistance;
    }
}

int NetworkSolver::index_of(const std::string& segment_id) const {
    auto it = seg_index_.find(segment_id);
    if (it == seg_index_.end())
        throw Error("solver", "bad_probe", "unknown segment '" + segment_id + "'");
    return it->second;
}

double NetworkSolver::max_stable_dt() const {
    double dt = std::numeric_limits<double>::infinity();
    for (const auto& s : states_)
        dt = std::min(dt, hemo::solver::max_stable_dt(s, blood_, cfg_.cfl_number));
    return dt;
}

double NetworkSolver::total_volume() const {
    double v = 0.0;
    for (const auto& s : states_)
        for (int i = 0; i < s.n; ++i) v += s.A[i] * s.dz;
    for (const auto& [id, wk] : beds_) v += wk.volume();
    return v;
}

double NetworkSolver::monitor_pressure() const {
    const auto& s = states_[root_];
    return owned_segs_[root_].external_pressure + cell_pressure(s, s.n / 2);
}

double NetworkSolver::probe_value(const ProbeRequest& p) const {
    const int si = index_of(p.segment_id);
    const auto& s = states_[si];
    const auto& seg = *segs_[si];

    if (p.quantity == Quantity::bed_volume) {
        if (!seg.terminal_bed)
            throw Error("solver", "bad_probe",
                        "segment '" + p.segment_id + "' has no terminal bed");
        return beds_.at(*seg.terminal_bed).volume();
    }
    if (!(p.xi >= 0.0 && p.xi <= 1.0))
        throw Error("solver", "bad_probe", "probe position must lie in [0, 1]");

    // linear interpolation between cell centres, clamped at the end cells
    const double zq = p.xi * seg.length;
    const double pos = zq / s.dz - 0.5;
    int i0 = static_cast<int>(std::floor(pos));
    double w = pos - i0;
    if (i0 < 0) { i0 = 0; w = 0.0; }
    if (i0 >= s.n - 1) { i0 = s.n - 1; w = 0.0; }
    const int i1 = std::min(i0 + 1, s.n - 1);

    auto value_at = [&](int i) {
        switch (p.quantity) {
            case Quantity::pressure:
                return seg.external_pressure + cell_pressure(s, i);
            case Quantity::flow:
                return s.Q[i];
            case Quantity::area:
                return s.A[i];
            default:
                return 0.0;
        }
    };
    return (1.0 - w) * value_at(i0) + w * value_at(i1);
}

void NetworkSolver::step(double dt) {
    const double dt_max = max_stable_dt();
    if (dt > dt_max * (1.0 + 1e-9))
        throw Error("solver", "cfl_violation",
                    "dt = " + std::to_string(dt) + " exceeds stable dt = " +
                        std::to_string(dt_max));

    const double t_half = time_ + 0.5 * dt;
    diag_ = StepDiagnostics{};

    for (std::size_t i = 0; i < states_.size(); ++i)
        predictor_phase(states_[i], blood_, dt, faces_[i]);

    std::vector<BoundaryFlux> bc_left(states_.size()), bc_right(states_.size());

    // --- root inflow: prescribe Q, close with the backward characteristic ---
    {
        auto& s = states_[root_];
        const auto& f = faces_[root_].front();
        const double beta = s.betaf[0];
        const double rho = blood_.density;
        const double u_f = f.Q_left / f.A_left;
        const double w_minus = u_f - 4.0 * face_wave_speed(f.A_left, beta, rho);
        const double q_target =
            vascular::inflow_waveform(hf_, std::fmod(t_half, hf_.period()));

        double A = f.A_left;
        const double scale = std::max(std::abs(q_target), s.A0f[0] * face_wave_speed(s.A0f[0], beta, rho));
        for (int it = 0; it < 50; ++it) {
            const double c = face_wave_speed(A, beta, rho);
            const double u = w_minus + 4.0 * c;
            const double g = A * u - q_target;
            if (std::abs(g) < 1e-13 * scale) break;
            const double dg = u + c;
            double A_new = A - g / dg;
            if (!(A_new > 0.0)) A_new = 0.5 * A;
            A = A_new;
        }
        bc_left[root_] = BoundaryFlux{
            q_target, momentum_flux(A, q_target, beta, rho, blood_.coriolis_coefficient)};
        diag_.mass_inflow = q_target;
    }

    // --- junctions ---
    for (const auto& jc : junctions_) {
        const auto& sp = states_[jc.parent];
        const auto& fp = faces_[jc.parent].back();
        JunctionSide parent{fp.A_right, fp.Q_right / fp.A_right, sp.betaf[sp.n],
                            sp.A0f[sp.n], segs_[jc.parent]->external_pressure};
        std::vector<JunctionSide> kids;
        for (int ci : jc.children) {
            const auto& sc = states_[ci];
            const auto& fc = faces_[ci].front();
            kids.push_back(JunctionSide{fc.A_left, fc.Q_left / fc.A_left, sc.betaf[0],
                                        sc.A0f[0], segs_[ci]->external_pressure});
        }
        const auto sol = junction_couple(parent, kids, blood_.density);

        double mass_sum = 0.0;
        for (std::size_t j = 0; j < jc.children.size(); ++j) {
            const int ci = jc.children[j];
            const double Aj = sol.A[j + 1], uj = sol.u[j + 1];
            const double qj = Aj * uj;
            bc_left[ci] = BoundaryFlux{
                qj, momentum_flux(Aj, qj, states_[ci].betaf[0], blood_.density,
                                  blood_.coriolis_coefficient)};
            mass_sum += qj;
        }
        // parent mass flux taken as the children's sum so the split is exact
        bc_right[jc.parent] = BoundaryFlux{
            mass_sum, momentum_flux(sol.A[0], sol.A[0] * sol.u[0], sp.betaf[sp.n],
                                    blood_.density, blood_.coriolis_coefficient)};
    }

    // --- leaves: implicit RCR coupling via the forward characteristic ---
    std::vector<std::pair<std::string, double>> pending_pc;
    for (std::size_t i = 0; i < states_.size(); ++i) {
        if (!segs_[i]->terminal_bed) continue;
        auto& s = states_[i];
        const auto& f = faces_[i].back();
        const double beta = s.betaf[s.n];
        const double A0 = s.A0f[s.n];
        const double pext = segs_[i]->external_pressure;
        const double rho = blood_.density;
        auto& wk = beds_.at(*segs_[i]->terminal_bed);

        const double u_f = f.Q_right / f.A_right;
        const double w_plus = u_f + 4.0 * face_wave_speed(f.A_right, beta, rho);

        const double a = dt / wk.bed.compliance;
        const double denom =
            1.0 + a * (1.0 / wk.bed.proximal_resistance + 1.0 / wk.bed.distal_resistance);
        const double k_pt = (a / wk.bed.proximal_resistance) / denom;

        double A = f.A_right;
        const double c_ref = face_wave_speed(A0, beta, rho);
        const double scale = A0 * c_ref;
        WindkesselUpdate upd{};
        for (int it = 0; it < 100; ++it) {
            const double c = face_wave_speed(A, beta, rho);
            const double u = w_plus - 4.0 * c;
            const double p_t = pext + beta * (std::sqrt(A) - std::sqrt(A0));
            upd = windkessel_outflow(wk, p_t, dt);
            const double g = A * u - upd.q_out;
            if (std::abs(g) < 1e-13 * scale) break;
            const double dg = u - c - (1.0 - k_pt) / wk.bed.proximal_resistance * beta /
                                          (2.0 * std::sqrt(A));
            double A_new = A - g / dg;
            if (!(A_new > 0.0)) A_new = 0.5 * A;
            A = A_new;
        }
        bc_right[i] = BoundaryFlux{
            upd.q_out, momentum_flux(A, A * (w_plus - 4.0 * face_wave_speed(A, beta, rho)),
                                     beta, rho, blood_.coriolis_coefficient)};
        pending_pc.emplace_back(*segs_[i]->terminal_bed, upd.pc_new);
        diag_.mass_outflow += upd.q_venous;
    }

    for (std::size_t i = 0; i < states_.size(); ++i)
        corrector_phase(states_[i], blood_, dt, faces_[i], bc_left[i], bc_right[i],
                        cfg_.flux);
    for (const auto& [id, pc] : pending_pc) beds_.at(id).pc = pc;
    time_ += dt;
}

// ---------------------------------------------------------------------------
// run_simulation
// ---------------------------------------------------------------------------

namespace {

double interp_series(const std::vector<double>& ts, const std::vector<double>& vs,
                     double t) {
    if (t <= ts.front()) return vs.front();
    if (t >= ts.back()) return vs.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t i1 = static_cast<std::size_t>(it - ts.begin());
    const std::size_t i0 = i1 - 1;
    const double w = (t - ts[i0]) / (ts[i1] - ts[i0]);
    return (1.0 - w) * vs[i0] + w * vs[i1];
}

} // namespace

SimulationResult run_simulation(const ArterialNetwork& net, const HeartFunction& hf,
                                const SolverConfig& cfg,
                                const std::vector<ProbeRequest>& probes) {
    NetworkSolver solver(net, hf, cfg);
    for (const auto& p : probes) (void)solver.probe_value(p);  // validate early

    const double T = hf.period();
    const int n_disc = cfg.transient_beats_to_discard;
    const int max_beats = static_cast<int>(std::floor(cfg.duration / T));
    if (max_beats < n_disc + 2)
        throw Error("solver", "duration_too_short",
                    "duration must cover at least transient_beats_to_discard + 2 beats");

    std::vector<double> ts;
    std::vector<std::vector<double>> vals(probes.size());
    std::vector<double> monitor;

    const double v0 = solver.total_volume();
    double net_in = 0.0;

    auto record = [&]() {
        ts.push_back(solver.time());
        for (std::size_t i = 0; i < probes.size(); ++i)
            vals[i].push_back(solver.probe_value(probes[i]));
        monitor.push_back(solver.monitor_pressure());
    };
    record();

    // per-beat monitor trace on the output grid, for the periodicity check
    const double out_dt = 1.0 / cfg.output_sample_rate;
    const int beat_samples = static_cast<int>(std::floor(T / out_dt));
    std::vector<double> prev_beat, cur_beat;

    int beat = 0;
    bool converged = false;
    double last_delta = std::numeric_limits<double>::infinity();
    int end_beat = max_beats;

    while (beat < max_beats) {
        const double t_beat_end = (beat + 1) * T;
        while (solver.time() < t_beat_end) {
            double dt = solver.max_stable_dt();
            dt = std::min(dt, t_beat_end - solver.time() + 1e-12);
            solver.step(dt);
            net_in += (solver.last_step().mass_inflow - solver.last_step().mass_outflow) * dt;
            record();
        }
        ++beat;

        cur_beat.resize(beat_samples);
        for (int j = 0; j < beat_samples; ++j)
            cur_beat[j] = interp_series(ts, monitor, (beat - 1) * T + j * out_dt);
        if (!prev_beat.empty()) {
            double delta = 0.0;
            for (int j = 0; j < beat_samples; ++j)
                delta = std::max(delta, std::abs(cur_beat[j] - prev_beat[j]));
            last_delta = delta;
            if (beat > n_disc && delta < cfg.periodicity_threshold) {
                converged = true;
                end_beat = beat;
                break;
            }
        }
        std::swap(prev_beat, cur_beat);
    }
    if (!converged) end_beat = beat;

    SimulationResult res;
    res.sample_rate = cfg.output_sample_rate;
    res.probes = probes;
    res.beats_simulated = end_beat;
    res.periodic_converged = converged;
    res.last_beat_pressure_delta = last_delta;
    res.mass_error_relative = std::abs(solver.total_volume() - v0 - net_in) / v0;

    const double t0 = n_disc * T;
    const std::size_t n_out = static_cast<std::size_t>(
        std::floor((end_beat - n_disc) * T * cfg.output_sample_rate + 1e-9));
    res.series.assign(probes.size(), std::vector<double>(n_out));
    for (std::size_t i = 0; i < probes.size(); ++i)
        for (std::size_t j = 0; j < n_out; ++j)
            res.series[i][j] = interp_series(ts, vals[i], t0 + j * out_dt);

    for (int k = n_disc; k < end_beat; ++k) {
        const auto idx = static_cast<std::size_t>(
            std::llround((k - n_disc) * T * cfg.output_sample_rate));
        if (idx < n_out) res.beat_boundaries.push_back(idx);
    }
    return res;
}

} // namespace hemo::solver
