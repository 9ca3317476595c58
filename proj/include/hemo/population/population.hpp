#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hemo/vascular/types.hpp"

namespace hemo::population {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

// Wall-stiffness relation Eh = R_d (k1 e^{k2 R_d} + k3(age)), k3 linear in
// age. Constants are config inputs; defaults are order-of-magnitude SI
// conversions of the usual empirical fit, not calibrated truths.
struct StiffnessParams {
    double k1_pa = 3.0e5;
    double k2_per_m = -900.0;
    double k3_base_pa = 3.5e4;       // k3(age) = base + slope * age
    double k3_age_slope_pa = 500.0;
};

double wall_stiffness(double r_distal_m, double age_years, const StiffnessParams& k);

struct PriorSpec {
    Range hr_bpm{40.0, 120.0};
    Range sv_ml{40.0, 120.0};
    Range pft_s{0.08, 0.20};
    Range rfv{0.0, 0.10};
    Range height_cm{150.0, 190.0};
    Range age_years{25.0, 75.0};
    Range lvet_eps1_ms{-40.0, 40.0};
    Range lvet_eps2{-0.05, 0.05};
    Range lvet_eps3{-0.05, 0.05};
    Range bed_r2_scale{0.7, 1.3};
    double height_eps_std_cm = 5.0;
    StiffnessParams stiffness;

    void validate() const;
    nlohmann::json to_json() const;
    static PriorSpec from_json(const nlohmann::json& j);
};

// LVET(HR, SV) empirical relation with per-subject noise:
//   LVET = (244 + e1) - (0.926 + e2) HR + (1.08 + e3) SV   [ms; SV in mL]
double lvet_relation_ms(double hr_bpm, double sv_ml, double eps1_ms, double eps2,
                        double eps3);

struct VirtualSubject {
    std::uint64_t subject_id = 0;
    std::uint64_t rng_seed = 0;

    // biomarkers of interest (SVR is filled in after simulation)
    double hr_bpm = 0.0;
    double co_lpm = 0.0;
    double svr_pa_s_m3 = 0.0;
    double lvet_ms = 0.0;

    // nuisance parameters
    double sv_ml = 0.0;
    double pft_s = 0.0;
    double rfv = 0.0;
    double height_cm = 0.0;
    double height_eps_cm = 0.0;
    double age_years = 0.0;
    double eps1_ms = 0.0, eps2 = 0.0, eps3 = 0.0;
    double bed_r2_scale = 1.0;
    double probe_xi = 0.5;   // measurement location within the radial artery
    std::uint8_t arm = 0;    // 0 = left, 1 = right

    vascular::HeartFunction heart() const;
};

// Deterministic per seed. Draws violating the heart-function invariants are
// resampled; 1000 consecutive rejections raise a prior-inconsistency error.
VirtualSubject sample_subject(const PriorSpec& prior, std::uint64_t seed);

// Subject-specific network: segment lengths scaled to height, wall stiffness
// set from the age relation, distal bed resistances scaled.
vascular::ArterialNetwork subject_network(const vascular::ArterialNetwork& base,
                                          const VirtualSubject& subj,
                                          const PriorSpec& prior);

struct AcceptanceFilter {
    double dbp_max_mmhg = 120.0;
    double sbp_min_mmhg = 60.0;
    double sbp_max_mmhg = 200.0;
};

struct FilterDecision {
    bool accepted = false;
    double sbp_mmhg = 0.0;
    double dbp_mmhg = 0.0;
};

// SBP = max, DBP = min over one clean pre-noise beat in mmHg; rejection is
// DBP > dbp_max or SBP outside [sbp_min, sbp_max], boundaries inclusive.
FilterDecision apply_acceptance_filter(const std::vector<double>& beat_mmhg,
                                       const AcceptanceFilter& f);

} // namespace hemo::population
