#include "hemo/population/population.hpp"

#include <cmath>

#include "hemo/common/error.hpp"
#include "hemo/common/rng.hpp"
#include "hemo/vascular/physics.hpp"

namespace hemo::population {

double wall_stiffness(double r_distal_m, double age_years, const StiffnessParams& k) {
    if (!(r_distal_m > 0.0))
        throw Error("population", "bad_radius", "wall stiffness needs R_d > 0");
    const double k3 = k.k3_base_pa + k.k3_age_slope_pa * age_years;
    return r_distal_m * (k.k1_pa * std::exp(k.k2_per_m * r_distal_m) + k3);
}

double lvet_relation_ms(double hr_bpm, double sv_ml, double eps1_ms, double eps2,
                        double eps3) {
    return (244.0 + eps1_ms) - (0.926 + eps2) * hr_bpm + (1.08 + eps3) * sv_ml;
}

namespace {

void check_range(const Range& r, const char* name) {
    if (!(r.lo < r.hi))
        throw Error("population", "bad_prior", std::string(name) + ": requires lo < hi");
}

nlohmann::json range_json(const Range& r) { return {r.lo, r.hi}; }

Range range_from(const nlohmann::json& j) { return Range{j.at(0), j.at(1)}; }

} // namespace

void PriorSpec::validate() const {
    check_range(hr_bpm, "hr_bpm");
    check_range(sv_ml, "sv_ml");
    check_range(pft_s, "pft_s");
    check_range(height_cm, "height_cm");
    check_range(age_years, "age_years");
    check_range(bed_r2_scale, "bed_r2_scale");
    if (!(rfv.lo >= 0.0 && rfv.hi < 1.0 && rfv.lo <= rfv.hi))
        throw Error("population", "bad_prior", "rfv range must lie in [0, 1)");
    if (lvet_eps1_ms.lo != -40.0 || lvet_eps1_ms.hi != 40.0)
        throw Error("population", "bad_prior", "eps1 range is fixed at [-40, 40] ms");
    if (lvet_eps2.lo != -0.05 || lvet_eps2.hi != 0.05 || lvet_eps3.lo != -0.05 ||
        lvet_eps3.hi != 0.05)
        throw Error("population", "bad_prior", "eps2/eps3 ranges are fixed at [-0.05, 0.05]");
    if (!(height_eps_std_cm >= 0.0))
        throw Error("population", "bad_prior", "height noise std must be >= 0");
}

nlohmann::json PriorSpec::to_json() const {
    return {{"hr_bpm", range_json(hr_bpm)},
            {"sv_ml", range_json(sv_ml)},
            {"pft_s", range_json(pft_s)},
            {"rfv", range_json(rfv)},
            {"height_cm", range_json(height_cm)},
            {"age_years", range_json(age_years)},
            {"lvet_eps1_ms", range_json(lvet_eps1_ms)},
            {"lvet_eps2", range_json(lvet_eps2)},
            {"lvet_eps3", range_json(lvet_eps3)},
            {"bed_r2_scale", range_json(bed_r2_scale)},
            {"height_eps_std_cm", height_eps_std_cm},
            {"stiffness",
             {{"k1_pa", stiffness.k1_pa},
              {"k2_per_m", stiffness.k2_per_m},
              {"k3_base_pa", stiffness.k3_base_pa},
              {"k3_age_slope_pa", stiffness.k3_age_slope_pa}}}};
}

PriorSpec PriorSpec::from_json(const nlohmann::json& j) {
    PriorSpec p;
    if (j.contains("hr_bpm")) p.hr_bpm = range_from(j.at("hr_bpm"));
    if (j.contains("sv_ml")) p.sv_ml = range_from(j.at("sv_ml"));
    if (j.contains("pft_s")) p.pft_s = range_from(j.at("pft_s"));
    if (j.contains("rfv")) p.rfv = range_from(j.at("rfv"));
    if (j.contains("height_cm")) p.height_cm = range_from(j.at("height_cm"));
    if (j.contains("age_years")) p.age_years = range_from(j.at("age_years"));
    if (j.contains("lvet_eps1_ms")) p.lvet_eps1_ms = range_from(j.at("lvet_eps1_ms"));
    if (j.contains("lvet_eps2")) p.lvet_eps2 = range_from(j.at("lvet_eps2"));
    if (j.contains("lvet_eps3")) p.lvet_eps3 = range_from(j.at("lvet_eps3"));
    if (j.contains("bed_r2_scale")) p.bed_r2_scale = range_from(j.at("bed_r2_scale"));
    if (j.contains("height_eps_std_cm")) p.height_eps_std_cm = j.at("height_eps_std_cm");
    if (j.contains("stiffness")) {
        const auto& s = j.at("stiffness");
        p.stiffness.k1_pa = s.value("k1_pa", p.stiffness.k1_pa);
        p.stiffness.k2_per_m = s.value("k2_per_m", p.stiffness.k2_per_m);
        p.stiffness.k3_base_pa = s.value("k3_base_pa", p.stiffness.k3_base_pa);
        p.stiffness.k3_age_slope_pa = s.value("k3_age_slope_pa", p.stiffness.k3_age_slope_pa);
    }
    p.validate();
    return p;
}

vascular::HeartFunction VirtualSubject::heart() const {
    vascular::HeartFunction hf;
    hf.heart_rate = hr_bpm;
    hf.stroke_volume = sv_ml * 1e-6;
    hf.lvet = lvet_ms * 1e-3;
    hf.peak_flow_time = pft_s;
    hf.reverse_flow_fraction = rfv;
    return hf;
}

VirtualSubject sample_subject(const PriorSpec& prior, std::uint64_t seed) {
    prior.validate();
    Rng rng(seed);

    for (int attempt = 0; attempt < 1000; ++attempt) {
        VirtualSubject s;
        s.rng_seed = seed;
        s.hr_bpm = rng.uniform(prior.hr_bpm.lo, prior.hr_bpm.hi);
        s.sv_ml = rng.uniform(prior.sv_ml.lo, prior.sv_ml.hi);
        s.pft_s = rng.uniform(prior.pft_s.lo, prior.pft_s.hi);
        s.rfv = rng.uniform(prior.rfv.lo, prior.rfv.hi);
        s.height_cm = rng.uniform(prior.height_cm.lo, prior.height_cm.hi);
        s.age_years = rng.uniform(prior.age_years.lo, prior.age_years.hi);
        s.eps1_ms = rng.uniform(prior.lvet_eps1_ms.lo, prior.lvet_eps1_ms.hi);
        s.eps2 = rng.uniform(prior.lvet_eps2.lo, prior.lvet_eps2.hi);
        s.eps3 = rng.uniform(prior.lvet_eps3.lo, prior.lvet_eps3.hi);
        s.bed_r2_scale = rng.uniform(prior.bed_r2_scale.lo, prior.bed_r2_scale.hi);
        s.height_eps_cm = rng.normal(0.0, prior.height_eps_std_cm);
        s.arm = rng.bernoulli(0.5) ? 1 : 0;
        s.probe_xi = rng.uniform();

        s.lvet_ms = lvet_relation_ms(s.hr_bpm, s.sv_ml, s.eps1_ms, s.eps2, s.eps3);
        s.co_lpm = s.hr_bpm * s.sv_ml * 1e-3;

        try {
            vascular::check_heart_function(s.heart());
        } catch (const Error&) {
            continue;  // resample the whole draw
        }
        if (!((s.height_cm + s.height_eps_cm) > 0.0)) continue;
        return s;
    }
    throw Error("population", "prior_inconsistent",
                "1000 consecutive draws violated the heart-function invariants");
}

vascular::ArterialNetwork subject_network(const vascular::ArterialNetwork& base,
                                          const VirtualSubject& subj,
                                          const PriorSpec& prior) {
    auto net = vascular::scale_network_to_height(base, subj.height_cm, subj.height_eps_cm);
    for (auto& [id, seg] : net.segments) {
        const double eh = wall_stiffness(seg.distal_radius, subj.age_years, prior.stiffness);
        seg.elastic_modulus = eh / seg.wall_thickness_ref;
    }
    for (auto& [id, bed] : net.beds) bed.distal_resistance *= subj.bed_r2_scale;
    return net;
}

FilterDecision apply_acceptance_filter(const std::vector<double>& beat_mmhg,
                                       const AcceptanceFilter& f) {
    if (beat_mmhg.empty())
        throw Error("population", "empty_beat", "acceptance filter needs a non-empty beat");
    FilterDecision d;
    d.sbp_mmhg = -1e300;
    d.dbp_mmhg = 1e300;
    for (double v : beat_mmhg) {
        d.sbp_mmhg = std::max(d.sbp_mmhg, v);
        d.dbp_mmhg = std::min(d.dbp_mmhg, v);
    }
    d.accepted = !(d.dbp_mmhg > f.dbp_max_mmhg || d.sbp_mmhg < f.sbp_min_mmhg ||
                   d.sbp_mmhg > f.sbp_max_mmhg);
    return d;
}

} // namespace hemo::population
