#include "hemo/vascular/physics.hpp"

#include <cmath>
#include <queue>
#include <set>

#include "hemo/common/error.hpp"

namespace hemo::vascular {

double beta_coefficient(double elastic_modulus, double wall_thickness, double ref_area) {
    return (4.0 / 3.0) * std::sqrt(M_PI) * elastic_modulus * wall_thickness / ref_area;
}

double gamma_coefficient(double wall_viscosity, double wall_thickness, double ref_area) {
    return (2.0 / 3.0) * std::sqrt(M_PI) * wall_viscosity * wall_thickness / ref_area;
}

double radius_at(const ArterySegment& seg, double xi) {
    return seg.proximal_radius + (seg.distal_radius - seg.proximal_radius) * xi;
}

double ref_area_at(const ArterySegment& seg, double xi) {
    const double r = radius_at(seg, xi);
    return M_PI * r * r;
}

double tube_law_pressure(double area, double ref_area, double dA_dt,
                         const ArterySegment& seg) {
    if (area <= 0.0 || ref_area <= 0.0)
        throw Error("vascular", "nonpositive_area", "tube law requires A > 0 and A0 > 0");
    const double beta = beta_coefficient(seg.elastic_modulus, seg.wall_thickness_ref, ref_area);
    const double gamma = gamma_coefficient(seg.wall_viscosity, seg.wall_thickness_ref, ref_area);
    return seg.external_pressure + beta * (std::sqrt(area) - std::sqrt(ref_area)) +
           gamma / std::sqrt(area) * dA_dt;
}

double wave_speed_beta(double area, double beta, double density) {
    return std::sqrt(beta * std::sqrt(area) / (2.0 * density));
}

double wave_speed(double area, double ref_area, const ArterySegment& seg,
                  const BloodProperties& blood) {
    if (area <= 0.0)
        throw Error("vascular", "nonpositive_area", "wave speed requires A > 0");
    const double beta = beta_coefficient(seg.elastic_modulus, seg.wall_thickness_ref, ref_area);
    return wave_speed_beta(area, beta, blood.density);
}

void check_heart_function(const HeartFunction& hf) {
    if (!(hf.heart_rate > 0.0))
        throw Error("vascular", "invalid_heart", "heart rate must be positive");
    if (!(hf.stroke_volume > 0.0))
        throw Error("vascular", "invalid_heart", "stroke volume must be positive");
    if (!(hf.peak_flow_time > 0.0 && hf.peak_flow_time < hf.lvet))
        throw Error("vascular", "invalid_heart", "requires 0 < PFT < LVET");
    if (!(hf.lvet < hf.period()))
        throw Error("vascular", "invalid_heart", "requires LVET < 60/HR");
    if (!(hf.reverse_flow_fraction >= 0.0 && hf.reverse_flow_fraction < 1.0))
        throw Error("vascular", "invalid_heart", "requires 0 <= RFV < 1");
}

double inflow_waveform(const HeartFunction& hf, double t) {
    check_heart_function(hf);
    const double T = hf.period();
    const double lvet = hf.lvet;
    const double pft = hf.peak_flow_time;
    const double rfv = hf.reverse_flow_fraction;

    // forward lobe carries SV*(1+RFV) so the net beat volume is exactly SV
    const double q_fwd = M_PI * hf.stroke_volume * (1.0 + rfv) / (2.0 * lvet);
    // reverse lobe: nominal width 5% of the period, clipped to the diastole
    const double rev_width = std::min(0.05 * T, T - lvet);

    if (t < 0.0 || t >= T)
        throw Error("vascular", "time_out_of_period", "t must lie in [0, 60/HR)");

    if (t <= lvet) {
        // time warp g: [0,PFT] -> [0,1/2], [PFT,LVET] -> [1/2,1]
        const double g = (t <= pft) ? 0.5 * t / pft
                                    : 0.5 + 0.5 * (t - pft) / (lvet - pft);
        return q_fwd * std::sin(M_PI * g);
    }
    if (rfv > 0.0 && t < lvet + rev_width) {
        const double q_rev = M_PI * rfv * hf.stroke_volume / (2.0 * rev_width);
        return -q_rev * std::sin(M_PI * (t - lvet) / rev_width);
    }
    return 0.0;
}

ArterialNetwork scale_network_to_height(const ArterialNetwork& net,
                                        double height_cm, double eps_cm) {
    const double scale = (height_cm + eps_cm) / 170.0;
    if (!(scale > 0.0))
        throw Error("vascular", "nonpositive_scale", "height + eps must be positive");
    ArterialNetwork out = net;
    for (auto& [id, seg] : out.segments) seg.length *= scale;
    return out;
}

std::vector<std::string> validate_network(const ArterialNetwork& net) {
    std::vector<std::string> v;
    if (net.segments.empty()) {
        v.push_back("network has no segments");
        return v;
    }
    if (!net.segments.count(net.root_segment_id))
        v.push_back("root segment '" + net.root_segment_id + "' not found");

    for (const auto& [id, seg] : net.segments) {
        if (!(seg.length > 0.0)) v.push_back(id + ": length must be positive");
        if (!(seg.distal_radius > 0.0 && seg.distal_radius <= seg.proximal_radius))
            v.push_back(id + ": requires 0 < r_distal <= r_proximal (tapered tube)");
        if (!(seg.wall_thickness_ref > 0.0)) v.push_back(id + ": wall thickness must be positive");
        if (!(seg.elastic_modulus > 0.0)) v.push_back(id + ": elastic modulus must be positive");
        if (seg.wall_viscosity < 0.0) v.push_back(id + ": wall viscosity must be non-negative");
        const bool has_children = !seg.children.empty();
        const bool has_bed = seg.terminal_bed.has_value();
        if (has_children == has_bed)
            v.push_back(id + ": segment must have children XOR a terminal bed");
        if (has_bed && !net.beds.count(*seg.terminal_bed))
            v.push_back(id + ": missing terminal bed '" + *seg.terminal_bed + "'");
        for (const auto& c : seg.children)
            if (!net.segments.count(c))
                v.push_back(id + ": unknown child segment '" + c + "'");
    }

    for (const auto& [id, bed] : net.beds) {
        if (!(bed.proximal_resistance > 0.0 && bed.distal_resistance > 0.0))
            v.push_back("bed " + id + ": resistances must be positive");
        if (!(bed.compliance > 0.0)) v.push_back("bed " + id + ": compliance must be positive");
    }

    if (!(net.blood.density > 0.0)) v.push_back("blood density must be positive");
    if (net.blood.dynamic_viscosity < 0.0) v.push_back("blood viscosity must be non-negative");
    if (net.blood.coriolis_coefficient < 1.0) v.push_back("Coriolis coefficient must be >= 1");
    if (net.blood.velocity_profile_shape < 2.0) v.push_back("velocity profile shape must be >= 2");

    // tree reachability from the root, in-degree at most one, no cycles
    std::map<std::string, int> indegree;
    for (const auto& [id, seg] : net.segments)
        for (const auto& c : seg.children) indegree[c]++;
    for (const auto& [id, deg] : indegree)
        if (deg > 1) v.push_back(id + ": reached by more than one parent (not a tree)");
    if (indegree.count(net.root_segment_id))
        v.push_back("root segment has a parent (not a tree)");

    std::set<std::string> visited;
    std::queue<std::string> frontier;
    if (net.segments.count(net.root_segment_id)) {
        frontier.push(net.root_segment_id);
        visited.insert(net.root_segment_id);
    }
    bool cycle = false;
    while (!frontier.empty()) {
        const auto id = frontier.front();
        frontier.pop();
        for (const auto& c : net.segments.at(id).children) {
            if (!net.segments.count(c)) continue;
            if (visited.count(c)) {
                cycle = true;
                continue;
            }
            visited.insert(c);
            frontier.push(c);
        }
    }
    if (cycle) v.push_back("segment graph contains a cycle (not a tree)");
    if (visited.size() != net.segments.size())
        v.push_back("not all segments reachable from the root");

    return v;
}

} // namespace hemo::vascular
