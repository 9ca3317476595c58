#include "hemo/vascular/network_io.hpp"

#include <fstream>

#include "hemo/common/error.hpp"
#include "hemo/common/json_units.hpp"
#include "hemo/common/units.hpp"
#include "hemo/vascular/physics.hpp"

namespace hemo::vascular {

using nlohmann::json;

namespace {

constexpr std::initializer_list<UnitSuffix> length_units = {
    {"_m", 1.0}, {"_mm", units::mm_to_m}, {"_cm", units::cm_to_m}};
constexpr std::initializer_list<UnitSuffix> pressure_units = {
    {"_pa", 1.0}, {"_kpa", 1e3}, {"_mmhg", units::mmhg_to_pa}};
constexpr std::initializer_list<UnitSuffix> resistance_units = {
    {"_pa_s_m3", 1.0}, {"_mmhg_s_ml", units::mmhg_to_pa / units::ml_to_m3}};
constexpr std::initializer_list<UnitSuffix> compliance_units = {
    {"_m3_pa", 1.0}, {"_ml_mmhg", units::ml_to_m3 / units::mmhg_to_pa}};
constexpr std::initializer_list<UnitSuffix> viscosity_units = {
    {"_pas", 1.0}, {"_mpas", 1e-3}};
constexpr std::initializer_list<UnitSuffix> volume_units = {
    {"_m3", 1.0}, {"_ml", units::ml_to_m3}};
constexpr std::initializer_list<UnitSuffix> time_units = {
    {"_s", 1.0}, {"_ms", units::ms_to_s}};

json load_json_file(const std::string& path, const char* what) {
    std::ifstream is(path);
    if (!is) throw Error("config", "file_not_found", std::string(what) + ": " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw Error("config", "bad_json", path + ": " + e.what());
    }
    return j;
}

} // namespace

ArterialNetwork network_from_json(const json& j) {
    ArterialNetwork net;
    if (j.contains("blood")) {
        const auto& b = j.at("blood");
        net.blood.density = b.value("density", 1060.0);
        net.blood.dynamic_viscosity =
            quantity_or(b, "viscosity", viscosity_units, 4.0e-3);
        net.blood.coriolis_coefficient = b.value("coriolis", 1.0);
        net.blood.velocity_profile_shape = b.value("profile_shape", 9.0);
    }
    net.root_segment_id = j.at("root").get<std::string>();

    for (const auto& [id, s] : j.at("segments").items()) {
        ArterySegment seg;
        seg.id = id;
        seg.name = s.value("name", id);
        seg.length = required_quantity(s, "length", length_units);
        seg.proximal_radius = required_quantity(s, "proximal_radius", length_units);
        seg.distal_radius = required_quantity(s, "distal_radius", length_units);
        seg.wall_thickness_ref = required_quantity(s, "wall_thickness", length_units);
        seg.elastic_modulus = required_quantity(s, "elastic_modulus", pressure_units);
        seg.wall_viscosity = quantity_or(s, "wall_viscosity", viscosity_units, 0.0);
        seg.external_pressure = quantity_or(s, "external_pressure", pressure_units, 0.0);
        if (s.contains("children"))
            seg.children = s.at("children").get<std::vector<std::string>>();
        if (s.contains("terminal_bed"))
            seg.terminal_bed = s.at("terminal_bed").get<std::string>();
        net.segments.emplace(id, std::move(seg));
    }

    if (j.contains("beds")) {
        for (const auto& [id, b] : j.at("beds").items()) {
            WindkesselBed bed;
            bed.proximal_resistance = required_quantity(b, "r1", resistance_units);
            bed.distal_resistance = required_quantity(b, "r2", resistance_units);
            bed.compliance = required_quantity(b, "compliance", compliance_units);
            bed.outflow_pressure = quantity_or(b, "outflow_pressure", pressure_units, 0.0);
            net.beds.emplace(id, bed);
        }
    }

    const auto violations = validate_network(net);
    if (!violations.empty())
        throw Error("vascular", "invalid_network", violations.front() +
                                                       (violations.size() > 1 ? " (+more)" : ""));
    return net;
}

ArterialNetwork load_network(const std::string& path) {
    return network_from_json(load_json_file(path, "network config"));
}

HeartFunction heart_from_json(const json& j) {
    HeartFunction hf;
    hf.heart_rate = j.at("heart_rate_bpm").get<double>();
    hf.stroke_volume = required_quantity(j, "stroke_volume", volume_units);
    hf.lvet = required_quantity(j, "lvet", time_units);
    hf.peak_flow_time = required_quantity(j, "peak_flow_time", time_units);
    hf.reverse_flow_fraction = j.value("reverse_flow_fraction", 0.0);
    check_heart_function(hf);
    return hf;
}

HeartFunction load_heart_function(const std::string& path) {
    return heart_from_json(load_json_file(path, "heart config"));
}

json network_to_json(const ArterialNetwork& net) {
    json j;
    j["blood"] = {{"density", net.blood.density},
                  {"viscosity_pas", net.blood.dynamic_viscosity},
                  {"coriolis", net.blood.coriolis_coefficient},
                  {"profile_shape", net.blood.velocity_profile_shape}};
    j["root"] = net.root_segment_id;
    json segs = json::object();
    for (const auto& [id, s] : net.segments) {
        json e = {{"name", s.name},
                  {"length_m", s.length},
                  {"proximal_radius_m", s.proximal_radius},
                  {"distal_radius_m", s.distal_radius},
                  {"wall_thickness_m", s.wall_thickness_ref},
                  {"elastic_modulus_pa", s.elastic_modulus},
                  {"wall_viscosity_pas", s.wall_viscosity},
                  {"external_pressure_pa", s.external_pressure}};
        if (!s.children.empty()) e["children"] = s.children;
        if (s.terminal_bed) e["terminal_bed"] = *s.terminal_bed;
        segs[id] = std::move(e);
    }
    j["segments"] = std::move(segs);
    json beds = json::object();
    for (const auto& [id, b] : net.beds)
        beds[id] = {{"r1_pa_s_m3", b.proximal_resistance},
                    {"r2_pa_s_m3", b.distal_resistance},
                    {"compliance_m3_pa", b.compliance},
                    {"outflow_pressure_pa", b.outflow_pressure}};
    j["beds"] = std::move(beds);
    return j;
}

ArterialNetwork reference_network() {
    ArterialNetwork net;
    net.blood = BloodProperties{};
    net.root_segment_id = "aorta";

    auto add_segment = [&](const std::string& id, double L, double rp, double rd,
                           double h0, double E, std::vector<std::string> children,
                           std::optional<std::string> bed) {
        ArterySegment s;
        s.id = id;
        s.name = id;
        s.length = L;
        s.proximal_radius = rp;
        s.distal_radius = rd;
        s.wall_thickness_ref = h0;
        s.elastic_modulus = E;
        s.wall_viscosity = 1000.0;
        s.external_pressure = 0.0;
        s.children = std::move(children);
        s.terminal_bed = std::move(bed);
        net.segments.emplace(id, std::move(s));
    };

    // Desk-scale tree; dimensions chosen so terminal impedance, total
    // resistance and compliance land at physiological pressures, not for
    // anatomical fidelity.
    add_segment("aorta", 0.30, 0.014, 0.012, 1.4e-3, 4.0e5,
                {"brachial_l", "brachial_r"}, std::nullopt);
    add_segment("brachial_l", 0.25, 0.009, 0.0075, 1.0e-3, 5.5e5, {"radial_l"}, std::nullopt);
    add_segment("brachial_r", 0.25, 0.009, 0.0075, 1.0e-3, 5.5e5, {"radial_r"}, std::nullopt);
    add_segment("radial_l", 0.25, 0.007, 0.006, 0.7e-3, 6.7e5, {}, "bed_l");
    add_segment("radial_r", 0.25, 0.007, 0.006, 0.7e-3, 6.7e5, {}, "bed_r");

    WindkesselBed bed;
    bed.proximal_resistance = 5.7e7;
    bed.distal_resistance = 2.30e8;
    bed.compliance = 6.5e-9;
    bed.outflow_pressure = 666.5;
    net.beds.emplace("bed_l", bed);
    net.beds.emplace("bed_r", bed);
    return net;
}

} // namespace hemo::vascular
