#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hemo::vascular {

struct BloodProperties {
    double density = 1060.0;            // rho, kg/m^3
    double dynamic_viscosity = 4.0e-3;  // mu, Pa*s
    double coriolis_coefficient = 1.0;  // alpha, flat-profile momentum correction
    double velocity_profile_shape = 9.0; // gamma_nu
};

// One tapered visco-elastic tube. Radii are the reference (zero transmural
// pressure) lumen radii at the proximal and distal end.
struct ArterySegment {
    std::string id;
    std::string name;
    double length = 0.0;            // m
    double proximal_radius = 0.0;   // m
    double distal_radius = 0.0;     // m
    double wall_thickness_ref = 0.0; // h0, m
    double elastic_modulus = 0.0;   // E, Pa
    double wall_viscosity = 0.0;    // phi_w, Pa*s
    double external_pressure = 0.0; // Pext, Pa (gauge)
    std::vector<std::string> children;
    std::optional<std::string> terminal_bed;
};

// Three-element RCR lumped model of a downstream vascular bed.
struct WindkesselBed {
    double proximal_resistance = 0.0; // R1, Pa*s/m^3
    double distal_resistance = 0.0;   // R2, Pa*s/m^3
    double compliance = 0.0;          // C, m^3/Pa
    double outflow_pressure = 0.0;    // P_out, Pa
};

// Five-parameter description of the aortic inflow over one cardiac period.
struct HeartFunction {
    double heart_rate = 70.0;        // beats/min
    double stroke_volume = 70.0e-6;  // m^3
    double lvet = 0.28;              // s
    double peak_flow_time = 0.12;    // s
    double reverse_flow_fraction = 0.0; // RFV, dimensionless in [0,1)

    double period() const { return 60.0 / heart_rate; }
};

struct ArterialNetwork {
    std::map<std::string, ArterySegment> segments;
    std::string root_segment_id;
    std::map<std::string, WindkesselBed> beds;
    BloodProperties blood;
};

// Elastic coefficient of the tube law at reference area A0:
// beta = (4/3) sqrt(pi) E h0 / A0   [Pa/m]
double beta_coefficient(double elastic_modulus, double wall_thickness, double ref_area);

// Viscous coefficient: Gamma = (2/3) sqrt(pi) phi_w h0 / A0   [Pa*s/m]
double gamma_coefficient(double wall_viscosity, double wall_thickness, double ref_area);

// Reference lumen radius / area at fractional position xi in [0,1]
// (linear taper in radius).
double radius_at(const ArterySegment& seg, double xi);
double ref_area_at(const ArterySegment& seg, double xi);

} // namespace hemo::vascular
