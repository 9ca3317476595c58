#pragma once

#include "hemo/vascular/types.hpp"

namespace hemo::vascular {

// Voigt-type visco-elastic tube law:
//   P(A) = Pext + beta (sqrt(A) - sqrt(A0)) + (Gamma / sqrt(A)) dA/dt
// with beta/Gamma evaluated from the segment's wall properties at A0.
double tube_law_pressure(double area, double ref_area, double dA_dt,
                         const ArterySegment& seg);

// Pulse wave speed c = sqrt(beta sqrt(A) / (2 rho)), from the elastic part
// of the tube law via c^2 = (A/rho) dP/dA.
double wave_speed(double area, double ref_area, const ArterySegment& seg,
                  const BloodProperties& blood);

// Same, with the beta coefficient already known.
double wave_speed_beta(double area, double beta, double density);

// Aortic volumetric inflow at time t within one cardiac period [0, T).
// Half-sinusoid forward lobe on [0, LVET] with the peak warped to PFT,
// followed by a half-sinusoid reverse lobe carrying RFV*SV, zero in
// diastole. The forward amplitude is solved so the net beat volume is
// exactly SV. Callers extend periodically.
double inflow_waveform(const HeartFunction& hf, double t);

// Throws hemo::Error("vascular", "invalid_heart", ...) on violated bounds.
void check_heart_function(const HeartFunction& hf);

// Returns a copy with all segment lengths scaled by (height_cm + eps_cm)/170.
ArterialNetwork scale_network_to_height(const ArterialNetwork& net,
                                        double height_cm, double eps_cm = 0.0);

// Structural and per-field invariant check; returns human-readable
// violations (empty means the network is valid).
std::vector<std::string> validate_network(const ArterialNetwork& net);

} // namespace hemo::vascular
