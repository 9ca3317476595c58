#pragma once

// Unit conversion factors. Everything internal is strict SI
// (m, s, kg, Pa, m^3); config files may declare mmHg/mL/cm/mm
// via suffixed keys and are converted at load time.

namespace hemo::units {

inline constexpr double mmhg_to_pa = 133.322387415;
inline constexpr double pa_to_mmhg = 1.0 / mmhg_to_pa;

inline constexpr double ml_to_m3 = 1e-6;
inline constexpr double m3_to_ml = 1e6;

inline constexpr double cm_to_m = 1e-2;
inline constexpr double mm_to_m = 1e-3;

inline constexpr double ms_to_s = 1e-3;
inline constexpr double s_to_ms = 1e3;

// L/min <-> m^3/s (cardiac output)
inline constexpr double lpm_to_m3s = 1e-3 / 60.0;
inline constexpr double m3s_to_lpm = 60.0 * 1e3;

} // namespace hemo::units
