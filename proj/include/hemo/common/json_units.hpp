#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "hemo/common/error.hpp"

// Config files declare units per field via suffix keys (e.g. "length_mm").
// required_quantity(obj, "length", {{"_m",1.0},{"_mm",1e-3}}) accepts either
// "length_m" or "length_mm" and returns the value in SI.

namespace hemo {

struct UnitSuffix {
    const char* suffix;
    double factor;
};

inline bool try_quantity(const nlohmann::json& obj, const std::string& base,
                         std::initializer_list<UnitSuffix> units, double& out) {
    int hits = 0;
    for (const auto& u : units) {
        const std::string key = base + u.suffix;
        if (obj.contains(key)) {
            out = obj.at(key).get<double>() * u.factor;
            ++hits;
        }
    }
    if (hits > 1)
        throw Error("config", "ambiguous_units", "field '" + base + "' given in multiple units");
    return hits == 1;
}

inline double required_quantity(const nlohmann::json& obj, const std::string& base,
                                std::initializer_list<UnitSuffix> units) {
    double v = 0.0;
    if (!try_quantity(obj, base, units, v))
        throw Error("config", "missing_field", "required field '" + base + "' not found");
    return v;
}

inline double quantity_or(const nlohmann::json& obj, const std::string& base,
                          std::initializer_list<UnitSuffix> units, double fallback) {
    double v = 0.0;
    return try_quantity(obj, base, units, v) ? v : fallback;
}

} // namespace hemo
