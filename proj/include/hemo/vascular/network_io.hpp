#pragma once

#include <string>

#include <json.hpp>

#include "hemo/vascular/types.hpp"

namespace hemo::vascular {

// Parse a network config (see docs/network-format.md). Unit-suffixed keys
// are converted to SI; the result is validated and throws on violations.
ArterialNetwork network_from_json(const nlohmann::json& j);
ArterialNetwork load_network(const std::string& path);

HeartFunction heart_from_json(const nlohmann::json& j);
HeartFunction load_heart_function(const std::string& path);

// The 5-segment test network bundled with the toolkit (aorta feeding
// brachial -> radial on both arms, radial ends on RCR beds).
ArterialNetwork reference_network();

nlohmann::json network_to_json(const ArterialNetwork& net);

} // namespace hemo::vascular
