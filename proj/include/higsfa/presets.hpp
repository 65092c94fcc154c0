#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "higsfa/hierarchy.hpp"

namespace higsfa::presets {

hierarchy::NetworkSpec network_from_json(const nlohmann::json& j);
nlohmann::json network_to_json(const hierarchy::NetworkSpec& spec);

// Shipped network presets, by name.
nlohmann::json network_preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace higsfa::presets
