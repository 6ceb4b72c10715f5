#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

namespace salience {

nlohmann::json load_config_file(const std::filesystem::path& path);

// Applies "a.b.c=value" onto an existing key path; the key must already exist
// (overrides cannot invent config fields). Values parse as JSON when possible,
// otherwise as strings.
void apply_override(nlohmann::json& config, const std::string& key_value);
void apply_overrides(nlohmann::json& config, const std::vector<std::string>& overrides);

} // namespace salience
