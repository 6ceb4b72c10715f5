#include "salience/config.hpp"

#include <fstream>

#include "salience/errors.hpp"

namespace salience {

using nlohmann::json;

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw UsageError("malformed config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw UsageError("config root must be an object: " + path.string());
    return j;
}

void apply_override(json& config, const std::string& key_value) {
    const auto eq = key_value.find('=');
    if (eq == std::string::npos || eq == 0)
        throw UsageError("override must look like key.path=value: '" + key_value + "'");
    const std::string key = key_value.substr(0, eq);
    const std::string value = key_value.substr(eq + 1);

    json* cur = &config;
    size_t pos = 0;
    while (true) {
        const size_t dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (!cur->is_object() || !cur->contains(part))
            throw UsageError("override references unknown config key '" + key + "'");
        cur = &(*cur)[part];
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    json parsed = json::parse(value, nullptr, false);
    *cur = parsed.is_discarded() ? json(value) : parsed;
}

void apply_overrides(json& config, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) apply_override(config, o);
}

} // namespace salience
