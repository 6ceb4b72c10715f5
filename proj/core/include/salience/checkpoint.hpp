#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "nlohmann/json.hpp"
#include "salience/models.hpp"

namespace salience {

// Binary array bundle (params + buffers) with a JSON sidecar manifest
// (<stem>.manifest.json) describing arch, seed, variant and fingerprint.
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::json& manifest);

nlohmann::json read_checkpoint_manifest(const std::filesystem::path& checkpoint_path);

// Fills an existing model's params/buffers by name; throws on unknown or
// shape-mismatched entries.
void load_checkpoint_into(const std::filesystem::path& path, Model& model);

// Rebuilds the model described by the sidecar manifest and loads the arrays.
std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& path,
                                       nlohmann::json* manifest_out = nullptr);

} // namespace salience
