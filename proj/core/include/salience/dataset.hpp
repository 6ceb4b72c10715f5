#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "salience/salience_map.hpp"
#include "salience/tensor.hpp"

namespace salience {

struct LabeledSample {
    std::string sample_id;
    Tensor image; // channels x H x W, values in [0,1]
    int label = 0;
    std::optional<SalienceMap> human_map; // normalized when present
    std::string subset;
};

enum class ShiftMode { None, RelocatePatch, NewTexture };
ShiftMode shift_mode_from_string(const std::string& s);
std::string to_string(ShiftMode m);

// Binary task with a known discriminative region: class-1 images carry a
// checkerboard-textured patch, class-0 images only noise and distractor
// blobs. The ground-truth region mask doubles as the human salience map.
struct SyntheticSpec {
    int image_size = 32;
    int patch_size = 10;
    int texture_period = 2;       // checkerboard cell side, class-1 patch
    double texture_amplitude = 0.3;
    double noise_std = 0.08;
    int distractor_count = 3;
    ShiftMode shift_mode = ShiftMode::None;

    void validate() const;
    // Texture actually used, after the shift (NewTexture changes the period).
    int effective_period() const;
};

// Deterministic generation; when `root` is nonempty the dataset is also
// written in the standard on-disk layout (images/, heatmaps/, labels.csv,
// metadata.json). Returned samples match the quantized on-disk pixels.
std::vector<LabeledSample> generate_synthetic(const SyntheticSpec& spec, int count_per_class,
                                              uint64_t seed,
                                              const std::filesystem::path& root = {});

// Loads root/labels.csv (+ images/, optional heatmaps/); samples are ordered
// by sample_id.
std::vector<LabeledSample> load_dataset(const std::filesystem::path& root);

} // namespace salience
