#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "salience/dataset.hpp"
#include "salience/image_io.hpp"
#include "salience/models.hpp"

namespace salience {

// Fixed diverging map: blue (0,0,255) -> white (255,255,255) -> red (255,0,0).
std::array<uint8_t, 3> diverging_color(double v);

// Colorized overlay of a normalized map on a grayscale view of the image.
ImageU8 colorize_overlay(const SalienceMap& normalized_map, const Tensor& image);

// One row per sample: input, true-class CAM, false-class CAM, Difference
// Salience; CAMs are independently normalized and bilinearly upsampled to
// image size. Deterministic output bytes.
ImageU8 render_cam_grid(const Model& model, const std::vector<LabeledSample>& samples);

void render_cam_grid_to_file(const Model& model, const std::vector<LabeledSample>& samples,
                             const std::filesystem::path& out_path);

} // namespace salience
