#pragma once

#include <filesystem>
#include <string>

#include "salience/salience_map.hpp"

namespace salience {

enum class HeatmapSource { Annotation, EyeTracking, SyntheticGroundTruth, FoolingEdge };

struct HeatmapRecord {
    std::string sample_id;
    SalienceMap map; // normalized
    HeatmapSource source = HeatmapSource::Annotation;
};

// Reads an 8-bit grayscale PNG (v -> v/255) or a 2D float .npy. Float arrays
// with values outside [0,1] are min-max normalized on load.
SalienceMap load_heatmap(const std::filesystem::path& path);
// Grayscale export of a normalized map: v -> round(255*v).
void save_heatmap(const std::filesystem::path& path, const SalienceMap& map);

// Elementwise 1 - h.
SalienceMap invert_map(const SalienceMap& h);

// Area-average pooling for integer-factor downscales, bilinear otherwise.
// Keeps the normalized flag; never re-normalizes.
SalienceMap resize_to_grid(const SalienceMap& m, int out_h, int out_w);

// Passive-fooling target: 1 within floor(band_fraction * min(h,w)) of any
// border, 0 inside.
SalienceMap make_edge_map(int height, int width, double band_fraction);

constexpr double kDefaultFoolingBandFraction = 0.1;

} // namespace salience
