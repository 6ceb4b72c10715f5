#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "salience/salience_map.hpp"
#include "salience/tensor.hpp"

namespace salience {

// 8-bit image, interleaved row-major (y, x, c). channels is 1 or 3.
struct ImageU8 {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<uint8_t> pixels;

    uint8_t& at(int y, int x, int c) {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }
};

ImageU8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageU8& img);

// Planar channels x H x W tensor with values in [0,1].
Tensor image_to_tensor(const ImageU8& img);
ImageU8 tensor_to_image(const Tensor& t);

// Minimal .npy support for 2D float arrays (little-endian f4/f8, C order).
SalienceMap read_npy_map(const std::filesystem::path& path);
void write_npy_map(const std::filesystem::path& path, const SalienceMap& m);

} // namespace salience
