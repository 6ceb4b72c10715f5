#include "salience/render.hpp"

#include <cmath>

#include "salience/cam.hpp"
#include "salience/saliency_io.hpp"
#include "salience/train.hpp"

namespace salience {

std::array<uint8_t, 3> diverging_color(double v) {
    v = std::clamp(v, 0.0, 1.0);
    auto lerp = [](int a, int b, double t) {
        return static_cast<uint8_t>(std::lround(a + (b - a) * t));
    };
    if (v <= 0.5) {
        const double t = v * 2.0;
        return {lerp(0, 255, t), lerp(0, 255, t), 255};
    }
    const double t = (v - 0.5) * 2.0;
    return {255, lerp(255, 0, t), lerp(255, 0, t)};
}

ImageU8 colorize_overlay(const SalienceMap& normalized_map, const Tensor& image) {
    if (!normalized_map.normalized)
        throw ValidationError("colorize_overlay: map must be normalized");
    const int h = image.dim(1), w = image.dim(2);
    SalienceMap up = resize_to_grid(normalized_map, h, w);
    ImageU8 out;
    out.height = h;
    out.width = w;
    out.channels = 3;
    out.pixels.resize(static_cast<size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gray = 0.0;
            for (int c = 0; c < image.dim(0); ++c) gray += image.at3(c, y, x);
            gray /= image.dim(0);
            const auto rgb = diverging_color(up.at(y, x));
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) = static_cast<uint8_t>(
                    std::lround(0.55 * rgb[c] + 0.45 * 255.0 * std::clamp(gray, 0.0, 1.0)));
        }
    return out;
}

namespace {
void blit(ImageU8& canvas, const ImageU8& tile, int y0, int x0) {
    for (int y = 0; y < tile.height; ++y)
        for (int x = 0; x < tile.width; ++x)
            for (int c = 0; c < 3; ++c)
                canvas.at(y0 + y, x0 + x, c) =
                    tile.channels == 1 ? tile.at(y, x, 0) : tile.at(y, x, c);
}
} // namespace

ImageU8 render_cam_grid(const Model& model, const std::vector<LabeledSample>& samples) {
    if (samples.empty()) throw ValidationError("render_cam_grid: no samples");
    constexpr int kGutter = 2;
    std::vector<ImageU8> tiles;
    int tile_h = 0, tile_w = 0;
    for (const auto& s : samples) {
        const Tensor input = prepare_input(model, s.image);
        ModelOutput out = run_model(model, input);
        auto [t, f] = compute_cam_pair(out, s.label);
        const SalienceMap d = difference_salience(t, f);

        tiles.push_back(tensor_to_image(input));
        tiles.push_back(colorize_overlay(normalize_unit(t), input));
        tiles.push_back(colorize_overlay(normalize_unit(f), input));
        tiles.push_back(colorize_overlay(d, input));
        tile_h = std::max(tile_h, input.dim(1));
        tile_w = std::max(tile_w, input.dim(2));
    }

    const int rows = static_cast<int>(samples.size());
    ImageU8 canvas;
    canvas.channels = 3;
    canvas.height = rows * tile_h + (rows - 1) * kGutter;
    canvas.width = 4 * tile_w + 3 * kGutter;
    canvas.pixels.assign(static_cast<size_t>(canvas.height) * canvas.width * 3, 255);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < 4; ++c)
            blit(canvas, tiles[static_cast<size_t>(r) * 4 + c], r * (tile_h + kGutter),
                 c * (tile_w + kGutter));
    return canvas;
}

void render_cam_grid_to_file(const Model& model, const std::vector<LabeledSample>& samples,
                             const std::filesystem::path& out_path) {
    write_png(out_path, render_cam_grid(model, samples));
}

} // namespace salience
