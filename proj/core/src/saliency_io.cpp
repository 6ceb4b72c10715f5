#include "salience/saliency_io.hpp"

#include <algorithm>
#include <cmath>

#include "salience/image_io.hpp"

namespace salience {

SalienceMap load_heatmap(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".png") {
        ImageU8 img = read_png(path);
        if (img.channels != 1)
            throw ValidationError("load_heatmap: expected grayscale PNG: " + path.string());
        SalienceMap m(img.height, img.width, 0.0, true);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) m.at(y, x) = img.at(y, x, 0) / 255.0;
        return m;
    }
    if (ext == ".npy") {
        SalienceMap m = read_npy_map(path);
        if (!m.all_finite()) throw ValidationError("load_heatmap: non-finite values in " + path.string());
        auto [mn, mx] = std::minmax_element(m.values.begin(), m.values.end());
        if (*mn < 0.0 || *mx > 1.0) return normalize_unit(m);
        m.normalized = true;
        return m;
    }
    throw IoError("load_heatmap: unsupported file type: " + path.string());
}

void save_heatmap(const std::filesystem::path& path, const SalienceMap& map) {
    if (!map.normalized) throw ValidationError("save_heatmap: map must be normalized");
    ImageU8 img;
    img.height = map.height;
    img.width = map.width;
    img.channels = 1;
    img.pixels.resize(map.values.size());
    for (size_t i = 0; i < map.values.size(); ++i)
        img.pixels[i] = static_cast<uint8_t>(std::lround(255.0 * std::clamp(map.values[i], 0.0, 1.0)));
    write_png(path, img);
}

SalienceMap invert_map(const SalienceMap& h) {
    if (!h.normalized) throw ValidationError("invert_map: input must be normalized");
    SalienceMap out(h.height, h.width, 0.0, true);
    for (size_t i = 0; i < h.values.size(); ++i) out.values[i] = 1.0 - h.values[i];
    return out;
}

SalienceMap resize_to_grid(const SalienceMap& m, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0)
        throw ValidationError("resize_to_grid: non-positive target dimensions");
    if (out_h == m.height && out_w == m.width) return m;
    SalienceMap out(out_h, out_w, 0.0, m.normalized);
    const bool integer_down =
        m.height % out_h == 0 && m.width % out_w == 0 && out_h <= m.height && out_w <= m.width;
    if (integer_down) {
        const int fy = m.height / out_h;
        const int fx = m.width / out_w;
        const double inv = 1.0 / (fy * fx);
        for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x) {
                double acc = 0.0;
                for (int dy = 0; dy < fy; ++dy)
                    for (int dx = 0; dx < fx; ++dx) acc += m.at(y * fy + dy, x * fx + dx);
                out.at(y, x) = acc * inv;
            }
        return out;
    }
    // Half-pixel-center bilinear.
    const double sy = static_cast<double>(m.height) / out_h;
    const double sx = static_cast<double>(m.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(m.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, m.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(m.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, m.width - 1);
            const double wx = fx - x0;
            out.at(y, x) = (1 - wy) * ((1 - wx) * m.at(y0, x0) + wx * m.at(y0, x1)) +
                           wy * ((1 - wx) * m.at(y1, x0) + wx * m.at(y1, x1));
        }
    }
    return out;
}

SalienceMap make_edge_map(int height, int width, double band_fraction) {
    if (height <= 0 || width <= 0)
        throw ValidationError("make_edge_map: non-positive dimensions");
    if (!(band_fraction > 0.0 && band_fraction < 0.5))
        throw ValidationError("make_edge_map: band_fraction must be in (0, 0.5)");
    const int band = static_cast<int>(std::floor(band_fraction * std::min(height, width)));
    if (band == 0) throw ValidationError("make_edge_map: band width rounds to zero");
    SalienceMap m(height, width, 0.0, true);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (y < band || y >= height - band || x < band || x >= width - band) m.at(y, x) = 1.0;
    return m;
}

} // namespace salience
