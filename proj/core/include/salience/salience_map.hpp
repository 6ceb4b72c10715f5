#pragma once

#include <vector>

#include "salience/errors.hpp"

namespace salience {

// 2D activation grid. `normalized` marks unit-interval maps (h_k, d_k and
// friends); raw CAMs keep it false.
struct SalienceMap {
    int height = 0;
    int width = 0;
    std::vector<double> values; // row-major, height*width
    bool normalized = false;

    SalienceMap() = default;
    SalienceMap(int h, int w, double fill = 0.0, bool norm = false)
        : height(h), width(w), values(static_cast<size_t>(h) * w, fill), normalized(norm) {
        if (h <= 0 || w <= 0) throw ValidationError("salience map: non-positive dimensions");
    }
    SalienceMap(int h, int w, std::vector<double> v, bool norm = false)
        : height(h), width(w), values(std::move(v)), normalized(norm) {
        if (h <= 0 || w <= 0) throw ValidationError("salience map: non-positive dimensions");
        if (values.size() != static_cast<size_t>(h) * w)
            throw ValidationError("salience map: value count does not match dimensions");
    }

    double& at(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return values.size(); }
    bool same_shape(const SalienceMap& o) const { return height == o.height && width == o.width; }

    bool all_finite() const;
    // Enforces the type invariants (finiteness; range and span when normalized).
    void validate() const;
};

// Min-max remap to [0,1]. A constant map becomes the constant 0.5 map.
SalienceMap normalize_unit(const SalienceMap& m);

} // namespace salience
