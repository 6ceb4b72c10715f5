#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "salience/errors.hpp"

namespace salience {

// Dense row-major tensor of doubles, rank 1..4. Small helper type shared by
// the autodiff tape, models and checkpoints.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(count(shape)), 0.0);
    }
    Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<int64_t>(data.size()) != count(shape))
            throw ValidationError("tensor: data size does not match shape");
    }

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d <= 0) throw ValidationError("tensor: non-positive dimension");
            n *= d;
        }
        return n;
    }

    int64_t size() const { return static_cast<int64_t>(data.size()); }
    int dim(int i) const { return shape.at(static_cast<size_t>(i)); }
    int rank() const { return static_cast<int>(shape.size()); }

    double& at3(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    double at3(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    double& at2(int y, int x) { return data[static_cast<size_t>(y) * shape[1] + x]; }
    double at2(int y, int x) const { return data[static_cast<size_t>(y) * shape[1] + x]; }
};

} // namespace salience
