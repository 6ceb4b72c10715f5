#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace salience {

// Deterministic RNG wrapper. mt19937 output is pinned by the standard, and the
// derived draws below avoid std::*_distribution so streams are identical
// across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(static_cast<uint32_t>(seed ^ (seed >> 32))) {}

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_()) * (1.0 / 4294967296.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(uniform() * n) % n;
    }

    // Box-Muller standard normal.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Fisher-Yates; std::shuffle is implementation-defined, this is not.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(static_cast<int>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// FNV-1a over bytes; used for stable config fingerprints.
inline uint64_t fnv1a64(const void* bytes, size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    uint64_t h = 1469598103934665603ull;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace salience
