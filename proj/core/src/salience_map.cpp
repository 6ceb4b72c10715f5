#include "salience/salience_map.hpp"

#include <algorithm>
#include <cmath>

namespace salience {

bool SalienceMap::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

void SalienceMap::validate() const {
    if (!all_finite()) throw ValidationError("salience map: non-finite value");
    if (normalized) {
        auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        if (*mn < -1e-12 || *mx > 1.0 + 1e-12)
            throw ValidationError("salience map: normalized flag set but values outside [0,1]");
        // A non-constant normalized map must span the full interval.
        if (*mx - *mn > 1e-9 && (*mn > 1e-9 || *mx < 1.0 - 1e-9))
            throw ValidationError("salience map: normalized flag set but range does not span [0,1]");
    }
}

SalienceMap normalize_unit(const SalienceMap& m) {
    if (!m.all_finite()) throw ValidationError("normalize_unit: non-finite input");
    auto [mn_it, mx_it] = std::minmax_element(m.values.begin(), m.values.end());
    double mn = *mn_it, mx = *mx_it;
    SalienceMap out(m.height, m.width, 0.0, true);
    if (mx == mn) {
        std::fill(out.values.begin(), out.values.end(), 0.5);
        return out;
    }
    const double inv = 1.0 / (mx - mn);
    for (size_t i = 0; i < m.values.size(); ++i) out.values[i] = (m.values[i] - mn) * inv;
    return out;
}

} // namespace salience
