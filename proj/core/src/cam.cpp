#include "salience/cam.hpp"

#include <cmath>

namespace salience {

void ModelOutput::validate() const {
    double mx = std::max(logits[0], logits[1]);
    double z = std::exp(logits[0] - mx) + std::exp(logits[1] - mx);
    for (int c = 0; c < 2; ++c) {
        double p = std::exp(logits[c] - mx) / z;
        if (std::fabs(p - probabilities[c]) > 1e-6)
            throw ValidationError("model output: probabilities are not the softmax of logits");
        if (!(probabilities[c] > 0.0 && probabilities[c] < 1.0))
            throw ValidationError("model output: probability outside (0,1)");
    }
    if (std::fabs(probabilities[0] + probabilities[1] - 1.0) > 1e-6)
        throw ValidationError("model output: probabilities do not sum to 1");
    if (features.rank() != 3) throw ValidationError("model output: features must be 3D");
    if (class_weights.rank() != 2 || class_weights.dim(0) != 2)
        throw ValidationError("model output: class_weights must be 2 x channels");
}

SalienceMap compute_class_cam(const ModelOutput& output, int class_index) {
    if (class_index != 0 && class_index != 1)
        throw ValidationError("compute_class_cam: class index must be 0 or 1");
    if (output.features.rank() != 3)
        throw ValidationError("compute_class_cam: features must be channels x height x width");
    const int ch = output.features.dim(0);
    const int h = output.features.dim(1);
    const int w = output.features.dim(2);
    if (output.class_weights.rank() != 2 || output.class_weights.dim(1) != ch)
        throw ValidationError("compute_class_cam: weight columns do not match feature channels");

    SalienceMap cam(h, w, 0.0, false);
    for (int j = 0; j < ch; ++j) {
        const double wj = output.class_weights.data[static_cast<size_t>(class_index) * ch + j];
        if (wj == 0.0) continue;
        const double* f = &output.features.data[static_cast<size_t>(j) * h * w];
        for (int i = 0; i < h * w; ++i) cam.values[i] += wj * f[i];
    }
    return cam;
}

std::pair<SalienceMap, SalienceMap> compute_cam_pair(const ModelOutput& output, int true_label) {
    if (true_label != 0 && true_label != 1)
        throw ValidationError("compute_cam_pair: label must be 0 or 1");
    return {compute_class_cam(output, true_label), compute_class_cam(output, 1 - true_label)};
}

SalienceMap difference_salience(const SalienceMap& t, const SalienceMap& f) {
    if (!t.same_shape(f)) throw ValidationError("difference_salience: dimension mismatch");
    if (t.normalized || f.normalized)
        throw ValidationError("difference_salience: inputs must be raw (unnormalized) CAMs");
    SalienceMap diff(t.height, t.width, 0.0, false);
    for (size_t i = 0; i < diff.values.size(); ++i) diff.values[i] = t.values[i] - f.values[i];
    return normalize_unit(diff);
}

} // namespace salience
