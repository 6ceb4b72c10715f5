#pragma once

#include <array>
#include <utility>

#include "salience/salience_map.hpp"
#include "salience/tensor.hpp"

namespace salience {

// Everything the classifier head exposes after one forward pass: logits and
// probabilities for the two classes, the final feature grid feeding global
// average pooling, and the linear head's weights and biases. CAMs are linear
// combinations of `features` rows of `class_weights`.
struct ModelOutput {
    std::array<double, 2> logits{};
    std::array<double, 2> probabilities{};
    Tensor features;      // channels x height x width
    Tensor class_weights; // 2 x channels
    std::array<double, 2> biases{};

    void validate() const;
};

// Raw (unnormalized) CAM for one class: per-pixel weighted channel sum.
SalienceMap compute_class_cam(const ModelOutput& output, int class_index);

// (true-class CAM, false-class CAM) for a binary label.
std::pair<SalienceMap, SalienceMap> compute_cam_pair(const ModelOutput& output, int true_label);

// Difference Salience: normalize_unit(t - f). Inputs must be raw CAMs.
SalienceMap difference_salience(const SalienceMap& t, const SalienceMap& f);

} // namespace salience
