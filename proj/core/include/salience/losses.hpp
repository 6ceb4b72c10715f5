#pragma once

#include <span>
#include <string>

#include "salience/autodiff.hpp"
#include "salience/cam.hpp"
#include "salience/models.hpp"
#include "salience/salience_map.hpp"

namespace salience {

enum class LossVariant { Baseline, Difference, PerClass, Contrast, CrossEntropyOnly };

LossVariant loss_variant_from_string(const std::string& s);
std::string to_string(LossVariant v);
// Whether the variant carries a salience (MSE) term at all.
bool has_salience_term(LossVariant v);

struct LossWeights {
    double alpha = 0.5;
    double beta = 0.5;
    double gamma = 0.0; // only meaningful for per_class / contrast
    LossVariant variant = LossVariant::Baseline;

    void validate() const;
    // Paper defaults: 0.5/0.5 for two-term losses, 0.3/0.3/0.3 for three-term.
    static LossWeights defaults_for(LossVariant v);
};

// Mean of squared per-cell differences between two normalized maps.
double mse_map(const SalienceMap& a, const SalienceMap& b);

// -log softmax(logits)[label], computed from logits (never from stored probabilities).
double cross_entropy_value(const ModelOutput& output, int label);

double loss_baseline(const ModelOutput& output, int label, const SalienceMap& h,
                     const LossWeights& w);
double loss_difference(const ModelOutput& output, int label, const SalienceMap& h,
                       const LossWeights& w);
double loss_per_class(const ModelOutput& output, int label, const SalienceMap& h,
                      const LossWeights& w);
double loss_contrast(const ModelOutput& output, int label, const SalienceMap& h,
                     const LossWeights& w);
// Dispatch on w.variant; h ignored for cross_entropy_only.
double sample_loss(const ModelOutput& output, int label, const SalienceMap* h,
                   const LossWeights& w);

struct BatchItem {
    ModelOutput output;
    int label = 0;
    SalienceMap h;
};
double batch_loss(std::span<const BatchItem> batch, const LossWeights& w);

// Differentiable counterpart: appends the loss for one sample to the tape.
// `h` must already be resized to the CAM grid; may be null only when the
// variant has no salience term or beta == gamma == 0 (the loss then collapses
// to pure cross-entropy, bit-identical to cross_entropy_only).
Tape::NodeId build_sample_loss(Tape& tape, const Model::Forward& fwd, int label,
                               const SalienceMap* h, const LossWeights& w);

} // namespace salience
