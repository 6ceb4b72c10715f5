#include "salience/losses.hpp"

#include <cmath>

namespace salience {

LossVariant loss_variant_from_string(const std::string& s) {
    if (s == "baseline") return LossVariant::Baseline;
    if (s == "difference") return LossVariant::Difference;
    if (s == "per_class") return LossVariant::PerClass;
    if (s == "contrast") return LossVariant::Contrast;
    if (s == "cross_entropy_only") return LossVariant::CrossEntropyOnly;
    throw ValidationError("unknown loss variant: " + s);
}

std::string to_string(LossVariant v) {
    switch (v) {
    case LossVariant::Baseline: return "baseline";
    case LossVariant::Difference: return "difference";
    case LossVariant::PerClass: return "per_class";
    case LossVariant::Contrast: return "contrast";
    case LossVariant::CrossEntropyOnly: return "cross_entropy_only";
    }
    throw ValidationError("bad loss variant value");
}

bool has_salience_term(LossVariant v) { return v != LossVariant::CrossEntropyOnly; }

void LossWeights::validate() const {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma))
        throw ValidationError("loss weights: non-finite weight");
    if (alpha < 0 || beta < 0 || gamma < 0)
        throw ValidationError("loss weights: negative weight");
    if (alpha == 0 && beta == 0 && gamma == 0)
        throw ValidationError("loss weights: all weights zero");
    const bool two_term = variant == LossVariant::Baseline || variant == LossVariant::Difference ||
                          variant == LossVariant::CrossEntropyOnly;
    if (two_term && gamma != 0)
        throw ValidationError("loss weights: gamma must be 0 for " + to_string(variant));
}

LossWeights LossWeights::defaults_for(LossVariant v) {
    LossWeights w;
    w.variant = v;
    if (v == LossVariant::PerClass || v == LossVariant::Contrast) {
        w.alpha = w.beta = w.gamma = 0.3;
    } else if (v == LossVariant::CrossEntropyOnly) {
        w.alpha = 1.0;
        w.beta = w.gamma = 0.0;
    } else {
        w.alpha = w.beta = 0.5;
        w.gamma = 0.0;
    }
    return w;
}

double mse_map(const SalienceMap& a, const SalienceMap& b) {
    if (!a.same_shape(b)) throw ValidationError("mse_map: dimension mismatch");
    if (!a.normalized || !b.normalized)
        throw ValidationError("mse_map: inputs must be normalized maps");
    double acc = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.values.size());
}

double cross_entropy_value(const ModelOutput& output, int label) {
    if (label != 0 && label != 1) throw ValidationError("cross entropy: label must be 0 or 1");
    const double m = std::max(output.logits[0], output.logits[1]);
    const double lse =
        m + std::log(std::exp(output.logits[0] - m) + std::exp(output.logits[1] - m));
    return lse - output.logits[label];
}

namespace {
void check_h_alignment(const ModelOutput& output, const SalienceMap& h) {
    if (h.height != output.features.dim(1) || h.width != output.features.dim(2))
        throw ValidationError("loss: human map not aligned to CAM grid (" +
                              std::to_string(output.features.dim(1)) + "x" +
                              std::to_string(output.features.dim(2)) + " expected, got " +
                              std::to_string(h.height) + "x" + std::to_string(h.width) + ")");
}
} // namespace

double loss_baseline(const ModelOutput& output, int label, const SalienceMap& h,
                     const LossWeights& w) {
    if (w.variant != LossVariant::Baseline) throw ValidationError("loss_baseline: wrong variant");
    check_h_alignment(output, h);
    auto [t, f] = compute_cam_pair(output, label);
    (void)f;
    return w.alpha * cross_entropy_value(output, label) + w.beta * mse_map(h, normalize_unit(t));
}

double loss_difference(const ModelOutput& output, int label, const SalienceMap& h,
                       const LossWeights& w) {
    if (w.variant != LossVariant::Difference)
        throw ValidationError("loss_difference: wrong variant");
    check_h_alignment(output, h);
    auto [t, f] = compute_cam_pair(output, label);
    return w.alpha * cross_entropy_value(output, label) +
           w.beta * mse_map(h, difference_salience(t, f));
}

double loss_per_class(const ModelOutput& output, int label, const SalienceMap& h,
                      const LossWeights& w) {
    if (w.variant != LossVariant::PerClass) throw ValidationError("loss_per_class: wrong variant");
    check_h_alignment(output, h);
    auto [t, f] = compute_cam_pair(output, label);
    SalienceMap h_inv(h.height, h.width, 0.0, true);
    for (size_t i = 0; i < h.values.size(); ++i) h_inv.values[i] = 1.0 - h.values[i];
    return w.alpha * cross_entropy_value(output, label) + w.beta * mse_map(h, normalize_unit(t)) +
           w.gamma * mse_map(h_inv, normalize_unit(f));
}

double loss_contrast(const ModelOutput& output, int label, const SalienceMap& h,
                     const LossWeights& w) {
    if (w.variant != LossVariant::Contrast) throw ValidationError("loss_contrast: wrong variant");
    check_h_alignment(output, h);
    auto [t, f] = compute_cam_pair(output, label);
    const SalienceMap tn = normalize_unit(t);
    SalienceMap t_inv(tn.height, tn.width, 0.0, true);
    for (size_t i = 0; i < tn.values.size(); ++i) t_inv.values[i] = 1.0 - tn.values[i];
    return w.alpha * cross_entropy_value(output, label) + w.beta * mse_map(h, tn) +
           w.gamma * mse_map(t_inv, normalize_unit(f));
}

double sample_loss(const ModelOutput& output, int label, const SalienceMap* h,
                   const LossWeights& w) {
    w.validate();
    if (w.variant == LossVariant::CrossEntropyOnly || (w.beta == 0 && w.gamma == 0))
        return w.alpha * cross_entropy_value(output, label);
    if (!h) throw ValidationError("sample_loss: variant requires a human salience map");
    switch (w.variant) {
    case LossVariant::Baseline: return loss_baseline(output, label, *h, w);
    case LossVariant::Difference: return loss_difference(output, label, *h, w);
    case LossVariant::PerClass: return loss_per_class(output, label, *h, w);
    case LossVariant::Contrast: return loss_contrast(output, label, *h, w);
    default: break;
    }
    throw ValidationError("sample_loss: bad variant");
}

double batch_loss(std::span<const BatchItem> batch, const LossWeights& w) {
    if (batch.empty()) throw ValidationError("batch_loss: empty batch");
    double acc = 0.0;
    for (const auto& item : batch)
        acc += sample_loss(item.output, item.label, item.h.values.empty() ? nullptr : &item.h, w);
    return acc / static_cast<double>(batch.size());
}

Tape::NodeId build_sample_loss(Tape& tape, const Model::Forward& fwd, int label,
                               const SalienceMap* h, const LossWeights& w) {
    w.validate();
    Tape::NodeId ce = tape.cross_entropy(fwd.logits, label);
    // Exact collapse to cross_entropy_only when no salience term survives.
    if (w.variant == LossVariant::CrossEntropyOnly || (w.beta == 0 && w.gamma == 0))
        return tape.weighted_sum({ce}, {w.alpha});
    if (!h) throw ValidationError("build_sample_loss: variant requires a human salience map");
    const Tensor& feat = tape.value(fwd.features);
    if (h->height != feat.dim(1) || h->width != feat.dim(2))
        throw ValidationError("build_sample_loss: human map not aligned to CAM grid");
    Tensor ht({h->height, h->width}, h->values);

    Tape::NodeId t = tape.class_cam(fwd.features, fwd.head_weight, label);
    switch (w.variant) {
    case LossVariant::Baseline: {
        Tape::NodeId m = tape.mse_vs_const(tape.normalize_unit(t), ht);
        return tape.weighted_sum({ce, m}, {w.alpha, w.beta});
    }
    case LossVariant::Difference: {
        Tape::NodeId f = tape.class_cam(fwd.features, fwd.head_weight, 1 - label);
        Tape::NodeId d = tape.normalize_unit(tape.sub(t, f));
        Tape::NodeId m = tape.mse_vs_const(d, ht);
        return tape.weighted_sum({ce, m}, {w.alpha, w.beta});
    }
    case LossVariant::PerClass: {
        Tape::NodeId f = tape.class_cam(fwd.features, fwd.head_weight, 1 - label);
        Tape::NodeId m1 = tape.mse_vs_const(tape.normalize_unit(t), ht);
        Tensor h_inv = ht;
        for (auto& v : h_inv.data) v = 1.0 - v;
        Tape::NodeId m2 = tape.mse_vs_const(tape.normalize_unit(f), h_inv);
        return tape.weighted_sum({ce, m1, m2}, {w.alpha, w.beta, w.gamma});
    }
    case LossVariant::Contrast: {
        Tape::NodeId f = tape.class_cam(fwd.features, fwd.head_weight, 1 - label);
        Tape::NodeId tn = tape.normalize_unit(t);
        Tape::NodeId m1 = tape.mse_vs_const(tn, ht);
        // The inverted true CAM is a constant target: no gradient through it.
        Tensor t_inv = tape.value(tn);
        for (auto& v : t_inv.data) v = 1.0 - v;
        Tape::NodeId m2 = tape.mse_vs_const(tape.normalize_unit(f), t_inv);
        return tape.weighted_sum({ce, m1, m2}, {w.alpha, w.beta, w.gamma});
    }
    default: break;
    }
    throw ValidationError("build_sample_loss: bad variant");
}

} // namespace salience
