#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "salience/losses.hpp"
#include "salience/models.hpp"
#include "salience/rng.hpp"
#include "test_util.hpp"

using namespace salience;
using test_util::cam_nondegenerate;
using test_util::grad_check;
using test_util::random_gap_output;
using test_util::random_image;
using test_util::random_map;

namespace {

// Independent composition of the loss formulas from first principles, using
// only the public map primitives.
double oracle_ce(const ModelOutput& o, int label) {
    const double m = std::max(o.logits[0], o.logits[1]);
    const double z = std::exp(o.logits[0] - m) + std::exp(o.logits[1] - m);
    return -(o.logits[label] - m - std::log(z));
}

double oracle_mse(const SalienceMap& a, const SalienceMap& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.values.size());
}

struct NamedMaps {
    SalienceMap t_norm, f_norm, d;
};

NamedMaps oracle_maps(const ModelOutput& o, int label) {
    auto [t, f] = compute_cam_pair(o, label);
    return {normalize_unit(t), normalize_unit(f), difference_salience(t, f)};
}

// A model/image/h triple whose CAMs have unique extrema, so normalize_unit
// subgradients match finite differences.
struct GradCase {
    TinyCamNet model;
    Tensor image;
    SalienceMap h;
    int label;
};

GradCase make_grad_case(uint64_t seed) {
    for (uint64_t s = seed;; ++s) {
        TinyCamNet model(1, s, TinyCamNetWidths{2, 2, 2});
        Rng rng(s * 77 + 3);
        Tensor image = random_image(rng, 1, 8, 8);
        ModelOutput out = run_model(model, image);
        auto [t, f] = compute_cam_pair(out, 1);
        SalienceMap diff(t.height, t.width);
        for (size_t i = 0; i < diff.values.size(); ++i)
            diff.values[i] = t.values[i] - f.values[i];
        if (!cam_nondegenerate(t) || !cam_nondegenerate(f) || !cam_nondegenerate(diff)) continue;
        SalienceMap h = random_map(rng, t.height, t.width, 0.0, 1.0, true);
        return {std::move(model), std::move(image), std::move(h), 1};
    }
}

} // namespace

TEST_CASE("variant names round-trip") {
    for (auto v : {LossVariant::Baseline, LossVariant::Difference, LossVariant::PerClass,
                   LossVariant::Contrast, LossVariant::CrossEntropyOnly})
        CHECK(loss_variant_from_string(to_string(v)) == v);
    CHECK_THROWS_AS(loss_variant_from_string("nope"), ValidationError);
    CHECK(!has_salience_term(LossVariant::CrossEntropyOnly));
    CHECK(has_salience_term(LossVariant::Contrast));
}

TEST_CASE("default weights") {
    auto two = LossWeights::defaults_for(LossVariant::Baseline);
    CHECK(two.alpha == 0.5);
    CHECK(two.beta == 0.5);
    auto three = LossWeights::defaults_for(LossVariant::PerClass);
    CHECK(three.alpha == 0.3);
    CHECK(three.beta == 0.3);
    CHECK(three.gamma == 0.3);
    auto contrast = LossWeights::defaults_for(LossVariant::Contrast);
    CHECK(contrast.gamma == 0.3);
}

TEST_CASE("weights validation") {
    LossWeights w;
    w.alpha = -0.1;
    CHECK_THROWS_AS(w.validate(), ValidationError);
    w = LossWeights{};
    w.beta = std::nan("");
    CHECK_THROWS_AS(w.validate(), ValidationError);
}

TEST_CASE("cross entropy matches a hand softmax") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        ModelOutput o = random_gap_output(rng);
        for (int label : {0, 1})
            CHECK(cross_entropy_value(o, label) ==
                  doctest::Approx(oracle_ce(o, label)).epsilon(1e-12));
    }
    // Large logits must not overflow.
    ModelOutput o = random_gap_output(rng);
    o.logits = {1000.0, -1000.0};
    CHECK(std::isfinite(cross_entropy_value(o, 0)));
    CHECK(cross_entropy_value(o, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("map mse is the mean of squared differences") {
    Rng rng(12);
    SalienceMap a = random_map(rng, 6, 7, 0.0, 1.0, true);
    SalienceMap b = random_map(rng, 6, 7, 0.0, 1.0, true);
    CHECK(mse_map(a, b) == doctest::Approx(oracle_mse(a, b)).epsilon(1e-12));
    CHECK(mse_map(a, a) == 0.0);
    SalienceMap c = random_map(rng, 6, 6, 0.0, 1.0, true);
    CHECK_THROWS_AS(mse_map(a, c), ValidationError);
}

TEST_CASE("value-level losses compose the primitives") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        ModelOutput o = random_gap_output(rng, 4, 5, 5);
        const int label = (trial % 2);
        SalienceMap h = random_map(rng, 5, 5, 0.0, 1.0, true);
        LossWeights w;
        w.alpha = rng.uniform(0.1, 0.9);
        w.beta = rng.uniform(0.1, 0.9);
        w.gamma = rng.uniform(0.1, 0.9);
        auto maps = oracle_maps(o, label);
        const double ce = oracle_ce(o, label);

        SalienceMap inv_h(h.height, h.width, 0.0, true);
        SalienceMap inv_t(h.height, h.width, 0.0, true);
        for (size_t i = 0; i < h.values.size(); ++i) {
            inv_h.values[i] = 1.0 - h.values[i];
            inv_t.values[i] = 1.0 - maps.t_norm.values[i];
        }

        w.variant = LossVariant::Baseline;
        CHECK(loss_baseline(o, label, h, w) ==
              doctest::Approx(w.alpha * ce + w.beta * oracle_mse(h, maps.t_norm)).epsilon(1e-12));
        w.variant = LossVariant::Difference;
        CHECK(loss_difference(o, label, h, w) ==
              doctest::Approx(w.alpha * ce + w.beta * oracle_mse(h, maps.d)).epsilon(1e-12));
        w.variant = LossVariant::PerClass;
        CHECK(loss_per_class(o, label, h, w) ==
              doctest::Approx(w.alpha * ce + w.beta * oracle_mse(h, maps.t_norm) +
                              w.gamma * oracle_mse(inv_h, maps.f_norm))
                  .epsilon(1e-12));
        w.variant = LossVariant::Contrast;
        CHECK(loss_contrast(o, label, h, w) ==
              doctest::Approx(w.alpha * ce + w.beta * oracle_mse(h, maps.t_norm) +
                              w.gamma * oracle_mse(inv_t, maps.f_norm))
                  .epsilon(1e-12));
        LossWeights ce_only;
        ce_only.variant = LossVariant::CrossEntropyOnly;
        ce_only.alpha = w.alpha;
        ce_only.beta = 0.0;
        CHECK(sample_loss(o, label, nullptr, ce_only) ==
              doctest::Approx(ce_only.alpha * ce).epsilon(1e-12));
    }
}

TEST_CASE("sample_loss dispatches on the variant") {
    Rng rng(14);
    ModelOutput o = random_gap_output(rng);
    SalienceMap h = random_map(rng, 5, 5, 0.0, 1.0, true);
    LossWeights w = LossWeights::defaults_for(LossVariant::PerClass);
    w.variant = LossVariant::PerClass;
    CHECK(sample_loss(o, 1, &h, w) == loss_per_class(o, 1, h, w));
    w.variant = LossVariant::Baseline;
    w = LossWeights::defaults_for(LossVariant::Baseline);
    CHECK(sample_loss(o, 0, &h, w) == loss_baseline(o, 0, h, w));
    // Salience variants require h.
    CHECK_THROWS_AS(sample_loss(o, 0, nullptr, w), ValidationError);
    // Misaligned h is rejected with the sample geometry named.
    SalienceMap wrong = random_map(rng, 3, 3, 0.0, 1.0, true);
    CHECK_THROWS_AS(sample_loss(o, 0, &wrong, w), ValidationError);
}

TEST_CASE("zero salience weights collapse to pure cross-entropy, bitwise") {
    Rng rng(15);
    for (int trial = 0; trial < 50; ++trial) {
        ModelOutput o = random_gap_output(rng);
        SalienceMap h = random_map(rng, 5, 5, 0.0, 1.0, true);
        LossWeights ce_only;
        ce_only.variant = LossVariant::CrossEntropyOnly;
        ce_only.alpha = 0.7;
        for (auto v : {LossVariant::Baseline, LossVariant::Difference, LossVariant::PerClass,
                       LossVariant::Contrast}) {
            LossWeights w;
            w.variant = v;
            w.alpha = 0.7;
            w.beta = 0.0;
            w.gamma = 0.0;
            // Exact float equality is the contract here, not approximate.
            CHECK(sample_loss(o, 1, &h, w) == sample_loss(o, 1, nullptr, ce_only));
        }
    }
}

TEST_CASE("batch loss is the mean of sample losses") {
    Rng rng(16);
    LossWeights w = LossWeights::defaults_for(LossVariant::Baseline);
    std::vector<BatchItem> batch;
    double acc = 0.0;
    for (int i = 0; i < 7; ++i) {
        BatchItem item;
        item.output = random_gap_output(rng);
        item.label = i % 2;
        item.h = random_map(rng, 5, 5, 0.0, 1.0, true);
        acc += sample_loss(item.output, item.label, &item.h, w);
        batch.push_back(std::move(item));
    }
    CHECK(batch_loss(batch, w) == doctest::Approx(acc / 7.0).epsilon(1e-12));
    CHECK_THROWS_AS(batch_loss(std::span<const BatchItem>{}, w), ValidationError);
}

TEST_CASE("tape loss value matches the value-level loss") {
    GradCase c = make_grad_case(21);
    for (auto v : {LossVariant::Baseline, LossVariant::Difference, LossVariant::PerClass,
                   LossVariant::Contrast, LossVariant::CrossEntropyOnly}) {
        LossWeights w = LossWeights::defaults_for(v);
        w.variant = v;
        Tape tape;
        auto fwd = c.model.forward(tape, c.image, false);
        const double tape_val =
            tape.scalar(build_sample_loss(tape, fwd, c.label, &c.h, w));
        ModelOutput o = run_model(c.model, c.image);
        CHECK(tape_val == doctest::Approx(sample_loss(o, c.label, &c.h, w)).epsilon(1e-10));
    }
}

TEST_CASE("gradient check on a 2-channel net with 8x8 input") {
    GradCase c = make_grad_case(31);
    for (auto v : {LossVariant::Baseline, LossVariant::Difference, LossVariant::PerClass,
                   LossVariant::CrossEntropyOnly}) {
        LossWeights w = LossWeights::defaults_for(v);
        w.variant = v;
        auto res = grad_check(c.model, c.image, c.label, c.h, w);
        INFO(to_string(v), " worst param ", res.worst_param);
        CHECK(res.max_rel_err < 1e-2);
    }
}

TEST_CASE("contrast target is detached") {
    // The contrast salience target 1 - t_norm must act as a constant: the
    // tape gradient has to equal that of a manually built loss whose target
    // is a frozen snapshot.
    GradCase c = make_grad_case(41);
    LossWeights w = LossWeights::defaults_for(LossVariant::Contrast);
    w.variant = LossVariant::Contrast;

    Tape tape;
    auto fwd = c.model.forward(tape, c.image, true);
    tape.backward(build_sample_loss(tape, fwd, c.label, &c.h, w));

    ModelOutput o = run_model(c.model, c.image);
    auto maps = oracle_maps(o, c.label);
    Tensor target({maps.t_norm.height, maps.t_norm.width});
    for (int64_t i = 0; i < target.size(); ++i)
        target.data[static_cast<size_t>(i)] = 1.0 - maps.t_norm.values[static_cast<size_t>(i)];

    Tape manual;
    auto fwd2 = c.model.forward(manual, c.image, true);
    Tape::NodeId ce = manual.cross_entropy(fwd2.logits, c.label);
    Tape::NodeId t_cam = manual.class_cam(fwd2.features, fwd2.head_weight, c.label);
    Tape::NodeId f_cam = manual.class_cam(fwd2.features, fwd2.head_weight, 1 - c.label);
    Tensor h_t({c.h.height, c.h.width});
    for (size_t i = 0; i < c.h.values.size(); ++i) h_t.data[i] = c.h.values[i];
    Tape::NodeId beta_term = manual.mse_vs_const(manual.normalize_unit(t_cam), h_t);
    Tape::NodeId gamma_term = manual.mse_vs_const(manual.normalize_unit(f_cam), target);
    manual.backward(
        manual.weighted_sum({ce, beta_term, gamma_term}, {w.alpha, w.beta, w.gamma}));

    for (size_t j = 0; j < c.model.params().size(); ++j) {
        const Tensor& a = tape.grad(fwd.param_nodes[j]);
        const Tensor& b = manual.grad(fwd2.param_nodes[j]);
        for (int64_t e = 0; e < a.size(); ++e)
            CHECK(a.data[static_cast<size_t>(e)] ==
                  doctest::Approx(b.data[static_cast<size_t>(e)]).epsilon(1e-10));
    }
}

TEST_CASE("cross-entropy-only tape gradient is bit-identical to zeroed weights") {
    GradCase c = make_grad_case(51);
    LossWeights zeroed;
    zeroed.variant = LossVariant::Baseline;
    zeroed.alpha = 0.5;
    zeroed.beta = 0.0;
    zeroed.gamma = 0.0;
    LossWeights ce_only;
    ce_only.variant = LossVariant::CrossEntropyOnly;
    ce_only.alpha = 0.5;

    Tape ta, tb;
    auto fa = c.model.forward(ta, c.image, true);
    auto fb = c.model.forward(tb, c.image, true);
    Tape::NodeId la = build_sample_loss(ta, fa, c.label, &c.h, zeroed);
    Tape::NodeId lb = build_sample_loss(tb, fb, c.label, nullptr, ce_only);
    CHECK(ta.scalar(la) == tb.scalar(lb));
    ta.backward(la);
    tb.backward(lb);
    for (size_t j = 0; j < c.model.params().size(); ++j) {
        const Tensor& ga = ta.grad(fa.param_nodes[j]);
        const Tensor& gb = tb.grad(fb.param_nodes[j]);
        for (int64_t e = 0; e < ga.size(); ++e)
            CHECK(ga.data[static_cast<size_t>(e)] == gb.data[static_cast<size_t>(e)]);
    }
}
