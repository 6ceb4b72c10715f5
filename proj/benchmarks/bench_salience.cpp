// Microbenchmarks for the hot paths: CAM extraction, difference salience,
// AUROC ranking, and a full forward/backward training step.

#include <benchmark/benchmark.h>

#include "salience/cam.hpp"
#include "salience/eval.hpp"
#include "salience/losses.hpp"
#include "salience/rng.hpp"
#include "salience/train.hpp"

using namespace salience;

namespace {

ModelOutput make_output(int channels, int side) {
    Rng rng(9);
    ModelOutput out;
    out.features = Tensor({channels, side, side});
    for (auto& v : out.features.data) v = rng.uniform(-1.0, 1.0);
    out.class_weights = Tensor({2, channels});
    for (auto& v : out.class_weights.data) v = rng.uniform(-1.0, 1.0);
    out.logits = {0.3, -0.2};
    out.probabilities = {0.62, 0.38};
    return out;
}

void BM_ClassCam(benchmark::State& state) {
    ModelOutput out = make_output(static_cast<int>(state.range(0)), 16);
    for (auto _ : state) benchmark::DoNotOptimize(compute_class_cam(out, 1));
}
BENCHMARK(BM_ClassCam)->Arg(16)->Arg(64)->Arg(256);

void BM_DifferenceSalience(benchmark::State& state) {
    ModelOutput out = make_output(64, static_cast<int>(state.range(0)));
    auto [t, f] = compute_cam_pair(out, 1);
    for (auto _ : state) benchmark::DoNotOptimize(difference_salience(t, f));
}
BENCHMARK(BM_DifferenceSalience)->Arg(8)->Arg(32)->Arg(128);

void BM_Auroc(benchmark::State& state) {
    Rng rng(4);
    const size_t n = static_cast<size_t>(state.range(0));
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (auto& s : scores) s = rng.uniform();
    for (size_t i = 0; i < n; ++i) labels[i] = int(i % 2);
    for (auto _ : state) benchmark::DoNotOptimize(auroc(scores, labels));
}
BENCHMARK(BM_Auroc)->Arg(100)->Arg(1000)->Arg(10000);

void BM_TrainStep(benchmark::State& state) {
    TinyCamNet model(1, 3);
    Rng rng(5);
    Tensor img({1, 16, 16});
    for (auto& v : img.data) v = rng.uniform();
    SalienceMap h(4, 4, 0.0, true);
    for (auto& v : h.values) v = rng.uniform();
    LossWeights w = LossWeights::defaults_for(LossVariant::Baseline);
    for (auto _ : state) {
        Tape tape;
        auto fwd = model.forward(tape, img, true);
        tape.backward(build_sample_loss(tape, fwd, 1, &h, w));
        benchmark::DoNotOptimize(tape.grad(fwd.param_nodes[0]));
    }
}
BENCHMARK(BM_TrainStep);

} // namespace

BENCHMARK_MAIN();
