// Per-call cost of the soft objective versus the whitened baseline, and one
// full SGD step, across feature counts k at a fixed batch size.

#include <softhgr/data.hpp>
#include <softhgr/model.hpp>
#include <softhgr/objective.hpp>

#include <benchmark/benchmark.h>

using namespace softhgr;

namespace {

constexpr Eigen::Index kBatch = 1000;
constexpr Eigen::Index kWidth = 1024;

const ModalBatch& split_data() {
  static const ModalBatch data = data::gen_split_vector(kWidth, kBatch, 0);
  return data;
}

struct Features {
  FeatureBatch f, g;
};

Features features_for(Eigen::Index k) {
  const auto& d = split_data();
  return {forward(init(Architecture::linear(kWidth / 2, k), 1), d.inputs[0]),
          forward(init(Architecture::linear(kWidth / 2, k), 2), d.inputs[1])};
}

void BM_SoftHgr(benchmark::State& state) {
  const auto x = features_for(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(soft_hgr(x.f, x.g).value);
  state.SetComplexityN(state.range(0));
}

void BM_Whitened(benchmark::State& state) {
  const auto x = features_for(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(whitened_correlation(x.f, x.g, 0.0).value);
  state.SetComplexityN(state.range(0));
}

void BM_SoftHgrStep(benchmark::State& state) {
  const Eigen::Index k = state.range(0);
  const auto& d = split_data();
  const auto f = init(Architecture::linear(kWidth / 2, k), 1);
  const auto g = init(Architecture::linear(kWidth / 2, k), 2);
  for (auto _ : state) {
    const auto tf = forward_trace(f, d.inputs[0]);
    const auto tg = forward_trace(g, d.inputs[1]);
    const auto r = soft_hgr(FeatureBatch{tf.output}, FeatureBatch{tg.output});
    benchmark::DoNotOptimize(backward(f, tf, r.feature_gradients[0]));
    benchmark::DoNotOptimize(backward(g, tg, r.feature_gradients[1]));
  }
}

}  // namespace

BENCHMARK(BM_SoftHgr)->RangeMultiplier(2)->Range(25, 400)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_Whitened)->RangeMultiplier(2)->Range(25, 400)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_SoftHgrStep)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
