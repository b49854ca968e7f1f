#include <benchmark/benchmark.h>

#include <map>

#include "dom/attack.hpp"
#include "dom/loss.hpp"
#include "dom/model.hpp"
#include "dom/rng.hpp"
#include "dom/telemetry.hpp"

namespace {

dom::Tensor random_inputs(std::size_t n, const dom::Shape& sample, std::uint64_t seed) {
  dom::Rng rng(seed);
  dom::Tensor x = dom::Tensor::batch_of(n, sample);
  for (auto& v : x.values()) v = rng.uniform();
  return x;
}

std::vector<int> labels(std::size_t n, int classes) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
  return y;
}

dom::Batch make_batch(const dom::Model& m, std::size_t n) {
  dom::Batch b;
  b.x = random_inputs(n, m.input_shape(), 3);
  b.y = labels(n, static_cast<int>(m.num_classes()));
  for (std::size_t i = 0; i < n; ++i) b.ids.push_back(i);
  return b;
}

void BM_MlpForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const dom::Model m = dom::Model::mlp({32}, {128, 128}, 10, 1);
  const auto b = make_batch(m, n);
  for (auto _ : state) benchmark::DoNotOptimize(dom::backward(m, b.x, b.y));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MlpForwardBackward)->Arg(32)->Arg(128);

void BM_ConvForward(benchmark::State& state) {
  const dom::Model m = dom::Model::convnet({3, 32, 32}, {16, 32}, 10, 1);
  const auto b = make_batch(m, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(b.x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvForward)->Arg(16);

void BM_ConvForwardBackward(benchmark::State& state) {
  const dom::Model m = dom::Model::convnet({3, 32, 32}, {16, 32}, 10, 1);
  const auto b = make_batch(m, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dom::backward(m, b.x, b.y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvForwardBackward)->Arg(16);

void BM_Pgd(benchmark::State& state) {
  const dom::Model m = dom::Model::convnet({1, 16, 16}, {8, 16}, 10, 1);
  const auto b = make_batch(m, 32);
  dom::AttackSpec spec;
  spec.steps = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(dom::pgd(m, b, spec, ++seed));
}
BENCHMARK(BM_Pgd)->Arg(1)->Arg(10);

void BM_OverlapDeciles(benchmark::State& state) {
  dom::Rng rng(9);
  dom::LossById nat, adv;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    nat[static_cast<std::uint64_t>(i)] = rng.uniform(0.0, 3.0);
    adv[static_cast<std::uint64_t>(i)] = rng.uniform(0.0, 3.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(dom::overlap_rate_deciles(nat, adv));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OverlapDeciles)->Arg(50000);

}  // namespace

BENCHMARK_MAIN();
