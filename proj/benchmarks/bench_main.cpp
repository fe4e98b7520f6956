#include "metaradar/dataset.hpp"
#include "metaradar/ideal_detector.hpp"
#include "metaradar/mlp.hpp"
#include "metaradar/train.hpp"

#include <benchmark/benchmark.h>

using namespace metaradar;

namespace {

const std::vector<int> kSizes{32, 48, 48, 1};

Batch radar_batch(std::size_t n) {
  const Dataset d = generate_dataset(EnvironmentSpec{}, lfm_waveform(WaveformParams{}), n, 1);
  return full_batch(d);
}

void BM_LossGrad(benchmark::State& state) {
  Rng rng(1);
  const MLPParams p = init_params(kSizes, rng, 16.0);
  const Batch b = radar_batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(loss_grad(p, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossGrad)->Arg(128)->Arg(8000);

void BM_HessianVector(benchmark::State& state) {
  Rng rng(2);
  const MLPParams p = init_params(kSizes, rng, 16.0);
  const Batch b = radar_batch(128);
  const FlatGradient v = FlatGradient::Ones(p.size());
  for (auto _ : state) benchmark::DoNotOptimize(hessian_vector_product(p, b, v));
}
BENCHMARK(BM_HessianVector);

void BM_MetaGradient(benchmark::State& state) {
  Rng rng(3);
  const MLPParams p = init_params(kSizes, rng, 16.0);
  const MetaTask t{radar_batch(128), radar_batch(128)};
  const bool first_order = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(maml_meta_gradient(p, t, 0.2, first_order));
}
BENCHMARK(BM_MetaGradient)->Arg(1)->Arg(0);

void BM_DrawSample(benchmark::State& state) {
  EnvironmentSpec e;
  e.shape = 0.25;
  const SampleGenerator gen(e, lfm_waveform(WaveformParams{}));
  Rng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(gen.draw(1, rng));
}
BENCHMARK(BM_DrawSample);

void BM_IdealScore(benchmark::State& state) {
  const Waveform y = lfm_waveform(WaveformParams{});
  const GaussianDetector d = build_ideal_detector(y, EnvironmentSpec{});
  Rng rng(5);
  const CVector z = generate_sample(EnvironmentSpec{}, y, 1, rng).z;
  for (auto _ : state) benchmark::DoNotOptimize(d.score(z));
}
BENCHMARK(BM_IdealScore);

}  // namespace
BENCHMARK_MAIN();
