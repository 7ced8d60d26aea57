#include <benchmark/benchmark.h>

#include "cumolos/baselines.hpp"
#include "cumolos/inference.hpp"
#include "cumolos/metrics.hpp"
#include "cumolos/patching.hpp"
#include "cumolos/synthetic.hpp"

namespace {

using namespace cumolos;

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.time_count = 256;
  spec.gate_count = 64;
  spec.blob_count = 12;
  spec.shear_band_count = 2;
  return spec;
}

PatchSample first_patch() {
  const TimeHeightField field = preprocess(generate_synthetic(small_spec(), 7));
  return extract_patches(field).front();
}

ModelConfig tiny_model() {
  ModelConfig c;
  c.encoder_layers = 2;
  c.decoder_layers = 1;
  c.encoder_dim = 32;
  c.decoder_dim = 16;
  c.encoder_heads = 2;
  c.decoder_heads = 2;
  return c;
}

void BM_SampleMask(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_mask(1024, 0.7, seed++));
}
BENCHMARK(BM_SampleMask);

void BM_Tokenize(benchmark::State& state) {
  const PatchSample patch = first_patch();
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(patch));
}
BENCHMARK(BM_Tokenize);

void BM_ForwardTiny(benchmark::State& state) {
  const PatchSample patch = first_patch();
  const TokenGrid grid = tokenize(patch);
  const MaeParams params = init_params(tiny_model(), 1);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const MaskRealization mask = sample_mask(grid.token_count(), 0.7, seed++);
    benchmark::DoNotOptimize(forward(grid, mask, params));
  }
}
BENCHMARK(BM_ForwardTiny);

void BM_TrainStepTiny(benchmark::State& state) {
  const PatchSample patch = first_patch();
  const TokenGrid grid = tokenize(patch);
  const auto valid = tokenize_mask(patch.validity);
  MaeParams params = init_params(tiny_model(), 1);
  MaeParams grads = zeros_like(params);
  ForwardCache cache;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const MaskRealization mask = sample_mask(grid.token_count(), 0.7, seed++);
    const auto out = forward(grid, mask, params, &cache);
    Matrix dpred;
    masked_mse_with_grad(out.predicted_tokens, grid.tokens, mask.visible,
                         valid, dpred);
    backward(mask, params, cache, dpred, grads);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_TrainStepTiny);

void BM_MeanFilter(benchmark::State& state) {
  const PatchSample patch = first_patch();
  for (auto _ : state) benchmark::DoNotOptimize(mean_filter(patch));
}
BENCHMARK(BM_MeanFilter);

void BM_WelchPsd(benchmark::State& state) {
  const TimeHeightField field = generate_synthetic(small_spec(), 3);
  std::vector<double> series(static_cast<std::size_t>(field.time_count()));
  for (Eigen::Index i = 0; i < field.time_count(); ++i)
    series[static_cast<std::size_t>(i)] = field.velocity(i, 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(welch_psd(series, field.time_step_s));
}
BENCHMARK(BM_WelchPsd);

void BM_EnsembleAggregate(benchmark::State& state) {
  std::vector<Matrix> members;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < 50; ++i) {
    members.push_back(Matrix::Constant(64, 64, double(i)));
    seeds.push_back(static_cast<std::uint64_t>(i));
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(aggregate_members(members, seeds));
}
BENCHMARK(BM_EnsembleAggregate);

}  // namespace

BENCHMARK_MAIN();
