#include <benchmark/benchmark.h>

#include <numbers>

#include "mmwlab/analytic.hpp"
#include "mmwlab/geometry.hpp"
#include "mmwlab/simulate.hpp"

using namespace mmwlab;

namespace {

ScenarioParams bench_params() {
  ScenarioParams p;
  p.lambda_b = 200.0;
  p.lambda_ell = 200.0;
  p.theta = std::numbers::pi / 6;
  p.gamma_c = 0.6;
  return p;
}

void BM_Analyze(benchmark::State& state) {
  const auto p = bench_params();
  double beta = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(analyze(p, beta));
    beta = beta >= 1.0 ? 0.0 : beta + 0.01;
  }
}
BENCHMARK(BM_Analyze);

void BM_OptimalBiasRate(benchmark::State& state) {
  const auto p = bench_params();
  for (auto _ : state) benchmark::DoNotOptimize(optimal_bias_rate(p));
}
BENCHMARK(BM_OptimalBiasRate)->Unit(benchmark::kMillisecond);

void BM_LosQuery(benchmark::State& state) {
  const auto p = bench_params();
  Window w{300.0, 100.0};
  auto rng = make_stream(7, 1);
  const auto field = sample_buildings(w, p, rng);
  const auto pts = sample_ppp(w, 2000.0, rng);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(field.los(pts[i % pts.size()], pts[(i + 1) % pts.size()]));
    ++i;
  }
}
BENCHMARK(BM_LosQuery);

void BM_LosBallDrop(benchmark::State& state) {
  const auto p = bench_params();
  SimOptions o;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(realize(p, o, seed++));
}
BENCHMARK(BM_LosBallDrop);

void BM_FullGeometryDrop(benchmark::State& state) {
  auto p = bench_params();
  p.lambda_b = 400.0;
  p.lambda_ell = 400.0;
  SimOptions o;
  o.mode = SimMode::FullGeometry;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(realize(p, o, seed++));
}
BENCHMARK(BM_FullGeometryDrop)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
