#include <benchmark/benchmark.h>

#include "xbar/circuit_sim.hpp"
#include "xbar/conv_mapper.hpp"
#include "xbar/metrics.hpp"
#include "xbar/random.hpp"
#include "xbar/vmm_core.hpp"

namespace {

using namespace xbar;

CrossbarConfig config_for(const benchmark::State& state) {
  return CrossbarConfig::defaults(std::size_t(state.range(0)), std::size_t(state.range(1)));
}

ConductanceMatrix random_g(const CrossbarConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  ConductanceMatrix g(c.rows, c.cols, c.g_min);
  for (double& v : g.g.data()) v = rng.uniform(c.g_min, c.g_max);
  return g;
}

Vector flat(std::size_t n, double v) { return Vector(n, v); }

void BM_Factorize(benchmark::State& state) {
  const CrossbarConfig c = config_for(state);
  const ConductanceMatrix g = random_g(c, 1);
  for (auto _ : state) {
    CrossbarSolver solver(c, g);
    benchmark::DoNotOptimize(&solver);
  }
}

void BM_Solve(benchmark::State& state) {
  const CrossbarConfig c = config_for(state);
  const CrossbarSolver solver(c, random_g(c, 2));
  const Vector v = flat(c.rows, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(solver.output_currents(v));
}

void BM_Convert(benchmark::State& state) {
  const CrossbarConfig c = config_for(state);
  const Matrix a = gen_weight_matrix(KernelType::Gaussian, c.rows, c.cols, 3);
  const ConductanceMatrix target = compress_range(map_weights(a, c, 1.0).g, c.g_min, 0.25);
  const Vector v = flat(c.rows, 0.1 * c.v_sense_max);
  for (auto _ : state) benchmark::DoNotOptimize(convert(c, target, v));
}

void BM_ConvExecute(benchmark::State& state) {
  ConvSpec spec;
  spec.kernel_h = spec.kernel_w = 3;
  spec.in_channels = std::size_t(state.range(0));
  spec.out_channels = std::size_t(state.range(1));
  spec.padding = 1;
  spec.weights = gen_kernel(KernelType::Gaussian, 3, 3, spec.in_channels, spec.out_channels, 4);
  const FeatureMap fm = gen_input(16, 16, spec.in_channels, 0.5, 5);
  EngineBuildOptions opts;
  opts.range_refine_halvings = 0;
  const CrossbarConfig c = CrossbarConfig::defaults(spec.unrolled_rows(), spec.out_channels);
  const VmmEngine engine = build_engine(unroll_kernel(spec), c, window_stream(fm, spec), opts);
  for (auto _ : state) benchmark::DoNotOptimize(conv_execute(engine, fm, spec));
}

}  // namespace

BENCHMARK(BM_Factorize)->Args({27, 16})->Args({144, 16})->Args({288, 32})->Args({576, 64})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Solve)->Args({27, 16})->Args({144, 16})->Args({288, 32})->Args({576, 64})
    ->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Convert)->Args({144, 16})->Args({288, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvExecute)->Args({3, 16})->Args({16, 16})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
