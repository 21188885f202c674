// Microbenchmarks for the hot paths: raw RNG, the pathwise simulators, the
// couplings and the analytic oracles.  Not registered with ctest; run manually
// via build/benchmarks/ergo_bench.

#include <benchmark/benchmark.h>

#include <cmath>

#include "ergo/analytic.hpp"
#include "ergo/coupling.hpp"
#include "ergo/curvature.hpp"
#include "ergo/metrics.hpp"
#include "ergo/model.hpp"
#include "ergo/rng.hpp"
#include "ergo/simulate.hpp"

namespace {

using namespace ergo;

void bm_philox_block(benchmark::State& state) {
  std::array<uint32_t, 4> ctr{0, 0, 0, 0};
  const std::array<uint32_t, 2> key{12345u, 67890u};
  for (auto _ : state) {
    ctr = philox::block(ctr, key);
    benchmark::DoNotOptimize(ctr);
  }
}
BENCHMARK(bm_philox_block);

void bm_rng_normal(benchmark::State& state) {
  rng_stream rng(42, 0);
  double acc = 0.0;
  for (auto _ : state) acc += rng.normal();
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(bm_rng_normal);

ScalarField tcp_rate() {
  return {[](double x) { return x + 1.0; }, [](double) { return 1.0; }};
}

void bm_simulate_tcp(benchmark::State& state) {
  const ModelSpec m = make_tcp(tcp_rate(), Dist1D::dirac(0.5));
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 1.0;
  cfg.checkpoints = {1.0};
  cfg.n_paths = state.range(0);
  cfg.seed = 7;
  for (auto _ : state) {
    auto ens = simulate_ensemble(m, InitialLaw::dirac(1.0), cfg);
    benchmark::DoNotOptimize(ens.values.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_paths);
}
BENCHMARK(bm_simulate_tcp)->Arg(256)->Arg(1024);

void bm_simulate_ou_exact(benchmark::State& state) {
  const ModelSpec m = make_ou(1.0);
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 1.0;
  cfg.checkpoints = {1.0};
  cfg.n_paths = state.range(0);
  cfg.seed = 7;
  cfg.integrator = Integrator::ExactLinear;
  for (auto _ : state) {
    auto ens = simulate_ensemble(m, InitialLaw::dirac(0.0), cfg);
    benchmark::DoNotOptimize(ens.values.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_paths);
}
BENCHMARK(bm_simulate_ou_exact)->Arg(256)->Arg(1024);

void bm_couple_synchronous(benchmark::State& state) {
  const ModelSpec m = make_tcp(tcp_rate(), Dist1D::dirac(0.5));
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 1.0;
  cfg.checkpoints = {0.5, 1.0};
  cfg.n_paths = state.range(0);
  cfg.seed = 7;
  for (auto _ : state) {
    auto out = couple_synchronous(m, 1.0, 2.0, cfg);
    benchmark::DoNotOptimize(out.dist.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_paths);
}
BENCHMARK(bm_couple_synchronous)->Arg(256);

void bm_levy_integral(benchmark::State& state) {
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 1.0;
  cfg.checkpoints = {1.0};
  cfg.n_paths = state.range(0);
  cfg.seed = 7;
  for (auto _ : state) {
    auto ens = simulate_levy_integral(1.0, Dist1D::dirac(0.5), cfg);
    benchmark::DoNotOptimize(ens.values.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_paths);
}
BENCHMARK(bm_levy_integral)->Arg(256);

void bm_embedded_chain(benchmark::State& state) {
  const auto R = [](double x) { return 0.5 * x * x; };
  const auto R_inv = [](double y) { return std::sqrt(2.0 * y); };
  for (auto _ : state) {
    auto chain = simulate_embedded_chain(R, R_inv, Dist1D::dirac(0.5), 1.0, 64,
                                         state.range(0), 7);
    benchmark::DoNotOptimize(chain.states.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 64);
}
BENCHMARK(bm_embedded_chain)->Arg(1024);

void bm_curvature_grid(benchmark::State& state) {
  const ModelSpec m = make_tcp(tcp_rate(), Dist1D::dirac(0.5));
  for (auto _ : state) {
    auto rep = curvature_rho(m, Interval{0.0, 50.0}, 10001);
    benchmark::DoNotOptimize(rep.rho);
  }
}
BENCHMARK(bm_curvature_grid);

void bm_wasserstein(benchmark::State& state) {
  rng_stream rng(3, 0);
  std::vector<double> a(state.range(0)), b(state.range(0));
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal() + 1.0;
  for (auto _ : state) {
    const double w = wasserstein_p_1d(a, b, 2.0);
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(bm_wasserstein)->Arg(1 << 12)->Arg(1 << 16);

void bm_invariant_density(benchmark::State& state) {
  double acc = 0.0;
  for (auto _ : state)
    for (int i = 1; i <= 64; ++i)
      acc += tcp_embedded_invariant_density(1.0, 1.0, 0.5, 0.05 * i, 40);
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(bm_invariant_density);

void bm_ground_state(benchmark::State& state) {
  const auto q_prime = [](double x) { return x; };
  const auto q_second = [](double) { return 1.0; };
  for (auto _ : state) {
    auto res = schrodinger_ground_state(q_prime, q_second, Interval{-10.0, 10.0},
                                        static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(res.lambda);
  }
}
BENCHMARK(bm_ground_state)->Arg(1001)->Arg(4001);

}  // namespace

BENCHMARK_MAIN();
