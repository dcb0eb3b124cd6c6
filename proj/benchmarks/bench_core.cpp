#include <benchmark/benchmark.h>

#include <random>

#include "nvrot/echo.hpp"
#include "nvrot/propagation.hpp"

using namespace nvrot;

namespace {

FieldGeometry tilted() {
  FieldGeometry g;
  g.b_gauss = 20.0;
  g.theta_b = rad(30.0);
  g.omega_rot = angular(5000.0);
  return g;
}

std::vector<Vector3> sites(int n) {
  std::vector<Vector3> s;
  for (int i = 0; i < n; ++i) s.emplace_back(0.4 + 0.3 * i, -0.2 * i, 0.6 - 0.1 * i);
  return s;
}

}  // namespace

static void BM_ExpmHermitian(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = {d(rng), d(rng)};
  const CMatrix h = 0.5 * (a + a.adjoint());
  for (auto _ : state) benchmark::DoNotOptimize(expm_hermitian(h, 0.1));
}
BENCHMARK(BM_ExpmHermitian)->Arg(6)->Arg(12)->Arg(24)->Arg(48);

static void BM_Propagate(benchmark::State& state) {
  const ClusterHamiltonian c(sites(static_cast<int>(state.range(0))));
  const FieldGeometry g = tilted();
  for (auto _ : state) benchmark::DoNotOptimize(propagate(c, g, 0.0, 1e-4));
}
BENCHMARK(BM_Propagate)->Arg(1)->Arg(2)->Arg(3);

static void BM_ClusterEcho(benchmark::State& state) {
  const ClusterHamiltonian c(sites(static_cast<int>(state.range(0))));
  std::vector<double> tau;
  for (int i = 0; i <= 40; ++i) tau.push_back(5e-6 * i);
  const EchoPlan plan(tilted(), tau, 0.0, {});
  const auto engine = state.range(1) ? EngineKind::Full : EngineKind::Conditional;
  for (auto _ : state) benchmark::DoNotOptimize(cluster_echo_signals(c, plan, engine));
}
BENCHMARK(BM_ClusterEcho)->Args({1, 0})->Args({3, 0})->Args({1, 1})->Args({3, 1});

static void BM_BathEcho(benchmark::State& state) {
  const auto bath = generate_bath({0.011, 2.0, 0.25}, 1);
  const auto part = partition_clusters(bath, 3);
  std::vector<double> tau;
  for (int i = 0; i <= 20; ++i) tau.push_back(10e-6 * i);
  EngineSettings s;
  s.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(bath_echo_signal(bath, part, tilted(), tau, 0.0, s));
}
BENCHMARK(BM_BathEcho)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
