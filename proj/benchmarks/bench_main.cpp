// Micro-benchmarks for the hot paths: channel assembly, objective gradient
// and one full quasi-Newton step.

#include <benchmark/benchmark.h>

#include "prmo/experiment.hpp"
#include "prmo/gradients.hpp"

namespace {

prmo::Scenario make_scenario(int N, int a) {
  prmo::ScenarioConfig cfg;  // desk defaults
  cfg.N = N;
  cfg.a = a;
  return prmo::generate_scenario(cfg, 7);
}

prmo::ProductPoint make_point(const prmo::Scenario& sc) {
  std::mt19937_64 rng(11);
  return prmo::random_point(sc.M, sc.K_c, sc.K_t, sc.N, sc.n_ctrl(), rng);
}

void BM_BuildChannels(benchmark::State& state) {
  const prmo::Scenario sc = make_scenario(static_cast<int>(state.range(0)), 1);
  const prmo::ProductPoint X = make_point(sc);
  for (auto _ : state) benchmark::DoNotOptimize(prmo::build_channels(sc, X));
}
BENCHMARK(BM_BuildChannels)->Arg(8)->Arg(16)->Arg(36);

void BM_EuclideanGradient(benchmark::State& state) {
  const prmo::Scenario sc = make_scenario(static_cast<int>(state.range(0)), 1);
  const prmo::ProductPoint X = make_point(sc);
  const prmo::PenaltyParams p{10.0, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(prmo::euclidean_gradient(sc, X, p));
}
BENCHMARK(BM_EuclideanGradient)->Arg(8)->Arg(16)->Arg(36);

// One bounded inner descent (a few quasi-Newton iterations) on the smoothed
// objective, comparing element-wise against rigid sub-array position control.
void BM_InnerIterations(benchmark::State& state) {
  const prmo::Scenario sc = make_scenario(16, static_cast<int>(state.range(0)));
  const prmo::ProductPoint X0 = make_point(sc);
  const prmo::PenaltyParams p{10.0, 0.1};
  prmo::InnerProblem prob;
  prob.eval = [&](const prmo::ProductPoint& X) { return prmo::smoothed_objective(sc, X, p); };
  prob.euclidean_grad = [&](const prmo::ProductPoint& X) {
    return prmo::euclidean_gradient(sc, X, p);
  };
  prmo::InnerOptions opt;
  opt.max_iters = 5;
  opt.eps = 0.0;  // always run the full 5 iterations
  for (auto _ : state) benchmark::DoNotOptimize(prmo::solve_inner(prob, X0, opt));
}
BENCHMARK(BM_InnerIterations)->Arg(1)->Arg(2);

}  // namespace

BENCHMARK_MAIN();
