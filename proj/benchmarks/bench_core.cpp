#include <benchmark/benchmark.h>

#include "nbreg/experiments.hpp"
#include "nbreg/penalty.hpp"
#include "nbreg/solver.hpp"

namespace {

using namespace nbreg;

struct Problem {
  Dataset data;
  NBModel truth;
};

Problem make_problem(Index n, Index p) {
  const Eigen::MatrixXd X = gen_design(n, p, 0.5, 1);
  const NBModel truth{2.0, gen_truth(p, 5, -1.0, 1.0, 2)};
  Rng rng(3);
  return {Dataset(X, sample_responses(X, truth, rng), true), truth};
}

void BM_LossGradient(benchmark::State& state) {
  const Problem pr = make_problem(state.range(0), 30);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss(pr.truth, pr.data));
    benchmark::DoNotOptimize(gradient(pr.truth, pr.data));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossGradient)->Arg(100)->Arg(800)->Arg(10000);

void BM_Fit(benchmark::State& state) {
  const Problem pr = make_problem(state.range(0), 30);
  FitConfig config;
  config.lambda = lambda_asymptotic(v_weights(pr.truth, pr.data).v_max, pr.data.n(), 30, 1.1, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(fit(pr.data, 2.0, config).beta_hat);
}
BENCHMARK(BM_Fit)->Arg(100)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_InverseNormalCdf(benchmark::State& state) {
  double q = 1e-6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(inverse_normal_cdf(q));
    q = q < 0.999 ? q + 1e-3 : 1e-6;
  }
}
BENCHMARK(BM_InverseNormalCdf);

void BM_LambdaExact(benchmark::State& state) {
  const Problem pr = make_problem(100, 30);
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lambda_exact(pr.data, pr.truth, 1.1, 0.05, 2000, 4, threads));
  }
}
BENCHMARK(BM_LambdaExact)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
