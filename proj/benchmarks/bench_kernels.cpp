#include <random>

#include <benchmark/benchmark.h>

#include "prada/analysis.hpp"
#include "prada/datagen.hpp"
#include "prada/extraction.hpp"
#include "prada/network.hpp"
#include "prada/optim.hpp"

using namespace prada;

namespace {

NetworkParams random_network(Index hidden, Index inputs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return initialize_network(hidden, inputs, rng);
}

// Legendre-shaped network: a few single-input groups, the rest pruned.
NetworkParams sparse_network(Index hidden, Index inputs) {
  NetworkParams p = random_network(hidden, inputs, 1);
  for (Index h = 0; h < hidden; ++h) {
    for (Index d = 0; d < inputs; ++d) {
      if (h >= 10 || d != h % 4) p.input_weights()(h, d) = 0.0;
    }
    if (h >= 10) p.output_weights()[h] = 0.0;
  }
  return p;
}

void BM_Activation(benchmark::State& state) {
  Eigen::MatrixXd Z = Eigen::MatrixXd::Random(1000, 50) * 3.0;
  for (auto _ : state) {
    Eigen::MatrixXd copy = Z;
    apply_activation(copy);
    benchmark::DoNotOptimize(copy.data());
  }
  state.SetItemsProcessed(state.iterations() * Z.size());
}
BENCHMARK(BM_Activation);

void BM_LossAndGradient(benchmark::State& state) {
  const Index rows = state.range(0);
  const Index hidden = state.range(1);
  const GeneratedData g = generate_legendre_dataset(rows, 5, 0.1, 1);
  const NetworkParams p = random_network(hidden, 5, 2);
  LossEvaluator eval(g.data);
  NetworkParams grad(hidden, 5);
  for (auto _ : state) benchmark::DoNotOptimize(eval.evaluate(p, grad));
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_LossAndGradient)->Args({900, 50})->Args({1800, 100});

void BM_ProximalUpdate(benchmark::State& state) {
  const NetworkParams p = random_network(100, 7, 3);
  const PenaltyWeights w = compute_penalty_weights(p, 2.0);
  Eigen::VectorXd theta = p.values();
  const Eigen::VectorXd g = Eigen::VectorXd::Random(theta.size()) * 1e-3;
  for (auto _ : state) {
    proximal_update(theta, g, 1e-5, 1e-5, w);
    benchmark::DoNotOptimize(theta.data());
  }
}
BENCHMARK(BM_ProximalUpdate);

void BM_SubgradientUpdate(benchmark::State& state) {
  const NetworkParams p = random_network(100, 7, 4);
  const PenaltyWeights w = compute_penalty_weights(p, 2.0);
  Eigen::VectorXd theta = p.values();
  AdamState adam(theta.size());
  const Eigen::VectorXd g = Eigen::VectorXd::Random(theta.size()) * 1e-3;
  for (auto _ : state) {
    subgradient_lasso_update(theta, g, 1e-3, w, adam);
    benchmark::DoNotOptimize(theta.data());
  }
}
BENCHMARK(BM_SubgradientUpdate);

void BM_Extract(benchmark::State& state) {
  const GeneratedData g = generate_legendre_dataset(1000, 5, 0.1, 5);
  const NetworkParams p = sparse_network(50, 5);
  for (auto _ : state) benchmark::DoNotOptimize(extract(p, g.data).components.size());
}
BENCHMARK(BM_Extract)->Unit(benchmark::kMillisecond);

void BM_Importance(benchmark::State& state) {
  const GeneratedData g = generate_legendre_dataset(1000, 5, 0.1, 6);
  const NetworkParams p = sparse_network(50, 5);
  for (auto _ : state) benchmark::DoNotOptimize(variable_importance(p, g.data).sum());
}
BENCHMARK(BM_Importance);

void BM_Medoid(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::bernoulli_distribution keep(0.3);
  std::vector<FunctionSet> runs(static_cast<std::size_t>(state.range(0)));
  for (auto& run : runs) {
    for (Index a = 0; a < 7; ++a) {
      for (Index b = a; b < 7; ++b) {
        if (keep(rng)) run.functions[a == b ? Support{a} : Support{a, b}] = 1;
      }
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(medoid_model(runs));
}
BENCHMARK(BM_Medoid)->Arg(10)->Arg(50);

}  // namespace
BENCHMARK_MAIN();
