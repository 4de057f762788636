#pragma once

#include <random>

#include "prada/dataset.hpp"
#include "prada/network.hpp"
#include "prada/pipeline.hpp"

namespace test {

using prada::Dataset;
using prada::Index;
using prada::NetworkParams;

inline Dataset random_dataset(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Dataset data;
  data.X.resize(rows, cols);
  data.y.resize(rows);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) data.X(r, c) = normal(rng);
    data.y[r] = normal(rng);
  }
  data.column_names = prada::default_column_names(cols);
  data.stats = prada::StandardizationStats::identity(cols);
  return data;
}

inline NetworkParams random_network(Index hidden, Index inputs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  NetworkParams p(hidden, inputs);
  for (Index i = 0; i < p.size(); ++i) p.values()[i] = normal(rng);
  return p;
}

// Central differences of the MSE over every flat parameter.
inline Eigen::VectorXd finite_difference_gradient(const NetworkParams& params, const Dataset& data,
                                                  double step = 1e-6) {
  Eigen::VectorXd out(params.size());
  NetworkParams probe = params;
  for (Index i = 0; i < params.size(); ++i) {
    const double saved = probe.values()[i];
    probe.values()[i] = saved + step;
    const double up = prada::mse_loss(probe, data);
    probe.values()[i] = saved - step;
    const double down = prada::mse_loss(probe, data);
    probe.values()[i] = saved;
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

// Small, fast settings for training tests.
inline prada::TrainConfig tiny_config() {
  prada::TrainConfig c;
  c.hidden_units = 6;
  c.n_restarts = 2;
  c.lambda = 1e-3;
  c.max_epochs_stage1 = 1500;
  c.max_epochs_stage2 = 1500;
  c.max_epochs_stage3 = 500;
  c.stage2_block = 20;
  c.adam.step_size = 1e-2;
  c.workers = 1;
  return c;
}

}  // namespace test
