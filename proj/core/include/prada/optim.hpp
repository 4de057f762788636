#pragma once

#include <vector>

#include <Eigen/Dense>

#include "prada/network.hpp"

namespace prada {

struct Dataset;

struct AdamSettings {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam moments for one training run.
struct AdamState {
  AdamState() = default;
  AdamState(Index size, AdamSettings settings = {});

  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long step_count = 0;
  AdamSettings settings;
};

/// Adaptive-lasso multipliers w_j = |reference_j|^-gamma over the penalized
/// vector. Entries whose reference value is exactly zero are frozen at zero.
struct PenaltyWeights {
  Eigen::VectorXd weights;
  std::vector<bool> frozen;
  double gamma = 0.0;

  Index size() const { return weights.size(); }
};

double soft_threshold(double value, double threshold);

PenaltyWeights compute_penalty_weights(const Eigen::Ref<const Eigen::VectorXd>& reference,
                                       double gamma);
PenaltyWeights compute_penalty_weights(const NetworkParams& reference, double gamma);

/// lambda * sum_j w_j |theta_j| over non-frozen entries; throws if a frozen
/// entry is not exactly zero.
double penalty_value(const Eigen::Ref<const Eigen::VectorXd>& penalized, double lambda,
                     const PenaltyWeights& weights);

double penalized_objective(const NetworkParams& params, const Dataset& data, double lambda,
                           const PenaltyWeights& weights);

// Flat-vector updates. The first `weights.size()` entries of theta are the
// penalized block; the remainder is updated without penalty.

void adam_update(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::Ref<const Eigen::VectorXd>& gradient,
                 AdamState& state);

/// Adam on gradient + lambda * w * sign(theta) with sign(0) = 0. Frozen
/// entries stay exactly zero.
void subgradient_lasso_update(Eigen::Ref<Eigen::VectorXd> theta,
                              const Eigen::Ref<const Eigen::VectorXd>& gradient, double lambda,
                              const PenaltyWeights& weights, AdamState& state);

/// theta <- prox(theta - alpha * gradient) with per-entry threshold
/// alpha * lambda * w_j on the penalized block.
void proximal_update(Eigen::Ref<Eigen::VectorXd> theta,
                     const Eigen::Ref<const Eigen::VectorXd>& gradient, double lambda, double alpha,
                     const PenaltyWeights& weights);

// Network-level wrappers.

void adam_step(NetworkParams& params, const NetworkParams& gradient, AdamState& state);

void subgradient_lasso_step(NetworkParams& params, const Dataset& data, double lambda,
                            const PenaltyWeights& weights, AdamState& state);

void proximal_step(NetworkParams& params, const Dataset& data, double lambda, double alpha,
                   const PenaltyWeights& weights);

}  // namespace prada
