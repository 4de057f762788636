#include "prada/optim.hpp"

#include <cmath>

#include "prada/dataset.hpp"
#include "prada/error.hpp"

namespace prada {

namespace {

double sign_of(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

void check_shapes(Index theta, Index gradient, const PenaltyWeights* weights) {
  if (theta != gradient) throw UsageError("parameter and gradient sizes differ");
  if (weights != nullptr && weights->size() > theta) {
    throw UsageError("penalty weights longer than parameter vector");
  }
}

}  // namespace

AdamState::AdamState(Index size, AdamSettings adam)
    : first_moment(Eigen::VectorXd::Zero(size)),
      second_moment(Eigen::VectorXd::Zero(size)),
      settings(adam) {}

double soft_threshold(double value, double threshold) {
  const double shrunk = std::abs(value) - threshold;
  if (shrunk <= 0.0) return 0.0;
  return std::copysign(shrunk, value);
}

PenaltyWeights compute_penalty_weights(const Eigen::Ref<const Eigen::VectorXd>& reference,
                                       double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw UsageError("gamma must be >= 0");
  PenaltyWeights out;
  out.gamma = gamma;
  out.weights.resize(reference.size());
  out.frozen.assign(static_cast<std::size_t>(reference.size()), false);
  for (Index j = 0; j < reference.size(); ++j) {
    const double magnitude = std::abs(reference[j]);
    out.frozen[static_cast<std::size_t>(j)] = magnitude == 0.0;
    out.weights[j] = gamma == 0.0 ? 1.0 : std::pow(magnitude, -gamma);
  }
  return out;
}

PenaltyWeights compute_penalty_weights(const NetworkParams& reference, double gamma) {
  return compute_penalty_weights(reference.penalized(), gamma);
}

double penalty_value(const Eigen::Ref<const Eigen::VectorXd>& penalized, double lambda,
                     const PenaltyWeights& weights) {
  if (penalized.size() != weights.size()) throw UsageError("penalty weights size mismatch");
  double total = 0.0;
  for (Index j = 0; j < penalized.size(); ++j) {
    if (weights.frozen[static_cast<std::size_t>(j)]) {
      if (penalized[j] != 0.0) throw NumericError("frozen parameter moved away from zero");
      continue;
    }
    total += weights.weights[j] * std::abs(penalized[j]);
  }
  return lambda * total;
}

double penalized_objective(const NetworkParams& params, const Dataset& data, double lambda,
                           const PenaltyWeights& weights) {
  if (lambda < 0.0) throw UsageError("lambda must be >= 0");
  const double penalty = penalty_value(params.penalized(), lambda, weights);
  return mse_loss(params, data) + penalty;
}

void adam_update(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::Ref<const Eigen::VectorXd>& gradient,
                 AdamState& state) {
  check_shapes(theta.size(), gradient.size(), nullptr);
  if (!gradient.allFinite()) throw NumericError("non-finite gradient in Adam step");
  if (state.first_moment.size() != theta.size()) {
    throw UsageError("Adam state does not match parameter size");
  }
  const AdamSettings& s = state.settings;
  state.step_count += 1;
  state.first_moment = s.beta1 * state.first_moment + (1.0 - s.beta1) * gradient;
  state.second_moment =
      s.beta2 * state.second_moment + (1.0 - s.beta2) * gradient.cwiseAbs2();
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(s.beta1, t);
  const double bias2 = 1.0 - std::pow(s.beta2, t);
  theta.array() -= s.step_size * (state.first_moment.array() / bias1) /
                   ((state.second_moment.array() / bias2).sqrt() + s.epsilon);
}

void subgradient_lasso_update(Eigen::Ref<Eigen::VectorXd> theta,
                              const Eigen::Ref<const Eigen::VectorXd>& gradient, double lambda,
                              const PenaltyWeights& weights, AdamState& state) {
  check_shapes(theta.size(), gradient.size(), &weights);
  Eigen::VectorXd total = gradient;
  for (Index j = 0; j < weights.size(); ++j) {
    if (weights.frozen[static_cast<std::size_t>(j)]) {
      total[j] = 0.0;
      continue;
    }
    total[j] += lambda * weights.weights[j] * sign_of(theta[j]);
  }
  adam_update(theta, total, state);
  for (Index j = 0; j < weights.size(); ++j) {
    if (weights.frozen[static_cast<std::size_t>(j)]) {
      theta[j] = 0.0;
      state.first_moment[j] = 0.0;
      state.second_moment[j] = 0.0;
    }
  }
}

void proximal_update(Eigen::Ref<Eigen::VectorXd> theta,
                     const Eigen::Ref<const Eigen::VectorXd>& gradient, double lambda, double alpha,
                     const PenaltyWeights& weights) {
  check_shapes(theta.size(), gradient.size(), &weights);
  if (!(alpha > 0.0)) throw UsageError("proximal step size must be > 0");
  if (!(lambda >= 0.0)) throw UsageError("lambda must be >= 0");
  for (Index j = 0; j < theta.size(); ++j) {
    const double eta = theta[j] - alpha * gradient[j];
    if (!std::isfinite(eta)) throw NumericError("non-finite value in proximal step");
    if (j >= weights.size()) {
      theta[j] = eta;
    } else if (weights.frozen[static_cast<std::size_t>(j)]) {
      theta[j] = 0.0;
    } else {
      theta[j] = soft_threshold(eta, alpha * lambda * weights.weights[j]);
    }
  }
}

void adam_step(NetworkParams& params, const NetworkParams& gradient, AdamState& state) {
  adam_update(params.values(), gradient.values(), state);
}

void subgradient_lasso_step(NetworkParams& params, const Dataset& data, double lambda,
                            const PenaltyWeights& weights, AdamState& state) {
  const NetworkParams grad = loss_gradient(params, data);
  subgradient_lasso_update(params.values(), grad.values(), lambda, weights, state);
}

void proximal_step(NetworkParams& params, const Dataset& data, double lambda, double alpha,
                   const PenaltyWeights& weights) {
  const NetworkParams grad = loss_gradient(params, data);
  proximal_update(params.values(), grad.values(), lambda, alpha, weights);
}

}  // namespace prada
