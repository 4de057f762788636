#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace prada {

using Eigen::Index;

struct Dataset;

/// Weights and biases of a one-hidden-layer tanh regression network.
///
/// All parameters live in one contiguous vector laid out as
/// `[input weights (H x D, column-major) | output weights | input biases | output bias]`.
/// The leading `penalized_size()` entries form the penalized vector; biases
/// are never penalized.
class NetworkParams {
 public:
  NetworkParams() = default;
  NetworkParams(Index hidden_units, Index inputs);

  Index hidden_units() const noexcept { return hidden_; }
  Index inputs() const noexcept { return inputs_; }
  Index size() const noexcept { return values_.size(); }
  Index penalized_size() const noexcept { return hidden_ * inputs_ + hidden_; }

  Eigen::Map<Eigen::MatrixXd> input_weights() {
    return {values_.data(), hidden_, inputs_};
  }
  Eigen::Map<const Eigen::MatrixXd> input_weights() const {
    return {values_.data(), hidden_, inputs_};
  }
  Eigen::VectorBlock<Eigen::VectorXd> output_weights() {
    return values_.segment(hidden_ * inputs_, hidden_);
  }
  Eigen::VectorBlock<const Eigen::VectorXd> output_weights() const {
    return values_.segment(hidden_ * inputs_, hidden_);
  }
  Eigen::VectorBlock<Eigen::VectorXd> input_biases() {
    return values_.segment(hidden_ * inputs_ + hidden_, hidden_);
  }
  Eigen::VectorBlock<const Eigen::VectorXd> input_biases() const {
    return values_.segment(hidden_ * inputs_ + hidden_, hidden_);
  }
  double& output_bias() { return values_[values_.size() - 1]; }
  double output_bias() const { return values_[values_.size() - 1]; }

  Eigen::VectorXd& values() noexcept { return values_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  Eigen::VectorBlock<Eigen::VectorXd> penalized() {
    return values_.head(penalized_size());
  }
  Eigen::VectorBlock<const Eigen::VectorXd> penalized() const {
    return values_.head(penalized_size());
  }

  // A node is dead when its output weight is zero or it has no input links.
  bool node_dead(Index h) const;
  Index live_nodes() const;
  Index nonzero_penalized() const;
  bool all_finite() const;

  // Drops node h. A node without input links still adds the constant
  // output_weight * tanh(bias); that constant is folded into the output bias.
  NetworkParams without_node(Index h) const;

  friend bool operator==(const NetworkParams& a, const NetworkParams& b);

 private:
  Index hidden_ = 0;
  Index inputs_ = 0;
  Eigen::VectorXd values_;
};

/// Fan-in scaled uniform initialization: input weights and biases in
/// [-1/sqrt(D), 1/sqrt(D)], output weights in [-1/sqrt(H), 1/sqrt(H)],
/// output bias 0.
NetworkParams initialize_network(Index hidden_units, Index inputs, std::mt19937_64& rng);

double forward(const NetworkParams& params, std::span<const double> x);

/// Activation used throughout: tanh, evaluated as sign(z)(1 - e^{-2|z|})/(1 + e^{-2|z|})
/// with a Taylor branch near zero. Odd to the last bit.
double activation(double z);
void apply_activation(Eigen::Ref<Eigen::MatrixXd> Z);

/// Batch prediction for every row of `X`.
Eigen::VectorXd predict(const NetworkParams& params, const Eigen::MatrixXd& X);

/// Hidden activations tanh(b + W x) for every row of `X` (N x H).
Eigen::MatrixXd hidden_activations(const NetworkParams& params, const Eigen::MatrixXd& X);

double mse_loss(const NetworkParams& params, const Dataset& data);

struct LossGradient {
  double loss = 0.0;
  NetworkParams gradient;
};

/// Mean squared error together with its exact gradient (backpropagation).
LossGradient loss_and_gradient(const NetworkParams& params, const Dataset& data);

NetworkParams loss_gradient(const NetworkParams& params, const Dataset& data);

/// Reusable buffers for repeated loss/gradient evaluation on one dataset.
class LossEvaluator {
 public:
  explicit LossEvaluator(const Dataset& data) : data_(data) {}

  // Returns the MSE and writes its gradient into `gradient`, which must have
  // the shape of `params`.
  double evaluate(const NetworkParams& params, NetworkParams& gradient);

 private:
  const Dataset& data_;
  Eigen::MatrixXd activations_;
  Eigen::MatrixXd delta_;
  Eigen::VectorXd residual_;
};

/// d prediction / d x for every row of `X` (N x D).
Eigen::MatrixXd input_gradients(const NetworkParams& params, const Eigen::MatrixXd& X);

}  // namespace prada
