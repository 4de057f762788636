#include "prada/network.hpp"

#include <cmath>
#include <string>

#include "prada/dataset.hpp"
#include "prada/error.hpp"

namespace prada {

NetworkParams::NetworkParams(Index hidden_units, Index inputs)
    : hidden_(hidden_units), inputs_(inputs) {
  if (hidden_units < 1 || inputs < 1) {
    throw UsageError("network needs at least one hidden unit and one input");
  }
  values_ = Eigen::VectorXd::Zero(hidden_ * inputs_ + 2 * hidden_ + 1);
}

bool NetworkParams::node_dead(Index h) const {
  if (output_weights()[h] == 0.0) return true;
  return (input_weights().row(h).array() == 0.0).all();
}

Index NetworkParams::live_nodes() const {
  Index live = 0;
  for (Index h = 0; h < hidden_; ++h) live += node_dead(h) ? 0 : 1;
  return live;
}

Index NetworkParams::nonzero_penalized() const {
  return (penalized().array() != 0.0).count();
}

bool NetworkParams::all_finite() const { return values_.allFinite(); }

NetworkParams NetworkParams::without_node(Index h) const {
  if (h < 0 || h >= hidden_) throw UsageError("node index out of range");
  if (hidden_ == 1) throw UsageError("cannot remove the only hidden node");
  NetworkParams out(hidden_ - 1, inputs_);
  Index dst = 0;
  for (Index src = 0; src < hidden_; ++src) {
    if (src == h) continue;
    out.input_weights().row(dst) = input_weights().row(src);
    out.output_weights()[dst] = output_weights()[src];
    out.input_biases()[dst] = input_biases()[src];
    ++dst;
  }
  out.output_bias() = output_bias();
  const double v = output_weights()[h];
  if (v != 0.0) out.output_bias() += v * activation(input_biases()[h]);
  return out;
}

bool operator==(const NetworkParams& a, const NetworkParams& b) {
  return a.hidden_ == b.hidden_ && a.inputs_ == b.inputs_ && a.values_ == b.values_;
}

NetworkParams initialize_network(Index hidden_units, Index inputs, std::mt19937_64& rng) {
  NetworkParams params(hidden_units, inputs);
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(inputs));
  const double out_scale = 1.0 / std::sqrt(static_cast<double>(hidden_units));
  std::uniform_real_distribution<double> in_dist(-in_scale, in_scale);
  std::uniform_real_distribution<double> out_dist(-out_scale, out_scale);
  auto W = params.input_weights();
  for (Index d = 0; d < inputs; ++d) {
    for (Index h = 0; h < hidden_units; ++h) W(h, d) = in_dist(rng);
  }
  for (Index h = 0; h < hidden_units; ++h) params.input_biases()[h] = in_dist(rng);
  for (Index h = 0; h < hidden_units; ++h) params.output_weights()[h] = out_dist(rng);
  params.output_bias() = 0.0;
  return params;
}

namespace {

constexpr double kTaylorCutoff = 0.01;

}  // namespace

double activation(double z) {
  const double a = std::abs(z);
  if (a < kTaylorCutoff) {
    const double z2 = z * z;
    return z * (1.0 + z2 * (-1.0 / 3.0 + z2 * (2.0 / 15.0)));
  }
  const double t = std::exp(-2.0 * a);
  return std::copysign((1.0 - t) / (1.0 + t), z);
}

void apply_activation(Eigen::Ref<Eigen::MatrixXd> Z) {
  // Column at a time keeps the temporaries small.
  Eigen::ArrayXd t(Z.rows());
  Eigen::ArrayXd z2(Z.rows());
  for (Index j = 0; j < Z.cols(); ++j) {
    auto z = Z.col(j).array();
    t = (-2.0 * z.abs()).exp();
    z2 = z.square();
    z = (z.abs() < kTaylorCutoff)
            .select(z * (1.0 + z2 * (-1.0 / 3.0 + z2 * (2.0 / 15.0))),
                    z.sign() * (1.0 - t) / (1.0 + t));
  }
}

double forward(const NetworkParams& params, std::span<const double> x) {
  if (static_cast<Index>(x.size()) != params.inputs()) {
    throw UsageError("input has " + std::to_string(x.size()) + " values, network expects " +
                     std::to_string(params.inputs()));
  }
  const auto W = params.input_weights();
  const auto b = params.input_biases();
  const auto v = params.output_weights();
  double sum = 0.0;
  for (Index h = 0; h < params.hidden_units(); ++h) {
    if (v[h] == 0.0) continue;
    double z = b[h];
    for (Index d = 0; d < params.inputs(); ++d) z += W(h, d) * x[d];
    sum += v[h] * activation(z);
  }
  return params.output_bias() + sum;
}

Eigen::MatrixXd hidden_activations(const NetworkParams& params, const Eigen::MatrixXd& X) {
  if (X.cols() != params.inputs()) {
    throw UsageError("data has " + std::to_string(X.cols()) + " columns, network expects " +
                     std::to_string(params.inputs()));
  }
  Eigen::MatrixXd A = X * params.input_weights().transpose();
  A.rowwise() += params.input_biases().transpose();
  apply_activation(A);
  return A;
}

Eigen::VectorXd predict(const NetworkParams& params, const Eigen::MatrixXd& X) {
  Eigen::VectorXd out = hidden_activations(params, X) * params.output_weights();
  out.array() += params.output_bias();
  return out;
}

double mse_loss(const NetworkParams& params, const Dataset& data) {
  if (data.rows() == 0) throw DataError("mse_loss on an empty dataset");
  return (predict(params, data.X) - data.y).squaredNorm() / static_cast<double>(data.rows());
}

double LossEvaluator::evaluate(const NetworkParams& params, NetworkParams& gradient) {
  const Index n = data_.rows();
  if (n == 0) throw DataError("gradient of an empty dataset");
  if (data_.cols() != params.inputs()) {
    throw UsageError("data has " + std::to_string(data_.cols()) + " columns, network expects " +
                     std::to_string(params.inputs()));
  }
  if (gradient.hidden_units() != params.hidden_units() || gradient.inputs() != params.inputs()) {
    gradient = NetworkParams(params.hidden_units(), params.inputs());
  }
  auto& A = activations_;
  A.noalias() = data_.X * params.input_weights().transpose();
  A.rowwise() += params.input_biases().transpose();
  apply_activation(A);

  residual_.noalias() = A * params.output_weights();
  residual_.array() += params.output_bias() - data_.y.array();
  const double loss = residual_.squaredNorm() / static_cast<double>(n);
  residual_ *= 2.0 / static_cast<double>(n);

  // delta(i, h) = dL/dz(i, h)
  delta_ = (1.0 - A.array().square()).matrix();
  delta_.array().rowwise() *= params.output_weights().transpose().array();
  delta_.array().colwise() *= residual_.array();

  gradient.output_bias() = residual_.sum();
  gradient.output_weights().noalias() = A.transpose() * residual_;
  gradient.input_biases() = delta_.colwise().sum().transpose();
  gradient.input_weights().noalias() = delta_.transpose() * data_.X;

  if (!std::isfinite(loss) || !gradient.all_finite()) {
    throw NumericError("non-finite loss or gradient");
  }
  return loss;
}

LossGradient loss_and_gradient(const NetworkParams& params, const Dataset& data) {
  LossEvaluator evaluator(data);
  LossGradient out;
  out.gradient = NetworkParams(params.hidden_units(), params.inputs());
  out.loss = evaluator.evaluate(params, out.gradient);
  return out;
}

NetworkParams loss_gradient(const NetworkParams& params, const Dataset& data) {
  return loss_and_gradient(params, data).gradient;
}

Eigen::MatrixXd input_gradients(const NetworkParams& params, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd slope = (1.0 - hidden_activations(params, X).array().square()).matrix();
  slope.array().rowwise() *= params.output_weights().transpose().array();
  return slope * params.input_weights();
}

}  // namespace prada
