#include "prada/pipeline.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "prada/error.hpp"
#include "prada/parallel.hpp"

namespace prada {

void TrainConfig::validate() const {
  if (hidden_units < 1) throw UsageError("hidden_units must be >= 1");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw UsageError("gamma must be >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be >= 0");
  if (!(stage3_alpha > 0.0)) throw UsageError("stage3_alpha must be > 0");
  if (!(uniform_stage3_alpha > 0.0)) throw UsageError("uniform_stage3_alpha must be > 0");
  if (!(stage3_lambda >= 0.0)) throw UsageError("stage3_lambda must be >= 0");
  if (!(convergence_tol > 0.0)) throw UsageError("convergence_tol must be > 0");
  if (convergence_patience < 1) throw UsageError("convergence_patience must be >= 1");
  if (stage2_block < 1) throw UsageError("stage2_block must be >= 1");
  if (max_epochs_stage1 < 1 || max_epochs_stage2 < 1 || max_epochs_stage3 < 1) {
    throw UsageError("epoch caps must be >= 1");
  }
  if (n_restarts < 1) throw UsageError("n_restarts must be >= 1");
  if (!(adam.step_size > 0.0) || !(adam.epsilon > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw UsageError("invalid Adam settings");
  }
}

bool TrainResult::converged() const {
  for (const auto& s : stages) {
    if (!s.converged) return false;
  }
  return true;
}

bool GatedTrainResult::converged() const {
  for (const auto& s : stages) {
    if (!s.converged) return false;
  }
  return true;
}

ConvergenceMonitor::ConvergenceMonitor(double tol, int patience) : tol_(tol), patience_(patience) {
  if (patience < 1) throw UsageError("patience must be >= 1");
}

bool ConvergenceMonitor::update(double loss) {
  if (!started_) {
    started_ = true;
    best_ = loss;
    return false;
  }
  const double previous = best_;
  if (loss < best_) best_ = loss;
  const double scale = std::abs(previous);
  const double improvement = scale > 0.0 ? (previous - best_) / scale : previous - best_;
  flat_epochs_ = improvement < tol_ ? flat_epochs_ + 1 : 0;
  return flat_epochs_ >= patience_;
}

bool has_converged(std::span<const double> loss_history, double tol, int patience) {
  ConvergenceMonitor monitor(tol, patience);
  bool converged = false;
  for (double loss : loss_history) converged = monitor.update(loss);
  return converged;
}

namespace {

std::uint64_t restart_seed(const TrainConfig& config, std::size_t restart) {
  return config.rng_seed + static_cast<std::uint64_t>(restart);
}

void check_pair(const Dataset& train, const Dataset& test) {
  if (train.rows() < 1 || test.rows() < 1) throw DataError("empty train or test set");
  if (train.cols() != test.cols()) throw DataError("train and test column counts differ");
}

// Penalty used by the proximal stage. With gamma = 0 the penalty has no
// adaptive part to refresh, so the stage-2 strength carries over.
double stage3_strength(const TrainConfig& config) {
  if (config.lambda == 0.0) return 0.0;
  return config.gamma == 0.0 ? config.lambda : config.stage3_lambda;
}

double stage3_step(const TrainConfig& config) {
  return config.gamma == 0.0 ? config.uniform_stage3_alpha : config.stage3_alpha;
}

// Stage 2 on a flat vector. `eval` fills `gradient` for the current `theta`
// and returns the unpenalized loss.
template <class Eval>
void subgradient_stage(Eigen::Ref<Eigen::VectorXd> theta, Eigen::Ref<Eigen::VectorXd> gradient,
                       Eval&& eval, double lambda, const PenaltyWeights& weights,
                       const TrainConfig& config, StageReport& report) {
  AdamState state(theta.size(), config.adam);
  ConvergenceMonitor monitor(config.convergence_tol, config.convergence_patience);
  report = {};
  double block_sum = 0.0;
  for (int epoch = 0; epoch < config.max_epochs_stage2; ++epoch) {
    const double loss = eval();
    report.epochs = epoch;
    report.objective = loss + penalty_value(theta.head(weights.size()), lambda, weights);
    block_sum += report.objective;
    if ((epoch + 1) % config.stage2_block == 0) {
      const bool done = monitor.update(block_sum / config.stage2_block);
      block_sum = 0.0;
      if (done) {
        report.converged = true;
        return;
      }
    }
    subgradient_lasso_update(theta, gradient, lambda, weights, state);
  }
  report.epochs = config.max_epochs_stage2;
}

template <class Eval>
void proximal_stage(Eigen::Ref<Eigen::VectorXd> theta, Eigen::Ref<Eigen::VectorXd> gradient,
                    Eval&& eval, double lambda, double alpha, const PenaltyWeights& weights,
                    const TrainConfig& config, StageReport& report) {
  ConvergenceMonitor monitor(config.convergence_tol, config.convergence_patience);
  report = {};
  for (int epoch = 0; epoch < config.max_epochs_stage3; ++epoch) {
    const double loss = eval();
    report.epochs = epoch;
    report.objective = loss + penalty_value(theta.head(weights.size()), lambda, weights);
    if (monitor.update(report.objective)) {
      report.converged = true;
      return;
    }
    proximal_update(theta, gradient, lambda, alpha, weights);
  }
  report.epochs = config.max_epochs_stage3;
}

}  // namespace

SmoothFit train_smooth(const Dataset& train, const TrainConfig& config, std::size_t restart) {
  config.validate();
  std::mt19937_64 rng(restart_seed(config, restart));
  SmoothFit fit{initialize_network(config.hidden_units, train.cols(), rng), {}};
  AdamState state(fit.params.size(), config.adam);
  ConvergenceMonitor monitor(config.convergence_tol, config.convergence_patience);
  LossEvaluator evaluator(train);
  NetworkParams gradient(fit.params.hidden_units(), fit.params.inputs());
  for (int epoch = 0; epoch < config.max_epochs_stage1; ++epoch) {
    const double loss = evaluator.evaluate(fit.params, gradient);
    fit.report.epochs = epoch;
    fit.report.objective = loss;
    if (monitor.update(loss)) {
      fit.report.converged = true;
      break;
    }
    adam_step(fit.params, gradient, state);
  }
  if (!fit.report.converged) fit.report.epochs = config.max_epochs_stage1;
  return fit;
}

std::vector<SmoothFit> train_smooth_restarts(const Dataset& train, const TrainConfig& config) {
  std::vector<SmoothFit> fits(static_cast<std::size_t>(config.n_restarts));
  parallel_for(fits.size(), [&](std::size_t r) { fits[r] = train_smooth(train, config, r); },
               config.workers);
  return fits;
}

NetworkParams train_penalized(const Dataset& train, const NetworkParams& smooth,
                              const TrainConfig& config, std::array<StageReport, 3>& stages) {
  NetworkParams params = smooth;
  LossEvaluator evaluator(train);
  NetworkParams gradient(params.hidden_units(), params.inputs());
  auto eval = [&] { return evaluator.evaluate(params, gradient); };

  // Stage 2: Adam with the adaptive-lasso subgradient.
  const PenaltyWeights stage2_weights = compute_penalty_weights(params, config.gamma);
  subgradient_stage(params.values(), gradient.values(), eval, config.lambda, stage2_weights, config,
                    stages[1]);

  // Stage 3: refresh the weights from the stage-2 values, proximal descent.
  const PenaltyWeights stage3_weights = compute_penalty_weights(params, config.gamma);
  proximal_stage(params.values(), gradient.values(), eval, stage3_strength(config),
                 stage3_step(config), stage3_weights, config, stages[2]);
  return params;
}

TrainResult finish_prada(const Dataset& train, const Dataset& test,
                         std::span<const SmoothFit> smooth, const TrainConfig& config) {
  config.validate();
  check_pair(train, test);
  if (smooth.empty()) throw UsageError("no stage-1 fits supplied");

  struct Candidate {
    NetworkParams params;
    std::array<StageReport, 3> stages{};
    double test_mse = 0.0;
  };
  std::vector<Candidate> candidates(smooth.size());
  parallel_for(
      smooth.size(),
      [&](std::size_t r) {
        Candidate& c = candidates[r];
        c.stages[0] = smooth[r].report;
        c.params = train_penalized(train, smooth[r].params, config, c.stages);
        c.test_mse = mse_loss(c.params, test);
      },
      config.workers);

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    result.restart_test_mse.push_back(candidates[r].test_mse);
    if (candidates[r].test_mse < best) {
      best = candidates[r].test_mse;
      result.selected_restart = r;
    }
  }
  Candidate& chosen = candidates[result.selected_restart];
  result.params = std::move(chosen.params);
  result.stages = chosen.stages;
  result.test_mse = chosen.test_mse;
  result.train_mse = mse_loss(result.params, train);
  return result;
}

TrainResult train_prada(const Dataset& train, const Dataset& test, const TrainConfig& config) {
  config.validate();
  check_pair(train, test);
  const std::vector<SmoothFit> smooth = train_smooth_restarts(train, config);
  return finish_prada(train, test, smooth, config);
}

TrainResult train_standard_lasso(const Dataset& train, const Dataset& test, TrainConfig config) {
  config.gamma = 0.0;
  return train_prada(train, test, config);
}

// ---------------------------------------------------------------------------
// DGR-style node gates

NetworkParams GatedNetworkParams::collapsed() const {
  NetworkParams out = network;
  out.output_weights() = network.output_weights().cwiseProduct(gates);
  return out;
}

Index GatedNetworkParams::live_nodes() const { return collapsed().live_nodes(); }

namespace {

// Flat layout for gate training: [gates | trainable network entries].
// Frozen mode trains only the output bias besides the gates.
struct GateProblem {
  const Dataset& train;
  GatedNetworkParams params;
  bool joint;

  Index hidden() const { return params.network.hidden_units(); }

  Eigen::VectorXd pack() const {
    const Index h = hidden();
    Eigen::VectorXd theta(joint ? h + params.network.size() : h + 1);
    theta.head(h) = params.gates;
    if (joint) {
      theta.tail(params.network.size()) = params.network.values();
    } else {
      theta[h] = params.network.output_bias();
    }
    return theta;
  }

  void unpack(const Eigen::VectorXd& theta) {
    const Index h = hidden();
    params.gates = theta.head(h);
    if (joint) {
      params.network.values() = theta.tail(params.network.size());
    } else {
      params.network.output_bias() = theta[h];
    }
  }

  // MSE and its gradient with respect to the packed vector.
  double loss_and_gradient(Eigen::VectorXd& gradient) const {
    const NetworkParams effective = params.collapsed();
    const LossGradient lg = prada::loss_and_gradient(effective, train);
    const Index h = hidden();
    gradient.resize(joint ? h + params.network.size() : h + 1);
    const auto grad_out = lg.gradient.output_weights();
    gradient.head(h) = grad_out.cwiseProduct(params.network.output_weights());
    if (joint) {
      NetworkParams net_grad = lg.gradient;
      net_grad.output_weights() = grad_out.cwiseProduct(params.gates);
      gradient.tail(params.network.size()) = net_grad.values();
    } else {
      gradient[h] = lg.gradient.output_bias();
    }
    return lg.loss;
  }
};

GatedNetworkParams train_gates(const Dataset& train, const NetworkParams& smooth,
                               const TrainConfig& config, std::array<StageReport, 3>& stages) {
  GateProblem problem{train, {smooth, Eigen::VectorXd::Ones(smooth.hidden_units())},
                      config.dgr_joint};
  Eigen::VectorXd theta = problem.pack();
  Eigen::VectorXd gradient = Eigen::VectorXd::Zero(theta.size());
  auto eval = [&] {
    problem.unpack(theta);
    return problem.loss_and_gradient(gradient);
  };

  // Plain lasso on the gates in both stages, at the stage-2 strength.
  PenaltyWeights weights = compute_penalty_weights(theta.head(problem.hidden()), 0.0);
  subgradient_stage(theta, gradient, eval, config.lambda, weights, config, stages[1]);
  weights = compute_penalty_weights(theta.head(problem.hidden()), 0.0);
  proximal_stage(theta, gradient, eval, config.lambda, config.uniform_stage3_alpha, weights, config,
                 stages[2]);
  problem.unpack(theta);
  return problem.params;
}

}  // namespace

GatedTrainResult finish_dgr(const Dataset& train, const Dataset& test,
                            std::span<const SmoothFit> smooth, const TrainConfig& config) {
  config.validate();
  check_pair(train, test);
  if (smooth.empty()) throw UsageError("no stage-1 fits supplied");

  struct Candidate {
    GatedNetworkParams params;
    std::array<StageReport, 3> stages{};
    double test_mse = 0.0;
  };
  std::vector<Candidate> candidates(smooth.size());
  parallel_for(
      smooth.size(),
      [&](std::size_t r) {
        Candidate& c = candidates[r];
        c.stages[0] = smooth[r].report;
        c.params = train_gates(train, smooth[r].params, config, c.stages);
        c.test_mse = mse_loss(c.params.collapsed(), test);
      },
      config.workers);

  GatedTrainResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    result.restart_test_mse.push_back(candidates[r].test_mse);
    if (candidates[r].test_mse < best) {
      best = candidates[r].test_mse;
      result.selected_restart = r;
    }
  }
  Candidate& chosen = candidates[result.selected_restart];
  result.params = std::move(chosen.params);
  result.stages = chosen.stages;
  result.test_mse = chosen.test_mse;
  result.train_mse = mse_loss(result.params.collapsed(), train);
  return result;
}

GatedTrainResult train_dgr(const Dataset& train, const Dataset& test, const TrainConfig& config) {
  config.validate();
  check_pair(train, test);
  const std::vector<SmoothFit> smooth = train_smooth_restarts(train, config);
  return finish_dgr(train, test, smooth, config);
}

}  // namespace prada
