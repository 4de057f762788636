#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "prada/dataset.hpp"
#include "prada/network.hpp"
#include "prada/optim.hpp"

namespace prada {

/// Every tunable of the three-stage training algorithm.
struct TrainConfig {
  Index hidden_units = 50;
  double gamma = 2.0;
  // Stage-2 penalty strength; the single user-facing penalty knob. Zero turns
  // the penalty off in stages 2 and 3.
  double lambda = 1e-3;
  double stage3_alpha = 1e-5;
  double stage3_lambda = 1e-5;
  // Proximal step when the stage-3 penalty is uniform (gamma = 0 and the node
  // gates). With unit weights a 1e-5 step never reaches exact zeros.
  double uniform_stage3_alpha = 1e-3;
  double convergence_tol = 1e-5;
  int convergence_patience = 10;
  // Stage 2 feeds the convergence rule with the objective averaged over
  // blocks of this many epochs; near-zero weights oscillate under Adam and
  // make single-epoch values too noisy.
  int stage2_block = 100;
  int max_epochs_stage1 = 20000;
  int max_epochs_stage2 = 20000;
  int max_epochs_stage3 = 5000;
  int n_restarts = 5;
  std::uint64_t rng_seed = 0;
  AdamSettings adam;
  // DGR baseline: train gates jointly with the network weights instead of
  // against a frozen network.
  bool dgr_joint = false;
  // 0 means default_worker_count().
  std::size_t workers = 0;

  void validate() const;
};

struct StageReport {
  int epochs = 0;
  bool converged = false;
  double objective = 0.0;
};

struct TrainResult {
  NetworkParams params;
  double train_mse = 0.0;
  double test_mse = 0.0;
  std::size_t selected_restart = 0;
  std::vector<double> restart_test_mse;
  std::array<StageReport, 3> stages{};

  // False when any stage of the selected run hit its epoch cap.
  bool converged() const;
};

/// Stage-1 result for one restart; reusable across penalty strengths.
struct SmoothFit {
  NetworkParams params;
  StageReport report;
};

/// Relative improvement of the running best loss stayed below `tol` for the
/// last `patience` epochs.
bool has_converged(std::span<const double> loss_history, double tol, int patience);

/// Incremental form of has_converged, used inside the training loops.
class ConvergenceMonitor {
 public:
  ConvergenceMonitor(double tol, int patience);

  // Records one epoch; returns true once converged.
  bool update(double loss);

 private:
  double tol_;
  int patience_;
  int flat_epochs_ = 0;
  bool started_ = false;
  double best_ = 0.0;
};

SmoothFit train_smooth(const Dataset& train, const TrainConfig& config, std::size_t restart);
std::vector<SmoothFit> train_smooth_restarts(const Dataset& train, const TrainConfig& config);

/// Stages 2 and 3 applied to one stage-1 network.
NetworkParams train_penalized(const Dataset& train, const NetworkParams& smooth,
                              const TrainConfig& config, std::array<StageReport, 3>& stages);

/// Runs stages 2-3 from every cached stage-1 restart and keeps the one with
/// the lowest test MSE.
TrainResult finish_prada(const Dataset& train, const Dataset& test,
                         std::span<const SmoothFit> smooth, const TrainConfig& config);

/// Three-stage adaptive-lasso training with restarts.
TrainResult train_prada(const Dataset& train, const Dataset& test, const TrainConfig& config);

/// Baseline: the same algorithm with uniform penalty weights (gamma = 0).
TrainResult train_standard_lasso(const Dataset& train, const Dataset& test, TrainConfig config);

/// Network with one lasso-penalized multiplier per hidden node output.
struct GatedNetworkParams {
  NetworkParams network;
  Eigen::VectorXd gates;

  // Plain network with the gates multiplied into the output weights.
  NetworkParams collapsed() const;
  Index live_nodes() const;
};

struct GatedTrainResult {
  GatedNetworkParams params;
  double train_mse = 0.0;
  double test_mse = 0.0;
  std::size_t selected_restart = 0;
  std::vector<double> restart_test_mse;
  std::array<StageReport, 3> stages{};

  bool converged() const;
};

GatedTrainResult finish_dgr(const Dataset& train, const Dataset& test,
                            std::span<const SmoothFit> smooth, const TrainConfig& config);

/// Node-pruning baseline: smooth training, then lasso on per-node gates.
GatedTrainResult train_dgr(const Dataset& train, const Dataset& test, const TrainConfig& config);

}  // namespace prada
