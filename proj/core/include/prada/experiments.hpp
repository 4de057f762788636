#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prada/analysis.hpp"
#include "prada/datagen.hpp"
#include "prada/extraction.hpp"
#include "prada/lambda_path.hpp"
#include "prada/pipeline.hpp"

namespace prada {

/// Complexity statistic a baseline is matched on.
enum class MatchMode {
  param_count,     // nonzero penalized parameters
  function_count,  // extracted functions (after the linear split)
  node_count,      // live hidden nodes
};

std::string to_string(MatchMode mode);
MatchMode match_mode_from_string(const std::string& text);

/// `data` is only used by function_count, for the linear split.
Index complexity_statistic(const NetworkParams& params, MatchMode mode, const Dataset& data);

struct CalibrationOptions {
  double lambda_lo = 1e-6;
  double lambda_hi = 1.0;
  int steps = 8;
};

struct CalibrationStep {
  double lambda = 0.0;
  Index statistic = 0;
};

struct Calibration {
  double lambda = 0.0;
  Index target = 0;
  Index achieved = 0;
  std::vector<CalibrationStep> trace;  // in evaluation order
  NetworkParams model;                 // baseline model at `lambda`
  double train_mse = 0.0;
  double test_mse = 0.0;

  Index mismatch() const { return achieved - target; }
};

/// Bisection in log-lambda for the baseline (standard lasso for
/// param_count/function_count, node gates for node_count) until its
/// complexity matches the reference. Returns the closest lambda seen.
Calibration calibrate_matched_baseline(const NetworkParams& reference, MatchMode mode,
                                       const Dataset& train, const Dataset& test,
                                       std::span<const SmoothFit> smooth, const TrainConfig& config,
                                       const CalibrationOptions& options = {});

Calibration calibrate_matched_baseline(const NetworkParams& reference, MatchMode mode,
                                       const Dataset& train, const Dataset& test,
                                       const TrainConfig& config,
                                       const CalibrationOptions& options = {});

struct BaselineSpec {
  std::string name;  // "lasso" or "dgr"
  MatchMode mode = MatchMode::param_count;
};

struct ExperimentConfig {
  int n_runs = 50;
  TrainConfig train;
  std::uint64_t master_seed = 0;
  double test_fraction = 0.1;
  // Fixed lambda*; otherwise selected by the path rule on the first replicate.
  std::optional<double> lambda;
  // Pilot grid; empty means auto-calibrated.
  std::vector<double> lambda_grid;
  int grid_points = 20;
  PathOptions path;
  // Restarts per training inside the pilot path; 0 means train.n_restarts.
  int path_restarts = 0;
  std::vector<BaselineSpec> baselines;
  CalibrationOptions calibration;
  ExtractOptions extract;

  void validate() const;
};

/// Full-scale defaults, or the desk-scale variant with `quick`.
ExperimentConfig legendre_config(bool quick);
ExperimentConfig recovery_config(bool quick);

/// One model fitted in one replicate. Errors and importances are in raw
/// (unstandardized) units.
struct RunRecord {
  std::size_t id = 0;
  std::string model;
  std::uint64_t data_seed = 0;
  std::uint64_t split_seed = 0;
  std::uint64_t train_seed = 0;
  bool ok = false;
  std::string error;
  double lambda = 0.0;
  double train_mse = 0.0;
  double test_mse = 0.0;
  Eigen::VectorXd importance;
  FunctionSet functions;
  Index true_positives = 0;
  Index false_positives = 0;
  // Baselines only.
  Index match_target = 0;
  Index match_achieved = 0;
  NetworkParams params;
  ExtractionReport report;
};

struct ModelSummary {
  std::string model;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  double test_mse_mean = 0.0;
  double test_mse_sd = 0.0;
  Eigen::VectorXd importance_mean;
  Eigen::VectorXd importance_sd;
  EnsembleSummary ensemble;
  std::size_t medoid_run = 0;
  // NaN with fewer than two successful runs.
  double medoid_similarity = 0.0;
  // Ground-truth scoring; zero when no truth is known.
  double recall_mean = 0.0;
  double false_positives_mean = 0.0;
  Index true_found = 0;   // true supports with presence > 0.5
  Index false_found = 0;  // other supports with presence > 0.5
};

/// Aggregates the successful records of one model.
ModelSummary summarize_runs(const std::string& model, std::span<const RunRecord> records,
                            std::span<const Support> truth);

struct ModelRuns {
  std::string model;
  std::vector<RunRecord> runs;
  ModelSummary summary;
};

struct ExperimentResult {
  std::string name;
  ExperimentConfig config;
  std::vector<std::string> column_names;
  std::vector<Support> true_supports;
  // Large-sample importance in raw units; empty when unknown.
  Eigen::VectorXd true_importance;
  double lambda_star = 0.0;
  std::optional<LambdaPathTable> pilot_path;
  std::vector<ModelRuns> models;  // PrAda first, then baselines

  const ModelRuns& model(const std::string& name) const;
};

struct LegendreOptions {
  Index n_samples = 1000;
  Index n_covariates = 5;
  double noise_sd = 0.1;
};

/// Replicates with fresh noise; PrAda at lambda* plus matched baselines.
ExperimentResult run_legendre_benchmark(const ExperimentConfig& config,
                                        const LegendreOptions& options = {});

/// Replicates from an additive generator with known supports.
ExperimentResult run_recovery_study(const GeneratorSpec& spec, const ExperimentConfig& config);

/// runs/<id>/{model,report,metrics}.json, baselines under runs/<id>/<name>/,
/// and aggregate/{table1,table2,curves,scores}.csv.
void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir);

/// Generator whose components are the extracted functions of a fitted model,
/// evaluated in standardized units. Covariates follow `correlation` (identity
/// when empty).
GeneratorSpec generator_from_report(const ExtractionReport& report, Index n_samples,
                                    double noise_sd, const Eigen::MatrixXd& correlation = {});

/// Per-run seed streams derived from one master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

}  // namespace prada
