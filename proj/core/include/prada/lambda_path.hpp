#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "prada/dataset.hpp"
#include "prada/pipeline.hpp"

namespace prada {

/// Test error along a grid of penalty strengths, over repeated random splits.
struct LambdaPathTable {
  std::vector<double> lambdas;  // strictly increasing
  std::vector<double> mean_test_error;
  std::vector<double> sd_test_error;
  int n_splits = 20;
  // Splits are uniform random without replacement.
  std::string split_method = "random_without_replacement";

  // Throws UsageError when the table breaks its invariants.
  void validate() const;
};

struct PathOptions {
  int n_splits = 20;
  double test_fraction = 0.1;
  std::uint64_t split_seed = 0;
};

/// For every split, stage 1 runs once and its restarts are reused across the
/// whole grid. Split s uses seed split_seed + s.
LambdaPathTable run_lambda_path(const Dataset& data, std::span<const double> lambdas,
                                const TrainConfig& config, const PathOptions& options = {});

enum class SelectionRule {
  // Largest lambda whose own mean - 2 sd reaches the minimum mean.
  two_sd,
  // Largest lambda whose mean is within one standard error of the minimum.
  one_standard_error,
};

double select_lambda(const LambdaPathTable& table, SelectionRule rule = SelectionRule::two_sd);

/// `count` points from lo to hi, evenly spaced in log scale.
std::vector<double> log_spaced(double lo, double hi, int count);

struct GridBounds {
  double lo = 0.0;
  double hi = 0.0;
};

/// Bisection in log-lambda on one probe split and one stage-1 fit: `hi` is
/// the smallest lambda that prunes every node, `lo` the largest lambda that
/// zeroes under `zero_fraction` more of the penalized parameters than the
/// bracket floor (1e-7) does.
GridBounds calibrate_grid_bounds(const Dataset& data, const TrainConfig& config,
                                 const PathOptions& options = {}, double zero_fraction = 0.01,
                                 int steps = 8);

std::vector<double> auto_lambda_grid(const Dataset& data, const TrainConfig& config,
                                     int count = 20, const PathOptions& options = {});

/// CSV with columns lambda, mean_test_error, sd_test_error, n_splits.
void write_path_csv(const LambdaPathTable& table, std::ostream& out);

}  // namespace prada
