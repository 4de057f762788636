#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace prada {

using Eigen::Index;

/// Per-column location and scale of the raw data before z-scoring.
struct StandardizationStats {
  Eigen::VectorXd x_mean;
  Eigen::VectorXd x_sd;
  double y_mean = 0.0;
  double y_sd = 1.0;

  bool empty() const { return x_mean.size() == 0; }
  static StandardizationStats identity(Index columns);
};

/// Standardized covariates and response. Row subsets share the parent's
/// column names and statistics.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> column_names;
  std::string response_name = "y";
  StandardizationStats stats;

  Index rows() const { return X.rows(); }
  Index cols() const { return X.cols(); }

  Dataset subset(std::span<const Index> row_indices) const;

  // Raw-scale response for a standardized prediction.
  double response_to_raw(double standardized) const;
  double response_from_raw(double raw) const;
};

struct Split {
  std::vector<Index> train;
  std::vector<Index> test;
};

/// Uniform random partition without replacement; `test_fraction` of the rows
/// (rounded, at least one) go to the test side.
Split random_split(Index n_rows, double test_fraction, std::uint64_t seed);

std::vector<std::string> default_column_names(Index columns);

}  // namespace prada
