#include "prada/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "prada/error.hpp"

namespace prada {

StandardizationStats StandardizationStats::identity(Index columns) {
  StandardizationStats stats;
  stats.x_mean = Eigen::VectorXd::Zero(columns);
  stats.x_sd = Eigen::VectorXd::Ones(columns);
  return stats;
}

Dataset Dataset::subset(std::span<const Index> row_indices) const {
  Dataset out;
  out.X.resize(static_cast<Index>(row_indices.size()), X.cols());
  out.y.resize(static_cast<Index>(row_indices.size()));
  for (std::size_t i = 0; i < row_indices.size(); ++i) {
    const Index r = row_indices[i];
    if (r < 0 || r >= rows()) throw UsageError("row index out of range");
    out.X.row(static_cast<Index>(i)) = X.row(r);
    out.y[static_cast<Index>(i)] = y[r];
  }
  out.column_names = column_names;
  out.response_name = response_name;
  out.stats = stats;
  return out;
}

double Dataset::response_to_raw(double standardized) const {
  return stats.y_mean + stats.y_sd * standardized;
}

double Dataset::response_from_raw(double raw) const {
  return (raw - stats.y_mean) / stats.y_sd;
}

Split random_split(Index n_rows, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw UsageError("test fraction must lie in (0, 1)");
  }
  auto n_test = static_cast<Index>(std::llround(test_fraction * static_cast<double>(n_rows)));
  n_test = std::max<Index>(n_test, 1);
  if (n_rows < 2 || n_test >= n_rows) {
    throw DataError("dataset with " + std::to_string(n_rows) + " rows is too small to split");
  }
  std::vector<Index> order(static_cast<std::size_t>(n_rows));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Split split;
  split.test.assign(order.begin(), order.begin() + n_test);
  split.train.assign(order.begin() + n_test, order.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

std::vector<std::string> default_column_names(Index columns) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(columns));
  for (Index d = 0; d < columns; ++d) names.push_back("x" + std::to_string(d + 1));
  return names;
}

}  // namespace prada
