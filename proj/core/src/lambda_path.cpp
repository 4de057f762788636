#include "prada/lambda_path.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include "format.hpp"
#include "prada/error.hpp"
#include "prada/parallel.hpp"

namespace prada {

void LambdaPathTable::validate() const {
  const std::size_t n = lambdas.size();
  if (n == 0) throw UsageError("lambda path is empty");
  if (mean_test_error.size() != n || sd_test_error.size() != n) {
    throw UsageError("lambda path columns differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(lambdas[i]) || !std::isfinite(mean_test_error[i]) ||
        !std::isfinite(sd_test_error[i])) {
      throw UsageError("lambda path has non-finite entries");
    }
    if (!(lambdas[i] > 0.0)) throw UsageError("lambdas must be > 0");
    if (sd_test_error[i] < 0.0) throw UsageError("negative standard deviation in lambda path");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
      throw UsageError("lambdas must be strictly increasing");
    }
  }
  if (n_splits < 1) throw UsageError("n_splits must be >= 1");
}

LambdaPathTable run_lambda_path(const Dataset& data, std::span<const double> lambdas,
                                const TrainConfig& config, const PathOptions& options) {
  config.validate();
  if (lambdas.empty()) throw UsageError("lambda grid is empty");
  if (options.n_splits < 2) throw UsageError("n_splits must be >= 2");
  if (data.rows() < 4) throw DataError("lambda path needs at least four rows");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i])) {
      throw UsageError("lambdas must be finite and > 0");
    }
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
      throw UsageError("lambdas must be strictly increasing");
    }
  }

  const auto n_splits = static_cast<std::size_t>(options.n_splits);
  // errors[s][i]: test MSE of split s at lambda i.
  std::vector<std::vector<double>> errors(n_splits);
  TrainConfig inner = config;
  inner.workers = 1;
  parallel_for(
      n_splits,
      [&](std::size_t s) {
        const Split split = random_split(data.rows(), options.test_fraction,
                                         options.split_seed + static_cast<std::uint64_t>(s));
        const Dataset train = data.subset(split.train);
        const Dataset test = data.subset(split.test);
        const std::vector<SmoothFit> smooth = train_smooth_restarts(train, inner);
        errors[s].reserve(lambdas.size());
        for (double lambda : lambdas) {
          TrainConfig at = inner;
          at.lambda = lambda;
          errors[s].push_back(finish_prada(train, test, smooth, at).test_mse);
        }
      },
      config.workers);

  LambdaPathTable table;
  table.n_splits = options.n_splits;
  table.lambdas.assign(lambdas.begin(), lambdas.end());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    double sum = 0.0;
    for (std::size_t s = 0; s < n_splits; ++s) sum += errors[s][i];
    const double mean = sum / static_cast<double>(n_splits);
    double sq = 0.0;
    for (std::size_t s = 0; s < n_splits; ++s) sq += (errors[s][i] - mean) * (errors[s][i] - mean);
    table.mean_test_error.push_back(mean);
    table.sd_test_error.push_back(std::sqrt(sq / static_cast<double>(n_splits - 1)));
  }
  return table;
}

double select_lambda(const LambdaPathTable& table, SelectionRule rule) {
  table.validate();
  const auto argmin = static_cast<std::size_t>(
      std::min_element(table.mean_test_error.begin(), table.mean_test_error.end()) -
      table.mean_test_error.begin());
  const double best = table.mean_test_error[argmin];
  double chosen = table.lambdas[argmin];
  for (std::size_t i = 0; i < table.lambdas.size(); ++i) {
    bool admissible = false;
    if (rule == SelectionRule::two_sd) {
      admissible = table.mean_test_error[i] - 2.0 * table.sd_test_error[i] <= best;
    } else {
      const double se = table.sd_test_error[argmin] / std::sqrt(static_cast<double>(table.n_splits));
      admissible = table.mean_test_error[i] <= best + se;
    }
    if (admissible) chosen = std::max(chosen, table.lambdas[i]);
  }
  return chosen;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw UsageError("log grid needs 0 < lo < hi");
  }
  if (count < 2) throw UsageError("log grid needs at least two points");
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

namespace {

constexpr double kBracketLo = 1e-7;
constexpr double kBracketHi = 10.0;

double zero_share(const NetworkParams& params) {
  const auto penalized = static_cast<double>(params.penalized_size());
  return (penalized - static_cast<double>(params.nonzero_penalized())) / penalized;
}

// Smallest lambda in [lo, hi] (log bisection) for which `done` holds,
// assuming `done` is monotone in lambda.
template <class Pred>
double bisect_log(double lo, double hi, int steps, Pred&& done) {
  for (int i = 0; i < steps; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (done(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace

GridBounds calibrate_grid_bounds(const Dataset& data, const TrainConfig& config,
                                 const PathOptions& options, double zero_fraction, int steps) {
  config.validate();
  if (!(zero_fraction > 0.0 && zero_fraction < 1.0)) {
    throw UsageError("zero_fraction must lie in (0, 1)");
  }
  if (steps < 1) throw UsageError("steps must be >= 1");
  const Split split = random_split(data.rows(), options.test_fraction, options.split_seed);
  const Dataset train = data.subset(split.train);
  const SmoothFit probe = train_smooth(train, config, 0);

  auto fit_at = [&](double lambda) {
    TrainConfig at = config;
    at.lambda = lambda;
    std::array<StageReport, 3> stages{};
    return train_penalized(train, probe.params, at, stages);
  };

  GridBounds bounds;
  auto pruned = [&](double lambda) { return fit_at(lambda).live_nodes() == 0; };
  bounds.hi = pruned(kBracketHi) ? bisect_log(kBracketLo, kBracketHi, steps, pruned) : kBracketHi;

  // Stage 3 prunes some weights at any lambda, so the share is measured
  // against the share at the bracket floor.
  const double floor_share = zero_share(fit_at(kBracketLo));
  auto too_sparse = [&](double lambda) {
    return zero_share(fit_at(lambda)) - floor_share >= zero_fraction;
  };
  double lo = kBracketLo;
  double hi = bounds.hi;
  for (int i = 0; i < steps; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (too_sparse(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  bounds.lo = lo;
  if (!(bounds.hi > bounds.lo)) bounds.hi = bounds.lo * 10.0;
  return bounds;
}

std::vector<double> auto_lambda_grid(const Dataset& data, const TrainConfig& config, int count,
                                     const PathOptions& options) {
  const GridBounds bounds = calibrate_grid_bounds(data, config, options);
  return log_spaced(bounds.lo, bounds.hi, count);
}

void write_path_csv(const LambdaPathTable& table, std::ostream& out) {
  table.validate();
  out << "lambda,mean_test_error,sd_test_error,n_splits\n";
  for (std::size_t i = 0; i < table.lambdas.size(); ++i) {
    out << detail::format_double(table.lambdas[i]) << ','
        << detail::format_double(table.mean_test_error[i]) << ','
        << detail::format_double(table.sd_test_error[i]) << ',' << table.n_splits << '\n';
  }
}

}  // namespace prada
