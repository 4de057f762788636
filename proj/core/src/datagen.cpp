#include "prada/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

#include "prada/error.hpp"

namespace prada {

void GeneratorSpec::validate() const {
  if (n_samples < 2) throw UsageError("generator needs at least two samples");
  if (n_covariates < 1) throw UsageError("generator needs at least one covariate");
  if (!(noise_sd >= 0.0)) throw UsageError("noise_sd must be >= 0");
  if (!column_names.empty() && static_cast<Index>(column_names.size()) != n_covariates) {
    throw UsageError("column name count does not match covariate count");
  }
  for (const auto& c : components) {
    if (c.support.empty()) throw UsageError("component " + c.name + " has empty support");
    for (Index d : c.support) {
      if (d < 0 || d >= n_covariates) {
        throw UsageError("component " + c.name + " refers to a missing covariate");
      }
    }
    if (!c.evaluate) throw UsageError("component " + c.name + " has no evaluator");
  }
  if (law == CovariateLaw::gaussian && correlation.size() != 0) {
    if (correlation.rows() != n_covariates || correlation.cols() != n_covariates) {
      throw UsageError("correlation matrix has the wrong shape");
    }
    if (!correlation.isApprox(correlation.transpose(), 1e-12)) {
      throw DataError("correlation matrix is not symmetric");
    }
    for (Index d = 0; d < n_covariates; ++d) {
      if (std::abs(correlation(d, d) - 1.0) > 1e-12) {
        throw DataError("correlation matrix must have a unit diagonal");
      }
    }
  }
}

double legendre_polynomial(int k, double x) {
  switch (k) {
    case 1: return x;
    case 2: return (3.0 * x * x - 1.0) / 2.0;
    case 3: return (5.0 * x * x * x - 3.0 * x) / 2.0;
    case 4: return (35.0 * x * x * x * x - 30.0 * x * x + 3.0) / 8.0;
    default: throw UsageError("Legendre order must be in 1..4");
  }
}

double legendre_derivative(int k, double x) {
  switch (k) {
    case 1: return 1.0;
    case 2: return 3.0 * x;
    case 3: return (15.0 * x * x - 3.0) / 2.0;
    case 4: return (140.0 * x * x * x - 60.0 * x) / 8.0;
    default: throw UsageError("Legendre order must be in 1..4");
  }
}

double legendre_true_importance(int k) {
  // |P_k'| is even, so integrate over [0, 1] between the critical points of P_k.
  std::vector<double> knots{0.0};
  if (k == 3) knots.push_back(1.0 / std::sqrt(5.0));
  if (k == 4) knots.push_back(std::sqrt(3.0 / 7.0));
  knots.push_back(1.0);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    total += std::abs(legendre_polynomial(k, knots[i + 1]) - legendre_polynomial(k, knots[i]));
  }
  return total;
}

Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& correlation) {
  if (correlation.rows() != correlation.cols()) throw DataError("correlation matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(correlation);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  Eigen::VectorXd values = solver.eigenvalues();
  for (Index i = 0; i < values.size(); ++i) {
    if (values[i] < -1e-10) throw DataError("correlation matrix is not positive semi-definite");
    values[i] = std::max(values[i], 0.0);
  }
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  return vectors * values.cwiseSqrt().asDiagonal() * vectors.transpose();
}

Dataset standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    std::vector<std::string> column_names, std::string response_name) {
  const Index n = X.rows();
  if (n < 2) throw DataError("need at least two rows to standardize");
  if (y.size() != n) throw DataError("response length does not match row count");
  if (column_names.empty()) column_names = default_column_names(X.cols());
  if (static_cast<Index>(column_names.size()) != X.cols()) {
    throw DataError("column name count does not match column count");
  }

  auto moments = [n](const auto& column) {
    const double mean = column.mean();
    const double var = (column.array() - mean).square().sum() / static_cast<double>(n - 1);
    return std::pair{mean, std::sqrt(var)};
  };
  auto is_constant = [](const auto& column) {
    return (column.array() == column[0]).all();
  };

  Dataset out;
  out.column_names = std::move(column_names);
  out.response_name = std::move(response_name);
  out.stats.x_mean.resize(X.cols());
  out.stats.x_sd.resize(X.cols());
  out.X.resize(n, X.cols());
  for (Index d = 0; d < X.cols(); ++d) {
    if (!X.col(d).allFinite()) throw DataError("non-finite value in column: " + out.column_names[d]);
    const auto [mean, sd] = moments(X.col(d));
    if (is_constant(X.col(d)) || !(sd > 0.0)) {
      throw DataError("constant column: " + out.column_names[d]);
    }
    out.stats.x_mean[d] = mean;
    out.stats.x_sd[d] = sd;
    out.X.col(d) = (X.col(d).array() - mean) / sd;
  }
  if (!y.allFinite()) throw DataError("non-finite value in column: " + out.response_name);
  const auto [y_mean, y_sd] = moments(y);
  if (is_constant(y) || !(y_sd > 0.0)) throw DataError("constant column: " + out.response_name);
  out.stats.y_mean = y_mean;
  out.stats.y_sd = y_sd;
  out.y = (y.array() - y_mean) / y_sd;
  return out;
}

GeneratedData generate_additive_dataset(const GeneratorSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Index n = spec.n_samples;
  const Index d = spec.n_covariates;
  std::mt19937_64 rng(seed);

  GeneratedData out;
  out.raw_X.resize(n, d);
  if (spec.law == CovariateLaw::uniform) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < d; ++j) out.raw_X(i, j) = unif(rng);
    }
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(n, d);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < d; ++j) z(i, j) = normal(rng);
    }
    if (spec.correlation.size() == 0) {
      out.raw_X = z;
    } else {
      out.raw_X = z * correlation_factor(spec.correlation).transpose();
    }
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  out.raw_y.resize(n);
  std::vector<double> buffer;
  for (Index i = 0; i < n; ++i) {
    double value = 0.0;
    for (const auto& c : spec.components) {
      buffer.resize(c.support.size());
      for (std::size_t s = 0; s < c.support.size(); ++s) buffer[s] = out.raw_X(i, c.support[s]);
      value += c.evaluate(buffer);
    }
    // Always draw so that noise_sd = 0 and > 0 consume the same stream.
    value += spec.noise_sd * noise(rng);
    out.raw_y[i] = value;
  }

  for (const auto& c : spec.components) {
    std::vector<Index> support = c.support;
    std::sort(support.begin(), support.end());
    out.true_supports.push_back(std::move(support));
  }
  out.data = standardize(out.raw_X, out.raw_y, spec.column_names);
  return out;
}

GeneratedData generate_legendre_dataset(Index n_samples, Index n_covariates, double noise_sd,
                                        std::uint64_t seed) {
  if (n_covariates < 4) throw UsageError("Legendre data needs at least four covariates");
  if (n_samples < 2) throw UsageError("Legendre data needs at least two samples");
  GeneratorSpec spec;
  spec.n_samples = n_samples;
  spec.n_covariates = n_covariates;
  spec.law = CovariateLaw::uniform;
  spec.noise_sd = noise_sd;
  for (int k = 1; k <= 4; ++k) {
    spec.components.push_back({"P" + std::to_string(k), {k - 1},
                               [k](std::span<const double> x) { return legendre_polynomial(k, x[0]); }});
  }
  return generate_additive_dataset(spec, seed);
}

GeneratorSpec six_component_spec(Index n_samples, double noise_sd) {
  GeneratorSpec spec;
  spec.n_samples = n_samples;
  spec.n_covariates = 7;
  spec.law = CovariateLaw::gaussian;
  spec.noise_sd = noise_sd;
  spec.correlation = Eigen::MatrixXd::Identity(7, 7);
  auto correlate = [&spec](Index a, Index b, double r) {
    spec.correlation(a, b) = r;
    spec.correlation(b, a) = r;
  };
  correlate(0, 1, 0.3);
  correlate(2, 3, -0.2);
  correlate(4, 6, 0.3);
  spec.components = {
      {"sin(x1)", {0}, [](std::span<const double> x) { return std::sin(1.5 * x[0]); }},
      {"x2", {1}, [](std::span<const double> x) { return 0.8 * x[0]; }},
      {"bump(x3)", {2}, [](std::span<const double> x) { return 1.5 * std::exp(-x[0] * x[0]); }},
      {"tanh(x4)", {3}, [](std::span<const double> x) { return std::tanh(2.0 * x[0]); }},
      {"x5*x6", {4, 5}, [](std::span<const double> x) { return 0.6 * x[0] * x[1]; }},
      {"sin(x1+x4)", {0, 3}, [](std::span<const double> x) { return 0.5 * std::sin(x[0] + x[1]); }},
  };
  return spec;
}

GeneratorSpec linear_plus_tanh_spec(Index n_samples, double noise_sd) {
  GeneratorSpec spec;
  spec.n_samples = n_samples;
  spec.n_covariates = 2;
  spec.law = CovariateLaw::uniform;
  spec.noise_sd = noise_sd;
  spec.components = {
      {"2*x1", {0}, [](std::span<const double> x) { return 2.0 * x[0]; }},
      {"tanh(3*x2)", {1}, [](std::span<const double> x) { return std::tanh(3.0 * x[0]); }},
  };
  return spec;
}

}  // namespace prada
