#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prada/dataset.hpp"

namespace prada {

/// One symbolic additive term. `evaluate` receives the covariate values on
/// `support`, in support order.
struct GeneratorComponent {
  std::string name;
  std::vector<Index> support;
  std::function<double(std::span<const double>)> evaluate;
};

enum class CovariateLaw { uniform, gaussian };

struct GeneratorSpec {
  Index n_samples = 1000;
  Index n_covariates = 1;
  CovariateLaw law = CovariateLaw::uniform;
  // Used for the Gaussian law; identity when empty.
  Eigen::MatrixXd correlation;
  std::vector<GeneratorComponent> components;
  double noise_sd = 0.0;
  std::vector<std::string> column_names;

  void validate() const;
};

/// Generated data in raw units plus its standardized form.
struct GeneratedData {
  Eigen::MatrixXd raw_X;
  Eigen::VectorXd raw_y;
  Dataset data;
  std::vector<std::vector<Index>> true_supports;
};

/// Legendre polynomial P_k for k in 1..4, with the standard 35/8 leading
/// coefficient for P_4.
double legendre_polynomial(int k, double x);
double legendre_derivative(int k, double x);

/// (1/2) * integral over [-1, 1] of |P_k'|, the large-sample saliency of a
/// U[-1, 1] covariate entering through P_k. Closed form.
double legendre_true_importance(int k);

/// X ~ U[-1,1]^(n x d), y = P1(x1) + P2(x2) + P3(x3) + P4(x4) + N(0, noise_sd^2).
GeneratedData generate_legendre_dataset(Index n_samples = 1000, Index n_covariates = 5,
                                        double noise_sd = 0.1, std::uint64_t seed = 0);

GeneratedData generate_additive_dataset(const GeneratorSpec& spec, std::uint64_t seed);

/// Symmetric factor F with F F^T = correlation. Eigenvalues down to -1e-10
/// are clipped to zero; anything more negative is rejected.
Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& correlation);

/// Z-scores every column of X and the response (sample sd, n - 1).
Dataset standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    std::vector<std::string> column_names = {},
                    std::string response_name = "y");

/// Six additive components over seven correlated Gaussian covariates; the
/// last covariate is pure noise.
GeneratorSpec six_component_spec(Index n_samples = 2000, double noise_sd = 0.1);

/// y = 2 x1 + tanh(3 x2) + noise with x ~ U[-1,1]^2.
GeneratorSpec linear_plus_tanh_spec(Index n_samples = 2000, double noise_sd = 0.05);

}  // namespace prada
