#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prada/dataset.hpp"
#include "prada/network.hpp"

namespace prada {

/// One additive function: the hidden nodes sharing an input support, plus any
/// linear terms split off by postprocessing.
struct AdditiveComponent {
  std::vector<Index> support;
  std::vector<Index> nodes;
  std::map<Index, double> linear_terms;

  // Linear terms count as one node each.
  Index complexity() const {
    return static_cast<Index>(nodes.size() + linear_terms.size());
  }
};

/// Groups live nodes by the set of inputs they are connected to. Components
/// are ordered by support size, then lexicographically.
std::vector<AdditiveComponent> group_nodes(const NetworkParams& params);

/// Output bias plus the constant output of live-output nodes that have no
/// input links.
double constant_offset(const NetworkParams& params);

/// Component value at `support_values`, given in the order of
/// `component.support`. Raw (not mean-centred).
double evaluate_component(const AdditiveComponent& component, const NetworkParams& params,
                          std::span<const double> support_values);

/// Component value for every row of a full covariate matrix.
Eigen::VectorXd evaluate_component(const AdditiveComponent& component, const NetworkParams& params,
                                   const Eigen::MatrixXd& X);

/// Result of splitting near-linear inputs out of their components.
struct LinearSplit {
  NetworkParams params;
  std::vector<AdditiveComponent> components;
  double output_bias = 0.0;
};

/// For each component input whose analytic partial derivative has sample
/// variance below `sigma2_max` over `data`, zero that input's weights and add
/// a linear term with the mean derivative as slope. The bias is re-centred so
/// the split is mean-preserving over `data`.
LinearSplit split_linear_terms(const std::vector<AdditiveComponent>& components,
                               const NetworkParams& params, const Dataset& data,
                               double sigma2_max = 0.01);

/// Mean absolute input gradient of the network over the rows of `data`.
Eigen::VectorXd variable_importance(const NetworkParams& params, const Dataset& data);

/// How the non-free inputs of a multi-input component are held.
struct GridSpec {
  Index points = 101;
  // Free-variable range; defaults to the observed range in `data`.
  std::optional<std::pair<double, double>> range;
  // Each value yields one curve with all co-inputs fixed at it.
  std::vector<double> fixed_values{1.0, -1.0};
  // Average over observed co-input rows instead of fixing them.
  bool marginal = false;
};

struct PartialDependenceGrid {
  Index component = 0;
  Index variable = 0;
  // "fixed=<v>", "marginal" or "main" for single-input components.
  std::string mode;
  // Co-input value for "fixed=" curves.
  double fixed_value = 0.0;
  std::vector<double> x;
  std::vector<double> value;  // mean-centred over the grid
};

/// Curves of one component along `variable`. Single-input components yield
/// one curve; others one per fixed value, or one marginal curve.
std::vector<PartialDependenceGrid> partial_dependence_grid(
    const AdditiveComponent& component, Index component_id, const NetworkParams& params,
    Index variable, const GridSpec& spec, const Dataset* data = nullptr);

struct ExtractOptions {
  bool split_linear = true;
  double sigma2_max = 0.01;
  GridSpec grid;
};

struct ExtractionReport {
  NetworkParams params;
  std::vector<AdditiveComponent> components;
  double output_bias = 0.0;
  std::vector<PartialDependenceGrid> grids;
  Eigen::VectorXd importance;
  std::vector<std::string> column_names;
  StandardizationStats stats;

  /// output_bias + sum of component values at a full covariate vector.
  double evaluate(std::span<const double> x) const;
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& X) const;
};

/// Full translation: grouping, optional linear split, one default curve per
/// component (free variable = first support variable, co-inputs at the first
/// fixed value) and saliency importance on `data`.
ExtractionReport extract(const NetworkParams& params, const Dataset& data,
                         const ExtractOptions& options = {});

/// Recomputes the values of a "main" or "fixed=" curve from its x grid.
std::vector<double> recompute_grid(const PartialDependenceGrid& grid,
                                   const AdditiveComponent& component,
                                   const NetworkParams& params);

/// Human-readable label, e.g. "f(x1,x3)".
std::string support_label(std::span<const Index> support,
                          const std::vector<std::string>& column_names = {});

}  // namespace prada
