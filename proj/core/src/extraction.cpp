#include "prada/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "format.hpp"
#include "prada/error.hpp"

namespace prada {

namespace {

std::vector<Index> node_support(const NetworkParams& params, Index h) {
  std::vector<Index> support;
  const auto W = params.input_weights();
  for (Index d = 0; d < params.inputs(); ++d) {
    if (W(h, d) != 0.0) support.push_back(d);
  }
  return support;
}

bool support_less(const std::vector<Index>& a, const std::vector<Index>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

Index position_in(const std::vector<Index>& support, Index variable) {
  const auto it = std::find(support.begin(), support.end(), variable);
  if (it == support.end()) return -1;
  return static_cast<Index>(it - support.begin());
}

double sample_variance(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

// d component / d x_variable at every row of X.
Eigen::VectorXd component_partial(const AdditiveComponent& component, const NetworkParams& params,
                                  const Eigen::MatrixXd& X, Index variable) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  const auto W = params.input_weights();
  for (Index h : component.nodes) {
    const double w = W(h, variable);
    if (w == 0.0) continue;
    Eigen::MatrixXd z = X * W.row(h).transpose();
    z.array() += params.input_biases()[h];
    apply_activation(z);
    out.array() += params.output_weights()[h] * w * (1.0 - z.col(0).array().square());
  }
  const auto lin = component.linear_terms.find(variable);
  if (lin != component.linear_terms.end()) out.array() += lin->second;
  return out;
}

}  // namespace

std::vector<AdditiveComponent> group_nodes(const NetworkParams& params) {
  std::map<std::vector<Index>, std::vector<Index>> groups;
  for (Index h = 0; h < params.hidden_units(); ++h) {
    if (params.node_dead(h)) continue;
    groups[node_support(params, h)].push_back(h);
  }
  std::vector<AdditiveComponent> out;
  out.reserve(groups.size());
  for (auto& [support, nodes] : groups) {
    out.push_back({support, std::move(nodes), {}});
  }
  std::sort(out.begin(), out.end(), [](const AdditiveComponent& a, const AdditiveComponent& b) {
    return support_less(a.support, b.support);
  });
  return out;
}

double constant_offset(const NetworkParams& params) {
  double offset = params.output_bias();
  const auto W = params.input_weights();
  for (Index h = 0; h < params.hidden_units(); ++h) {
    const double v = params.output_weights()[h];
    if (v != 0.0 && (W.row(h).array() == 0.0).all()) {
      offset += v * activation(params.input_biases()[h]);
    }
  }
  return offset;
}

double evaluate_component(const AdditiveComponent& component, const NetworkParams& params,
                          std::span<const double> support_values) {
  if (support_values.size() != component.support.size()) {
    throw UsageError("component expects " + std::to_string(component.support.size()) +
                     " values, got " + std::to_string(support_values.size()));
  }
  const auto W = params.input_weights();
  double total = 0.0;
  for (Index h : component.nodes) {
    double z = params.input_biases()[h];
    for (std::size_t k = 0; k < component.support.size(); ++k) {
      z += W(h, component.support[k]) * support_values[k];
    }
    total += params.output_weights()[h] * activation(z);
  }
  for (const auto& [variable, slope] : component.linear_terms) {
    const Index k = position_in(component.support, variable);
    if (k < 0) throw UsageError("linear term outside component support");
    total += slope * support_values[static_cast<std::size_t>(k)];
  }
  return total;
}

Eigen::VectorXd evaluate_component(const AdditiveComponent& component, const NetworkParams& params,
                                   const Eigen::MatrixXd& X) {
  if (X.cols() != params.inputs()) throw UsageError("covariate matrix has the wrong width");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  if (!component.nodes.empty()) {
    Eigen::MatrixXd W(static_cast<Index>(component.nodes.size()), params.inputs());
    Eigen::VectorXd b(W.rows());
    Eigen::VectorXd v(W.rows());
    for (Index k = 0; k < W.rows(); ++k) {
      const Index h = component.nodes[static_cast<std::size_t>(k)];
      W.row(k) = params.input_weights().row(h);
      b[k] = params.input_biases()[h];
      v[k] = params.output_weights()[h];
    }
    Eigen::MatrixXd Z = X * W.transpose();
    Z.rowwise() += b.transpose();
    apply_activation(Z);
    out = Z * v;
  }
  for (const auto& [variable, slope] : component.linear_terms) {
    out += slope * X.col(variable);
  }
  return out;
}

LinearSplit split_linear_terms(const std::vector<AdditiveComponent>& components,
                               const NetworkParams& params, const Dataset& data,
                               double sigma2_max) {
  if (data.cols() != params.inputs()) throw UsageError("dataset width does not match network");
  if (data.rows() < 2) throw DataError("linear split needs at least two rows");

  LinearSplit out;
  out.params = params;
  std::map<Index, double> slopes;
  for (const auto& component : components) {
    for (const auto& [variable, slope] : component.linear_terms) slopes[variable] += slope;
    if (component.nodes.empty()) continue;
    for (Index variable : component.support) {
      const Eigen::VectorXd partial = component_partial(component, params, data.X, variable);
      if (sample_variance(partial) >= sigma2_max) continue;
      double node_slope = partial.mean();
      // Only the node part moves into the linear term.
      const auto lin = component.linear_terms.find(variable);
      if (lin != component.linear_terms.end()) node_slope -= lin->second;
      slopes[variable] += node_slope;
      for (Index h : component.nodes) out.params.input_weights()(h, variable) = 0.0;
    }
  }

  out.components = group_nodes(out.params);
  for (const auto& [variable, slope] : slopes) {
    auto it = std::find_if(out.components.begin(), out.components.end(),
                           [variable](const AdditiveComponent& c) {
                             return c.support.size() == 1 && c.support[0] == variable;
                           });
    if (it == out.components.end()) {
      out.components.push_back({{variable}, {}, {}});
      it = std::prev(out.components.end());
    }
    it->linear_terms[variable] += slope;
  }
  std::stable_sort(out.components.begin(), out.components.end(),
                   [](const AdditiveComponent& a, const AdditiveComponent& b) {
                     return support_less(a.support, b.support);
                   });

  // Re-centre: the split model matches the network on average over the data.
  const Eigen::VectorXd target = predict(params, data.X);
  Eigen::VectorXd split_sum = Eigen::VectorXd::Zero(data.rows());
  for (const auto& component : out.components) {
    split_sum += evaluate_component(component, out.params, data.X);
  }
  out.output_bias = (target - split_sum).mean();
  return out;
}

Eigen::VectorXd variable_importance(const NetworkParams& params, const Dataset& data) {
  if (data.rows() == 0) throw DataError("importance on an empty dataset");
  const Eigen::MatrixXd grads = input_gradients(params, data.X);
  Eigen::VectorXd out = grads.cwiseAbs().colwise().mean().transpose();
  // Disconnected inputs are exactly zero by construction; keep them exact.
  const auto W = params.input_weights();
  for (Index d = 0; d < params.inputs(); ++d) {
    bool connected = false;
    for (Index h = 0; h < params.hidden_units(); ++h) {
      connected = connected || (W(h, d) != 0.0 && params.output_weights()[h] != 0.0);
    }
    if (!connected) out[d] = 0.0;
  }
  return out;
}

std::vector<PartialDependenceGrid> partial_dependence_grid(
    const AdditiveComponent& component, Index component_id, const NetworkParams& params,
    Index variable, const GridSpec& spec, const Dataset* data) {
  const Index free_pos = position_in(component.support, variable);
  if (free_pos < 0) {
    throw UsageError("variable " + std::to_string(variable) + " is not in the component support");
  }
  if (spec.points < 2) throw UsageError("a grid needs at least two points");

  double lo = 0.0;
  double hi = 0.0;
  if (spec.range) {
    std::tie(lo, hi) = *spec.range;
  } else {
    if (data == nullptr) throw UsageError("grid range needs either an explicit range or data");
    lo = data->X.col(variable).minCoeff();
    hi = data->X.col(variable).maxCoeff();
  }
  if (!(hi > lo)) throw UsageError("empty grid range");
  if (spec.marginal && data == nullptr) throw UsageError("marginal curves need data");

  std::vector<double> xs(static_cast<std::size_t>(spec.points));
  for (Index i = 0; i < spec.points; ++i) {
    xs[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(spec.points - 1);
  }
  xs.back() = hi;

  auto centred = [](std::vector<double> values) {
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                        static_cast<double>(values.size());
    for (double& v : values) v -= mean;
    return values;
  };

  std::vector<PartialDependenceGrid> out;
  std::vector<double> point(component.support.size());
  if (component.support.size() == 1) {
    PartialDependenceGrid grid{component_id, variable, "main", 0.0, xs, {}};
    for (double x : xs) {
      point[0] = x;
      grid.value.push_back(evaluate_component(component, params, point));
    }
    grid.value = centred(std::move(grid.value));
    out.push_back(std::move(grid));
    return out;
  }

  if (spec.marginal) {
    PartialDependenceGrid grid{component_id, variable, "marginal", 0.0, xs, {}};
    for (double x : xs) {
      double total = 0.0;
      for (Index r = 0; r < data->rows(); ++r) {
        for (std::size_t k = 0; k < component.support.size(); ++k) {
          point[k] = data->X(r, component.support[k]);
        }
        point[static_cast<std::size_t>(free_pos)] = x;
        total += evaluate_component(component, params, point);
      }
      grid.value.push_back(total / static_cast<double>(data->rows()));
    }
    grid.value = centred(std::move(grid.value));
    out.push_back(std::move(grid));
    return out;
  }

  if (spec.fixed_values.empty()) throw UsageError("no fixed co-input values given");
  for (double fixed : spec.fixed_values) {
    PartialDependenceGrid grid{component_id, variable, "fixed=" + detail::format_double(fixed),
                               fixed, xs, {}};
    for (double x : xs) {
      std::fill(point.begin(), point.end(), fixed);
      point[static_cast<std::size_t>(free_pos)] = x;
      grid.value.push_back(evaluate_component(component, params, point));
    }
    grid.value = centred(std::move(grid.value));
    out.push_back(std::move(grid));
  }
  return out;
}

double ExtractionReport::evaluate(std::span<const double> x) const {
  if (static_cast<Index>(x.size()) != params.inputs()) {
    throw UsageError("covariate vector has the wrong length");
  }
  double total = output_bias;
  std::vector<double> values;
  for (const auto& component : components) {
    values.clear();
    for (Index d : component.support) values.push_back(x[static_cast<std::size_t>(d)]);
    total += evaluate_component(component, params, values);
  }
  return total;
}

Eigen::VectorXd ExtractionReport::evaluate(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd total = Eigen::VectorXd::Constant(X.rows(), output_bias);
  for (const auto& component : components) total += evaluate_component(component, params, X);
  return total;
}

ExtractionReport extract(const NetworkParams& params, const Dataset& data,
                         const ExtractOptions& options) {
  if (data.cols() != params.inputs()) throw UsageError("dataset width does not match network");
  ExtractionReport report;
  report.column_names = data.column_names;
  report.stats = data.stats;
  std::vector<AdditiveComponent> grouped = group_nodes(params);
  if (options.split_linear) {
    LinearSplit split = split_linear_terms(grouped, params, data, options.sigma2_max);
    report.params = std::move(split.params);
    report.components = std::move(split.components);
    report.output_bias = split.output_bias;
  } else {
    report.params = params;
    report.components = std::move(grouped);
    report.output_bias = constant_offset(params);
  }
  report.importance = variable_importance(params, data);

  GridSpec spec = options.grid;
  if (!spec.fixed_values.empty()) spec.fixed_values.resize(1);
  for (std::size_t i = 0; i < report.components.size(); ++i) {
    const auto& component = report.components[i];
    auto curves = partial_dependence_grid(component, static_cast<Index>(i), report.params,
                                          component.support.front(), spec, &data);
    report.grids.push_back(std::move(curves.front()));
  }
  return report;
}

std::vector<double> recompute_grid(const PartialDependenceGrid& grid,
                                   const AdditiveComponent& component,
                                   const NetworkParams& params) {
  if (grid.mode == "marginal") throw UsageError("marginal curves cannot be recomputed without data");
  const Index free_pos = position_in(component.support, grid.variable);
  if (free_pos < 0) throw UsageError("grid variable is not in the component support");
  std::vector<double> point(component.support.size());
  std::vector<double> values;
  values.reserve(grid.x.size());
  for (double x : grid.x) {
    std::fill(point.begin(), point.end(), grid.fixed_value);
    point[static_cast<std::size_t>(free_pos)] = x;
    values.push_back(evaluate_component(component, params, point));
  }
  if (values.empty()) return values;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(values.size());
  for (double& v : values) v -= mean;
  return values;
}

std::string support_label(std::span<const Index> support,
                          const std::vector<std::string>& column_names) {
  std::string out = "f(";
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (k > 0) out += ",";
    const auto d = static_cast<std::size_t>(support[k]);
    out += d < column_names.size() ? column_names[d] : "x" + std::to_string(d + 1);
  }
  return out + ")";
}

}  // namespace prada
