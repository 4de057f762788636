#include "prada/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <type_traits>
#include <sstream>

#include "json.hpp"

#include "format.hpp"
#include "prada/datagen.hpp"
#include "prada/error.hpp"

namespace prada {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  out.push_back(trim(field));
  return out;
}

bool parse_double(const std::string& text, double& value) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (*begin == '+') ++begin;
  const auto result = std::from_chars(begin, end, value);
  return result.ec == std::errc() && result.ptr == end && std::isfinite(value);
}

std::string cell_location(const std::string& source, std::size_t line, std::size_t column,
                          const std::vector<std::string>& header) {
  std::string out = source + ": line " + std::to_string(line) + ", column " +
                    std::to_string(column + 1);
  if (column < header.size()) out += " (" + header[column] + ")";
  return out;
}

json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from(const json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_array()) {
    throw DataError(std::string("missing array field: ") + field);
  }
  const auto values = j.at(field).get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

json stats_json(const StandardizationStats& stats) {
  return {{"x_mean", vector_json(stats.x_mean)},
          {"x_sd", vector_json(stats.x_sd)},
          {"y_mean", stats.y_mean},
          {"y_sd", stats.y_sd}};
}

StandardizationStats stats_from(const json& j) {
  StandardizationStats stats;
  stats.x_mean = vector_from(j, "x_mean");
  stats.x_sd = vector_from(j, "x_sd");
  stats.y_mean = j.at("y_mean").get<double>();
  stats.y_sd = j.at("y_sd").get<double>();
  return stats;
}

json network_json(const NetworkParams& params) {
  json rows = json::array();
  const auto W = params.input_weights();
  for (Index h = 0; h < params.hidden_units(); ++h) {
    std::vector<double> row(static_cast<std::size_t>(params.inputs()));
    for (Index d = 0; d < params.inputs(); ++d) row[static_cast<std::size_t>(d)] = W(h, d);
    rows.push_back(row);
  }
  return {{"hidden_units", params.hidden_units()},
          {"inputs", params.inputs()},
          {"input_weights", rows},
          {"input_biases", vector_json(params.input_biases())},
          {"output_weights", vector_json(params.output_weights())},
          {"output_bias", params.output_bias()}};
}

NetworkParams network_from(const json& j) {
  const auto rows = j.at("input_weights").get<std::vector<std::vector<double>>>();
  const auto hidden = static_cast<Index>(rows.size());
  const Index inputs = j.contains("inputs") ? j.at("inputs").get<Index>()
                       : rows.empty()       ? 0
                                            : static_cast<Index>(rows.front().size());
  if (hidden < 1 || inputs < 1) throw DataError("model has no hidden units or inputs");
  NetworkParams params(hidden, inputs);
  for (Index h = 0; h < hidden; ++h) {
    const auto& row = rows[static_cast<std::size_t>(h)];
    if (static_cast<Index>(row.size()) != inputs) throw DataError("ragged input_weights");
    for (Index d = 0; d < inputs; ++d) params.input_weights()(h, d) = row[static_cast<std::size_t>(d)];
  }
  const Eigen::VectorXd b = vector_from(j, "input_biases");
  const Eigen::VectorXd v = vector_from(j, "output_weights");
  if (b.size() != hidden || v.size() != hidden) throw DataError("bias or output weight count mismatch");
  params.input_biases() = b;
  params.output_weights() = v;
  params.output_bias() = j.at("output_bias").get<double>();
  if (!params.all_finite()) throw NumericError("model contains non-finite parameters");
  return params;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
}

template <class F>
auto with_json_errors(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed JSON document: ") + e.what());
  }
}

}  // namespace

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw DataError(source + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  table.header = split_fields(line);
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].empty()) {
      throw DataError(source + ": empty header name in column " + std::to_string(c + 1));
    }
  }
  const std::size_t cols = table.header.size();
  std::vector<double> cells;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != cols) {
      throw DataError(source + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double value = 0.0;
      if (fields[c].empty()) {
        throw DataError(cell_location(source, line_no, c, table.header) + ": missing value");
      }
      if (!parse_double(fields[c], value)) {
        throw DataError(cell_location(source, line_no, c, table.header) +
                        ": non-numeric value '" + fields[c] + "'");
      }
      cells.push_back(value);
    }
    ++rows;
  }
  table.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      cells.data(), static_cast<Index>(rows), static_cast<Index>(cols));
  return table;
}

Dataset ingest_csv(std::istream& in, const std::string& source) {
  const CsvTable table = read_csv(in, source);
  if (table.header.size() < 2) throw DataError(source + ": need at least one covariate and a response");
  if (table.values.rows() < 2) throw DataError(source + ": need at least two data rows");
  const Index d = table.values.cols() - 1;
  std::vector<std::string> names(table.header.begin(), table.header.end() - 1);
  return standardize(table.values.leftCols(d), table.values.col(d), std::move(names),
                     table.header.back());
}

Dataset ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return ingest_csv(in, path.string());
}

Dataset ingest_csv_for_model(const std::filesystem::path& path, const SavedModel& model) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const CsvTable table = read_csv(in, path.string());
  const auto d = static_cast<std::size_t>(model.params.inputs());
  if (table.header.size() != d + 1) {
    throw DataError(path.string() + ": expected " + std::to_string(d) +
                    " covariates and a response, found " + std::to_string(table.header.size()) +
                    " columns");
  }
  for (std::size_t c = 0; c < d; ++c) {
    if (table.header[c] != model.column_names[c]) {
      throw DataError(path.string() + ": column " + std::to_string(c + 1) + " is '" +
                      table.header[c] + "', model expects '" + model.column_names[c] + "'");
    }
  }
  if (table.values.rows() < 1) throw DataError(path.string() + ": no data rows");
  const auto& stats = model.stats;
  if (stats.x_mean.size() != static_cast<Index>(d) || stats.x_sd.size() != static_cast<Index>(d)) {
    throw DataError("model standardization statistics do not match its inputs");
  }
  Dataset out;
  out.column_names = model.column_names;
  out.response_name = table.header.back();
  out.stats = stats;
  out.X = (table.values.leftCols(static_cast<Index>(d)).rowwise() - stats.x_mean.transpose())
              .array()
              .rowwise() /
          stats.x_sd.transpose().array();
  out.y = (table.values.col(static_cast<Index>(d)).array() - stats.y_mean) / stats.y_sd;
  return out;
}

void write_dataset_csv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const std::vector<std::string>& column_names,
                       const std::string& response_name, std::ostream& out) {
  if (X.rows() != y.size()) throw UsageError("response length does not match row count");
  if (static_cast<Index>(column_names.size()) != X.cols()) {
    throw UsageError("column name count does not match column count");
  }
  for (const auto& name : column_names) out << name << ',';
  out << response_name << '\n';
  for (Index r = 0; r < X.rows(); ++r) {
    for (Index c = 0; c < X.cols(); ++c) out << detail::format_double(X(r, c)) << ',';
    out << detail::format_double(y[r]) << '\n';
  }
}

std::string model_to_json(const SavedModel& model) {
  json j = network_json(model.params);
  j["column_names"] = model.column_names;
  j["response_name"] = model.response_name;
  j["standardization_stats"] = stats_json(model.stats);
  return j.dump(2) + "\n";
}

SavedModel model_from_json(const std::string& text) {
  const json j = parse_json(text);
  return with_json_errors([&] {
    SavedModel model;
    model.params = network_from(j);
    model.column_names = j.at("column_names").get<std::vector<std::string>>();
    if (j.contains("response_name")) model.response_name = j.at("response_name").get<std::string>();
    model.stats = stats_from(j.at("standardization_stats"));
    if (static_cast<Index>(model.column_names.size()) != model.params.inputs()) {
      throw DataError("column_names length does not match the model inputs");
    }
    return model;
  });
}

void save_model(const SavedModel& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model));
}

SavedModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_text_file(path));
}

std::string report_to_json(const ExtractionReport& report) {
  json components = json::array();
  for (std::size_t i = 0; i < report.components.size(); ++i) {
    const auto& c = report.components[i];
    json linear = json::array();
    for (const auto& [variable, slope] : c.linear_terms) {
      linear.push_back({{"variable", variable}, {"slope", slope}});
    }
    components.push_back({{"id", i},
                          {"label", support_label(c.support, report.column_names)},
                          {"support", c.support},
                          {"nodes", c.nodes},
                          {"linear_terms", linear},
                          {"complexity", c.complexity()}});
  }
  json grids = json::array();
  for (const auto& g : report.grids) {
    grids.push_back({{"component", g.component},
                     {"variable", g.variable},
                     {"mode", g.mode},
                     {"fixed_value", g.fixed_value},
                     {"x", g.x},
                     {"value", g.value}});
  }
  json j;
  j["column_names"] = report.column_names;
  j["standardization_stats"] = stats_json(report.stats);
  j["output_bias"] = report.output_bias;
  j["network"] = network_json(report.params);
  j["components"] = components;
  j["importance"] = vector_json(report.importance);
  j["grids"] = grids;
  return j.dump(2) + "\n";
}

ExtractionReport report_from_json(const std::string& text) {
  const json j = parse_json(text);
  return with_json_errors([&] {
    ExtractionReport report;
    report.column_names = j.at("column_names").get<std::vector<std::string>>();
    report.stats = stats_from(j.at("standardization_stats"));
    report.output_bias = j.at("output_bias").get<double>();
    report.params = network_from(j.at("network"));
    for (const auto& c : j.at("components")) {
      AdditiveComponent component;
      component.support = c.at("support").get<std::vector<Index>>();
      component.nodes = c.at("nodes").get<std::vector<Index>>();
      for (const auto& term : c.at("linear_terms")) {
        component.linear_terms[term.at("variable").get<Index>()] = term.at("slope").get<double>();
      }
      for (Index d : component.support) {
        if (d < 0 || d >= report.params.inputs()) throw DataError("component support out of range");
      }
      for (Index h : component.nodes) {
        if (h < 0 || h >= report.params.hidden_units()) throw DataError("component node out of range");
      }
      report.components.push_back(std::move(component));
    }
    report.importance = vector_from(j, "importance");
    for (const auto& g : j.at("grids")) {
      PartialDependenceGrid grid;
      grid.component = g.at("component").get<Index>();
      grid.variable = g.at("variable").get<Index>();
      grid.mode = g.at("mode").get<std::string>();
      grid.fixed_value = g.at("fixed_value").get<double>();
      grid.x = g.at("x").get<std::vector<double>>();
      grid.value = g.at("value").get<std::vector<double>>();
      if (grid.component < 0 || grid.component >= static_cast<Index>(report.components.size())) {
        throw DataError("grid refers to a missing component");
      }
      report.grids.push_back(std::move(grid));
    }
    return report;
  });
}

ExtractionReport load_report(const std::filesystem::path& path) {
  return report_from_json(read_text_file(path));
}

void write_grids_csv(const std::vector<PartialDependenceGrid>& grids, std::ostream& out,
                     const std::vector<std::string>& column_names) {
  out << "component_id,variable,x,value\n";
  for (const auto& g : grids) {
    const auto d = static_cast<std::size_t>(g.variable);
    const std::string name = d < column_names.size() ? column_names[d] : "x" + std::to_string(d + 1);
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      out << g.component << ',' << name << ',' << detail::format_double(g.x[i]) << ','
          << detail::format_double(g.value[i]) << '\n';
    }
  }
}

void persist_report(const ExtractionReport& report, const std::filesystem::path& dir) {
  write_text_file(dir / "report.json", report_to_json(report));
  std::ostringstream grids;
  write_grids_csv(report.grids, grids, report.column_names);
  write_text_file(dir / "partial_dependence.csv", grids.str());
}

void write_importance_csv(const Eigen::VectorXd& importance,
                          const std::vector<std::string>& column_names, std::ostream& out) {
  if (static_cast<Index>(column_names.size()) != importance.size()) {
    throw UsageError("column name count does not match importance length");
  }
  out << "variable,importance\n";
  for (Index d = 0; d < importance.size(); ++d) {
    out << column_names[static_cast<std::size_t>(d)] << ',' << detail::format_double(importance[d])
        << '\n';
  }
}

namespace {

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  T value{};
  const std::string t = trim(text);
  const auto result = std::from_chars(t.data(), t.data() + t.size(), value);
  if (result.ec != std::errc() || result.ptr != t.data() + t.size()) {
    throw UsageError("invalid value for " + key + ": '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw UsageError("invalid value for " + key + ": '" + text + "'");
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const TrainConfig&)>;

template <class T>
std::pair<Setter, Getter> field(T TrainConfig::*member) {
  return {[member](TrainConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_value<T>(k, v);
          },
          [member](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return detail::format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

std::pair<Setter, Getter> adam_field(double AdamSettings::*member) {
  return {[member](TrainConfig& c, const std::string& k, const std::string& v) {
            c.adam.*member = parse_value<double>(k, v);
          },
          [member](const TrainConfig& c) { return detail::format_double(c.adam.*member); }};
}

const std::map<std::string, std::pair<Setter, Getter>>& config_fields() {
  static const std::map<std::string, std::pair<Setter, Getter>> fields = {
      {"hidden_units", field(&TrainConfig::hidden_units)},
      {"gamma", field(&TrainConfig::gamma)},
      {"lambda", field(&TrainConfig::lambda)},
      {"stage3_alpha", field(&TrainConfig::stage3_alpha)},
      {"stage3_lambda", field(&TrainConfig::stage3_lambda)},
      {"uniform_stage3_alpha", field(&TrainConfig::uniform_stage3_alpha)},
      {"convergence_tol", field(&TrainConfig::convergence_tol)},
      {"convergence_patience", field(&TrainConfig::convergence_patience)},
      {"stage2_block", field(&TrainConfig::stage2_block)},
      {"max_epochs_stage1", field(&TrainConfig::max_epochs_stage1)},
      {"max_epochs_stage2", field(&TrainConfig::max_epochs_stage2)},
      {"max_epochs_stage3", field(&TrainConfig::max_epochs_stage3)},
      {"n_restarts", field(&TrainConfig::n_restarts)},
      {"rng_seed", field(&TrainConfig::rng_seed)},
      {"workers", field(&TrainConfig::workers)},
      {"adam_step_size", adam_field(&AdamSettings::step_size)},
      {"adam_beta1", adam_field(&AdamSettings::beta1)},
      {"adam_beta2", adam_field(&AdamSettings::beta2)},
      {"adam_epsilon", adam_field(&AdamSettings::epsilon)},
      {"dgr_joint",
       {[](TrainConfig& c, const std::string& k, const std::string& v) {
          c.dgr_joint = parse_bool(k, v);
        },
        [](const TrainConfig& c) { return std::string(c.dgr_joint ? "true" : "false"); }}},
  };
  return fields;
}

}  // namespace

void apply_config_value(TrainConfig& config, const std::string& key, const std::string& value) {
  const auto& fields = config_fields();
  const auto it = fields.find(trim(key));
  if (it == fields.end()) throw UsageError("unknown config key: " + trim(key));
  it->second.first(config, it->first, value);
}

TrainConfig read_config(std::istream& in, TrainConfig base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_config_value(base, line.substr(0, eq), line.substr(eq + 1));
  }
  base.validate();
  return base;
}

TrainConfig read_config_file(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  return read_config(in, std::move(base));
}

void write_config(const TrainConfig& config, std::ostream& out) {
  for (const auto& [key, accessors] : config_fields()) {
    out << key << '=' << accessors.second(config) << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw DataError("cannot create directory " + path.parent_path().string());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace prada
