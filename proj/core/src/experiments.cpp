#include "prada/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "format.hpp"
#include "json.hpp"
#include "prada/error.hpp"
#include "prada/io.hpp"
#include "prada/parallel.hpp"

namespace prada {

std::string to_string(MatchMode mode) {
  switch (mode) {
    case MatchMode::param_count: return "param_count";
    case MatchMode::function_count: return "function_count";
    case MatchMode::node_count: return "node_count";
  }
  return "unknown";
}

MatchMode match_mode_from_string(const std::string& text) {
  if (text == "param_count") return MatchMode::param_count;
  if (text == "function_count") return MatchMode::function_count;
  if (text == "node_count") return MatchMode::node_count;
  throw UsageError("unknown match mode: " + text);
}

Index complexity_statistic(const NetworkParams& params, MatchMode mode, const Dataset& data) {
  switch (mode) {
    case MatchMode::param_count: return params.nonzero_penalized();
    case MatchMode::node_count: return params.live_nodes();
    case MatchMode::function_count: {
      const LinearSplit split = split_linear_terms(group_nodes(params), params, data);
      return static_cast<Index>(function_set(split.components).size());
    }
  }
  throw UsageError("unknown match mode");
}

Calibration calibrate_matched_baseline(const NetworkParams& reference, MatchMode mode,
                                       const Dataset& train, const Dataset& test,
                                       std::span<const SmoothFit> smooth, const TrainConfig& config,
                                       const CalibrationOptions& options) {
  if (!(options.lambda_lo > 0.0) || !(options.lambda_hi > options.lambda_lo)) {
    throw UsageError("calibration needs 0 < lambda_lo < lambda_hi");
  }
  if (options.steps < 1) throw UsageError("calibration needs at least one step");
  const bool gated = mode == MatchMode::node_count;

  Calibration out;
  out.target = complexity_statistic(reference, mode, train);
  bool have_best = false;
  auto evaluate = [&](double lambda) {
    TrainConfig at = config;
    at.lambda = lambda;
    NetworkParams model;
    double train_mse = 0.0;
    double test_mse = 0.0;
    if (gated) {
      GatedTrainResult r = finish_dgr(train, test, smooth, at);
      model = r.params.collapsed();
      train_mse = r.train_mse;
      test_mse = r.test_mse;
    } else {
      at.gamma = 0.0;
      TrainResult r = finish_prada(train, test, smooth, at);
      model = std::move(r.params);
      train_mse = r.train_mse;
      test_mse = r.test_mse;
    }
    const Index statistic = complexity_statistic(model, mode, train);
    out.trace.push_back({lambda, statistic});
    const Index gap = std::abs(statistic - out.target);
    if (!have_best || gap < std::abs(out.achieved - out.target)) {
      have_best = true;
      out.lambda = lambda;
      out.achieved = statistic;
      out.model = std::move(model);
      out.train_mse = train_mse;
      out.test_mse = test_mse;
    }
    return statistic;
  };

  double lo = options.lambda_lo;
  double hi = options.lambda_hi;
  // The strongest penalty must reach the target for the bracket to be valid.
  if (evaluate(hi) > out.target) return out;
  for (int i = 0; i < options.steps && out.achieved != out.target; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (evaluate(mid) > out.target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return out;
}

Calibration calibrate_matched_baseline(const NetworkParams& reference, MatchMode mode,
                                       const Dataset& train, const Dataset& test,
                                       const TrainConfig& config,
                                       const CalibrationOptions& options) {
  const std::vector<SmoothFit> smooth = train_smooth_restarts(train, config);
  return calibrate_matched_baseline(reference, mode, train, test, smooth, config, options);
}

void ExperimentConfig::validate() const {
  train.validate();
  if (n_runs < 1) throw UsageError("n_runs must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw UsageError("test_fraction must lie in (0, 1)");
  if (lambda && !(*lambda >= 0.0)) throw UsageError("lambda must be >= 0");
  if (grid_points < 2) throw UsageError("grid_points must be >= 2");
  if (path_restarts < 0) throw UsageError("path_restarts must be >= 0");
  for (const auto& b : baselines) {
    if (b.name != "lasso" && b.name != "dgr") throw UsageError("unknown baseline: " + b.name);
    if (b.name == "dgr" && b.mode != MatchMode::node_count) {
      throw UsageError("the gate baseline is matched on node_count");
    }
    if (b.name == "lasso" && b.mode == MatchMode::node_count) {
      throw UsageError("the lasso baseline is matched on param_count or function_count");
    }
  }
}

ExperimentConfig legendre_config(bool quick) {
  ExperimentConfig c;
  c.train.hidden_units = 50;
  c.train.n_restarts = 5;
  c.baselines = {{"lasso", MatchMode::param_count}, {"dgr", MatchMode::node_count}};
  if (quick) {
    c.n_runs = 10;
    c.lambda_grid = {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2};
    c.path.n_splits = 4;
    c.calibration.steps = 6;
  }
  return c;
}

ExperimentConfig recovery_config(bool quick) {
  ExperimentConfig c;
  c.train.hidden_units = 100;
  c.train.n_restarts = 5;
  c.baselines = {{"lasso", MatchMode::function_count}};
  if (quick) {
    c.n_runs = 10;
    c.train.hidden_units = 40;
    c.train.n_restarts = 2;
    c.lambda_grid = {3e-4, 1e-3, 3e-3, 1e-2};
    c.path.n_splits = 3;
    c.calibration.steps = 6;
  }
  return c;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 over a combined key.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1) + 0xBF58476D1CE4E5B9ULL * index;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

double sample_sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / static_cast<double>(v.size() - 1));
}

}  // namespace

ModelSummary summarize_runs(const std::string& model, std::span<const RunRecord> records,
                            std::span<const Support> truth) {
  ModelSummary out;
  out.model = model;
  std::vector<const RunRecord*> ok;
  for (const auto& r : records) {
    if (r.ok) {
      ok.push_back(&r);
    } else {
      ++out.n_failed;
    }
  }
  out.n_ok = ok.size();
  out.medoid_similarity = std::numeric_limits<double>::quiet_NaN();
  if (ok.empty()) return out;

  std::vector<double> mse;
  for (const auto* r : ok) mse.push_back(r->test_mse);
  out.test_mse_mean = std::accumulate(mse.begin(), mse.end(), 0.0) / static_cast<double>(mse.size());
  out.test_mse_sd = sample_sd(mse, out.test_mse_mean);

  const Index d = ok.front()->importance.size();
  out.importance_mean = Eigen::VectorXd::Zero(d);
  out.importance_sd = Eigen::VectorXd::Zero(d);
  for (const auto* r : ok) out.importance_mean += r->importance;
  out.importance_mean /= static_cast<double>(ok.size());
  if (ok.size() > 1) {
    for (const auto* r : ok) {
      out.importance_sd.array() += (r->importance - out.importance_mean).array().square();
    }
    out.importance_sd = (out.importance_sd / static_cast<double>(ok.size() - 1)).cwiseSqrt();
  }

  std::vector<FunctionSet> sets;
  for (const auto* r : ok) sets.push_back(r->functions);
  out.ensemble = summarize_ensemble(sets);
  out.medoid_run = ok[medoid_model(sets)]->id;
  if (sets.size() >= 2) out.medoid_similarity = mean_similarity_to_medoid(sets);

  if (!truth.empty()) {
    double recall = 0.0;
    double fp = 0.0;
    for (const auto* r : ok) {
      recall += static_cast<double>(r->true_positives) / static_cast<double>(truth.size());
      fp += static_cast<double>(r->false_positives);
    }
    out.recall_mean = recall / static_cast<double>(ok.size());
    out.false_positives_mean = fp / static_cast<double>(ok.size());
    for (const auto& row : out.ensemble.rows) {
      if (row.presence <= 0.5) continue;
      const bool is_true = std::find(truth.begin(), truth.end(), row.support) != truth.end();
      (is_true ? out.true_found : out.false_found) += 1;
    }
  }
  return out;
}

const ModelRuns& ExperimentResult::model(const std::string& name) const {
  for (const auto& m : models) {
    if (m.model == name) return m;
  }
  throw UsageError("experiment has no model named " + name);
}

namespace {

using DataFactory = std::function<GeneratedData(std::uint64_t seed)>;
using TruthImportance = std::function<Eigen::VectorXd(const Dataset&)>;

void score(RunRecord& record, std::span<const Support> truth) {
  record.true_positives = 0;
  for (const auto& t : truth) record.true_positives += record.functions.contains(t) ? 1 : 0;
  record.false_positives =
      truth.empty() ? 0 : static_cast<Index>(record.functions.size()) - record.true_positives;
}

void fill_record(RunRecord& record, NetworkParams params, double train_mse, double test_mse,
                 const Dataset& full, const ExperimentConfig& config,
                 std::span<const Support> truth) {
  record.params = std::move(params);
  // Records are kept in raw units so they compare directly with the generator.
  const double y_var = full.stats.y_sd * full.stats.y_sd;
  record.train_mse = train_mse * y_var;
  record.test_mse = test_mse * y_var;
  record.report = extract(record.params, full, config.extract);
  record.importance = (record.report.importance.array() * full.stats.y_sd / full.stats.x_sd.array()).matrix();
  record.functions = function_set(record.report.components);
  score(record, truth);
  record.ok = true;
}

ExperimentResult run_experiment(std::string name, const DataFactory& make,
                                std::vector<Support> truth, const ExperimentConfig& config,
                                const TruthImportance& truth_importance) {
  config.validate();
  ExperimentResult result;
  result.name = std::move(name);
  result.config = config;
  result.true_supports = truth;

  if (config.lambda) {
    result.lambda_star = *config.lambda;
  } else {
    const GeneratedData pilot = make(derive_seed(config.master_seed, 1, 0));
    TrainConfig path_train = config.train;
    if (config.path_restarts > 0) path_train.n_restarts = config.path_restarts;
    PathOptions path = config.path;
    path.test_fraction = config.test_fraction;
    path.split_seed = derive_seed(config.master_seed, 4, 0);
    const std::vector<double> grid =
        config.lambda_grid.empty()
            ? auto_lambda_grid(pilot.data, path_train, config.grid_points, path)
            : config.lambda_grid;
    result.pilot_path = run_lambda_path(pilot.data, grid, path_train, path);
    result.lambda_star = select_lambda(*result.pilot_path);
  }

  const auto n_runs = static_cast<std::size_t>(config.n_runs);
  const std::size_t n_models = 1 + config.baselines.size();
  std::vector<std::vector<RunRecord>> per_run(n_runs);
  std::vector<Eigen::VectorXd> truth_per_run(n_runs);
  std::vector<std::vector<std::string>> names(n_runs);

  parallel_for(
      n_runs,
      [&](std::size_t i) {
        RunRecord base;
        base.id = i;
        base.data_seed = derive_seed(config.master_seed, 1, i);
        base.split_seed = derive_seed(config.master_seed, 2, i);
        base.train_seed = derive_seed(config.master_seed, 3, i);
        std::vector<RunRecord>& records = per_run[i];
        records.assign(n_models, base);
        records[0].model = "prada";
        records[0].lambda = result.lambda_star;
        for (std::size_t b = 0; b < config.baselines.size(); ++b) {
          records[b + 1].model = config.baselines[b].name;
        }
        try {
          const GeneratedData gen = make(base.data_seed);
          names[i] = gen.data.column_names;
          if (truth_importance) truth_per_run[i] = truth_importance(gen.data);
          const Split split = random_split(gen.data.rows(), config.test_fraction, base.split_seed);
          const Dataset train = gen.data.subset(split.train);
          const Dataset test = gen.data.subset(split.test);
          TrainConfig cfg = config.train;
          cfg.rng_seed = base.train_seed;
          cfg.workers = 1;
          cfg.lambda = result.lambda_star;
          const std::vector<SmoothFit> smooth = train_smooth_restarts(train, cfg);
          TrainResult prada = finish_prada(train, test, smooth, cfg);
          fill_record(records[0], std::move(prada.params), prada.train_mse, prada.test_mse,
                      gen.data, config, truth);

          for (std::size_t b = 0; b < config.baselines.size(); ++b) {
            RunRecord& rec = records[b + 1];
            try {
              Calibration cal = calibrate_matched_baseline(records[0].params,
                                                           config.baselines[b].mode, train, test,
                                                           smooth, cfg, config.calibration);
              rec.lambda = cal.lambda;
              rec.match_target = cal.target;
              rec.match_achieved = cal.achieved;
              fill_record(rec, std::move(cal.model), cal.train_mse, cal.test_mse, gen.data, config,
                          truth);
            } catch (const std::exception& e) {
              rec.ok = false;
              rec.error = e.what();
            }
          }
        } catch (const std::exception& e) {
          for (auto& rec : records) {
            if (!rec.ok) rec.error = e.what();
          }
        }
      },
      config.train.workers);

  for (std::size_t i = 0; i < n_runs; ++i) {
    if (!names[i].empty()) {
      result.column_names = names[i];
      break;
    }
  }
  if (truth_importance) {
    Eigen::VectorXd sum;
    std::size_t count = 0;
    for (const auto& t : truth_per_run) {
      if (t.size() == 0) continue;
      sum = count == 0 ? t : Eigen::VectorXd(sum + t);
      ++count;
    }
    if (count > 0) result.true_importance = sum / static_cast<double>(count);
  }
  for (std::size_t m = 0; m < n_models; ++m) {
    ModelRuns runs;
    runs.model = m == 0 ? "prada" : config.baselines[m - 1].name;
    for (std::size_t i = 0; i < n_runs; ++i) runs.runs.push_back(std::move(per_run[i][m]));
    runs.summary = summarize_runs(runs.model, runs.runs, truth);
    result.models.push_back(std::move(runs));
  }
  return result;
}

}  // namespace

ExperimentResult run_legendre_benchmark(const ExperimentConfig& config,
                                        const LegendreOptions& options) {
  if (options.n_covariates < 4) throw UsageError("the Legendre benchmark needs at least 4 covariates");
  auto make = [options](std::uint64_t seed) {
    return generate_legendre_dataset(options.n_samples, options.n_covariates, options.noise_sd,
                                     seed);
  };
  auto truth_importance = [](const Dataset& data) {
    // Large-sample values are the same for every replicate.
    Eigen::VectorXd out = Eigen::VectorXd::Zero(data.cols());
    for (int k = 1; k <= 4; ++k) {
      out[k - 1] = legendre_true_importance(k);
    }
    return out;
  };
  return run_experiment("legendre", make, {{0}, {1}, {2}, {3}}, config, truth_importance);
}

ExperimentResult run_recovery_study(const GeneratorSpec& spec, const ExperimentConfig& config) {
  spec.validate();
  std::vector<Support> truth;
  for (const auto& c : spec.components) {
    Support s = c.support;
    std::sort(s.begin(), s.end());
    if (std::find(truth.begin(), truth.end(), s) == truth.end()) truth.push_back(s);
  }
  if (truth.empty()) throw UsageError("generator has no components");
  auto make = [spec](std::uint64_t seed) { return generate_additive_dataset(spec, seed); };
  return run_experiment("recovery", make, truth, config, {});
}

namespace {

using nlohmann::json;

json metrics_json(const RunRecord& r, const std::vector<std::string>& names) {
  json functions = json::array();
  for (const auto& [support, complexity] : r.functions.functions) {
    functions.push_back({{"support", support},
                         {"label", support_label(support, names)},
                         {"complexity", complexity}});
  }
  json j = {{"model", r.model},
            {"ok", r.ok},
            {"error", r.error},
            {"data_seed", r.data_seed},
            {"split_seed", r.split_seed},
            {"train_seed", r.train_seed},
            {"lambda", r.lambda}};
  if (r.ok) {
    j["train_mse"] = r.train_mse;
    j["test_mse"] = r.test_mse;
    j["importance"] = std::vector<double>(r.importance.data(), r.importance.data() + r.importance.size());
    j["functions"] = functions;
    j["true_positives"] = r.true_positives;
    j["false_positives"] = r.false_positives;
    if (r.model != "prada") {
      j["match_target"] = r.match_target;
      j["match_achieved"] = r.match_achieved;
    }
  }
  return j;
}

std::string fmt(double v) { return std::isnan(v) ? "nan" : detail::format_double(v); }

}  // namespace

void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir) {
  const auto& names = result.column_names;
  const auto n_runs = static_cast<std::size_t>(result.config.n_runs);

  for (std::size_t i = 0; i < n_runs; ++i) {
    const auto run_dir = dir / "runs" / std::to_string(i);
    json metrics = json::object();
    for (const auto& m : result.models) {
      const RunRecord& r = m.runs[i];
      metrics[m.model] = metrics_json(r, names);
      if (!r.ok) continue;
      const auto model_dir = m.model == "prada" ? run_dir : run_dir / m.model;
      save_model({r.params, names, "y", r.report.stats}, model_dir / "model.json");
      write_text_file(model_dir / "report.json", report_to_json(r.report));
    }
    write_text_file(run_dir / "metrics.json", metrics.dump(2) + "\n");
  }

  const auto agg = dir / "aggregate";
  std::ostringstream table1;
  table1 << "model,n_ok,n_failed,test_mse_mean,test_mse_sd";
  for (const auto& n : names) table1 << ",importance_" << n << "_mean,importance_" << n << "_sd";
  table1 << '\n';
  if (result.true_importance.size() == static_cast<Index>(names.size()) && !names.empty()) {
    table1 << "truth,,,,";
    for (Index d = 0; d < result.true_importance.size(); ++d) {
      table1 << ',' << fmt(result.true_importance[d]) << ",0";
    }
    table1 << '\n';
  }
  for (const auto& m : result.models) {
    const auto& s = m.summary;
    table1 << m.model << ',' << s.n_ok << ',' << s.n_failed << ',' << fmt(s.test_mse_mean) << ','
           << fmt(s.test_mse_sd);
    for (std::size_t d = 0; d < names.size(); ++d) {
      const bool have = s.importance_mean.size() == static_cast<Index>(names.size());
      table1 << ',' << (have ? fmt(s.importance_mean[static_cast<Index>(d)]) : "nan") << ','
             << (have ? fmt(s.importance_sd[static_cast<Index>(d)]) : "nan");
    }
    table1 << '\n';
  }
  write_text_file(agg / "table1.csv", table1.str());

  std::ostringstream table2;
  table2 << "model,support,presence,mean_complexity,true_component\n";
  for (const auto& m : result.models) {
    for (const auto& row : m.summary.ensemble.rows) {
      const bool is_true = std::find(result.true_supports.begin(), result.true_supports.end(),
                                     row.support) != result.true_supports.end();
      table2 << m.model << ",\"" << support_label(row.support, names) << "\","
             << fmt(row.presence) << ',' << fmt(row.mean_complexity) << ',' << (is_true ? 1 : 0)
             << '\n';
    }
  }
  write_text_file(agg / "table2.csv", table2.str());

  std::ostringstream scores;
  scores << "model,medoid_run,medoid_similarity,recall_mean,false_positives_mean,true_found,"
            "false_found\n";
  for (const auto& m : result.models) {
    const auto& s = m.summary;
    scores << m.model << ',' << s.medoid_run << ',' << fmt(s.medoid_similarity) << ','
           << fmt(s.recall_mean) << ',' << fmt(s.false_positives_mean) << ',' << s.true_found << ','
           << s.false_found << '\n';
  }
  write_text_file(agg / "scores.csv", scores.str());

  std::ostringstream curves;
  curves << "model,run,component_id,support,variable,x,value\n";
  for (const auto& m : result.models) {
    if (m.summary.n_ok == 0) continue;
    const RunRecord& r = m.runs[m.summary.medoid_run];
    for (const auto& g : r.report.grids) {
      const auto& support = r.report.components[static_cast<std::size_t>(g.component)].support;
      const std::string label = support_label(support, names);
      const auto v = static_cast<std::size_t>(g.variable);
      for (std::size_t k = 0; k < g.x.size(); ++k) {
        curves << m.model << ',' << r.id << ',' << g.component << ",\"" << label << "\","
               << (v < names.size() ? names[v] : std::to_string(v)) << ',' << fmt(g.x[k]) << ','
               << fmt(g.value[k]) << '\n';
      }
    }
  }
  write_text_file(agg / "curves.csv", curves.str());

  if (result.pilot_path) {
    std::ostringstream path;
    write_path_csv(*result.pilot_path, path);
    write_text_file(agg / "lambda_path.csv", path.str());
  }

  json meta = {{"experiment", result.name},
               {"n_runs", result.config.n_runs},
               {"master_seed", result.config.master_seed},
               {"lambda_star", result.lambda_star},
               {"lambda_source", result.config.lambda ? "fixed" : "pilot_path"},
               {"split_method", "random_without_replacement"},
               {"test_fraction", result.config.test_fraction},
               {"medoid_similarity_excludes_medoid", true},
               {"column_names", names}};
  std::ostringstream config_text;
  write_config(result.config.train, config_text);
  meta["train_config"] = config_text.str();
  json baselines = json::array();
  for (const auto& b : result.config.baselines) {
    baselines.push_back({{"name", b.name}, {"match", to_string(b.mode)}});
  }
  meta["baselines"] = baselines;
  write_text_file(dir / "experiment.json", meta.dump(2) + "\n");
}

GeneratorSpec generator_from_report(const ExtractionReport& report, Index n_samples,
                                    double noise_sd, const Eigen::MatrixXd& correlation) {
  GeneratorSpec spec;
  spec.n_samples = n_samples;
  spec.n_covariates = report.params.inputs();
  spec.law = CovariateLaw::gaussian;
  spec.correlation = correlation;
  spec.noise_sd = noise_sd;
  spec.column_names = report.column_names;
  if (spec.column_names.empty()) spec.column_names = default_column_names(spec.n_covariates);
  for (const auto& component : report.components) {
    auto params = std::make_shared<const NetworkParams>(report.params);
    spec.components.push_back(
        {support_label(component.support, spec.column_names), component.support,
         [component, params](std::span<const double> values) {
           return evaluate_component(component, *params, values);
         }});
  }
  return spec;
}

}  // namespace prada
