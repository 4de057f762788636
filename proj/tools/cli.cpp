#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prada/analysis.hpp"
#include "prada/datagen.hpp"
#include "prada/error.hpp"
#include "prada/experiments.hpp"
#include "prada/extraction.hpp"
#include "prada/io.hpp"
#include "prada/lambda_path.hpp"
#include "prada/pipeline.hpp"

namespace prada {

namespace fs = std::filesystem;

namespace {

std::string quoted(const std::string& text) {
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

std::string kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::data: return "data";
    case ErrorKind::numeric: return "numeric";
  }
  return "unknown";
}

// Shared training flags: config file, key=value overrides and shortcuts.
struct TrainFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<double> lambda;
  std::optional<double> gamma;
  std::optional<Index> hidden;
  std::optional<int> restarts;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App& app) {
    app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    app.add_option("--set", overrides, "override one config key (key=value), repeatable");
    app.add_option("--lambda", lambda, "penalty strength");
    app.add_option("--gamma", gamma, "adaptive weight exponent");
    app.add_option("--hidden", hidden, "hidden units");
    app.add_option("--restarts", restarts, "random restarts");
    app.add_option("--seed", seed, "random seed");
  }

  TrainConfig resolve(TrainConfig base = {}) const {
    TrainConfig c = config_path.empty() ? base : read_config_file(config_path, base);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      apply_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (lambda) c.lambda = *lambda;
    if (gamma) c.gamma = *gamma;
    if (hidden) c.hidden_units = *hidden;
    if (restarts) c.n_restarts = *restarts;
    if (seed) c.rng_seed = *seed;
    c.validate();
    return c;
  }
};

void write_file(const fs::path& path, const std::string& text) { write_text_file(path, text); }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse additive neural network regression with the adaptive lasso"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a sparse network; writes model.json");
  std::string train_data;
  std::string train_out = ".";
  double train_test_fraction = 0.1;
  std::uint64_t train_split_seed = 0;
  TrainFlags train_flags;
  train_cmd->add_option("--data", train_data, "CSV, final column is the response")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train_out, "output directory");
  train_cmd->add_option("--test-fraction", train_test_fraction, "held-out share of rows");
  train_cmd->add_option("--split-seed", train_split_seed, "seed of the train/test split");
  train_flags.add_to(*train_cmd);

  // path
  auto* path_cmd = app.add_subcommand("path", "penalty sweep; writes lambda_path.csv, prints lambda*");
  std::string path_data;
  std::string path_out = ".";
  std::vector<double> path_lambdas;
  int path_points = 20;
  int path_splits = 20;
  double path_test_fraction = 0.1;
  std::uint64_t path_split_seed = 0;
  std::string path_rule = "two_sd";
  TrainFlags path_flags;
  path_cmd->add_option("--data", path_data, "CSV, final column is the response")
      ->required()
      ->check(CLI::ExistingFile);
  path_cmd->add_option("--out", path_out, "output directory");
  path_cmd->add_option("--lambdas", path_lambdas, "explicit grid (ascending)")->delimiter(',');
  path_cmd->add_option("--grid-points", path_points, "points of the auto-calibrated grid");
  path_cmd->add_option("--splits", path_splits, "random splits per lambda");
  path_cmd->add_option("--test-fraction", path_test_fraction, "held-out share of rows");
  path_cmd->add_option("--split-seed", path_split_seed, "seed of the first split");
  path_cmd->add_option("--rule", path_rule, "selection rule")
      ->check(CLI::IsMember({"two_sd", "one_se"}));
  path_flags.add_to(*path_cmd);

  // extract
  auto* extract_cmd = app.add_subcommand(
      "extract", "translate a model into additive components; writes report.json and curves");
  std::string extract_model;
  std::string extract_data;
  std::string extract_out = ".";
  bool extract_no_split = false;
  double extract_sigma2 = 0.01;
  Index extract_points = 101;
  double extract_fixed = 1.0;
  extract_cmd->add_option("--model", extract_model, "model.json")->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--data", extract_data, "CSV used for the linear split and importance")
      ->required()
      ->check(CLI::ExistingFile);
  extract_cmd->add_option("--out", extract_out, "output directory");
  extract_cmd->add_flag("--no-linear-split", extract_no_split, "keep near-linear inputs in tanh nodes");
  extract_cmd->add_option("--sigma2-max", extract_sigma2, "derivative variance threshold");
  extract_cmd->add_option("--grid-points", extract_points, "points per curve");
  extract_cmd->add_option("--fixed", extract_fixed, "co-input value for multi-input curves");

  // importance
  auto* importance_cmd = app.add_subcommand("importance", "saliency importance; writes importance.csv");
  std::string importance_model;
  std::string importance_data;
  std::string importance_out = ".";
  importance_cmd->add_option("--model", importance_model, "model.json")
      ->required()
      ->check(CLI::ExistingFile);
  importance_cmd->add_option("--data", importance_data, "CSV")->required()->check(CLI::ExistingFile);
  importance_cmd->add_option("--out", importance_out, "output directory");

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "write a synthetic dataset CSV");
  bool sim_legendre = false;
  bool sim_linear = false;
  bool sim_six = false;
  Index sim_n = 1000;
  Index sim_d = 5;
  std::optional<double> sim_noise;
  std::uint64_t sim_seed = 0;
  std::string sim_out;
  auto* legendre_flag = simulate_cmd->add_flag("--legendre", sim_legendre, "Legendre polynomial benchmark");
  auto* linear_flag = simulate_cmd->add_flag("--linear-tanh", sim_linear, "y = 2 x1 + tanh(3 x2)");
  auto* six_flag = simulate_cmd->add_flag("--six-component", sim_six, "six-component correlated generator");
  legendre_flag->excludes(linear_flag)->excludes(six_flag);
  linear_flag->excludes(six_flag);
  simulate_cmd->add_option("--n", sim_n, "rows");
  simulate_cmd->add_option("--covariates", sim_d, "covariates (Legendre only)");
  simulate_cmd->add_option("--noise", sim_noise, "noise standard deviation");
  simulate_cmd->add_option("--seed", sim_seed, "random seed");
  simulate_cmd->add_option("--out", sim_out, "output CSV (default: standard output)");

  // benchmark
  auto* bench_cmd = app.add_subcommand("benchmark", "run a replicated experiment into a directory");
  bool bench_legendre = false;
  bool bench_recovery = false;
  bool bench_quick = false;
  bool bench_no_baselines = false;
  std::optional<int> bench_runs;
  std::uint64_t bench_master_seed = 0;
  std::string bench_out;
  TrainFlags bench_flags;
  auto* bl = bench_cmd->add_flag("--legendre", bench_legendre, "Legendre benchmark");
  auto* br = bench_cmd->add_flag("--recovery", bench_recovery, "six-component recovery study");
  bl->excludes(br);
  bench_cmd->add_flag("--quick", bench_quick, "desk-scale settings");
  bench_cmd->add_flag("--no-baselines", bench_no_baselines, "skip the matched baselines");
  bench_cmd->add_option("--runs", bench_runs, "replicates");
  bench_cmd->add_option("--master-seed", bench_master_seed, "seed all replicates derive from");
  bench_cmd->add_option("--out", bench_out, "experiment directory")->required();
  bench_flags.add_to(*bench_cmd);

  // compare
  auto* compare_cmd = app.add_subcommand(
      "compare", "ensemble summary and medoid of several models; writes ensemble_summary.csv");
  std::vector<std::string> compare_models;
  std::string compare_data;
  std::string compare_out = ".";
  compare_cmd->add_option("--models", compare_models, "model.json files")
      ->required()
      ->check(CLI::ExistingFile);
  compare_cmd->add_option("--data", compare_data, "CSV for the linear split (optional)")
      ->check(CLI::ExistingFile);
  compare_cmd->add_option("--out", compare_out, "output directory");

  std::string subcommand = "prada";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    for (const auto* sub : app.get_subcommands()) subcommand = sub->get_name();
    err << "error subcommand=" << subcommand << " kind=usage message=" << quoted(e.what()) << '\n';
    return static_cast<int>(ErrorKind::usage);
  }

  try {
    if (train_cmd->parsed()) {
      subcommand = "train";
      const TrainConfig config = train_flags.resolve();
      const Dataset data = ingest_csv(fs::path(train_data));
      const Split split = random_split(data.rows(), train_test_fraction, train_split_seed);
      const TrainResult result = train_prada(data.subset(split.train), data.subset(split.test), config);
      save_model({result.params, data.column_names, data.response_name, data.stats},
                 fs::path(train_out) / "model.json");
      out << "train_mse=" << result.train_mse << " test_mse=" << result.test_mse
          << " live_nodes=" << result.params.live_nodes()
          << " nonzero_weights=" << result.params.nonzero_penalized()
          << " converged=" << (result.converged() ? "true" : "false") << '\n';
    } else if (path_cmd->parsed()) {
      subcommand = "path";
      const TrainConfig config = path_flags.resolve();
      const Dataset data = ingest_csv(fs::path(path_data));
      PathOptions options;
      options.n_splits = path_splits;
      options.test_fraction = path_test_fraction;
      options.split_seed = path_split_seed;
      const std::vector<double> grid =
          path_lambdas.empty() ? auto_lambda_grid(data, config, path_points, options) : path_lambdas;
      const LambdaPathTable table = run_lambda_path(data, grid, config, options);
      std::ostringstream csv;
      write_path_csv(table, csv);
      write_file(fs::path(path_out) / "lambda_path.csv", csv.str());
      const SelectionRule rule =
          path_rule == "one_se" ? SelectionRule::one_standard_error : SelectionRule::two_sd;
      out << select_lambda(table, rule) << '\n';
    } else if (extract_cmd->parsed()) {
      subcommand = "extract";
      const SavedModel model = load_model(extract_model);
      const Dataset data = ingest_csv_for_model(extract_data, model);
      ExtractOptions options;
      options.split_linear = !extract_no_split;
      options.sigma2_max = extract_sigma2;
      options.grid.points = extract_points;
      options.grid.fixed_values = {extract_fixed};
      const ExtractionReport report = extract(model.params, data, options);
      persist_report(report, extract_out);
      for (const auto& c : report.components) {
        out << support_label(c.support, report.column_names) << " complexity=" << c.complexity()
            << '\n';
      }
    } else if (importance_cmd->parsed()) {
      subcommand = "importance";
      const SavedModel model = load_model(importance_model);
      const Dataset data = ingest_csv_for_model(importance_data, model);
      const Eigen::VectorXd importance = variable_importance(model.params, data);
      std::ostringstream csv;
      write_importance_csv(importance, model.column_names, csv);
      write_file(fs::path(importance_out) / "importance.csv", csv.str());
      out << csv.str();
    } else if (simulate_cmd->parsed()) {
      subcommand = "simulate";
      GeneratedData gen;
      if (sim_linear) {
        gen = generate_additive_dataset(linear_plus_tanh_spec(sim_n, sim_noise.value_or(0.05)), sim_seed);
      } else if (sim_six) {
        gen = generate_additive_dataset(six_component_spec(sim_n, sim_noise.value_or(0.1)), sim_seed);
      } else {
        gen = generate_legendre_dataset(sim_n, sim_d, sim_noise.value_or(0.1), sim_seed);
      }
      std::ostringstream csv;
      write_dataset_csv(gen.raw_X, gen.raw_y, gen.data.column_names, gen.data.response_name, csv);
      if (sim_out.empty()) {
        out << csv.str();
      } else {
        write_file(sim_out, csv.str());
      }
    } else if (bench_cmd->parsed()) {
      subcommand = "benchmark";
      if (!bench_legendre && !bench_recovery) throw UsageError("choose --legendre or --recovery");
      ExperimentConfig config = bench_recovery ? recovery_config(bench_quick) : legendre_config(bench_quick);
      config.train = bench_flags.resolve(config.train);
      if (bench_flags.lambda) config.lambda = *bench_flags.lambda;
      if (bench_runs) config.n_runs = *bench_runs;
      config.master_seed = bench_master_seed;
      if (bench_no_baselines) config.baselines.clear();
      const ExperimentResult result =
          bench_recovery ? run_recovery_study(six_component_spec(), config)
                         : run_legendre_benchmark(config);
      write_experiment(result, bench_out);
      out << "lambda_star=" << result.lambda_star << '\n';
      for (const auto& m : result.models) {
        const auto& s = m.summary;
        out << m.model << " ok=" << s.n_ok << " failed=" << s.n_failed
            << " test_mse=" << s.test_mse_mean << " medoid_similarity=" << s.medoid_similarity;
        if (!result.true_supports.empty()) {
          out << " recall=" << s.recall_mean << " false_positives=" << s.false_positives_mean;
        }
        out << '\n';
      }
    } else if (compare_cmd->parsed()) {
      subcommand = "compare";
      std::vector<FunctionSet> sets;
      std::vector<std::string> names;
      for (const auto& path : compare_models) {
        const SavedModel model = load_model(path);
        if (names.empty()) names = model.column_names;
        if (compare_data.empty()) {
          sets.push_back(function_set(model.params));
        } else {
          const Dataset data = ingest_csv_for_model(compare_data, model);
          const LinearSplit split = split_linear_terms(group_nodes(model.params), model.params, data);
          sets.push_back(function_set(split.components));
        }
      }
      const EnsembleSummary summary = summarize_ensemble(sets);
      std::ostringstream csv;
      write_summary_csv(summary, csv, names);
      write_file(fs::path(compare_out) / "ensemble_summary.csv", csv.str());
      const std::size_t medoid = medoid_model(sets);
      out << "medoid=" << medoid << " path=" << compare_models[medoid];
      if (sets.size() >= 2) out << " mean_similarity=" << mean_similarity_to_medoid(sets);
      out << '\n';
    }
  } catch (const Error& e) {
    err << "error subcommand=" << subcommand << " kind=" << kind_name(e.kind())
        << " message=" << quoted(e.what()) << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "error subcommand=" << subcommand << " kind=data message=" << quoted(e.what()) << '\n';
    return static_cast<int>(ErrorKind::data);
  } catch (const std::exception& e) {
    err << "error subcommand=" << subcommand << " kind=numeric message=" << quoted(e.what()) << '\n';
    return static_cast<int>(ErrorKind::numeric);
  }
  return 0;
}

}  // namespace prada
