#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prada/dataset.hpp"
#include "prada/extraction.hpp"
#include "prada/network.hpp"
#include "prada/pipeline.hpp"

namespace prada {

/// Header plus numeric cells of a comma-separated file.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// Parses a CSV with a mandatory header. Every cell must be a finite number;
/// errors name the line and column.
CsvTable read_csv(std::istream& in, const std::string& source = "input");

/// Reads a CSV whose final column is the response and standardizes it.
Dataset ingest_csv(const std::filesystem::path& path);
Dataset ingest_csv(std::istream& in, const std::string& source = "input");

/// Raw-unit dataset with a header; the response is the final column.
void write_dataset_csv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const std::vector<std::string>& column_names,
                       const std::string& response_name, std::ostream& out);

/// A trained network with what is needed to apply it to raw data.
struct SavedModel {
  NetworkParams params;
  std::vector<std::string> column_names;
  std::string response_name = "y";
  StandardizationStats stats;
};

std::string model_to_json(const SavedModel& model);
SavedModel model_from_json(const std::string& text);
void save_model(const SavedModel& model, const std::filesystem::path& path);
SavedModel load_model(const std::filesystem::path& path);

/// Reads a CSV laid out like the model's training data and scales it with
/// the model's standardization statistics. Column names must match.
Dataset ingest_csv_for_model(const std::filesystem::path& path, const SavedModel& model);

std::string report_to_json(const ExtractionReport& report);
ExtractionReport report_from_json(const std::string& text);
ExtractionReport load_report(const std::filesystem::path& path);

/// CSV with columns component_id, variable, x, value. Co-input settings
/// other than the default are written as extra curves with the same ids.
void write_grids_csv(const std::vector<PartialDependenceGrid>& grids, std::ostream& out,
                     const std::vector<std::string>& column_names = {});

/// Writes report.json and partial_dependence.csv into `dir`, creating it.
void persist_report(const ExtractionReport& report, const std::filesystem::path& dir);

/// CSV with columns variable, importance.
void write_importance_csv(const Eigen::VectorXd& importance,
                          const std::vector<std::string>& column_names, std::ostream& out);

/// Applies one key=value setting. Keys are TrainConfig field names.
void apply_config_value(TrainConfig& config, const std::string& key, const std::string& value);

/// Flat key=value file; '#' starts a comment. Unknown keys are rejected.
TrainConfig read_config(std::istream& in, TrainConfig base = {});
TrainConfig read_config_file(const std::filesystem::path& path, TrainConfig base = {});

/// Inverse of read_config: every key with its current value.
void write_config(const TrainConfig& config, std::ostream& out);

/// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace prada
