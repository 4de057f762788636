#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "prada/datagen.hpp"
#include "prada/error.hpp"
#include "prada/io.hpp"

using namespace prada;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "prada_io_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string data_error(const std::string& csv) {
  std::istringstream in(csv);
  try {
    ingest_csv(in, "t.csv");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

SavedModel sample_model() {
  SavedModel m;
  m.params = test::random_network(5, 3, 21);
  m.params.input_weights()(2, 1) = 0.0;
  m.column_names = {"a", "b", "c"};
  m.response_name = "target";
  m.stats.x_mean = Eigen::Vector3d(0.1, -2.0, 3.0);
  m.stats.x_sd = Eigen::Vector3d(1.5, 0.25, 7.0);
  m.stats.y_mean = 0.3;
  m.stats.y_sd = 1.0 / 3.0;
  return m;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("csv ingestion") {
    std::istringstream in("x1,x2,y\n1,2,3\n2,4,5\n3,7,6\n");
    const Dataset d = ingest_csv(in);
    CHECK(d.rows() == 3);
    CHECK(d.cols() == 2);
    CHECK(d.column_names == std::vector<std::string>{"x1", "x2"});
    CHECK(d.response_name == "y");
    CHECK(d.stats.x_mean[1] == doctest::Approx(13.0 / 3.0));
    CHECK(d.stats.y_mean == doctest::Approx(14.0 / 3.0));
    CHECK(std::abs(d.X.col(0).mean()) < 1e-15);
  }

  TEST_CASE("csv quirks") {
    std::istringstream in("\xEF\xBB\xBF\"a\",b\r\n1.5,+2\r\n\r\n-1e-3,4\r\n");
    const CsvTable t = read_csv(in);
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.values.rows() == 2);
    CHECK(t.values(0, 1) == 2.0);
    CHECK(t.values(1, 0) == -1e-3);
  }

  TEST_CASE("csv errors name the location") {
    CHECK(data_error("x1,x2,y\n1,2,3\n1,nan,4\n") ==
          "t.csv: line 3, column 2 (x2): non-numeric value 'nan'");
    CHECK(data_error("x1,x2,y\n1,2,3\n1,,4\n") == "t.csv: line 3, column 2 (x2): missing value");
    CHECK(data_error("x1,x2,y\n1,2,3\n1,abc,4\n").find("non-numeric value 'abc'") != std::string::npos);
    CHECK(data_error("x1,x2,y\n1,2,3\n1,2\n").find("line 3 has 2 fields") != std::string::npos);
    CHECK(data_error("g,h,y\n1,2,3\n2,2,4\n3,2,5\n") == "constant column: h");
    CHECK(data_error("x1,y\n1,2\n") == "t.csv: need at least two data rows");
    CHECK(data_error("y\n1\n2\n") == "t.csv: need at least one covariate and a response");
    CHECK(data_error("") == "t.csv: missing header row");
    CHECK(data_error("x1,y\n1,inf\n2,3\n").find("non-numeric value 'inf'") != std::string::npos);
  }

  TEST_CASE("missing file is a data error") {
    CHECK_THROWS_AS(ingest_csv(fs::path("/nonexistent/prada.csv")), DataError);
  }

  TEST_CASE("model round trip is bit exact") {
    const SavedModel m = sample_model();
    const SavedModel back = model_from_json(model_to_json(m));
    CHECK(back.params == m.params);
    CHECK(back.column_names == m.column_names);
    CHECK(back.response_name == "target");
    CHECK(back.stats.x_sd == m.stats.x_sd);
    CHECK(back.stats.y_sd == m.stats.y_sd);

    const Dataset probe = test::random_dataset(100, 3, 22);
    CHECK(predict(back.params, probe.X) == predict(m.params, probe.X));

    const fs::path dir = scratch("model");
    save_model(m, dir / "nested" / "model.json");
    CHECK(load_model(dir / "nested" / "model.json").params == m.params);
  }

  TEST_CASE("malformed model documents") {
    CHECK_THROWS_AS(model_from_json("{"), DataError);
    CHECK_THROWS_AS(model_from_json("{}"), DataError);
    std::string text = model_to_json(sample_model());
    const auto pos = text.find("\"output_bias\"");
    REQUIRE(pos != std::string::npos);
    CHECK_THROWS_AS(model_from_json(text.substr(0, pos) + "\"junk\": 1}"), DataError);
  }

  TEST_CASE("applying a model's scaling to new data") {
    const SavedModel m = sample_model();
    const fs::path dir = scratch("apply");
    std::ofstream(dir / "new.csv") << "a,b,c,target\n1.6,-1.75,10,0.3\n0.1,-2,3,0.5\n";
    const Dataset d = ingest_csv_for_model(dir / "new.csv", m);
    CHECK(d.X(0, 0) == doctest::Approx(1.0));
    CHECK(d.X(0, 1) == doctest::Approx(1.0));
    CHECK(d.X(0, 2) == doctest::Approx(1.0));
    CHECK(d.X(1, 2) == 0.0);
    CHECK(d.y[0] == 0.0);
    std::ofstream(dir / "bad.csv") << "a,z,c,target\n1,2,3,4\n";
    CHECK_THROWS_AS(ingest_csv_for_model(dir / "bad.csv", m), DataError);
  }

  TEST_CASE("report round trip") {
    const GeneratedData g = generate_legendre_dataset(200, 5, 0.1, 2);
    NetworkParams p(4, 5);
    for (Index h = 0; h < 4; ++h) {
      p.input_weights()(h, h) = 0.8 + 0.3 * static_cast<double>(h);
      p.output_weights()[h] = 1.0 - 0.4 * static_cast<double>(h);
      p.input_biases()[h] = 0.1 * static_cast<double>(h);
    }
    p.input_weights()(3, 1) = 0.5;
    const ExtractionReport r = extract(p, g.data);
    const ExtractionReport back = report_from_json(report_to_json(r));
    CHECK(back.params == r.params);
    CHECK(back.output_bias == r.output_bias);
    CHECK(back.importance == r.importance);
    CHECK(back.column_names == r.column_names);
    REQUIRE(back.components.size() == r.components.size());
    for (std::size_t i = 0; i < r.components.size(); ++i) {
      CHECK(back.components[i].support == r.components[i].support);
      CHECK(back.components[i].nodes == r.components[i].nodes);
      CHECK(back.components[i].linear_terms == r.components[i].linear_terms);
    }
    REQUIRE(back.grids.size() == r.grids.size());
    for (const auto& grid : back.grids) {
      const auto values = recompute_grid(grid, back.components[static_cast<std::size_t>(grid.component)],
                                         back.params);
      for (std::size_t i = 0; i < values.size(); ++i) CHECK(std::abs(values[i] - grid.value[i]) < 1e-12);
    }
    CHECK(back.evaluate(g.data.X) == r.evaluate(g.data.X));

    std::ostringstream csv;
    write_grids_csv(r.grids, csv, r.column_names);
    const std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') ==
          static_cast<long>(1 + r.components.size() * 101));
    CHECK(text.rfind("component_id,variable,x,value\n", 0) == 0);

    const fs::path dir = scratch("report");
    persist_report(r, dir / "out");
    CHECK(fs::exists(dir / "out" / "partial_dependence.csv"));
    CHECK(load_report(dir / "out" / "report.json").params == r.params);
  }

  TEST_CASE("a constant model has no components") {
    const Dataset d = test::random_dataset(50, 3, 23);
    NetworkParams p(3, 3);
    p.output_bias() = 0.7;
    const ExtractionReport r = extract(p, d);
    CHECK(r.components.empty());
    CHECK(r.grids.empty());
    CHECK(r.output_bias == doctest::Approx(0.7));
    CHECK(r.importance.isZero(0.0));
    const ExtractionReport back = report_from_json(report_to_json(r));
    CHECK(back.components.empty());
  }

  TEST_CASE("importance csv") {
    std::ostringstream out;
    write_importance_csv(Eigen::Vector2d(0.5, 0.0), {"a", "b"}, out);
    CHECK(out.str() == "variable,importance\na,0.5\nb,0\n");
    CHECK_THROWS_AS(write_importance_csv(Eigen::Vector2d(0.5, 0.0), {"a"}, out), UsageError);
  }

  TEST_CASE("config files") {
    std::istringstream in(
        "# comment\nlambda = 0.002\nhidden_units=12\n\ngamma=0\nadam_step_size=0.01\ndgr_joint=true\n");
    const TrainConfig c = read_config(in);
    CHECK(c.lambda == 0.002);
    CHECK(c.hidden_units == 12);
    CHECK(c.gamma == 0.0);
    CHECK(c.adam.step_size == 0.01);
    CHECK(c.dgr_joint);
    CHECK(c.n_restarts == TrainConfig{}.n_restarts);

    std::istringstream unknown("lamda=1\n");
    CHECK_THROWS_AS(read_config(unknown), UsageError);
    std::istringstream bad("lambda=abc\n");
    CHECK_THROWS_AS(read_config(bad), UsageError);
    std::istringstream no_eq("lambda\n");
    CHECK_THROWS_AS(read_config(no_eq), UsageError);

    TrainConfig tweaked;
    tweaked.lambda = 3.5e-4;
    tweaked.rng_seed = 123456789012345ULL;
    tweaked.stage3_alpha = 1.0 / 3.0;
    tweaked.max_epochs_stage2 = 77;
    std::ostringstream out;
    write_config(tweaked, out);
    std::istringstream back_in(out.str());
    const TrainConfig back = read_config(back_in);
    CHECK(back.lambda == tweaked.lambda);
    CHECK(back.rng_seed == tweaked.rng_seed);
    CHECK(back.stage3_alpha == tweaked.stage3_alpha);
    CHECK(back.max_epochs_stage2 == 77);
    std::ostringstream again;
    write_config(back, again);
    CHECK(again.str() == out.str());
  }

  TEST_CASE("dataset csv round trip") {
    const GeneratedData g = generate_legendre_dataset(30, 4, 0.1, 5);
    std::ostringstream out;
    write_dataset_csv(g.raw_X, g.raw_y, g.data.column_names, "y", out);
    std::istringstream in(out.str());
    const CsvTable t = read_csv(in);
    CHECK(t.header.back() == "y");
    CHECK(t.values.leftCols(4) == g.raw_X);
    CHECK(t.values.col(4) == g.raw_y);
  }
}
