#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "../../tools/cli.hpp"
#include "doctest.h"
#include "prada/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "prada");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = prada::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "prada_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::vector<std::string> kFast{"--hidden", "6", "--restarts", "1", "--set",
                                     "max_epochs_stage1=800", "--set", "max_epochs_stage2=800",
                                     "--set", "max_epochs_stage3=300", "--set", "stage2_block=20",
                                     "--set", "adam_step_size=0.01"};

std::vector<std::string> with_fast(std::vector<std::string> args) {
  args.insert(args.end(), kFast.begin(), kFast.end());
  return args;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate is byte-identical for a fixed seed") {
    const fs::path dir = scratch("simulate");
    const auto a = (dir / "a.csv").string();
    const auto b = (dir / "b.csv").string();
    REQUIRE(run({"simulate", "--legendre", "--n", "50", "--seed", "3", "--out", a}).code == 0);
    REQUIRE(run({"simulate", "--legendre", "--n", "50", "--seed", "3", "--out", b}).code == 0);
    CHECK(prada::read_text_file(a) == prada::read_text_file(b));
    const Outcome stdout_run = run({"simulate", "--linear-tanh", "--n", "10", "--seed", "1"});
    CHECK(stdout_run.code == 0);
    CHECK(stdout_run.out.rfind("x1,x2,y\n", 0) == 0);
  }

  TEST_CASE("error exit codes") {
    const Outcome missing = run({"train", "--data", "/nonexistent.csv", "--out", "/tmp/x"});
    CHECK(missing.code == 2);
    CHECK(missing.err.rfind("error subcommand=train kind=usage", 0) == 0);
    CHECK(std::count(missing.err.begin(), missing.err.end(), '\n') == 1);

    const fs::path dir = scratch("errors");
    std::ofstream(dir / "bad.csv") << "x1,y\n1,2\n2,nan\n3,4\n";
    const Outcome bad = run({"train", "--data", (dir / "bad.csv").string(), "--out", dir.string()});
    CHECK(bad.code == 3);
    CHECK(bad.err.find("kind=data") != std::string::npos);
    CHECK(bad.err.find("line 3") != std::string::npos);

    std::ofstream(dir / "ok.csv") << "x1,y\n1,2\n2,1\n3,4\n4,3\n";
    CHECK(run({"train", "--data", (dir / "ok.csv").string(), "--out", dir.string(), "--set",
               "nonsense=1"})
              .code == 2);
    CHECK(run({"train", "--data", (dir / "ok.csv").string(), "--out", dir.string(), "--gamma", "-1"})
              .code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
  }

  TEST_CASE("train, extract, importance and compare") {
    const fs::path dir = scratch("flow");
    const auto data = (dir / "data.csv").string();
    REQUIRE(run({"simulate", "--legendre", "--n", "200", "--seed", "4", "--out", data}).code == 0);

    const Outcome train = run(with_fast({"train", "--data", data, "--out", (dir / "m1").string(),
                                         "--lambda", "1e-3", "--seed", "1"}));
    REQUIRE_MESSAGE(train.code == 0, train.err);
    CHECK(fs::exists(dir / "m1" / "model.json"));
    CHECK(train.out.find("test_mse=") != std::string::npos);

    const Outcome extract = run({"extract", "--model", (dir / "m1" / "model.json").string(), "--data",
                                 data, "--out", (dir / "m1").string(), "--grid-points", "11"});
    REQUIRE_MESSAGE(extract.code == 0, extract.err);
    const prada::ExtractionReport report = prada::load_report(dir / "m1" / "report.json");
    const std::string grids = prada::read_text_file(dir / "m1" / "partial_dependence.csv");
    CHECK(static_cast<std::size_t>(std::count(grids.begin(), grids.end(), '\n')) ==
          1 + 11 * report.components.size());

    const Outcome importance = run({"importance", "--model", (dir / "m1" / "model.json").string(),
                                    "--data", data, "--out", (dir / "m1").string()});
    REQUIRE_MESSAGE(importance.code == 0, importance.err);
    const std::string imp = prada::read_text_file(dir / "m1" / "importance.csv");
    CHECK(imp.rfind("variable,importance\nx1,", 0) == 0);

    REQUIRE(run(with_fast({"train", "--data", data, "--out", (dir / "m2").string(), "--lambda",
                           "1e-3", "--seed", "2"}))
                .code == 0);
    const Outcome compare = run({"compare", "--models", (dir / "m1" / "model.json").string(),
                                 (dir / "m2" / "model.json").string(), "--out", dir.string()});
    REQUIRE_MESSAGE(compare.code == 0, compare.err);
    CHECK(compare.out.find("medoid=") != std::string::npos);
    CHECK(fs::exists(dir / "ensemble_summary.csv"));
  }

  TEST_CASE("path with an explicit grid") {
    const fs::path dir = scratch("path");
    const auto data = (dir / "data.csv").string();
    REQUIRE(run({"simulate", "--legendre", "--n", "80", "--seed", "5", "--out", data}).code == 0);
    const Outcome path = run(with_fast({"path", "--data", data, "--out", dir.string(), "--lambdas",
                                        "1e-3,1e-2", "--splits", "2"}));
    REQUIRE_MESSAGE(path.code == 0, path.err);
    const double chosen = std::stod(path.out);
    CHECK((chosen == 1e-3 || chosen == 1e-2));
    const std::string csv = prada::read_text_file(dir / "lambda_path.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(run(with_fast({"path", "--data", data, "--out", dir.string(), "--lambdas", "1e-2,1e-3",
                         "--splits", "2"}))
              .code == 2);
  }
}
