#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lcdf/config.hpp"

using namespace lcdf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("lcdf_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int counter() {
    static int c = 0;
    return c++;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int run(const std::string& command, const std::string& config, const fs::path& out) {
  CliOverrides overrides;
  overrides.out_dir = out.string();
  return run_experiment(command, config, overrides);
}

}  // namespace

TEST_CASE("fisher command emits the analytic values") {
  TempDir dir;
  int code = run("fisher",
                 R"({"seed": 1, "channel": {"kind": "bernoulli", "c": 0.5}})", dir.path);
  REQUIRE(code == kExitOk);
  auto doc = nlohmann::json::parse(slurp(dir.path / "result.json"));
  CHECK(doc["results"]["F"].get<double>() == doctest::Approx(4.0));
  CHECK(doc["results"]["method"] == "closed_form");

  code = run("fisher",
             R"({"seed": 1, "channel": {"kind": "additive",
                 "density": {"name": "gaussian", "sigma": 1.0}, "quantize": true}})",
             dir.path);
  REQUIRE(code == kExitOk);
  doc = nlohmann::json::parse(slurp(dir.path / "result.json"));
  CHECK(doc["results"]["F"].get<double>() == doctest::Approx(2.0 / M_PI).epsilon(1e-10));
}

TEST_CASE("overlap command with censoring") {
  TempDir dir;
  int code = run("overlap",
                 R"({"seed": 1, "x1": 0.5, "x2": 0.2,
                     "channel": {"kind": "expfam", "cgf": {"name": "gaussian", "sigma2": 1.0},
                                 "censor_eta": 0.4}})",
                 dir.path);
  REQUIRE(code == kExitOk);
  auto doc = nlohmann::json::parse(slurp(dir.path / "result.json"));
  CHECK(doc["results"]["R"].get<double>() ==
        doctest::Approx(0.6 * std::expm1(0.1)).epsilon(1e-12));
}

TEST_CASE("advantage command: determinism and csv appending") {
  TempDir dir;
  const std::string config = R"({
    "seed": 5, "degree": 2, "trials": 2000,
    "prior": {"kind": "spiked_matrix", "n": 10, "lambda": 0.6,
              "pi": {"kind": "rademacher"}},
    "channel": {"kind": "expfam", "cgf": {"name": "gaussian", "sigma2": 1.0}}
  })";
  REQUIRE(run("advantage", config, dir.path) == kExitOk);
  std::string first = slurp(dir.path / "result.json");
  REQUIRE(run("advantage", config, dir.path) == kExitOk);
  CHECK(slurp(dir.path / "result.json") == first);  // byte-identical rerun

  std::string csv = slurp(dir.path / "scan.csv");
  CHECK(csv.find("estimator,degree,trials,mean") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + two appended rows

  auto doc = nlohmann::json::parse(first);
  CHECK(doc["results"]["estimator"] == "subset_formula");
  CHECK(doc["results"]["trials"] == 2000);
  CHECK(doc["results"]["diagnostics"].contains("trimmed_mean"));
}

TEST_CASE("exact command validates the dual routes") {
  TempDir dir;
  const std::string config = R"({
    "seed": 1, "degree": 2,
    "model": {
      "alphabets": [2, 3],
      "null_pmfs": [[0.5, 0.5], [0.2, 0.3, 0.5]],
      "signals": [
        {"prob": 0.6, "channel_pmfs": [[0.7, 0.3], [0.1, 0.4, 0.5]]},
        {"prob": 0.4, "channel_pmfs": [[0.4, 0.6], [0.3, 0.3, 0.4]]}
      ]
    }
  })";
  REQUIRE(run("exact", config, dir.path) == kExitOk);
  auto doc = nlohmann::json::parse(slurp(dir.path / "result.json"));
  CHECK(doc["results"]["max_rel_gap"].get<double>() < 1e-10);
  CHECK(doc["results"]["per_degree"].size() == 3);
  CHECK(doc["results"]["per_degree"][0]["cadv_exact"].get<double>() ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectral and phase-diagram emit csv with the documented columns") {
  TempDir dir;
  const std::string config = R"({
    "seed": 3,
    "spectral": {"n": 60, "lambda_grid": [0.4, 1.8], "trials": 3,
                 "density": {"name": "gaussian", "sigma": 1.0},
                 "corruption": "quantize"}
  })";
  REQUIRE(run("phase-diagram", config, dir.path) == kExitOk);
  std::string csv = slurp(dir.path / "scan.csv");
  CHECK(csv.find("lambda,eta,n,trials,mean_lmax,stderr_lmax,bulk_edge_estimate\n") == 0);
  auto doc = nlohmann::json::parse(slurp(dir.path / "result.json"));
  CHECK(doc["results"]["conjecture_probe"] == true);
  CHECK(doc["results"]["statistic"] == "raw sign matrix");
  CHECK(doc["results"]["points"].size() == 2);
}

TEST_CASE("error taxonomy: config problems exit 2") {
  TempDir dir;
  CHECK(run("fisher", "{not json", dir.path) == kExitConfig);
  CHECK(run("fisher", R"({"channel": {"kind": "bernoulli"}})", dir.path) == kExitConfig);
  CHECK(run("fisher", R"({"seed": 1, "channel": {"kind": "wat"}})", dir.path) == kExitConfig);
  CHECK(run("nonsense", R"({"seed": 1})", dir.path) == kExitConfig);
  CHECK(run("overlap",
            R"({"seed": 1, "x1": 2.0, "x2": 0.0,
                "channel": {"kind": "bernoulli", "c": 0.5}})",
            dir.path) == kExitConfig);
  // command given on the CLI must match the config's command field
  CHECK(run("fisher", R"({"seed": 1, "command": "overlap"})", dir.path) == kExitConfig);
}

TEST_CASE("parse helpers reject malformed blocks") {
  CHECK_THROWS(parse_channel(R"({"kind": "additive"})"));
  CHECK_THROWS(parse_prior(R"({"kind": "spiked_matrix", "n": 1, "lambda": 1.0})"));
  CHECK_NOTHROW(parse_prior(
      R"({"kind": "iid", "n": 4, "pi": {"kind": "sparse_rademacher", "s": 0.2}, "dilute_k": 2})"));
  CHECK_NOTHROW(parse_density(R"({"name": "smoothed_laplace", "c": 0.7, "eps": 0.1})"));
}
