#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hdrisk/cli.hpp"
#include "hdrisk/harness.hpp"
#include "hdrisk/io.hpp"
#include "hdrisk/selftest.hpp"

using namespace hdrisk;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "hdrisk_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const fs::path path = scratch() / name;
  std::ofstream(path) << text;
  return path.string();
}

std::string write_dataset(const std::string& name, const Dataset& d) {
  std::ostringstream ss;
  write_dataset_csv(ss, d);
  return write_file(name, ss.str());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kSmallHuber = R"({"experiment": "huber_grid", "n": 40, "p": 30, "reps": 2,
  "lambda": [0.05, 0.1], "lambda_star": [0.2],
  "signal": {"kind": "sparse_flat", "s": 3, "amplitude": 1.0}})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("experiment writes the csv schema") {
  const std::string config = write_file("huber.json", kSmallHuber);
  const std::string out = (scratch() / "rows.csv").string();
  const Run r = run({"experiment", "--config", config, "--out", out});
  CHECK(r.code == kExitOk);
  const std::string text = slurp(out);
  CHECK(text.substr(0, text.find('\n')) == kResultCsvHeader);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}

TEST_CASE("experiment is reproducible with --no-timing") {
  const std::string config = write_file("huber.json", kSmallHuber);
  const Run a = run({"experiment", "--config", config, "--no-timing", "--seed", "4"});
  const Run b = run({"experiment", "--config", config, "--no-timing", "--seed", "4",
                     "--threads", "2"});
  const Run c = run({"experiment", "--config", config, "--no-timing", "--seed", "5"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
}

TEST_CASE("malformed configs exit with 1 and name the field") {
  const std::string config = write_file("bad.json", R"({"experiment": "huber_grid", "reps": 0})");
  const Run r = run({"experiment", "--config", config});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("reps") != std::string::npos);

  const std::string broken = write_file("broken.json", "{not json");
  CHECK(run({"experiment", "--config", broken}).code == kExitValidation);
  CHECK(run({"experiment", "--config", config, "--threads", "0"}).code == kExitValidation);
  CHECK(run({"experiment"}).code == kExitValidation);
  CHECK(run({"frobnicate"}).code == kExitValidation);
  CHECK(run({}).code == kExitValidation);
  CHECK(run({"experiment", "--config", (scratch() / "missing.json").string()}).code ==
        kExitRuntime);
}

TEST_CASE("HDRISK_THREADS is the fallback thread count") {
  const std::string config = write_file("huber.json", kSmallHuber);
  ::setenv("HDRISK_THREADS", "zero", 1);
  CHECK(run({"experiment", "--config", config}).code == kExitValidation);
  CHECK(run({"experiment", "--config", config, "--threads", "1"}).code == kExitOk);
  ::setenv("HDRISK_THREADS", "2", 1);
  CHECK(run({"experiment", "--config", config}).code == kExitOk);
  ::unsetenv("HDRISK_THREADS");
}

TEST_CASE("fit and estimate") {
  const std::string data = write_dataset("data.csv", random_instance(60, 40, 4, 1));
  const Run f = run({"fit", "--data", data, "--lambda", "0.1"});
  REQUIRE(f.code == kExitOk);
  const auto doc = nlohmann::json::parse(f.out);
  CHECK(doc["converged"] == true);
  CHECK(doc["beta_hat"].size() == 40);
  CHECK(doc["kkt_gap"].get<double>() <= 1e-8);

  const Run e = run({"estimate", "--data", data, "--loss", "huber", "--lambda-star", "0.1",
                     "--lambda", "0.05", "--sigma2", "1"});
  REQUIRE(e.code == kExitOk);
  const auto rep = nlohmann::json::parse(e.out)["report"];
  CHECK(rep["r_hat"].is_number());
  CHECK(rep["tau2_hat"].is_null());
  CHECK(rep["sure"].is_number());

  const Run sq = run({"estimate", "--data", data, "--penalty", "elastic_net", "--lambda", "0.05",
                      "--mu", "0.2"});
  REQUIRE(sq.code == kExitOk);
  const auto rsq = nlohmann::json::parse(sq.out)["report"];
  CHECK(rsq["tau2_hat"].get<double>() ==
        doctest::Approx(rsq["r_hat"].get<double>() + rsq["sigma2_hat"].get<double>()));

  const Run mc = run({"estimate", "--data", data, "--jacobian", "monte_carlo", "--mc-m", "5"});
  REQUIRE(mc.code == kExitOk);
  CHECK(nlohmann::json::parse(mc.out)["report"]["mc_m"] == 5);

  CHECK(run({"fit", "--data", data, "--loss", "absolute"}).code == kExitValidation);
  CHECK(run({"fit", "--data", data, "--lambda", "-1"}).code == kExitValidation);
  CHECK(run({"fit", "--data", data, "--penalty", "nuclear", "--rows", "3", "--cols", "3"}).code ==
        kExitValidation);
  CHECK(run({"estimate", "--data", data, "--loss", "smooth_huber0", "--penalty", "l1"}).code ==
        kExitRuntime);
  CHECK(run({"fit", "--data", (scratch() / "none.csv").string()}).code == kExitRuntime);
  CHECK(run({"fit", "--data", data, "--max-iters", "1", "--algorithm", "fista", "--lambda",
             "0.01"})
            .code == kExitRuntime);
}

TEST_CASE("selftest passes") {
  const Run r = run({"selftest"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("PASS") != std::string::npos);
}

}
