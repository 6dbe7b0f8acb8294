#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "diffdist/cli.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

std::string data(const std::string& name)
{
  return std::string(DIFFDIST_DATA_DIR) + "/" + name;
}

struct Run
{
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args)
{
  args.insert(args.begin(), "diffdist");
  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = diffdist::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir()
{
  auto dir = std::filesystem::temp_directory_path() / "diffdist_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace

TEST_CASE("dist on overlapping cubes")
{
  const auto r = run({"dist", data("cube.json"), data("cube.json"), "--pose-b", "0.5,0,0"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["lambda"] == 0.0);
  CHECK(j["overlap"] == true);
  CHECK(r.out.back() == '\n');
}

TEST_CASE("dist on separated cubes with gradient")
{
  const auto r = run({"dist", data("cube_metric.json"), data("cube_metric.json"), "--pose-b", "2,0,0", "--gradient"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["overlap"] == false);
  CHECK(j["lambda"].get<double>() > 0);
  CHECK(j["gradient"].size() == 12);
}

TEST_CASE("dist reports iteration failures")
{
  const auto r = run({"dist", data("cube.json"), data("cube.json"), "--pose-b", "2,0,0", "--max-iter", "1", "--tol", "1e-14"});
  CHECK(r.code == 1);
  const auto j = json::parse(r.out);
  CHECK(j["converged"] == false);
  CHECK(j.contains("last_iterate"));
}

TEST_CASE("validate with the standard kernel")
{
  const auto r = run({"validate", "--h", "0.1", "--k", "2", "--n-samples", "2000"});
  CHECK(r.code == 0);
  CHECK(json::parse(r.out)["passed"] == true);
}

TEST_CASE("validate flags an oversized sigma")
{
  const auto r = run({"validate", "--polytope", data("cube.json"), "--eps", "0.01", "--sigma", "20", "--n-samples", "2000"});
  CHECK(r.code == 1);
  CHECK(json::parse(r.out)["passed"] == false);
}

TEST_CASE("malformed flags exit with usage")
{
  const auto r = run({"bench", "--bogus"});
  CHECK(r.code == 2);
  CHECK(r.err.find("Usage") != std::string::npos);

  CHECK(run({"bench", "--n-pairs", "abc"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("config errors exit 2")
{
  CHECK(run({"bench", "--n-pairs", "0"}).code == 2);
  CHECK(run({"dist", data("cube.json"), data("cube.json"), "--h", "0.5"}).code == 2);
  CHECK(run({"dist", data("cube.json"), "/nonexistent.json"}).code == 2);
  CHECK(run({"dist", data("cube.json"), data("cube.json"), "--pose-b", "1,2"}).code == 2);
}

TEST_CASE("bench writes CSV and summary")
{
  const auto dir = scratch_dir();
  const auto csv = dir / "run.csv";
  const auto r = run({"bench", "--n-pairs", "3", "--calibration-samples", "300", "--seed", "5", "--out", csv.string()});
  REQUIRE(r.code == 0);
  const auto text = slurp(csv);
  CHECK(text.rfind("pair_id,euclid_dist,lambda,iterations,time_us,converged\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  const auto summary = json::parse(slurp(dir / "run.summary.json"));
  CHECK(summary["aggregates"]["n_records"] == 3);
  CHECK(summary["config"]["seed"] == 5);
  std::filesystem::remove_all(dir);
}

TEST_CASE("calibrate and sweep")
{
  const auto c = run({"calibrate", data("cube.json"), "--n-samples", "1000"});
  REQUIRE(c.code == 0);
  const auto j = json::parse(c.out);
  CHECK(j["eps"].get<double>() <= 0.01);
  CHECK(j["sigma"].get<double>() > 0);
  CHECK(j["max_simultaneous_positive"] == 3);

  const auto s = run({"sweep", data("cube_metric.json"), data("cube_metric.json"), "--path", data("parallel_faces_path.json"),
                      "--n-samples", "11", "--accelerate", "--tol", "1e-9"});
  REQUIRE(s.code == 0);
  CHECK(s.out.rfind("tau,lambda,dlambda_dtau,euclid_dist,euclid_fd_deriv,iterations,converged\n", 0) == 0);
  CHECK(std::count(s.out.begin(), s.out.end(), '\n') == 12);
}
