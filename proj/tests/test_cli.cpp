// Runs the smoothek executable and checks exit codes and output.

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SMOOTHEK_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("smoothek_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("count (10, 2)") {
  const auto r = run("count --x 10 --y 2");
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["schema"] == "smoothek/1");
  CHECK(j["rows"][0]["psi_sieve"] == 4);
  CHECK(j["rows"][0]["psi_recurrence"] == 4);
  CHECK(j["rows"][0]["upsilon"] == 2);
  CHECK(j["pass"] == true);
}

TEST_CASE("count (1e6, 1e3) ratio band") {
  const auto r = run("count --x 1e6 --y 10^3");
  CHECK(r.code == 0);
  const double ratio = nlohmann::json::parse(r.out)["rows"][0]["ratio"];
  CHECK(ratio >= 0.95);
  CHECK(ratio <= 1.05);
}

TEST_CASE("exit codes") {
  CHECK(run("").code == 2);
  CHECK(run("count --x 5 --y 10").code == 2);
  CHECK(run("count --x 100 --y 10 --moments 11").code == 2);
  CHECK(run("count --x 100 --y 10 --format xml").code == 2);
  CHECK(run("count --x 100000 --y 10 --max-scan-x 1000").code == 3);
  CHECK(run("count --help").code == 0);
}

TEST_CASE("environment overrides") {
  const auto r = run("count --x 10 --y 2 --format csv");
  const std::string cmd = "SMOOTHEK_X=10 SMOOTHEK_Y=2 SMOOTHEK_FORMAT=csv";
  FILE* pipe = ::popen((cmd + " " + SMOOTHEK_CLI + " count 2>/dev/null").c_str(), "r");
  std::string out;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  CHECK(WEXITSTATUS(::pclose(pipe)) == 0);
  CHECK(out == r.out);
  CHECK(out.rfind("x,y,psi_sieve", 0) == 0);
}

TEST_CASE("config file with flag override") {
  const auto dir = scratch("cfg");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << "{\n  \"x\": 1000,\n  \"y\": 10\n}\n";
  const auto r = run("count --config " + (dir / "c.json").string() + " --y 2");
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["rows"][0]["y"] == 2);
  std::ofstream(dir / "bad.json") << "{\n  \"x\": 1000,\n  \"why\": 10\n}\n";
  CHECK(run("count --config " + (dir / "bad.json").string()).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("saddle rows") {
  const auto r = run("saddle --y-grid 1000,10000,100000 --fixed-u 2");
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  for (const auto& row : j["rows"]) CHECK(row["residual"].get<double>() <= row["tolerance"].get<double>());
  CHECK(j["gap_nonincreasing_along_y"] == true);
  const auto b = nlohmann::json::parse(run("saddle --x 1000 --y 1000").out);
  CHECK(b["rows"][0]["degenerate"] == true);
}

TEST_CASE("lemmas: boundary row and alpha canary") {
  const auto b = run("lemmas --x 1000 --y 1000");
  const auto jb = nlohmann::json::parse(b.out);
  for (const auto& c : jb["rows"][0]["checks"])
    if (c["check"] == "xi_asymptotic" || c["check"] == "alpha_approx") CHECK(c["status"] == "N/A");

  const auto good = nlohmann::json::parse(run("lemmas --x 1e6 --y 1e3").out);
  const auto bad = run("lemmas --x 1e6 --y 1e3 --alpha-offset 0.1");
  CHECK(bad.code == 1);
  auto status = [](const nlohmann::json& j, const std::string& name) {
    for (const auto& c : j["rows"][0]["checks"])
      if (c["check"] == name) return c["status"].get<std::string>();
    return std::string("missing");
  };
  CHECK(status(good, "local_ratio") == "PASS");
  CHECK(status(nlohmann::json::parse(bad.out), "local_ratio") == "FAIL");
}

TEST_CASE("ek: deterministic bytes and CDF files") {
  const auto dir = scratch("ek");
  const std::string args = "ek --x 1e6 --y 1e3 --out-dir " + dir.string();
  const auto a = run(args);
  const auto b = run(args + " --threads 2");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  std::ifstream in(dir / "cdf_omega_smooth_loglog_x1000000_y1000.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "z,F_emp,Phi");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 161);
  fs::remove_all(dir);
}

TEST_CASE("ek model-only run at Y = 1e4") {
  const auto r = run("ek --model-only --y 10000 --fixed-u 50 --trunc-exponent 1");
  CHECK(r.code == 0);
  const auto m = nlohmann::json::parse(r.out)["rows"][0]["model"];
  CHECK(m["primes"] == 1229);
  CHECK(m["variance"].get<double>() >= 25.0);
  CHECK(m["ks"].get<double>() <= 0.05);
}

TEST_CASE("model and sums commands") {
  const auto m = run("model --x 1e6 --y 1e3 --samples 100000 --format text");
  CHECK(m.code == 0);
  CHECK(m.out.find("PASS") != std::string::npos);
  const auto a = run("model --x 1e6 --y 1e3 --samples 100000 --mode approximate --seed 7");
  CHECK(a.code == 0);
  CHECK(a.out == run("model --x 1e6 --y 1e3 --samples 100000 --mode approximate --seed 7 --threads 3").out);
  const auto s = run("sums --x 1e6 --y 1e3");
  CHECK(s.code == 0);
}

TEST_CASE("baseline store through the CLI") {
  const auto dir = scratch("base");
  const std::string args = "count --x 1e5 --y 100 --cache-dir " + dir.string();
  CHECK(run(args).code == 0);
  CHECK(run(args).code == 0);
  CHECK(fs::exists(dir / "baselines.jsonl"));
  CHECK(fs::exists(dir / "lpf_1_100000.bin"));
  std::ifstream in(dir / "baselines.jsonl");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 1);
  fs::remove_all(dir);
}
