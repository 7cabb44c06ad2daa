#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "doctest.h"
#include "smoothek/cache.hpp"
#include "smoothek/experiment.hpp"
#include "smoothek/json_out.hpp"

using namespace smoothek;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("smoothek_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("json floats use 17 significant digits") {
  Json j;
  j["a"] = 0.1;
  j["b"] = 1.0;
  j["c"] = std::nan("");
  j["d"] = std::vector<double>{1.5, -2.25};
  j["e"] = 7;
  CHECK(dump_json(j, -1) ==
        R"({"a":0.10000000000000001,"b":1,"c":null,"d":[1.5, -2.25],"e":7})");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(Json::parse(dump_json(j))["a"].get<double>() == 0.1);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("lpf cache round trip") {
  const auto dir = scratch("lpf");
  const auto table = build_lpf(1000, 50'000);
  write_lpf_cache(dir / "t.bin", table);
  CHECK(fs::file_size(dir / "t.bin") == 32 + 4 * (50'000 - 1000 + 1));
  const auto back = read_lpf_cache(dir / "t.bin");
  REQUIRE(back);
  CHECK(back->lo() == 1000);
  CHECK(back->hi() == 50'000);
  CHECK(std::equal(back->entries().begin(), back->entries().end(), table.entries().begin()));
  CHECK(!read_lpf_cache(dir / "missing.bin"));

  // Little-endian layout: the first entry is P(1000) = 5.
  std::ifstream in(dir / "t.bin", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(bytes.substr(0, 6) == "SMKLPF");
  CHECK(static_cast<unsigned char>(bytes[32]) == 5);
  CHECK(bytes[33] == 0);

  std::ofstream(dir / "bad.bin", std::ios::binary) << "not a cache file at all, really not";
  CHECK_THROWS(read_lpf_cache(dir / "bad.bin"));
  std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, 100);
  CHECK_THROWS(read_lpf_cache(dir / "short.bin"));
  fs::remove_all(dir);
}

TEST_CASE("build_lpf_cached reuses the file") {
  const auto dir = scratch("lpfc");
  bool hit = true;
  const auto a = build_lpf_cached(1, 20'000, {}, dir, &hit);
  CHECK(!hit);
  const auto b = build_lpf_cached(1, 20'000, {}, dir, &hit);
  CHECK(hit);
  CHECK(std::equal(a.entries().begin(), a.entries().end(), b.entries().begin()));
  CHECK(fs::exists(dir / ".smoothek.lock"));
  fs::remove_all(dir);
}

TEST_CASE("baseline store is append-only and detects drift") {
  const auto dir = scratch("base");
  BaselineStore store(dir);
  Json th;
  th["K"] = 0.5;
  Json res = Json::array({1.25, 2});
  const BaselineKey key{"count", 42, "0.1.0"};
  CHECK(store.record(key, th, res) == BaselineStatus::recorded);
  CHECK(store.record(key, th, res) == BaselineStatus::matched);
  Json other = Json::array({1.2500000000000002, 2});
  CHECK(store.record(key, th, other) == BaselineStatus::mismatch);
  CHECK(store.record({"count", 43, "0.1.0"}, th, other) == BaselineStatus::recorded);
  CHECK(store.record({"count", 42, "0.2.0"}, th, other) == BaselineStatus::recorded);

  std::ifstream in(store.file());
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 3);
  fs::remove_all(dir);
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  c.x_grid = {100};
  c.y_grid = {10};
  CHECK_NOTHROW(c.validate());

  auto expect_field = [](ExperimentConfig cfg, const std::string& field) {
    try {
      cfg.validate();
      FAIL("expected ConfigError for " << field);
    } catch (const ConfigError& e) {
      CHECK(e.field() == field);
    }
  };
  auto bad = c;
  bad.y_grid = {};
  expect_field(bad, "y");
  bad = c;
  bad.x_grid = {5};
  expect_field(bad, "x");
  bad = c;
  bad.y_grid = {1};
  expect_field(bad, "y");
  bad = c;
  bad.moments = 11;
  expect_field(bad, "moments");
  bad = c;
  bad.trunc_exponent = 1.5;
  expect_field(bad, "trunc_exponent");
  bad = c;
  bad.fixed_u = 0.5;
  expect_field(bad, "fixed_u");
}

TEST_CASE("config file diagnostics carry line numbers") {
  ExperimentConfig c;
  const std::string unknown = "{\n  \"x\": [1000000],\n  \"y\": 1000,\n  \"colour\": 3\n}";
  try {
    c.apply_json(unknown);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "colour");
    CHECK(e.line() == 4);
  }
  const std::string invalid = "{\n  \"x\": 100,\n  \"y\": 1000\n}";
  try {
    ExperimentConfig d;
    d.apply_json(invalid);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "x");
    CHECK(e.line() == 2);
  }
  const std::string syntax = "{\n  \"x\": 100,\n  \"y\" 10\n}";
  try {
    ExperimentConfig d;
    d.apply_json(syntax);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
  }
  const std::string wrong_type = "{\"x\": \"many\", \"y\": 10}";
  CHECK_THROWS_AS(ExperimentConfig{}.apply_json(wrong_type), ConfigError);

  ExperimentConfig ok;
  ok.apply_json(R"({"x": [100, 1000], "y": 10, "mode": "approximate", "moments": 6})");
  CHECK(ok.x_grid.size() == 2);
  CHECK(ok.mode == EnsembleMode::approximate);
  CHECK(ok.moments == 6);
}

TEST_CASE("config hash covers result-affecting fields only") {
  ExperimentConfig a;
  a.x_grid = {1'000'000};
  a.y_grid = {1000};
  auto b = a;
  b.threads = 4;
  b.format = OutputFormat::text;
  b.cache_dir = "/tmp/elsewhere";
  CHECK(a.hash() == b.hash());
  for (auto mutate : std::vector<void (*)(ExperimentConfig&)>{
           [](ExperimentConfig& c) { c.seed += 1; },
           [](ExperimentConfig& c) { c.moments = 4; },
           [](ExperimentConfig& c) { c.mode = EnsembleMode::approximate; },
           [](ExperimentConfig& c) { c.trunc_exponent = 0.5; },
           [](ExperimentConfig& c) { c.x_grid = {1'000'001}; },
           [](ExperimentConfig& c) { c.alpha_offset = 0.1; },
           [](ExperimentConfig& c) { c.samples = 10; }}) {
    auto c = a;
    mutate(c);
    CHECK(c.hash() != a.hash());
  }
}

TEST_CASE("grid points") {
  ExperimentConfig c;
  c.y_grid = {1000, 10'000};
  c.fixed_u = 2.0;
  const auto pts = c.points();
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].x == 1'000'000);
  CHECK(pts[1].x == 100'000'000);
  c.fixed_u = 50.0;
  const auto big = c.points();
  CHECK(big[1].x == 0);
  CHECK(big[1].log_x == doctest::Approx(50.0 * std::log(1e4)));

  ExperimentConfig g;
  g.x_grid = {100, 1000};
  g.y_grid = {2, 10, 100};
  CHECK(g.points().size() == 6);
}

TEST_CASE("count agreement rule") {
  CountRow r;
  r.psi_sieve = r.psi_recurrence = 10;
  r.upsilon = 7;
  CHECK(counts_agree(r));
  r.psi_recurrence = 11;
  CHECK(!counts_agree(r));
  r.psi_recurrence = 10;
  r.psi_lpf = 9;
  CHECK(!counts_agree(r));
  r.psi_lpf = 10;
  r.upsilon_lpf = 8;
  CHECK(!counts_agree(r));
  r.upsilon_lpf = 7;
  r.upsilon = 7;
  CHECK(counts_agree(r));
  r.upsilon = r.upsilon_lpf.emplace(11);
  CHECK(!counts_agree(r));
}
