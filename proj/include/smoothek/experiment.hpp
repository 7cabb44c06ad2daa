#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "smoothek/json_out.hpp"
#include "smoothek/model.hpp"
#include "smoothek/sieve.hpp"

namespace smoothek {

enum class OutputFormat { json, csv, text };
const char* to_string(OutputFormat f);

/// Invalid configuration. `line` is the 1-based line in a config file, 0 when
/// the value came from a flag or the environment.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, const std::string& message);
  const std::string& field() const { return field_; }
  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  std::string field_;
  int line_;
  std::string message_;
};

/// One (x, y) pair of a grid. With --fixed-u the bound x = y^u may not fit in
/// 64 bits; such points carry log_x only (x == 0) and are analytic-only.
struct GridPoint {
  std::uint64_t x = 0;
  double log_x = 0.0;
  std::uint64_t y = 2;
};

struct ExperimentConfig {
  std::vector<std::uint64_t> x_grid;
  std::vector<std::uint64_t> y_grid;
  std::optional<double> fixed_u;         // x = y^u for every y; replaces x_grid
  std::optional<double> trunc_exponent;  // Y = floor(y^e), default 1/phi(y)
  unsigned moments = 10;                 // K
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
  OutputFormat format = OutputFormat::json;
  std::string cache_dir;
  std::string out_dir;  // ek: CDF CSV files
  EnsembleMode mode = EnsembleMode::exact;
  std::uint64_t samples = 1'000'000;  // model: Monte Carlo draws
  bool model_only = false;            // ek: skip the sieve, approximate ensemble only
  double alpha_offset = 0.0;          // lemmas: shift alpha (sensitivity canary)
  std::uint64_t max_scan_x = SieveConfig{}.max_scan_x;
  std::size_t segment_length = SieveConfig{}.segment_length;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Grid points in y-major order. Requires a validated config.
  std::vector<GridPoint> points() const;
  SieveConfig sieve() const;
  /// Every field that affects results; threads, format and the directories are omitted.
  Json to_json() const;
  std::uint64_t hash() const;

  /// Overlays the fields present in a JSON config file. Unknown keys, wrong
  /// types and parse errors raise ConfigError with the line number.
  void apply_json(const std::string& text);
};

struct CommandResult {
  std::string command;
  bool pass = true;
  Json report;           // schema, config, rows, pass
  Json results;          // rows only; stored in the baseline
  std::string text;      // aligned columns
  std::string csv;
  std::vector<std::string> notes;  // human-readable failures, for stderr
};

// Per-point count row, exposed so the agreement rule can be tested directly.
struct CountRow {
  std::uint64_t x = 0, y = 0;
  std::uint64_t psi_sieve = 0, psi_recurrence = 0, upsilon = 0;
  std::optional<std::uint64_t> psi_lpf, upsilon_lpf;  // LpfTable predicate counts, small x only
  double ratio = 0.0;
  double deviation_scale = 0.0;  // u log(2u) / (sqrt(y) log y)
};
bool counts_agree(const CountRow& r);

CommandResult cmd_count(const ExperimentConfig& cfg);
CommandResult cmd_saddle(const ExperimentConfig& cfg);
CommandResult cmd_sums(const ExperimentConfig& cfg);
CommandResult cmd_lemmas(const ExperimentConfig& cfg);
CommandResult cmd_ek(const ExperimentConfig& cfg);
CommandResult cmd_model(const ExperimentConfig& cfg);

/// Largest x for which cmd_count also cross-checks through an LpfTable.
inline constexpr std::uint64_t kLpfCrossCheckMax = std::uint64_t{1} << 24;

}  // namespace smoothek
