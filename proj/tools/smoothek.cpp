// smoothek: experiment harness for omega(n) over smooth and ultra-smooth integers.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration
// error, 3 capacity (sieve range or convolution budget exceeded).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "smoothek/cache.hpp"
#include "smoothek/errors.hpp"
#include "smoothek/experiment.hpp"

namespace {

using namespace smoothek;

constexpr int kExitCheck = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCapacity = 3;

/// Accepts "1000000", "1e6" and "10^6".
std::uint64_t parse_uint(const std::string& field, const std::string& s) {
  auto bad = [&] { return ConfigError(field, 0, "cannot read '" + s + "' as a positive integer"); };
  auto digits = [&](const std::string& t) {
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) throw bad();
    return std::stoull(t);
  };
  auto pow10 = [&](std::uint64_t base, std::uint64_t e) {
    std::uint64_t v = 1;
    for (std::uint64_t i = 0; i < e; ++i) {
      if (v > UINT64_MAX / base) throw ConfigError(field, 0, "'" + s + "' overflows 64 bits");
      v *= base;
    }
    return v;
  };
  try {
    if (auto c = s.find('^'); c != std::string::npos)
      return pow10(digits(s.substr(0, c)), digits(s.substr(c + 1)));
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
      const auto m = digits(s.substr(0, e));
      const auto scale = pow10(10, digits(s.substr(e + 1)));
      if (m != 0 && scale > UINT64_MAX / m) throw ConfigError(field, 0, "'" + s + "' overflows 64 bits");
      return m * scale;
    }
    return digits(s);
  } catch (const std::out_of_range&) {
    throw bad();
  }
}

std::vector<std::uint64_t> parse_grid(const std::string& field, const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_uint(field, item));
  if (out.empty()) throw ConfigError(field, 0, "grid is empty");
  return out;
}

struct RawOptions {
  std::string config_file;
  std::string x, y, x_grid, y_grid;
  double fixed_u = 0, trunc_exponent = 0, alpha_offset = 0;
  unsigned moments = 0, threads = 0;
  std::uint64_t seed = 0, samples = 0, max_scan_x = 0;
  std::size_t segment_length = 0;
  std::string format, cache_dir, out_dir, mode;
  bool model_only = false;
};

struct Registered {
  CLI::Option *x, *y, *x_grid, *y_grid, *fixed_u, *trunc, *moments, *seed, *threads, *format,
      *cache_dir, *out_dir, *mode, *samples, *model_only, *alpha_offset, *max_scan_x, *segment_length;
};

Registered add_options(CLI::App* sub, RawOptions& o) {
  Registered r{};
  sub->add_option("--config", o.config_file, "JSON config file; flags override its fields")
      ->envname("SMOOTHEK_CONFIG");
  r.x = sub->add_option("--x", o.x, "Bound x (accepts 1e8 or 10^8)")->envname("SMOOTHEK_X");
  r.y = sub->add_option("--y", o.y, "Smoothness bound y")->envname("SMOOTHEK_Y");
  r.x_grid = sub->add_option("--x-grid", o.x_grid, "Comma-separated x values")
                 ->envname("SMOOTHEK_X_GRID");
  r.y_grid = sub->add_option("--y-grid", o.y_grid, "Comma-separated y values")
                 ->envname("SMOOTHEK_Y_GRID");
  r.fixed_u = sub->add_option("--fixed-u", o.fixed_u, "Set x = y^u for every y")
                  ->envname("SMOOTHEK_FIXED_U");
  r.trunc = sub->add_option("--trunc-exponent", o.trunc_exponent,
                            "Y = y^e instead of y^{1/phi(y)}, e in (0, 1]")
                ->envname("SMOOTHEK_TRUNC_EXPONENT");
  r.moments = sub->add_option("--moments", o.moments, "Moment order cap K (at most 10)")
                  ->envname("SMOOTHEK_MOMENTS");
  r.seed = sub->add_option("--seed", o.seed, "Monte Carlo seed")->envname("SMOOTHEK_SEED");
  r.threads = sub->add_option("--threads", o.threads, "Worker threads")->envname("SMOOTHEK_THREADS");
  r.format = sub->add_option("--format", o.format, "json | csv | text")
                 ->check(CLI::IsMember({"json", "csv", "text"}))
                 ->envname("SMOOTHEK_FORMAT");
  r.cache_dir = sub->add_option("--cache-dir", o.cache_dir, "LPF table cache and baseline store")
                    ->envname("SMOOTHEK_CACHE_DIR");
  r.out_dir = sub->add_option("--out-dir", o.out_dir, "Directory for CDF CSV files (ek)")
                  ->envname("SMOOTHEK_OUT_DIR");
  r.mode = sub->add_option("--mode", o.mode, "Model ensemble: exact | approximate")
               ->check(CLI::IsMember({"exact", "approximate"}))
               ->envname("SMOOTHEK_MODE");
  r.samples = sub->add_option("--samples", o.samples, "Monte Carlo draws (model)")
                  ->envname("SMOOTHEK_SAMPLES");
  r.model_only = sub->add_flag("--model-only", o.model_only, "ek: skip the sieve, model ensemble only")
                     ->envname("SMOOTHEK_MODEL_ONLY");
  r.max_scan_x = sub->add_option("--max-scan-x", o.max_scan_x, "Refuse sieve scans above this x")
                     ->envname("SMOOTHEK_MAX_SCAN_X");
  r.segment_length = sub->add_option("--segment-length", o.segment_length, "Sieve segment length")
                         ->envname("SMOOTHEK_SEGMENT_LENGTH");
  r.alpha_offset = sub->add_option("--alpha-offset", o.alpha_offset)->group("");
  return r;
}

ExperimentConfig build_config(const RawOptions& o, const Registered& r) {
  ExperimentConfig c;
  if (!o.config_file.empty()) {
    std::ifstream in(o.config_file);
    if (!in) throw ConfigError("config", 0, "cannot open " + o.config_file);
    std::stringstream ss;
    ss << in.rdbuf();
    c.apply_json(ss.str());
  }
  auto given = [](const CLI::Option* opt) { return opt->count() > 0; };
  if (given(r.x)) c.x_grid = {parse_uint("x", o.x)};
  if (given(r.x_grid)) c.x_grid = parse_grid("x", o.x_grid);
  if (given(r.y)) c.y_grid = {parse_uint("y", o.y)};
  if (given(r.y_grid)) c.y_grid = parse_grid("y", o.y_grid);
  if (given(r.fixed_u)) c.fixed_u = o.fixed_u;
  if (given(r.trunc)) c.trunc_exponent = o.trunc_exponent;
  if (given(r.moments)) c.moments = o.moments;
  if (given(r.seed)) c.seed = o.seed;
  if (given(r.threads)) c.threads = o.threads;
  if (given(r.format))
    c.format = o.format == "json" ? OutputFormat::json
               : o.format == "csv" ? OutputFormat::csv
                                   : OutputFormat::text;
  if (given(r.cache_dir)) c.cache_dir = o.cache_dir;
  if (given(r.out_dir)) c.out_dir = o.out_dir;
  if (given(r.mode)) c.mode = o.mode == "exact" ? EnsembleMode::exact : EnsembleMode::approximate;
  if (given(r.samples)) c.samples = o.samples;
  if (given(r.model_only)) c.model_only = o.model_only;
  if (given(r.max_scan_x)) c.max_scan_x = o.max_scan_x;
  if (given(r.segment_length)) c.segment_length = o.segment_length;
  if (given(r.alpha_offset)) c.alpha_offset = o.alpha_offset;
  c.validate();
  return c;
}

int emit(const CommandResult& res, const ExperimentConfig& cfg) {
  switch (cfg.format) {
    case OutputFormat::json:
      std::cout << dump_json(res.report) << '\n';
      break;
    case OutputFormat::csv:
      std::cout << res.csv;
      break;
    case OutputFormat::text:
      std::cout << res.command << "  config " << res.report["config_hash"].get<std::string>() << '\n'
                << res.text << (res.pass ? "PASS" : "FAIL") << '\n';
      break;
  }
  for (const auto& n : res.notes) std::cerr << "smoothek: " << n << '\n';

  bool baseline_ok = true;
  if (const auto dir = resolve_cache_dir(cfg.cache_dir); !dir.empty()) {
    BaselineStore store(dir);
    Json th = res.report.contains("thresholds") ? res.report["thresholds"] : Json::object();
    const auto status = store.record({res.command, cfg.hash(), SMOOTHEK_VERSION}, th, res.results);
    std::cerr << "smoothek: baseline " << to_string(status) << " (" << store.file().string() << ")\n";
    baseline_ok = status != BaselineStatus::mismatch;
  }
  return res.pass && baseline_ok ? 0 : kExitCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact statistics of omega(n) over smooth and ultra-smooth integers"};
  app.set_version_flag("--version", SMOOTHEK_VERSION);
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    CommandResult (*run)(const ExperimentConfig&);
  };
  const Sub subs[] = {
      {"count", "Psi by sieve and recurrence, Upsilon, and the Upsilon/Psi ratio", cmd_count},
      {"saddle", "Saddle point alpha, xi(u) and the approximation gap", cmd_saddle},
      {"lemmas", "PASS/FAIL table of the lemma-shaped checks", cmd_lemmas},
      {"ek", "Standardized distributions of omega and omega_Y, KS distances, moment gaps", cmd_ek},
      {"model", "Poisson-binomial model: exact law, Monte Carlo, moment bounds", cmd_model},
      {"sums", "Prime sums M(t) against their targets", cmd_sums},
  };

  std::vector<RawOptions> raw(std::size(subs));
  std::vector<Registered> reg(std::size(subs));
  std::vector<CLI::App*> apps;
  for (std::size_t i = 0; i < std::size(subs); ++i) {
    apps.push_back(app.add_subcommand(subs[i].name, subs[i].help));
    reg[i] = add_options(apps.back(), raw[i]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  for (std::size_t i = 0; i < std::size(subs); ++i) {
    if (!apps[i]->parsed()) continue;
    try {
      const auto cfg = build_config(raw[i], reg[i]);
      return emit(subs[i].run(cfg), cfg);
    } catch (const ConfigError& e) {
      std::cerr << "smoothek: configuration error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const CapacityError& e) {
      std::cerr << "smoothek: capacity: " << e.what()
                << "\n  (lower x, raise --max-scan-x, or change --segment-length)\n";
      return kExitCapacity;
    } catch (const BudgetError& e) {
      std::cerr << "smoothek: capacity: " << e.what() << '\n';
      return kExitCapacity;
    } catch (const std::exception& e) {
      std::cerr << "smoothek: " << e.what() << '\n';
      return kExitCheck;
    }
  }
  return kExitUsage;
}
