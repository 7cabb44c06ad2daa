#include "smoothek/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "smoothek/cache.hpp"
#include "smoothek/context.hpp"
#include "smoothek/errors.hpp"
#include "smoothek/psi_recurrence.hpp"
#include "smoothek/saddle.hpp"
#include "smoothek/stats.hpp"
#include "smoothek/thresholds.hpp"

namespace fs = std::filesystem;

namespace smoothek {

const char* to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::json: return "json";
    case OutputFormat::csv: return "csv";
    case OutputFormat::text: return "text";
  }
  return "?";
}

ConfigError::ConfigError(std::string field, int line, const std::string& message)
    : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ", field '" + field +
                                        "': " + message
                                  : "field '" + field + "': " + message),
      field_(std::move(field)),
      line_(line),
      message_(message) {}

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (y_grid.empty()) throw ConfigError("y", 0, "grid is empty");
  if (!fixed_u && x_grid.empty()) throw ConfigError("x", 0, "grid is empty (or give --fixed-u)");
  for (auto y : y_grid)
    if (y < 2) throw ConfigError("y", 0, "y = " + std::to_string(y) + " is below 2");
  if (fixed_u) {
    if (!(*fixed_u >= 1.0) || !std::isfinite(*fixed_u))
      throw ConfigError("fixed_u", 0, "u must be a finite value >= 1");
  } else {
    for (auto x : x_grid)
      for (auto y : y_grid)
        if (x < y)
          throw ConfigError("x", 0,
                            "grid point x = " + std::to_string(x) + " < y = " + std::to_string(y));
  }
  if (trunc_exponent && !(*trunc_exponent > 0.0 && *trunc_exponent <= 1.0))
    throw ConfigError("trunc_exponent", 0, "must lie in (0, 1]");
  if (moments > kDefaultMomentCap)
    throw ConfigError("moments", 0, "K = " + std::to_string(moments) + " exceeds the cap 10");
  if (moments < 2) throw ConfigError("moments", 0, "K must be at least 2");
  if (threads == 0) throw ConfigError("threads", 0, "must be positive");
  if (samples == 0) throw ConfigError("samples", 0, "must be positive");
  if (segment_length < 64) throw ConfigError("segment_length", 0, "must be at least 64");
  if (!std::isfinite(alpha_offset)) throw ConfigError("alpha_offset", 0, "must be finite");
}

std::vector<GridPoint> ExperimentConfig::points() const {
  std::vector<GridPoint> pts;
  for (auto y : y_grid) {
    if (fixed_u) {
      GridPoint p;
      p.y = y;
      p.log_x = *fixed_u * std::log(static_cast<double>(y));
      const double xv = std::pow(static_cast<double>(y), *fixed_u);
      if (xv < 9.0e18) {
        p.x = static_cast<std::uint64_t>(std::llround(xv));
        p.log_x = std::log(static_cast<double>(p.x));
      }
      pts.push_back(p);
    } else {
      for (auto x : x_grid) pts.push_back({x, std::log(static_cast<double>(x)), y});
    }
  }
  return pts;
}

SieveConfig ExperimentConfig::sieve() const {
  SieveConfig c;
  c.segment_length = segment_length;
  c.max_scan_x = max_scan_x;
  c.threads = threads;
  return c;
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["x"] = x_grid;
  j["y"] = y_grid;
  j["fixed_u"] = fixed_u ? Json(*fixed_u) : Json(nullptr);
  j["trunc_exponent"] = trunc_exponent ? Json(*trunc_exponent) : Json(nullptr);
  j["moments"] = moments;
  j["seed"] = seed;
  j["mode"] = to_string(mode);
  j["samples"] = samples;
  j["model_only"] = model_only;
  j["alpha_offset"] = alpha_offset;
  j["max_scan_x"] = max_scan_x;
  j["segment_length"] = segment_length;
  return j;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(dump_json(to_json(), -1)); }

namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find('"' + key + '"');
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

std::vector<std::uint64_t> as_grid(const Json& v) {
  std::vector<std::uint64_t> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(e.get<std::uint64_t>());
  } else {
    out.push_back(v.get<std::uint64_t>());
  }
  return out;
}

}  // namespace

void ExperimentConfig::apply_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<document>", line_of_offset(text, e.byte), e.what());
  }
  if (!j.is_object()) throw ConfigError("<document>", 1, "top level must be an object");

  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const Json& v = it.value();
    const int line = line_of_key(text, key);
    try {
      if (key == "x") {
        x_grid = as_grid(v);
      } else if (key == "y") {
        y_grid = as_grid(v);
      } else if (key == "fixed_u") {
        fixed_u = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      } else if (key == "trunc_exponent") {
        trunc_exponent = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      } else if (key == "moments") {
        moments = v.get<unsigned>();
      } else if (key == "seed") {
        seed = v.get<std::uint64_t>();
      } else if (key == "threads") {
        threads = v.get<unsigned>();
      } else if (key == "samples") {
        samples = v.get<std::uint64_t>();
      } else if (key == "mode") {
        const auto s = v.get<std::string>();
        if (s != "exact" && s != "approximate")
          throw ConfigError(key, line, "expected \"exact\" or \"approximate\"");
        mode = s == "exact" ? EnsembleMode::exact : EnsembleMode::approximate;
      } else if (key == "format") {
        const auto s = v.get<std::string>();
        if (s == "json") format = OutputFormat::json;
        else if (s == "csv") format = OutputFormat::csv;
        else if (s == "text") format = OutputFormat::text;
        else throw ConfigError(key, line, "expected json, csv or text");
      } else if (key == "cache_dir") {
        cache_dir = v.get<std::string>();
      } else if (key == "out_dir") {
        out_dir = v.get<std::string>();
      } else if (key == "model_only") {
        model_only = v.get<bool>();
      } else if (key == "max_scan_x") {
        max_scan_x = v.get<std::uint64_t>();
      } else if (key == "segment_length") {
        segment_length = v.get<std::size_t>();
      } else {
        throw ConfigError(key, line, "unknown field");
      }
    } catch (const Json::type_error& e) {
      throw ConfigError(key, line, std::string("wrong type: ") + e.what());
    }
  }
  try {
    validate();
  } catch (const ConfigError& e) {
    throw ConfigError(e.field(), line_of_key(text, e.field()), e.message());
  }
}

// ---------------------------------------------------------------------------
// Output helpers

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
  if (!std::isfinite(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

struct Table {
  std::vector<std::string> head;
  std::vector<std::vector<std::string>> rows;

  std::string text() const {
    std::vector<std::size_t> w(head.size());
    for (std::size_t c = 0; c < head.size(); ++c) w[c] = head[c].size();
    for (const auto& r : rows)
      for (std::size_t c = 0; c < r.size(); ++c) w[c] = std::max(w[c], r[c].size());
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t c = 0; c < r.size(); ++c) {
        if (c) out += "  ";
        out.append(w[c] - r[c].size(), ' ');
        out += r[c];
      }
      out += '\n';
    };
    line(head);
    for (const auto& r : rows) line(r);
    return out;
  }

  std::string csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t c = 0; c < r.size(); ++c) {
        if (c) out += ',';
        out += r[c];
      }
      out += '\n';
    };
    line(head);
    for (const auto& r : rows) line(r);
    return out;
  }
};

CommandResult finish(const std::string& command, const ExperimentConfig& cfg, Json rows,
                     const Table& table, bool pass, std::vector<std::string> notes,
                     Json extra = Json::object()) {
  CommandResult r;
  r.command = command;
  r.pass = pass;
  r.results = rows;
  r.report["schema"] = kSchemaVersion;
  r.report["command"] = command;
  r.report["code_version"] = SMOOTHEK_VERSION;
  r.report["config"] = cfg.to_json();
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.hash()));
  r.report["config_hash"] = hash;
  for (auto it = extra.begin(); it != extra.end(); ++it) r.report[it.key()] = it.value();
  r.report["rows"] = std::move(rows);
  r.report["pass"] = pass;
  r.text = table.text();
  r.csv = table.csv();
  r.notes = std::move(notes);
  return r;
}

SmoothContext context_for(const GridPoint& p, const ExperimentConfig& cfg) {
  return p.x != 0 ? SmoothContext::make(p.x, p.y, cfg.trunc_exponent)
                  : SmoothContext::from_log(p.log_x, p.y, cfg.trunc_exponent);
}

std::string point_label(const GridPoint& p) {
  return p.x != 0 ? "x=" + std::to_string(p.x) + " y=" + std::to_string(p.y)
                  : "log x=" + fmt(p.log_x) + " y=" + std::to_string(p.y);
}

void require_integer(const GridPoint& p, const char* command) {
  if (p.x == 0)
    throw CapacityError(std::string(command) + ": x = y^u for " + point_label(p) +
                        " does not fit in 64 bits; only saddle, sums and model-only ek accept it");
}

Json xi_json(const XiValue& xi) {
  Json j;
  j["u"] = xi.u;
  j["xi"] = xi.xi;
  j["degenerate"] = xi.degenerate;
  j["xi_asymptotic"] = xi.asymptotic_valid ? Json(xi.xi_asymptotic) : Json(nullptr);
  return j;
}

bool nonincreasing(const std::vector<double>& v, double slack) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1] + slack) return false;
  return true;
}

/// Series grouped by point order; with --fixed-u the y-grid is the trend axis.
bool trend_applicable(const ExperimentConfig& cfg) { return cfg.fixed_u && cfg.y_grid.size() > 1; }

}  // namespace

// ---------------------------------------------------------------------------
// count

bool counts_agree(const CountRow& r) {
  if (r.psi_sieve != r.psi_recurrence) return false;
  if (r.upsilon > r.psi_sieve) return false;
  if (r.psi_lpf && *r.psi_lpf != r.psi_sieve) return false;
  if (r.upsilon_lpf && *r.upsilon_lpf != r.upsilon) return false;
  return true;
}

CommandResult cmd_count(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto sc = cfg.sieve();
  const fs::path cache = resolve_cache_dir(cfg.cache_dir);
  Json rows = Json::array();
  Table t{{"x", "y", "psi_sieve", "psi_recurrence", "upsilon", "ratio", "deviation_scale", "agree"},
          {}};
  bool pass = true;
  std::vector<std::string> notes;

  for (const auto& p : cfg.points()) {
    require_integer(p, "count");
    const auto ctx = SmoothContext::make(p.x, p.y, cfg.trunc_exponent);
    CountRow r;
    r.x = p.x;
    r.y = p.y;
    r.psi_sieve = count_smooth_sieve(ctx, sc);
    r.psi_recurrence = count_smooth_recurrence(p.x, p.y);
    r.upsilon = count_ultra(ctx, sc);
    if (p.x <= kLpfCrossCheckMax) {
      const auto lpf = build_lpf_cached(1, p.x, sc, cache);
      const UltraBoundTable ub(p.y, primes_up_to(p.y));
      std::uint64_t ps = 0, us = 0;
      for (std::uint64_t n = 1; n <= p.x; ++n) {
        if (!is_smooth(n, ctx, lpf)) continue;
        ++ps;
        if (is_ultra_smooth(n, ctx, ub, lpf)) ++us;
      }
      r.psi_lpf = ps;
      r.upsilon_lpf = us;
    }
    r.ratio = static_cast<double>(r.upsilon) / static_cast<double>(r.psi_sieve);
    r.deviation_scale = ctx.u * std::log(2.0 * ctx.u) / (std::sqrt(static_cast<double>(p.y)) * ctx.log_y);
    const bool ok = counts_agree(r);
    if (!ok) {
      pass = false;
      notes.push_back("count mismatch at " + point_label(p));
    }

    Json j;
    j["x"] = r.x;
    j["y"] = r.y;
    j["u"] = ctx.u;
    j["psi_sieve"] = r.psi_sieve;
    j["psi_recurrence"] = r.psi_recurrence;
    j["psi_lpf"] = r.psi_lpf ? Json(*r.psi_lpf) : Json(nullptr);
    j["upsilon"] = r.upsilon;
    j["upsilon_lpf"] = r.upsilon_lpf ? Json(*r.upsilon_lpf) : Json(nullptr);
    j["ratio"] = r.ratio;
    j["deviation"] = 1.0 - r.ratio;
    j["deviation_scale"] = r.deviation_scale;
    j["agree"] = ok;
    rows.push_back(std::move(j));
    t.rows.push_back({std::to_string(r.x), std::to_string(r.y), std::to_string(r.psi_sieve),
                      std::to_string(r.psi_recurrence), std::to_string(r.upsilon), fmt(r.ratio),
                      fmt(r.deviation_scale), ok ? "yes" : "NO"});
  }
  return finish("count", cfg, std::move(rows), t, pass, std::move(notes));
}

// ---------------------------------------------------------------------------
// saddle

CommandResult cmd_saddle(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto pts = cfg.points();
  std::uint64_t ymax = 2;
  for (const auto& p : pts) ymax = std::max(ymax, p.y);
  const auto primes = primes_up_to(ymax);

  Json rows = Json::array();
  Table t{{"x", "y", "u", "alpha", "residual", "tolerance", "xi", "alpha_approx", "gap", "flag"}, {}};
  bool pass = true;
  std::vector<std::string> notes;
  std::vector<double> gaps;

  for (const auto& p : pts) {
    const auto ctx = context_for(p, cfg);
    const auto sp = solve_alpha(ctx, primes);
    const double gap = std::abs(sp.alpha - sp.alpha_approx);
    const bool ok = sp.residual <= sp.tolerance;
    if (!ok) {
      pass = false;
      notes.push_back("saddle residual above tolerance at " + point_label(p));
    }
    gaps.push_back(gap);

    Json j;
    j["x"] = p.x ? Json(p.x) : Json(nullptr);
    j["log_x"] = ctx.log_x;
    j["y"] = p.y;
    j["u"] = ctx.u;
    j["alpha"] = sp.alpha;
    j["residual"] = sp.residual;
    j["tolerance"] = sp.tolerance;
    j["iterations"] = sp.iterations;
    j["xi"] = xi_json(sp.xi);
    j["alpha_approx"] = sp.alpha_approx;
    j["gap"] = gap;
    j["degenerate"] = sp.xi.degenerate;
    rows.push_back(std::move(j));
    t.rows.push_back({p.x ? std::to_string(p.x) : "e^" + fmt(ctx.log_x), std::to_string(p.y),
                      fmt(ctx.u), fmt(sp.alpha, "%.10f"), fmt(sp.residual, "%.3g"),
                      fmt(sp.tolerance, "%.3g"), fmt(sp.xi.xi), fmt(sp.alpha_approx, "%.10f"),
                      fmt(gap, "%.3g"), sp.xi.degenerate ? "degenerate" : ""});
  }
  Json extra;
  if (trend_applicable(cfg)) extra["gap_nonincreasing_along_y"] = nonincreasing(gaps, 0.0);
  return finish("saddle", cfg, std::move(rows), t, pass, std::move(notes), std::move(extra));
}

// ---------------------------------------------------------------------------
// sums

CommandResult cmd_sums(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto pts = cfg.points();
  std::uint64_t ymax = 2;
  for (const auto& p : pts) ymax = std::max(ymax, p.y);
  const auto primes = primes_up_to(ymax);

  Json rows = Json::array();
  Table t{{"x", "y", "t", "M(t)", "loglog t", "prime_sum_uniform", "prime_sum_large_y", "trunc"}, {}};
  bool pass = true;
  std::vector<std::string> notes;

  for (const auto& p : pts) {
    const auto ctx = context_for(p, cfg);
    const auto sp = solve_alpha(ctx, primes);
    std::set<std::uint64_t> ts = {2, ctx.Y, ctx.y};
    if (ctx.u > 1.0)
      ts.insert(std::clamp<std::uint64_t>(
          static_cast<std::uint64_t>(std::floor(std::exp(ctx.log_y / std::log(ctx.u)))), 2, ctx.y));
    Json series = Json::array();
    double prev = 0.0;
    for (auto tv : ts) {
      const auto rep = prime_sum_M(tv, sp.alpha, primes, ctx);
      if (!(rep.M_t >= prev)) {
        pass = false;
        notes.push_back("M(t) decreased at t=" + std::to_string(tv) + ", " + point_label(p));
      }
      prev = rep.M_t;
      Json j;
      j["t"] = tv;
      j["M_t"] = rep.M_t;
      j["prime_count"] = rep.prime_count;
      j["loglog_t"] = rep.loglog_t_target;
      series.push_back(std::move(j));
      t.rows.push_back({p.x ? std::to_string(p.x) : "e^" + fmt(ctx.log_x), std::to_string(p.y),
                        std::to_string(tv), fmt(rep.M_t), fmt(rep.loglog_t_target),
                        fmt(rep.uniform_target), fmt(rep.large_y_target), fmt(rep.trunc_target)});
    }
    const auto top = prime_sum_M(ctx.y, sp.alpha, primes, ctx);
    Json j;
    j["x"] = p.x ? Json(p.x) : Json(nullptr);
    j["log_x"] = ctx.log_x;
    j["y"] = p.y;
    j["u"] = ctx.u;
    j["Y"] = ctx.Y;
    j["alpha"] = sp.alpha;
    j["uniform_target"] = top.uniform_target;
    j["large_y_target"] = top.large_y_target;
    j["trunc_target"] = top.trunc_target;
    j["M"] = std::move(series);
    rows.push_back(std::move(j));
  }
  return finish("sums", cfg, std::move(rows), t, pass, std::move(notes));
}

// ---------------------------------------------------------------------------
// lemmas

namespace {

/// Up to `count` primes <= y, roughly log-spaced from 2 to the largest prime <= y.
std::vector<std::uint32_t> log_spaced_primes(std::span<const std::uint32_t> primes, std::uint64_t y,
                                             int count) {
  std::vector<std::uint32_t> in;
  for (auto p : primes)
    if (p <= y) in.push_back(p);
  if (in.size() <= static_cast<std::size_t>(count)) return in;
  std::vector<std::uint32_t> out;
  const double lo = std::log(2.0), hi = std::log(static_cast<double>(in.back()));
  std::size_t idx = 0;
  for (int i = 0; i < count; ++i) {
    const double target = std::exp(lo + (hi - lo) * i / (count - 1));
    while (idx < in.size() && (in[idx] < target || (!out.empty() && in[idx] <= out.back()))) ++idx;
    if (idx >= in.size()) break;
    out.push_back(in[idx]);
  }
  // Fill from the top if rounding left gaps, keeping the list sorted.
  for (std::size_t j = in.size(); out.size() < static_cast<std::size_t>(count) && j-- > 0;)
    if (!std::binary_search(out.begin(), out.end(), in[j])) {
      out.insert(std::lower_bound(out.begin(), out.end(), in[j]), in[j]);
    }
  return out;
}

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  enum Status { pass, fail, na } status = pass;
  std::string note;
};

const char* status_name(Check::Status s) {
  return s == Check::pass ? "PASS" : s == Check::fail ? "FAIL" : "N/A";
}

Check make_check(std::string name, double value, double threshold, bool applicable = true,
                 std::string note = {}) {
  Check c{std::move(name), value, threshold, Check::pass, std::move(note)};
  if (!applicable) c.status = Check::na;
  else if (!(value <= threshold)) c.status = Check::fail;
  return c;
}

}  // namespace

CommandResult cmd_lemmas(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto sc = cfg.sieve();
  const auto pts = cfg.points();
  std::uint64_t ymax = 2;
  for (const auto& p : pts) ymax = std::max(ymax, p.y);
  const auto primes = primes_up_to(ymax);

  Json rows = Json::array();
  Table t{{"x", "y", "check", "value", "threshold", "status"}, {}};
  bool pass = true;
  std::vector<std::string> notes;

  for (const auto& p : pts) {
    require_integer(p, "lemmas");
    const auto ctx = SmoothContext::make(p.x, p.y, cfg.trunc_exponent);
    const auto sp = solve_alpha(ctx, primes);
    const double alpha = sp.alpha + cfg.alpha_offset;
    const double L = ctx.loglog_y();

    const auto ds = log_spaced_primes(primes, ctx.y, thresholds::kLocalRatioPrimes);
    ScanRequest req;
    req.ultra = false;
    for (auto d : ds) req.thresholds.push_back(ctx.x / d);
    const auto scan = scan_population(ctx, req, sc);

    const auto omega_law = LatticeLaw::from_counts(omega_marginal(scan.smooth));
    const auto omegaY_law = LatticeLaw::from_counts(omega_Y_marginal(scan.smooth));
    const double mu = static_cast<double>(omega_law.mean());
    const double muY = static_cast<double>(omegaY_law.mean());
    const auto M_y = prime_sum_M(ctx.y, alpha, primes, ctx);
    const auto M_Y = prime_sum_M(ctx.Y, alpha, primes, ctx);

    std::vector<Check> checks;
    const double residual = std::abs(saddle_lhs(alpha, ctx.y, primes) - ctx.log_x);
    checks.push_back(make_check("saddle_residual", residual, sp.tolerance));
    checks.push_back(make_check("prime_sum_large_y", std::abs(M_y.M_t - M_y.large_y_target),
                                thresholds::kPrimeSumLargeY, ctx.y > ctx.log_x));
    checks.push_back(
        make_check("prime_sum_uniform", std::abs(M_y.M_t - M_y.uniform_target), thresholds::kPrimeSumUniform));
    checks.push_back(make_check("mean_omega", std::abs(mu - M_y.M_t), thresholds::kMeanOmega));
    checks.push_back(
        make_check("mean_omega_Y", std::abs(muY - M_Y.M_t), thresholds::kMeanTruncated));
    if (ctx.u > 1.0) {
      const auto ts = std::clamp<std::uint64_t>(
          static_cast<std::uint64_t>(std::floor(std::exp(ctx.log_y / std::log(ctx.u)))), 2, ctx.y);
      const auto M_t = prime_sum_M(ts, alpha, primes, ctx);
      checks.push_back(make_check("small_prime_sum", std::abs(M_t.M_t - M_t.loglog_t_target),
                                  thresholds::kSmallPrimeSum, true, "t=" + std::to_string(ts)));
    } else {
      checks.push_back(make_check("small_prime_sum", 0.0, thresholds::kSmallPrimeSum, false,
                                  "needs u > 1"));
    }
    checks.push_back(make_check("truncated_sum", std::abs(M_Y.M_t - M_Y.trunc_target),
                                thresholds::kTruncatedSum, L > 1.0, L > 1.0 ? "" : "needs y > e^e"));

    double worst = 0.0;
    std::uint32_t worst_d = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double d = ds[i];
      const double ratio = static_cast<double>(scan.psi_at[i]) * std::exp(alpha * std::log(d)) /
                           static_cast<double>(scan.psi);
      const double scale = 1.0 / ctx.u_y + std::log(d) / ctx.log_x;
      const double k = std::abs(ratio - 1.0) / scale;
      if (k > worst) {
        worst = k;
        worst_d = ds[i];
      }
    }
    checks.push_back(make_check("local_ratio", worst, thresholds::kLocalRatioK, true,
                                std::to_string(ds.size()) + " primes, worst d=" +
                                    std::to_string(worst_d)));
    checks.push_back(make_check("alpha_approx", std::abs(alpha - sp.alpha_approx),
                                thresholds::kAlphaApprox, !sp.xi.degenerate,
                                sp.xi.degenerate ? "u = 1" : ""));
    if (sp.xi.asymptotic_valid) {
      const double lu = std::log(ctx.u);
      checks.push_back(make_check("xi_asymptotic",
                                  std::abs(sp.xi.xi - sp.xi.xi_asymptotic) * lu / (1.0 + std::log(lu)),
                                  thresholds::kXiAsymptoticC));
    } else {
      checks.push_back(
          make_check("xi_asymptotic", 0.0, thresholds::kXiAsymptoticC, false, "needs u >= 3"));
    }

    const auto ek = ek_distribution(scan, Population::smooth, ctx, Standardization::loglog);
    if (ek.degenerate || L <= 1.0) {
      checks.push_back(make_check("tail_h", 0.0, 0.0, false, "degenerate population or y <= e^e"));
      checks.push_back(make_check("transfer", 0.0, 0.0, false, "degenerate population or y <= e^e"));
    } else {
      checks.push_back(make_check("tail_h", ek.tail_fraction, ek.chebyshev_bound, true,
                                  "E[h]=" + fmt(ek.h_mean) + " eps=" + fmt(ek.tail_epsilon)));
      checks.push_back(make_check("transfer", ek.transfer_lhs, ek.transfer_rhs));
    }

    Json cj = Json::array();
    for (const auto& c : checks) {
      if (c.status == Check::fail) {
        pass = false;
        notes.push_back(c.name + " FAIL at " + point_label(p) + ": " + fmt(c.value) + " > " +
                        fmt(c.threshold));
      }
      Json j;
      j["check"] = c.name;
      j["value"] = c.value;
      j["threshold"] = c.threshold;
      j["status"] = status_name(c.status);
      if (!c.note.empty()) j["note"] = c.note;
      cj.push_back(std::move(j));
      t.rows.push_back({std::to_string(p.x), std::to_string(p.y), c.name, fmt(c.value),
                        fmt(c.threshold), status_name(c.status)});
    }
    Json row;
    row["x"] = p.x;
    row["y"] = p.y;
    row["u"] = ctx.u;
    row["Y"] = ctx.Y;
    row["alpha"] = alpha;
    row["psi"] = scan.psi;
    row["checks"] = std::move(cj);
    rows.push_back(std::move(row));
  }

  Json th;
  th["prime_sum_large_y"] = thresholds::kPrimeSumLargeY;
  th["prime_sum_uniform"] = thresholds::kPrimeSumUniform;
  th["mean_omega"] = thresholds::kMeanOmega;
  th["mean_omega_Y"] = thresholds::kMeanTruncated;
  th["small_prime_sum"] = thresholds::kSmallPrimeSum;
  th["truncated_sum"] = thresholds::kTruncatedSum;
  th["local_ratio_K"] = thresholds::kLocalRatioK;
  th["alpha_approx"] = thresholds::kAlphaApprox;
  th["xi_asymptotic_C"] = thresholds::kXiAsymptoticC;
  Json extra;
  extra["thresholds"] = std::move(th);
  return finish("lemmas", cfg, std::move(rows), t, pass, std::move(notes), std::move(extra));
}

// ---------------------------------------------------------------------------
// ek

namespace {

Json cdf_json(const std::vector<CdfPoint>& cdf) {
  Json j = Json::array();
  for (const auto& c : cdf) j.push_back(Json::array({c.z, c.F_emp, c.Phi}));
  return j;
}

void write_cdf(const fs::path& dir, const std::string& name, const std::vector<CdfPoint>& cdf) {
  fs::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  out << "z,F_emp,Phi\n";
  for (const auto& c : cdf)
    out << format_double(c.z) << ',' << format_double(c.F_emp) << ',' << format_double(c.Phi)
        << '\n';
}

bool cdf_valid(const std::vector<CdfPoint>& cdf) {
  double prev = 0.0;
  for (const auto& c : cdf) {
    if (!(c.F_emp >= prev - 1e-15) || c.F_emp > 1.0 + 1e-15) return false;
    prev = c.F_emp;
  }
  return true;
}

Json vec_json(const std::vector<double>& v) { return Json(v); }

}  // namespace

CommandResult cmd_ek(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto sc = cfg.sieve();
  const auto pts = cfg.points();
  std::uint64_t ymax = 2;
  for (const auto& p : pts) ymax = std::max(ymax, p.y);
  const auto primes = primes_up_to(ymax);
  const unsigned K = cfg.moments;

  Json rows = Json::array();
  Table t{{"x", "y", "population", "standardization", "ks", "ks_exact", "ks_Y", "tail", "degenerate"},
          {}};
  bool pass = true;
  std::vector<std::string> notes;
  std::vector<double> trend;

  for (const auto& p : pts) {
    const auto ctx = context_for(p, cfg);
    const auto sp = solve_alpha(ctx, primes);
    const std::string tag =
        (p.x ? "x" + std::to_string(p.x) : "logx" + fmt(ctx.log_x, "%.4f")) + "_y" +
        std::to_string(p.y);
    Json row;
    row["x"] = p.x ? Json(p.x) : Json(nullptr);
    row["log_x"] = ctx.log_x;
    row["y"] = p.y;
    row["u"] = ctx.u;
    row["Y"] = ctx.Y;
    row["alpha"] = sp.alpha;

    if (cfg.model_only) {
      const auto ens = build_ensemble_approximate(ctx, sp.alpha, primes);
      const auto dist = exact_distribution(ens, K);
      const auto law = LatticeLaw::from_pmf(dist.pmf);
      const double sd = std::sqrt(dist.variance);
      Json m;
      m["mode"] = to_string(ens.mode);
      m["primes"] = ens.size();
      m["mean"] = dist.mean;
      m["variance"] = dist.variance;
      if (dist.variance > 0) {
        const auto ks = ks_distance(law, dist.mean, sd);
        m["ks"] = ks.grid;
        m["ks_exact"] = ks.exact;
        m["cdf"] = cdf_json(ks.cdf);
        if (!cdf_valid(ks.cdf)) {
          pass = false;
          notes.push_back("invalid model CDF at " + point_label(p));
        }
        if (!cfg.out_dir.empty()) write_cdf(cfg.out_dir, "cdf_model_" + tag + ".csv", ks.cdf);
        trend.push_back(ks.grid);
        t.rows.push_back({p.x ? std::to_string(p.x) : "e^" + fmt(ctx.log_x), std::to_string(p.y),
                          "model", "empirical", fmt(ks.grid), fmt(ks.exact), "", "", "no"});
      } else {
        m["degenerate"] = true;
        t.rows.push_back({p.x ? std::to_string(p.x) : "e^" + fmt(ctx.log_x), std::to_string(p.y),
                          "model", "empirical", "", "", "", "", "yes"});
      }
      row["model"] = std::move(m);
      rows.push_back(std::move(row));
      continue;
    }

    require_integer(p, "ek");
    ScanRequest req;
    std::vector<std::uint32_t> ens_primes;
    for (auto q : primes) {
      if (q > ctx.Y) break;
      ens_primes.push_back(q);
      if (cfg.mode == EnsembleMode::exact) req.thresholds.push_back(ctx.x / q);
    }
    const auto scan = scan_population(ctx, req, sc);
    row["psi"] = scan.psi;
    row["upsilon"] = scan.upsilon;

    Json pops = Json::array();
    for (auto pop : {Population::smooth, Population::ultra}) {
      const auto& hist = pop == Population::smooth ? scan.smooth : scan.ultra;
      const auto count = pop == Population::smooth ? scan.psi : scan.upsilon;
      const auto law = LatticeLaw::from_counts(omega_marginal(hist));
      for (auto s : {Standardization::loglog, Standardization::empirical}) {
        const auto ek = ek_distribution(scan, pop, ctx, s);
        Json e;
        e["population"] = to_string(pop);
        e["standardization"] = to_string(s);
        e["count"] = count;
        e["degenerate"] = ek.degenerate;
        if (!ek.degenerate) {
          const auto mr = moment_report(pop, count, law, ctx, s, K);
          e["center"] = ek.center;
          e["scale"] = ek.scale;
          e["mean"] = mr.mean;
          e["variance"] = mr.variance;
          e["standardized_moments"] = vec_json(mr.standardized);
          e["ks"] = ek.ks_distance;
          e["ks_exact"] = ek.ks_exact;
          e["ks_Y"] = ek.ks_distance_Y;
          e["ks_exact_Y"] = ek.ks_exact_Y;
          e["tail_epsilon"] = ek.tail_epsilon;
          e["tail_fraction"] = ek.tail_fraction;
          e["centered_tail_fraction"] = ek.centered_tail_fraction;
          e["h_mean"] = ek.h_mean;
          e["h_variance"] = ek.h_variance;
          e["chebyshev_bound"] = ek.chebyshev_bound;
          e["transfer_lhs"] = ek.transfer_lhs;
          e["transfer_rhs"] = ek.transfer_rhs;
          e["cdf"] = cdf_json(ek.cdf);
          e["cdf_Y"] = cdf_json(ek.cdf_Y);
          if (!cdf_valid(ek.cdf) || !cdf_valid(ek.cdf_Y)) {
            pass = false;
            notes.push_back("invalid CDF at " + point_label(p));
          }
          if (!(ek.transfer_lhs <= ek.transfer_rhs)) {
            pass = false;
            notes.push_back("transfer inequality violated at " + point_label(p));
          }
          if (!cfg.out_dir.empty()) {
            const std::string base = std::string(to_string(pop)) + "_" + to_string(s) + "_" + tag;
            write_cdf(cfg.out_dir, "cdf_omega_" + base + ".csv", ek.cdf);
            write_cdf(cfg.out_dir, "cdf_omegaY_" + base + ".csv", ek.cdf_Y);
          }
          if (pop == Population::smooth && s == Standardization::loglog) trend.push_back(ek.ks_distance);
        }
        pops.push_back(std::move(e));
        t.rows.push_back({std::to_string(p.x), std::to_string(p.y), to_string(pop), to_string(s),
                          ek.degenerate ? "" : fmt(ek.ks_distance),
                          ek.degenerate ? "" : fmt(ek.ks_exact),
                          ek.degenerate ? "" : fmt(ek.ks_distance_Y),
                          ek.degenerate ? "" : fmt(ek.tail_fraction), ek.degenerate ? "yes" : "no"});
      }
    }
    row["populations"] = std::move(pops);

    // Model ensemble over p <= Y and the moment gaps against omega_Y.
    BernoulliEnsemble ens = cfg.mode == EnsembleMode::exact
                                ? build_ensemble_exact(ens_primes, scan.psi, scan.psi_at)
                                : build_ensemble_approximate(ctx, sp.alpha, primes);
    const auto dist = exact_distribution(ens, K);
    Json m;
    m["mode"] = to_string(ens.mode);
    m["primes"] = ens.size();
    m["mean"] = dist.mean;
    m["variance"] = dist.variance;
    if (dist.variance > 0) {
      const auto ks = ks_distance(LatticeLaw::from_pmf(dist.pmf), dist.mean, std::sqrt(dist.variance));
      m["ks"] = ks.grid;
      m["ks_exact"] = ks.exact;
      t.rows.push_back({std::to_string(p.x), std::to_string(p.y), "model", "empirical",
                        fmt(ks.grid), fmt(ks.exact), "", "", "no"});
    }
    const auto gaps = moment_gaps(LatticeLaw::from_counts(omega_Y_marginal(scan.smooth)), dist, K);
    const double L = ctx.loglog_y();
    std::vector<double> normalized;
    for (unsigned k = 0; k <= K; ++k)
      normalized.push_back(std::abs(gaps.delta_direct[k]) / std::pow(L, k / 2.0));
    for (unsigned k = 1; k <= K; ++k) {
      if (!(gaps.scaled_gap[k] <= thresholds::kDeltaIdentity)) {
        pass = false;
        notes.push_back("Delta identity off at k=" + std::to_string(k) + ", " + point_label(p));
      }
    }
    Json g;
    g["mu_Y"] = gaps.mu_Y;
    g["A"] = vec_json(gaps.A);
    g["delta_direct"] = vec_json(gaps.delta_direct);
    g["delta_binomial"] = vec_json(gaps.delta_binomial);
    g["relative_gap"] = vec_json(gaps.relative_gap);
    g["scaled_gap"] = vec_json(gaps.scaled_gap);
    g["delta_normalized"] = vec_json(normalized);
    m["moment_gaps"] = std::move(g);
    row["model"] = std::move(m);
    rows.push_back(std::move(row));
  }

  Json extra;
  if (trend_applicable(cfg) && trend.size() > 1)
    extra["ks_nonincreasing_along_y"] = nonincreasing(trend, thresholds::kKsTrendSlack);
  return finish("ek", cfg, std::move(rows), t, pass, std::move(notes), std::move(extra));
}

// ---------------------------------------------------------------------------
// model

CommandResult cmd_model(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto sc = cfg.sieve();
  const auto pts = cfg.points();
  std::uint64_t ymax = 2;
  for (const auto& p : pts) ymax = std::max(ymax, p.y);
  const auto primes = primes_up_to(ymax);
  const unsigned K = cfg.moments;

  Json rows = Json::array();
  Table t{{"x", "y", "Y", "mode", "m", "mean", "variance", "sample_mean", "z_mean", "flag"}, {}};
  bool pass = true;
  std::vector<std::string> notes;

  for (const auto& p : pts) {
    const auto ctx = context_for(p, cfg);
    const auto sp = solve_alpha(ctx, primes);
    BernoulliEnsemble ens;
    if (cfg.mode == EnsembleMode::exact) {
      require_integer(p, "model --mode exact");
      std::vector<std::uint32_t> ep;
      std::vector<std::uint64_t> qs;
      for (auto q : primes) {
        if (q > ctx.Y) break;
        ep.push_back(q);
        qs.push_back(ctx.x / q);
      }
      // Psi at every quotient from one pass; omega histograms are not needed.
      ScanRequest req;
      req.ultra = false;
      req.thresholds = qs;
      const auto scan = scan_population(ctx, req, sc);
      ens = build_ensemble_exact(ep, scan.psi, scan.psi_at);
    } else {
      ens = build_ensemble_approximate(ctx, sp.alpha, primes);
    }

    const auto dist = exact_distribution(ens, K);
    const auto mc = sample_S(ens, cfg.samples, cfg.seed, cfg.threads);
    const double se = std::sqrt(dist.variance / static_cast<double>(cfg.samples));
    const double z = se > 0 ? (mc.mean - dist.mean) / se : 0.0;
    // Statistical assertion: beyond 5 standard errors is flagged, not failed.
    const bool flagged = std::abs(z) > 5.0;
    if (flagged) notes.push_back("sample mean " + fmt(z) + " SE from exact at " + point_label(p));

    long double total = 0;
    for (auto v : dist.pmf) total += v;
    const bool pmf_ok = std::abs(static_cast<double>(total) - 1.0) <= 1e-12 &&
                        std::abs(dist.pmf_mean - dist.mean) <= 1e-9 * std::max(1.0, dist.mean);
    if (!pmf_ok) {
      pass = false;
      notes.push_back("pmf inconsistent at " + point_label(p));
    }

    double max_yp = 0.0;
    bool yp_ok = true;
    for (double q : ens.probs) {
      const double m2 = bernoulli_centered_moment(q, 2);
      max_yp = std::max(max_yp, m2);
      for (unsigned k = 3; k <= K; ++k)
        yp_ok = yp_ok && std::abs(bernoulli_centered_moment(q, k)) <= m2 + 1e-15;
    }
    yp_ok = yp_ok && max_yp <= 0.25 + 1e-15;
    if (!yp_ok) {
      pass = false;
      notes.push_back("centered Bernoulli moment invariant violated at " + point_label(p));
    }

    Json bounds = Json::array();
    if (dist.variance > 0) {
      for (unsigned k = 2; k <= K; ++k) {
        const auto b = centered_moment_bound(dist, k);
        if (!b.within) {
          pass = false;
          notes.push_back("moment bound violated at k=" + std::to_string(k) + ", " + point_label(p));
        }
        Json j;
        j["k"] = k;
        j["standardized"] = b.standardized;
        j["gaussian"] = gaussian_moment(k);
        j["combinatorial_bound"] = b.combinatorial_bound;
        j["variance_bound"] = b.variance_bound;
        j["bound_applies"] = b.bound_applies;
        j["within"] = b.within;
        bounds.push_back(std::move(j));
      }
    }

    Json row;
    row["x"] = p.x ? Json(p.x) : Json(nullptr);
    row["log_x"] = ctx.log_x;
    row["y"] = p.y;
    row["u"] = ctx.u;
    row["Y"] = ctx.Y;
    row["alpha"] = sp.alpha;
    row["mode"] = to_string(ens.mode);
    row["primes"] = ens.size();
    row["mean"] = dist.mean;
    row["variance"] = dist.variance;
    row["raw"] = Json::array();
    row["central"] = Json::array();
    for (std::size_t k = 0; k < dist.raw.size(); ++k) {
      row["raw"].push_back(static_cast<double>(dist.raw[k]));
      row["central"].push_back(static_cast<double>(dist.central[k]));
    }
    Json cancel = Json::array();
    for (std::size_t k = 0; k < dist.cancellation.size(); ++k)
      if (dist.cancellation[k]) cancel.push_back(k);
    row["cancellation_flagged"] = std::move(cancel);
    Json s;
    s["samples"] = mc.n_samples;
    s["seed"] = mc.seed;
    s["mean"] = mc.mean;
    s["variance"] = mc.variance;
    s["raw"] = vec_json(mc.raw);
    s["z_mean"] = z;
    s["flagged"] = flagged;
    row["monte_carlo"] = std::move(s);
    row["moment_bounds"] = std::move(bounds);
    rows.push_back(std::move(row));
    t.rows.push_back({p.x ? std::to_string(p.x) : "e^" + fmt(ctx.log_x), std::to_string(p.y),
                      std::to_string(ctx.Y), to_string(ens.mode), std::to_string(ens.size()),
                      fmt(dist.mean), fmt(dist.variance), fmt(mc.mean), fmt(z, "%.3f"),
                      flagged ? "flagged" : ""});
  }
  return finish("model", cfg, std::move(rows), t, pass, std::move(notes));
}

}  // namespace smoothek
