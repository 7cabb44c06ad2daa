#include "smoothek/stats.hpp"

#include <algorithm>
#include <cmath>

#include "smoothek/errors.hpp"

namespace smoothek {

double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double gaussian_moment(unsigned k) {
  if (k % 2 == 1) return 0.0;
  double v = 1.0;
  for (unsigned i = 3; i < k; i += 2) v *= i;
  return v;
}

const char* to_string(Population p) {
  switch (p) {
    case Population::smooth: return "smooth";
    case Population::ultra: return "ultra";
    case Population::model: return "model";
  }
  return "?";
}

const char* to_string(Standardization s) {
  return s == Standardization::loglog ? "loglog" : "empirical";
}

// ---------------------------------------------------------------------------

LatticeLaw LatticeLaw::from_counts(std::span<const std::uint64_t> counts) {
  LatticeLaw law;
  law.weight.reserve(counts.size());
  for (std::uint64_t c : counts) {
    law.weight.push_back(static_cast<long double>(c));
    law.total += static_cast<long double>(c);
  }
  return law;
}

LatticeLaw LatticeLaw::from_pmf(std::span<const long double> pmf) {
  LatticeLaw law;
  law.weight.assign(pmf.begin(), pmf.end());
  for (long double w : pmf) law.total += w;
  return law;
}

long double LatticeLaw::mean() const { return raw_moment(1); }

long double LatticeLaw::raw_moment(unsigned k) const {
  long double s = 0;
  for (std::size_t v = 0; v < weight.size(); ++v)
    s += weight[v] * std::pow(static_cast<long double>(v), static_cast<long double>(k));
  return s / total;
}

long double LatticeLaw::central_moment(unsigned k, long double center) const {
  long double s = 0;
  for (std::size_t v = 0; v < weight.size(); ++v) {
    long double term = weight[v];
    const long double dev = static_cast<long double>(v) - center;
    for (unsigned i = 0; i < k; ++i) term *= dev;
    s += term;
  }
  return s / total;
}

long double LatticeLaw::cdf_at(double z, double center, double scale) const {
  long double acc = 0;
  for (std::size_t v = 0; v < weight.size(); ++v) {
    if ((static_cast<double>(v) - center) / scale > z) break;
    acc += weight[v];
  }
  return acc / total;
}

Standardizer standardizer(Standardization s, const SmoothContext& ctx, const LatticeLaw& law) {
  if (s == Standardization::loglog) {
    const double L = ctx.loglog_y();
    return {L, std::sqrt(L)};
  }
  const long double mu = law.mean();
  return {static_cast<double>(mu), static_cast<double>(std::sqrt(law.central_moment(2, mu)))};
}

MomentReport moment_report(Population pop, std::uint64_t count, const LatticeLaw& law,
                           const SmoothContext& ctx, Standardization s, unsigned K) {
  MomentReport r;
  r.population = pop;
  r.count = count;
  r.standardization = s;
  const long double mu = law.mean();
  r.mean = static_cast<double>(mu);
  r.variance = static_cast<double>(law.central_moment(2, mu));
  const Standardizer st = standardizer(s, ctx, law);
  r.center = st.center;
  r.scale = st.scale;
  for (unsigned k = 0; k <= K; ++k) {
    r.raw.push_back(static_cast<double>(law.raw_moment(k)));
    r.central.push_back(static_cast<double>(law.central_moment(k, mu)));
    const long double c = law.central_moment(k, st.center);
    r.standardized.push_back(
        st.scale > 0 ? static_cast<double>(c / std::pow(static_cast<long double>(st.scale), k))
                     : std::nan(""));
  }
  return r;
}

MomentReport empirical_moments(Population pop, const SmoothContext& ctx, std::uint64_t t,
                               Standardization s, unsigned K, const SieveConfig& cfg) {
  if (pop == Population::model)
    throw DomainError("empirical_moments: the model population has no enumeration; use moment_report");
  if (t < 2) throw DomainError("empirical_moments: t must be >= 2");
  ScanRequest req;
  req.ultra = pop == Population::ultra;
  req.low_bound = std::min(t, ctx.y);
  const PopulationScan scan = scan_population(ctx, req, cfg);
  const JointHistogram& h = pop == Population::ultra ? scan.ultra : scan.smooth;
  const auto counts = t >= ctx.y ? omega_marginal(h) : omega_Y_marginal(h);
  const std::uint64_t n = pop == Population::ultra ? scan.upsilon : scan.psi;
  return moment_report(pop, n, LatticeLaw::from_counts(counts), ctx, s, K);
}

// ---------------------------------------------------------------------------

std::vector<double> z_grid() {
  std::vector<double> z;
  for (int i = 0; i <= 160; ++i) z.push_back(-4.0 + 0.05 * i);
  return z;
}

KsResult ks_distance(const LatticeLaw& law, double center, double scale) {
  KsResult r;
  for (double z : z_grid()) {
    const double F = static_cast<double>(law.cdf_at(z, center, scale));
    const double P = phi_cdf(z);
    r.cdf.push_back({z, F, P});
    r.grid = std::max(r.grid, std::abs(F - P));
  }
  long double below = 0;
  for (std::size_t v = 0; v < law.weight.size(); ++v) {
    if (law.weight[v] == 0) continue;
    const double z = (static_cast<double>(v) - center) / scale;
    const double P = phi_cdf(z);
    const double left = static_cast<double>(below / law.total);
    below += law.weight[v];
    const double right = static_cast<double>(below / law.total);
    r.exact = std::max({r.exact, std::abs(left - P), std::abs(right - P)});
  }
  return r;
}

std::vector<std::uint64_t> omega_marginal(const JointHistogram& h) {
  std::vector<std::uint64_t> m(kMaxOmega, 0);
  for (std::size_t a = 0; a < kMaxOmega; ++a)
    for (std::size_t b = 0; b < kMaxOmega; ++b) m[a] += h[a][b];
  return m;
}

std::vector<std::uint64_t> omega_Y_marginal(const JointHistogram& h) {
  std::vector<std::uint64_t> m(kMaxOmega, 0);
  for (std::size_t a = 0; a < kMaxOmega; ++a)
    for (std::size_t b = 0; b < kMaxOmega; ++b) m[b] += h[a][b];
  return m;
}

std::vector<std::uint64_t> h_marginal(const JointHistogram& h) {
  std::vector<std::uint64_t> m(kMaxOmega, 0);
  for (std::size_t a = 0; a < kMaxOmega; ++a)
    for (std::size_t b = 0; b <= a; ++b) m[a - b] += h[a][b];
  return m;
}

EkReport ek_distribution(const PopulationScan& scan, Population pop, const SmoothContext& ctx,
                         Standardization s) {
  if (pop == Population::model)
    throw DomainError("ek_distribution: enumerable populations only; use ks_distance for the model");
  const JointHistogram& h = pop == Population::ultra ? scan.ultra : scan.smooth;
  EkReport r;
  r.population = pop;
  r.standardization = s;
  r.count = pop == Population::ultra ? scan.upsilon : scan.psi;

  const auto om = LatticeLaw::from_counts(omega_marginal(h));
  const auto omY = LatticeLaw::from_counts(omega_Y_marginal(h));
  const auto hl = LatticeLaw::from_counts(h_marginal(h));
  if (r.count == 0) {
    r.degenerate = true;
    return r;
  }

  const long double mu = om.mean();
  const long double var = om.central_moment(2, mu);
  const long double muY = omY.mean();
  const long double varY = omY.central_moment(2, muY);
  r.h_mean = static_cast<double>(hl.mean());
  r.h_variance = static_cast<double>(hl.central_moment(2, hl.mean()));

  const double L = ctx.loglog_y();
  r.tail_epsilon = std::pow(L, 0.25);
  r.chebyshev_bound = r.h_variance / std::sqrt(L);
  {
    long double above = 0, far = 0;
    for (std::size_t v = 0; v < hl.weight.size(); ++v) {
      if (static_cast<double>(v) > r.tail_epsilon) above += hl.weight[v];
      if (std::abs(static_cast<double>(v) - r.h_mean) >= r.tail_epsilon) far += hl.weight[v];
    }
    r.tail_fraction = static_cast<double>(above / hl.total);
    r.centered_tail_fraction = static_cast<double>(far / hl.total);
  }

  if (var == 0) {
    r.degenerate = true;
    return r;
  }

  const Standardizer st = standardizer(s, ctx, om);
  r.center = st.center;
  r.scale = st.scale;
  if (!(st.scale > 0)) {  // log log y scale is <= 0 (y < e^e)
    r.degenerate = true;
    return r;
  }
  const KsResult ks = ks_distance(om, st.center, st.scale);
  r.ks_distance = ks.grid;
  r.ks_exact = ks.exact;
  r.cdf = ks.cdf;

  const Standardizer stY = s == Standardization::loglog ? st : standardizer(s, ctx, omY);
  r.center_Y = stY.center;
  r.scale_Y = stY.scale;
  if (varY > 0 || s == Standardization::loglog) {
    const KsResult ksY = ks_distance(omY, stY.center, stY.scale);
    r.ks_distance_Y = ksY.grid;
    r.ks_exact_Y = ksY.exact;
    r.cdf_Y = ksY.cdf;
  }

  // The transfer inequality needs one standardization for both variables.
  const KsResult common = s == Standardization::loglog ? KsResult{r.ks_distance_Y, r.ks_exact_Y, {}}
                                                      : ks_distance(omY, st.center, st.scale);
  const double delta = r.tail_epsilon / st.scale;
  r.transfer_lhs = r.ks_exact;
  r.transfer_rhs = common.exact + r.tail_fraction + (2.0 * phi_cdf(delta / 2.0) - 1.0);
  return r;
}

// ---------------------------------------------------------------------------

MomentGaps moment_gaps(const LatticeLaw& omega_Y, const PoissonBinomialDist& model, unsigned K) {
  const LatticeLaw S = LatticeLaw::from_pmf(model.pmf);
  MomentGaps g;
  const long double mu = omega_Y.mean();
  g.mu_Y = static_cast<double>(mu);
  std::vector<long double> A(K + 1);
  for (unsigned j = 0; j <= K; ++j) {
    A[j] = omega_Y.raw_moment(j) - S.raw_moment(j);
    g.A.push_back(static_cast<double>(A[j]));
  }
  for (unsigned k = 0; k <= K; ++k) {
    const long double direct = omega_Y.central_moment(k, mu) - S.central_moment(k, mu);
    long double binom = 0, c = 1;  // c = C(k, j)
    long double magnitude = 0;
    for (unsigned j = 0; j <= k; ++j) {
      const long double w = c * std::pow(std::abs(mu), static_cast<long double>(k - j));
      magnitude += w * (std::abs(omega_Y.raw_moment(j)) + std::abs(S.raw_moment(j)));
      if (j >= 1) binom += c * std::pow(-mu, static_cast<long double>(k - j)) * A[j];
      c = c * (k - j) / (j + 1);
    }
    g.delta_direct.push_back(static_cast<double>(direct));
    g.delta_binomial.push_back(static_cast<double>(binom));
    const long double denom = std::max(std::abs(direct), std::abs(binom));
    g.relative_gap.push_back(denom > 0 ? static_cast<double>(std::abs(direct - binom) / denom) : 0.0);
    g.term_magnitude.push_back(static_cast<double>(magnitude));
    g.scaled_gap.push_back(magnitude > 0 ? static_cast<double>(std::abs(direct - binom) / magnitude)
                                         : 0.0);
  }
  return g;
}

}  // namespace smoothek
