#include "smoothek/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "smoothek/errors.hpp"
#include "smoothek/summation.hpp"

namespace smoothek {

namespace {

// e^xi - 1 - u xi, without cancellation at small xi.
double xi_equation(double xi, double u) { return std::expm1(xi) - u * xi; }

}  // namespace

XiValue solve_xi(double u) {
  if (!(u >= 1.0)) {
    std::ostringstream os;
    os << "solve_xi: u must be >= 1, got " << u;
    throw DomainError(os.str());
  }
  XiValue out;
  out.u = u;
  out.asymptotic_valid = u >= 3.0;
  out.xi_asymptotic = u > 1.0 ? std::log(u * std::log(u)) : 0.0;
  if (u == 1.0) {
    out.degenerate = true;
    return out;
  }

  // f < 0 just above 0 (slope 1 - u) and f > 0 at 3 log(u + 2).
  double lo = std::min(1e-9, (u - 1.0) / 2.0);
  double hi = 3.0 * std::log(u + 2.0);
  while (hi - lo > 1e-4 * hi) {
    const double mid = 0.5 * (lo + hi);
    (xi_equation(mid, u) < 0.0 ? lo : hi) = mid;
  }
  double xi = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double f = xi_equation(xi, u);
    if (std::abs(f) <= 1e-14 * (1.0 + u * xi)) break;
    (f < 0.0 ? lo : hi) = xi;
    double next = xi - f / (std::exp(xi) - u);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == xi) break;
    xi = next;
  }
  out.xi = xi;
  return out;
}

double saddle_lhs(double alpha, std::uint64_t y, std::span<const std::uint32_t> primes) {
  CompensatedSum<double> s;
  for (std::uint32_t p : primes) {
    if (p > y) break;
    const double lp = std::log(static_cast<double>(p));
    s += lp / std::expm1(alpha * lp);
  }
  return s.value();
}

double saddle_lhs_derivative(double alpha, std::uint64_t y, std::span<const std::uint32_t> primes) {
  CompensatedSum<double> s;
  for (std::uint32_t p : primes) {
    if (p > y) break;
    const double lp = std::log(static_cast<double>(p));
    const double em1 = std::expm1(alpha * lp);
    s += -lp * lp * (1.0 + em1) / (em1 * em1);
  }
  return s.value();
}

SaddlePoint solve_alpha(const SmoothContext& ctx, std::span<const std::uint32_t> primes,
                        const SaddleOptions& opts) {
  if (primes.empty() || primes.front() != 2)
    throw BracketError("solve_alpha: prime list is empty or does not start at 2");
  const double target = ctx.log_x;
  auto F = [&](double a) { return saddle_lhs(a, ctx.y, primes) - target; };

  double lo = opts.lower, hi = opts.upper;
  const double flo = F(lo), fhi = F(hi);
  if (!(flo > 0.0 && fhi < 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "solve_alpha: no sign change on [" << lo << ", " << hi << "]: F(lo)=" << flo
       << " F(hi)=" << fhi << " (log x=" << target << ", y=" << ctx.y << ")";
    throw BracketError(os.str());
  }

  SaddlePoint sp;
  sp.tolerance = opts.residual_scale * target;
  int iterations = 0;
  // LHS is strictly decreasing in alpha.
  while (hi - lo > opts.bisect_width) {
    const double mid = 0.5 * (lo + hi);
    (F(mid) > 0.0 ? lo : hi) = mid;
    ++iterations;
  }
  double a = 0.5 * (lo + hi);
  double fa = F(a);
  for (int it = 0; it < 60; ++it) {
    ++iterations;
    if (std::abs(fa) <= 1e-3 * sp.tolerance) break;
    (fa > 0.0 ? lo : hi) = a;
    double next = a - fa / saddle_lhs_derivative(a, ctx.y, primes);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == a) break;
    a = next;
    fa = F(a);
  }

  sp.alpha = a;
  sp.residual = std::abs(fa);
  sp.iterations = iterations;
  sp.xi = solve_xi(std::max(1.0, ctx.u));
  sp.alpha_approx = 1.0 - sp.xi.xi / ctx.log_y;
  return sp;
}

double prime_sum(std::uint64_t t, double alpha, std::span<const std::uint32_t> primes) {
  CompensatedSum<double> s;
  for (std::uint32_t p : primes) {
    if (p > t) break;
    s += std::exp(-alpha * std::log(static_cast<double>(p)));
  }
  return s.value();
}

PrimeSumReport prime_sum_M(std::uint64_t t, double alpha, std::span<const std::uint32_t> primes,
                           const SmoothContext& ctx) {
  if (t < 2 || t > ctx.y) throw DomainError("prime_sum_M: need 2 <= t <= y");
  PrimeSumReport r;
  r.t = t;
  r.alpha = alpha;
  r.M_t = prime_sum(t, alpha, primes);
  r.prime_count = static_cast<std::uint64_t>(
      std::upper_bound(primes.begin(), primes.end(), t) - primes.begin());
  const double llY = ctx.loglog_y();
  const double y = static_cast<double>(ctx.y);
  r.uniform_target = llY + ctx.u * y / (y + ctx.log_x);
  r.large_y_target = llY + ctx.u;
  r.loglog_t_target = std::log(std::log(static_cast<double>(t)));
  r.trunc_target = llY - std::log(ctx.phi_y);
  return r;
}

MeanPrediction expected_mean_prediction(const SmoothContext& ctx, const SaddlePoint& sp,
                                        std::span<const std::uint32_t> primes) {
  return {prime_sum(ctx.y, sp.alpha, primes), ctx.loglog_y() + ctx.u};
}

}  // namespace smoothek
