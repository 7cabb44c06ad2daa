#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "smoothek/psi_recurrence.hpp"
#include "smoothek/saddle.hpp"
#include "smoothek/stats.hpp"

using namespace smoothek;

namespace {

double normal_density(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); }

}  // namespace

TEST_CASE("phi_cdf against quadrature") {
  CHECK(phi_cdf(0.0) == 0.5);
  for (double z : {-3.0, -1.0, -0.3, 0.7, 1.96, 2.5}) {
    const double q = oracle::integrate(normal_density, -12.0, z);
    CHECK(phi_cdf(z) == doctest::Approx(q).epsilon(1e-10));
    CHECK(phi_cdf(z) + phi_cdf(-z) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("gaussian moments") {
  CHECK(gaussian_moment(0) == 1.0);
  CHECK(gaussian_moment(1) == 0.0);
  CHECK(gaussian_moment(2) == 1.0);
  CHECK(gaussian_moment(4) == 3.0);
  CHECK(gaussian_moment(7) == 0.0);
  CHECK(gaussian_moment(10) == 945.0);
  const double m6 =
      oracle::integrate([](double t) { return std::pow(t, 6) * normal_density(t); }, -14.0, 14.0);
  CHECK(gaussian_moment(6) == doctest::Approx(m6).epsilon(1e-9));
}

TEST_CASE("moments over S(10, 2)") {
  const auto ctx = SmoothContext::make(10, 2);
  const auto r = empirical_moments(Population::smooth, ctx, 2, Standardization::empirical, 4);
  CHECK(r.count == 4);
  CHECK(r.mean == 0.75);  // omega = 0, 1, 1, 1
  CHECK(r.variance == doctest::Approx(3.0 / 16.0));
  CHECK(r.standardized[2] == doctest::Approx(1.0));
}

TEST_CASE("moments over S(100, 10) against direct enumeration") {
  const auto ctx = SmoothContext::make(100, 10);
  const auto r = empirical_moments(Population::smooth, ctx, 10, Standardization::empirical, 4);
  double n = 0, s1 = 0, s2 = 0;
  for (std::uint64_t k = 1; k <= 100; ++k) {
    if (!oracle::is_smooth(k, 10)) continue;
    const double w = oracle::omega_t(k, 10);
    n += 1;
    s1 += w;
    s2 += w * w;
  }
  const double mu = s1 / n;
  CHECK(r.count == static_cast<std::uint64_t>(n));
  CHECK(r.mean == doctest::Approx(mu).epsilon(1e-14));
  CHECK(r.variance == doctest::Approx(s2 / n - mu * mu).epsilon(1e-12));
}

TEST_CASE("ultra population and truncated omega_t moments") {
  const auto ctx = SmoothContext::make(20'000, 50);
  const auto r = empirical_moments(Population::ultra, ctx, 7, Standardization::empirical, 2);
  double n = 0, s1 = 0;
  for (std::uint64_t k = 1; k <= 20'000; ++k) {
    if (!oracle::is_ultra_smooth(k, 50)) continue;
    n += 1;
    s1 += oracle::omega_t(k, 7);
  }
  CHECK(r.count == static_cast<std::uint64_t>(n));
  CHECK(r.mean == doctest::Approx(s1 / n).epsilon(1e-14));
}

TEST_CASE("model population") {
  BernoulliEnsemble e;
  e.primes = {2};
  e.probs = {0.5};
  const auto d = exact_distribution(e, 4);
  const auto ctx = SmoothContext::make(100, 10);
  const auto r = moment_report(Population::model, 1, LatticeLaw::from_pmf(d.pmf), ctx,
                               Standardization::empirical, 4);
  CHECK(r.mean == 0.5);
  CHECK(r.variance == 0.25);
}

TEST_CASE("loglog standardization uses log log y") {
  const auto ctx = SmoothContext::make(1'000'000, 1000);
  const auto law = LatticeLaw::from_counts(std::vector<std::uint64_t>{1, 2, 3});
  const auto st = standardizer(Standardization::loglog, ctx, law);
  CHECK(st.center == doctest::Approx(std::log(std::log(1000.0))));
  CHECK(st.scale == doctest::Approx(std::sqrt(std::log(std::log(1000.0)))));
}

TEST_CASE("constant population is degenerate") {
  PopulationScan scan;
  scan.psi = 5;
  scan.smooth[1][1] = 5;
  const auto ctx = SmoothContext::make(100'000, 1000);
  const auto r = ek_distribution(scan, Population::smooth, ctx, Standardization::loglog);
  CHECK(r.degenerate);
  CHECK(r.cdf.empty());
}

TEST_CASE("KS distance of a near-normal lattice law") {
  // Binomial(400, 1/2) standardized: the lattice step is 0.1 sd, so the exact
  // sup is about half the largest atom (~0.02) and the grid value is below it.
  std::vector<long double> pmf(401);
  long double c = std::pow(0.5L, 400);
  for (int k = 0; k <= 400; ++k) {
    pmf[k] = c;
    c = c * (400 - k) / (k + 1);
  }
  const auto ks = ks_distance(LatticeLaw::from_pmf(pmf), 200.0, 10.0);
  CHECK(ks.cdf.size() == 161);
  CHECK(ks.exact >= ks.grid);
  CHECK(ks.exact < 0.025);
  CHECK(ks.exact > 0.015);
}

TEST_CASE("EK report on (1e6, 1e3)") {
  const auto ctx = SmoothContext::make(1'000'000, 1000);
  const auto scan = scan_population(ctx, {}, {});
  for (auto pop : {Population::smooth, Population::ultra})
    for (auto s : {Standardization::loglog, Standardization::empirical}) {
      const auto r = ek_distribution(scan, pop, ctx, s);
      REQUIRE(!r.degenerate);
      double prev = 0;
      for (const auto& p : r.cdf) {
        CHECK(p.F_emp >= prev);
        CHECK(p.F_emp <= 1.0);
        prev = p.F_emp;
      }
      CHECK(r.cdf.front().F_emp <= r.cdf.back().F_emp);
      CHECK(r.transfer_lhs <= r.transfer_rhs);
      CHECK(r.ks_exact >= r.ks_distance);
      // Chebyshev about the mean of h always holds for the empirical law.
      CHECK(r.centered_tail_fraction <= r.h_variance / (r.tail_epsilon * r.tail_epsilon) + 1e-15);
    }
  const auto a = ek_distribution(scan, Population::smooth, ctx, Standardization::loglog);
  const auto b = ek_distribution(scan_population(ctx, {}, {}), Population::smooth, ctx,
                                 Standardization::loglog);
  CHECK(a.ks_distance == b.ks_distance);
}

TEST_CASE("moment gaps: A_0, A_1 in exact mode, and the Delta identity") {
  const auto ctx = SmoothContext::make(3'000'000, 2000);
  const auto primes = primes_up_to(ctx.y);
  ScanRequest req;
  std::vector<std::uint32_t> ep;
  for (auto p : primes) {
    if (p > ctx.Y) break;
    ep.push_back(p);
    req.thresholds.push_back(ctx.x / p);
  }
  const auto scan = scan_population(ctx, req, {});
  const auto law = LatticeLaw::from_counts(omega_Y_marginal(scan.smooth));

  const auto exact = exact_distribution(build_ensemble_exact(ep, scan.psi, scan.psi_at), 6);
  const auto g = moment_gaps(law, exact, 6);
  CHECK(g.A[0] == 0.0);
  CHECK(std::abs(g.A[1]) < 1e-12);
  for (unsigned k = 2; k <= 6; ++k) CHECK(g.relative_gap[k] <= 1e-8);
  for (unsigned k = 1; k <= 6; ++k) CHECK(g.scaled_gap[k] <= 1e-12);

  const auto sp = solve_alpha(ctx, primes);
  const auto approx = exact_distribution(build_ensemble_approximate(ctx, sp.alpha, primes), 6);
  const auto ga = moment_gaps(law, approx, 6);
  CHECK(std::abs(ga.A[1]) > 1e-6);  // approximate probabilities do not reproduce the mean
  for (unsigned k = 1; k <= 6; ++k) CHECK(ga.relative_gap[k] <= 1e-8);
}

TEST_CASE("marginals") {
  JointHistogram h{};
  h[3][1] = 4;
  h[2][2] = 1;
  h[0][0] = 2;
  CHECK(omega_marginal(h)[3] == 4);
  CHECK(omega_Y_marginal(h)[1] == 4);
  CHECK(h_marginal(h)[2] == 4);
  CHECK(h_marginal(h)[0] == 3);
}
