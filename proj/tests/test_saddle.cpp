#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "smoothek/errors.hpp"
#include "smoothek/saddle.hpp"
#include "smoothek/sieve.hpp"

using namespace smoothek;

namespace {

double xi_bisect(double u) {
  double lo = 1e-12, hi = 2.0 * std::log(u) + 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::exp(mid) - 1.0 - u * mid < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<std::uint64_t> naive_primes(std::uint64_t y) {
  std::vector<std::uint64_t> p;
  for (std::uint64_t n = 2; n <= y; ++n)
    if (oracle::is_prime(n)) p.push_back(n);
  return p;
}

double alpha_bisect(double log_x, std::uint64_t y) {
  const auto ps = naive_primes(y);
  auto F = [&](double a) {
    double s = 0;
    for (auto p : ps) s += std::log(double(p)) / (std::pow(double(p), a) - 1.0);
    return s - log_x;
  };
  double lo = 1e-3, hi = 2.0;  // F decreasing
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (F(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("xi residual and bisection oracle") {
  for (double u : {1.001, 1.5, 2.0, 3.0, 10.0, 100.0, 1e4, 1e6}) {
    const auto v = solve_xi(u);
    CHECK(!v.degenerate);
    CHECK(std::abs(std::expm1(v.xi) - u * v.xi) <= 1e-12 * (1.0 + u * v.xi));
    CHECK(v.xi == doctest::Approx(xi_bisect(u)).epsilon(1e-10));
    CHECK(v.asymptotic_valid == (u >= 3.0));
  }
}

TEST_CASE("xi near and at u = 1") {
  const auto one = solve_xi(1.0);
  CHECK(one.degenerate);
  CHECK(one.xi == 0.0);
  // e^xi = 1 + u xi with u = 1 + eps has xi ~ 2 eps.
  const auto near = solve_xi(1.0 + 1e-6);
  CHECK(near.xi == doctest::Approx(2e-6).epsilon(1e-5));
  CHECK_THROWS_AS(solve_xi(0.5), DomainError);
}

TEST_CASE("xi is increasing and tracks log(u log u)") {
  double prev = 0;
  for (double u = 1.1; u < 1e5; u *= 1.7) {
    const double xi = solve_xi(u).xi;
    CHECK(xi > prev);
    prev = xi;
  }
  for (double u : {100.0, 1e3, 1e4, 1e6}) {
    const auto v = solve_xi(u);
    CHECK(std::abs(v.xi - v.xi_asymptotic) / v.xi_asymptotic <= 0.25);
  }
}

TEST_CASE("alpha against a bisection oracle") {
  const auto primes = primes_up_to(10'000);
  for (auto [x, y] : {std::pair<std::uint64_t, std::uint64_t>{1'000'000, 1000},
                      {100'000'000, 10'000}, {1000, 1000}, {1'000'000'000, 30}}) {
    const auto ctx = SmoothContext::make(x, y);
    const auto sp = solve_alpha(ctx, primes);
    CHECK(sp.residual <= sp.tolerance);
    CHECK(sp.alpha == doctest::Approx(alpha_bisect(ctx.log_x, y)).epsilon(1e-9));
  }
}

TEST_CASE("alpha decreases in x and increases in y") {
  const auto primes = primes_up_to(100'000);
  double prev = 2.0;
  for (double lx = 8; lx < 40; lx += 3) {
    const double a = solve_alpha(SmoothContext::from_log(lx, 1000), primes).alpha;
    CHECK(a < prev);
    prev = a;
  }
  prev = 0.0;
  for (std::uint64_t y : {30, 100, 1000, 10'000, 100'000}) {
    const double a = solve_alpha(SmoothContext::from_log(40.0, y), primes).alpha;
    CHECK(a > prev);
    prev = a;
  }
}

TEST_CASE("alpha approximation gap shrinks along y at fixed u") {
  const auto primes = primes_up_to(1'000'000);
  double prev = 1.0;
  for (std::uint64_t y : {1000, 10'000, 100'000, 1'000'000}) {
    const auto ctx = SmoothContext::from_log(2.0 * std::log(double(y)), y);
    const auto sp = solve_alpha(ctx, primes);
    const double gap = std::abs(sp.alpha - sp.alpha_approx);
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("bracket failure reports both endpoint values") {
  const std::vector<std::uint32_t> only_two = {2};
  const auto ctx = SmoothContext::from_log(5e6, 2);
  try {
    solve_alpha(ctx, only_two);
    FAIL("expected BracketError");
  } catch (const BracketError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("F(") != std::string::npos);
  }
}

TEST_CASE("prime sums") {
  const auto primes = primes_up_to(10'000);
  const auto ctx = SmoothContext::make(100'000'000, 10'000);
  const auto sp = solve_alpha(ctx, primes);
  CHECK(prime_sum(2, sp.alpha, primes) == doctest::Approx(std::pow(2.0, -sp.alpha)).epsilon(1e-15));
  double mertens = 0;
  for (auto p : naive_primes(1000)) mertens += 1.0 / double(p);
  CHECK(prime_sum(1000, 1.0, primes) == doctest::Approx(mertens).epsilon(1e-14));

  double prev = 0;
  for (std::uint64_t t : {2, 3, 10, 100, 1000, 10'000}) {
    const auto r = prime_sum_M(t, sp.alpha, primes, ctx);
    CHECK(r.M_t >= prev);
    CHECK(r.M_t <= double(r.prime_count));
    prev = r.M_t;
  }
  const auto r = prime_sum_M(10'000, sp.alpha, primes, ctx);
  CHECK(r.prime_count == 1229);
  CHECK(r.large_y_target == doctest::Approx(std::log(std::log(1e4)) + 2.0));
  CHECK_THROWS(prime_sum_M(20'000, sp.alpha, primes, ctx));
  CHECK_THROWS(prime_sum_M(1, sp.alpha, primes, ctx));
}

TEST_CASE("mean prediction at the x = y boundary is finite") {
  const auto primes = primes_up_to(1000);
  const auto ctx = SmoothContext::make(1000, 1000);
  const auto sp = solve_alpha(ctx, primes);
  const auto m = expected_mean_prediction(ctx, sp, primes);
  CHECK(std::isfinite(m.M_y));
  CHECK(m.loglog_plus_u == doctest::Approx(std::log(std::log(1000.0)) + 1.0));
}
