#pragma once

// Naive reference implementations used as test oracles. Nothing here shares
// code with the library: plain trial division and direct enumeration.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace oracle {

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

/// (prime, exponent) pairs in increasing prime order.
inline std::vector<std::pair<std::uint64_t, unsigned>> factor(std::uint64_t n) {
  std::vector<std::pair<std::uint64_t, unsigned>> f;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d) continue;
    unsigned e = 0;
    while (n % d == 0) {
      n /= d;
      ++e;
    }
    f.emplace_back(d, e);
  }
  if (n > 1) f.emplace_back(n, 1);
  return f;
}

inline std::uint64_t largest_prime_factor(std::uint64_t n) {
  const auto f = factor(n);
  return f.empty() ? 1 : f.back().first;
}

inline std::uint64_t ipow(std::uint64_t b, unsigned e) {
  std::uint64_t v = 1;
  while (e--) v *= b;
  return v;
}

inline bool is_smooth(std::uint64_t n, std::uint64_t y) { return largest_prime_factor(n) <= y; }

inline bool is_ultra_smooth(std::uint64_t n, std::uint64_t y) {
  for (auto [p, e] : factor(n))
    if (p > y || ipow(p, e) > y) return false;
  return true;
}

inline unsigned omega_t(std::uint64_t n, std::uint64_t t) {
  unsigned w = 0;
  for (auto [p, e] : factor(n)) w += p <= t;
  return w;
}

inline std::uint64_t psi(std::uint64_t x, std::uint64_t y) {
  std::uint64_t c = 0;
  for (std::uint64_t n = 1; n <= x; ++n) c += is_smooth(n, y);
  return c;
}

inline std::uint64_t upsilon(std::uint64_t x, std::uint64_t y) {
  std::uint64_t c = 0;
  for (std::uint64_t n = 1; n <= x; ++n) c += is_ultra_smooth(n, y);
  return c;
}

/// Product of the first k primes.
inline std::uint64_t primorial(unsigned k) {
  std::uint64_t v = 1;
  for (std::uint64_t p = 2; k > 0; ++p)
    if (is_prime(p)) {
      v *= p;
      --k;
    }
  return v;
}

/// Composite Simpson on [a, b] with adaptive bisection.
template <class F>
double integrate(F f, double a, double b, double tol = 1e-13, int depth = 40) {
  const auto simpson = [&](double l, double r, double fl, double fm, double fr) {
    return (r - l) / 6.0 * (fl + 4.0 * fm + fr);
  };
  struct Rec {
    F& f;
    decltype(simpson)& s;
    double go(double l, double r, double fl, double fm, double fr, double whole, double eps,
              int d) {
      const double m = 0.5 * (l + r), lm = 0.5 * (l + m), rm = 0.5 * (m + r);
      const double flm = f(lm), frm = f(rm);
      const double left = s(l, m, fl, flm, fm), right = s(m, r, fm, frm, fr);
      if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
      return go(l, m, fl, flm, fm, left, eps / 2, d - 1) + go(m, r, fm, frm, fr, right, eps / 2, d - 1);
    }
  } rec{f, simpson};
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec.go(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, depth);
}

}  // namespace oracle
