#pragma once

#include <cstdint>
#include <span>

#include "smoothek/context.hpp"

namespace smoothek {

/// Positive root of e^xi = 1 + u*xi.
struct XiValue {
  double u = 1.0;
  double xi = 0.0;
  double xi_asymptotic = 0.0;  // log(u log u); meaningful for u >= 3
  bool degenerate = false;     // u == 1, xi := 0
  bool asymptotic_valid = false;
};

/// Throws DomainError for u < 1. Relative residual |e^xi - 1 - u xi| / (1 + u xi) <= 1e-12.
XiValue solve_xi(double u);

struct SaddleOptions {
  double residual_scale = 1e-10;  // |residual| <= residual_scale * log x
  double bisect_width = 1e-4;     // bisection hands over to Newton below this bracket width
  double lower = 1e-6;
  double upper = 2.0;
};

/// Root alpha(x, y) of sum_{p <= y} log p / (p^alpha - 1) = log x.
struct SaddlePoint {
  double alpha = 1.0;
  double residual = 0.0;      // |LHS(alpha) - log x|
  double tolerance = 0.0;     // residual_scale * log x
  double alpha_approx = 1.0;  // 1 - xi(u) / log y
  XiValue xi;
  int iterations = 0;
};

/// sum_{p <= y} log p / (p^alpha - 1), compensated.
double saddle_lhs(double alpha, std::uint64_t y, std::span<const std::uint32_t> primes);
/// d/d alpha of saddle_lhs: -sum log^2 p * p^alpha / (p^alpha - 1)^2.
double saddle_lhs_derivative(double alpha, std::uint64_t y, std::span<const std::uint32_t> primes);

/// `primes` must contain every prime <= ctx.y (extra primes are ignored).
/// Throws BracketError, with both endpoint values, when the bracket has no sign change.
SaddlePoint solve_alpha(const SmoothContext& ctx, std::span<const std::uint32_t> primes,
                        const SaddleOptions& opts = {});

/// M(t) = sum_{p <= t} p^{-alpha}, exact finite sum in increasing prime order.
double prime_sum(std::uint64_t t, double alpha, std::span<const std::uint32_t> primes);

struct PrimeSumReport {
  std::uint64_t t = 0;
  double alpha = 1.0;
  double M_t = 0.0;
  std::uint64_t prime_count = 0;
  double uniform_target = 0.0;   // log log y + u y / (y + log x)
  double large_y_target = 0.0;   // log log y + u
  double loglog_t_target = 0.0;  // log log t
  double trunc_target = 0.0;     // log log y - log phi(y)
};

/// Requires 2 <= t <= ctx.y.
PrimeSumReport prime_sum_M(std::uint64_t t, double alpha, std::span<const std::uint32_t> primes,
                           const SmoothContext& ctx);

/// M(y), the O(1)-accurate prediction of the mean of omega over S(x, y), and
/// the cruder log log y + u.
struct MeanPrediction {
  double M_y = 0.0;
  double loglog_plus_u = 0.0;
};
MeanPrediction expected_mean_prediction(const SmoothContext& ctx, const SaddlePoint& sp,
                                        std::span<const std::uint32_t> primes);

}  // namespace smoothek
