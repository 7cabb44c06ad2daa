#include "smoothek/context.hpp"

#include <cmath>
#include <string>

#include "smoothek/errors.hpp"

namespace smoothek {

double truncation_phi(std::uint64_t y) {
  const double ll = std::log(std::log(static_cast<double>(y)));
  if (!(ll > 1.0)) return 1.0;
  return std::pow(ll, std::sqrt(std::log(ll)));
}

std::uint64_t truncation_level(std::uint64_t y, double exponent) {
  if (!(exponent > 0.0) || exponent > 1.0)
    throw DomainError("truncation exponent must lie in (0, 1], got " + std::to_string(exponent));
  const long double v = std::exp(static_cast<long double>(exponent) *
                                 std::log(static_cast<long double>(y)));
  auto level = static_cast<std::uint64_t>(std::floor(v));
  if (level < 2) level = 2;
  if (level > y) level = y;
  return level;
}

namespace {

SmoothContext finish(SmoothContext c, std::optional<double> trunc_exponent) {
  c.log_y = std::log(static_cast<double>(c.y));
  c.u = c.log_x / c.log_y;
  c.u_y = c.u + c.log_y / std::log(c.u + 2.0);
  c.phi_y = truncation_phi(c.y);
  c.trunc_exponent = trunc_exponent ? *trunc_exponent : 1.0 / c.phi_y;
  c.Y = truncation_level(c.y, c.trunc_exponent);
  return c;
}

}  // namespace

SmoothContext SmoothContext::make(std::uint64_t x, std::uint64_t y,
                                  std::optional<double> trunc_exponent) {
  if (y < 2) throw DomainError("y must be >= 2, got " + std::to_string(y));
  if (x < y)
    throw DomainError("x must be >= y, got x=" + std::to_string(x) + " y=" + std::to_string(y));
  SmoothContext c;
  c.x = x;
  c.y = y;
  c.log_x = std::log(static_cast<double>(x));
  return finish(c, trunc_exponent);
}

SmoothContext SmoothContext::from_log(double log_x, std::uint64_t y,
                                      std::optional<double> trunc_exponent) {
  if (y < 2) throw DomainError("y must be >= 2, got " + std::to_string(y));
  SmoothContext c;
  c.y = y;
  c.log_x = log_x;
  if (!(log_x >= std::log(static_cast<double>(y))))
    throw DomainError("log x must be >= log y");
  return finish(c, trunc_exponent);
}

double SmoothContext::loglog_y() const { return std::log(log_y); }

}  // namespace smoothek
