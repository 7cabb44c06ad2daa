#pragma once

#include <cstdint>
#include <optional>

namespace smoothek {

/// phi(y) = (log log y)^{sqrt(log log log y)}, taken as 1 while log log y <= 1
/// (y <= e^e), where the inner logarithms are undefined or negative.
double truncation_phi(std::uint64_t y);

/// max(2, floor(y^exponent)), never above y.
std::uint64_t truncation_level(std::uint64_t y, double exponent);

/// The (x, y) pair shared by every experiment, with its derived quantities.
///
/// `x` is the integer bound used by sieving code. Analytic-only contexts built
/// with `from_log` carry `log_x` alone and report `has_integer_x() == false`;
/// they are accepted by the saddle and model code but rejected by the sieve.
struct SmoothContext {
  std::uint64_t x = 0;
  std::uint64_t y = 2;
  double log_x = 0.0;
  double log_y = 0.0;
  double u = 1.0;
  double u_y = 0.0;
  double phi_y = 1.0;
  double trunc_exponent = 1.0;  // Y = floor(y^trunc_exponent); defaults to 1/phi(y)
  std::uint64_t Y = 2;

  static SmoothContext make(std::uint64_t x, std::uint64_t y,
                            std::optional<double> trunc_exponent = std::nullopt);
  static SmoothContext from_log(double log_x, std::uint64_t y,
                                std::optional<double> trunc_exponent = std::nullopt);

  bool has_integer_x() const { return x != 0; }
  double loglog_y() const;
};

}  // namespace smoothek
