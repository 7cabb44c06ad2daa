#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smoothek/context.hpp"
#include "smoothek/model.hpp"
#include "smoothek/sieve.hpp"

namespace smoothek {

/// Standard normal CDF, 0.5 * erfc(-z / sqrt 2).
double phi_cdf(double z);

/// int x^k dPhi(x): 0 for odd k, (k-1)!! for even k.
double gaussian_moment(unsigned k);

enum class Population { smooth, ultra, model };
enum class Standardization { loglog, empirical };
const char* to_string(Population p);
const char* to_string(Standardization s);

/// A law on {0, 1, 2, ...} given by nonnegative weights (integer counts or
/// probabilities). Moments are evaluated in extended precision.
struct LatticeLaw {
  std::vector<long double> weight;
  long double total = 0;

  static LatticeLaw from_counts(std::span<const std::uint64_t> counts);
  static LatticeLaw from_pmf(std::span<const long double> pmf);

  long double mean() const;
  long double raw_moment(unsigned k) const;
  long double central_moment(unsigned k, long double center) const;
  /// P(X <= c + s z); c, s the standardizing center and scale.
  long double cdf_at(double z, double center, double scale) const;
};

struct MomentReport {
  Population population = Population::smooth;
  std::uint64_t count = 1;  // Psi, Upsilon, or 1 for the model
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> raw;      // r_k, k = 0..K
  std::vector<double> central;  // c_k about the mean, k = 0..K
  Standardization standardization = Standardization::loglog;
  double center = 0.0;
  double scale = 1.0;
  std::vector<double> standardized;  // E[((X - center) / scale)^k]
};

/// Standardizing pair: loglog = (log log y, sqrt(log log y)); empirical = (mean, sd).
struct Standardizer {
  double center = 0.0;
  double scale = 1.0;
};
Standardizer standardizer(Standardization s, const SmoothContext& ctx, const LatticeLaw& law);

MomentReport moment_report(Population pop, std::uint64_t count, const LatticeLaw& law,
                           const SmoothContext& ctx, Standardization s, unsigned K);

/// Moments of omega_t(n) over S(x, y) (or U(x, y)) from one streaming pass.
/// The model population is served by moment_report on an exact pmf.
MomentReport empirical_moments(Population pop, const SmoothContext& ctx, std::uint64_t t,
                               Standardization s, unsigned K = 10, const SieveConfig& cfg = {});

// ---------------------------------------------------------------------------

struct CdfPoint {
  double z = 0.0;
  double F_emp = 0.0;
  double Phi = 0.0;
};

/// z-grid [-4, 4], step 0.05 (161 points). The grid step is the resolution
/// limit of the grid KS distance.
std::vector<double> z_grid();

struct KsResult {
  double grid = 0.0;   // sup over z_grid() of |F - Phi|
  double exact = 0.0;  // sup over all real z (attained at lattice atoms)
  std::vector<CdfPoint> cdf;
};
KsResult ks_distance(const LatticeLaw& law, double center, double scale);

struct EkReport {
  Population population = Population::smooth;
  Standardization standardization = Standardization::loglog;
  std::uint64_t count = 0;
  bool degenerate = false;
  double center = 0.0, scale = 1.0;
  double ks_distance = 0.0;  // grid
  double ks_exact = 0.0;
  std::vector<CdfPoint> cdf;
  // omega_Y standardized the same way (loglog) or by its own mean and sd (empirical).
  double center_Y = 0.0, scale_Y = 1.0;
  double ks_distance_Y = 0.0;
  double ks_exact_Y = 0.0;
  std::vector<CdfPoint> cdf_Y;

  // h = omega - omega_Y
  double tail_epsilon = 0.0;          // (log log y)^{1/4}
  double tail_fraction = 0.0;         // P(h > epsilon)
  double centered_tail_fraction = 0;  // P(|h - E h| >= epsilon)
  double h_mean = 0.0;
  double h_variance = 0.0;
  double chebyshev_bound = 0.0;       // sigma_h^2 / (log log y)^{1/2}

  // Transfer from omega_Y to omega under a common standardization:
  // KS(omega) <= KS(omega_Y) + P(h > eps) + (2 Phi(delta/2) - 1), delta = eps / scale.
  double transfer_lhs = 0.0;
  double transfer_rhs = 0.0;
};

/// Distribution of the standardized omega and omega_Y over one population.
EkReport ek_distribution(const PopulationScan& scan, Population pop, const SmoothContext& ctx,
                         Standardization s);

// ---------------------------------------------------------------------------

/// A_j = E[omega_Y^j] - E[S_Y^j] and Delta^k computed two ways.
struct MomentGaps {
  double mu_Y = 0.0;  // mean of omega_Y over the population; centre of both variables
  std::vector<double> A;               // j = 0..K
  std::vector<double> delta_direct;    // E[(omega_Y - mu)^k] - E[(S_Y - mu)^k]
  std::vector<double> delta_binomial;  // sum_{j=1..k} C(k, j) (-mu)^{k-j} A_j
  std::vector<double> relative_gap;    // |direct - binomial| / max(|direct|, |binomial|)
  // sum_j C(k, j) |mu|^{k-j} (|E omega_Y^j| + |E S_Y^j|): the size of the terms
  // that cancel in both paths. When A_1 and Delta^1 are pure rounding noise
  // (exact-mode ensembles) relative_gap is meaningless and scaled_gap is the
  // rounding error relative to this magnitude.
  std::vector<double> term_magnitude;
  std::vector<double> scaled_gap;
};

MomentGaps moment_gaps(const LatticeLaw& omega_Y, const PoissonBinomialDist& model, unsigned K);

/// Marginals of a joint [omega][omega_Y] histogram.
std::vector<std::uint64_t> omega_marginal(const JointHistogram& h);
std::vector<std::uint64_t> omega_Y_marginal(const JointHistogram& h);
std::vector<std::uint64_t> h_marginal(const JointHistogram& h);

}  // namespace smoothek
