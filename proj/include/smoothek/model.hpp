#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "smoothek/context.hpp"

namespace smoothek {

enum class EnsembleMode { exact, approximate };

const char* to_string(EnsembleMode m);

/// Independent indicators X_p, one per prime, with P(X_p = 1) = probs[i].
struct BernoulliEnsemble {
  EnsembleMode mode = EnsembleMode::exact;
  std::vector<std::uint32_t> primes;
  std::vector<double> probs;

  std::size_t size() const { return primes.size(); }
};

/// q_p = Psi(floor(x/p), y) / Psi(x, y). `psi_quotients[i]` is Psi(floor(x/primes[i]), y).
/// Throws ConsistencyError if a probability falls outside [0, 1].
BernoulliEnsemble build_ensemble_exact(std::span<const std::uint32_t> primes, std::uint64_t psi_x,
                                       std::span<const std::uint64_t> psi_quotients);

/// q_p = p^{-alpha} for every prime p <= upto (upto defaults to ctx.Y).
BernoulliEnsemble build_ensemble_approximate(const SmoothContext& ctx, double alpha,
                                             std::span<const std::uint32_t> primes,
                                             std::uint64_t upto = 0);

/// Law of S = sum X_p.
struct PoissonBinomialDist {
  std::vector<long double> pmf;  // P(S = k), k = 0..m
  double mean = 0.0;             // sum q_p
  double variance = 0.0;         // sum q_p (1 - q_p)
  double pmf_mean = 0.0;         // from the pmf
  double pmf_variance = 0.0;
  std::vector<long double> raw;      // E[S^k], k = 0..K
  std::vector<long double> central;  // E[(S - mean)^k], k = 0..K
  // central[k] whose magnitude is below 1e-3 of the sum of absolute
  // contributions (relative cancellation).
  std::vector<bool> cancellation;

  std::size_t max_order() const { return raw.empty() ? 0 : raw.size() - 1; }
};

inline constexpr std::size_t kDefaultMomentCap = 10;
inline constexpr std::size_t kConvolutionBudget = 100'000;

/// Sequential convolution of (1 - q_p, q_p). Throws BudgetError above
/// `max_primes` indicators (use sample_S instead).
PoissonBinomialDist exact_distribution(const BernoulliEnsemble& e,
                                       std::size_t moment_cap = kDefaultMomentCap,
                                       std::size_t max_primes = kConvolutionBudget);

struct SampleMoments {
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> histogram;  // counts of S = k
  std::vector<double> raw;               // sample E[S^k], k = 0..4
  double mean = 0.0;
  double variance = 0.0;                 // population (1/n) variance of the sample
};

/// Monte Carlo draws of S. Blocks of samples use independent streams keyed by
/// (seed, block index), so the result is identical for every thread count.
SampleMoments sample_S(const BernoulliEnsemble& e, std::uint64_t n_samples, std::uint64_t seed,
                       unsigned threads = 1, std::size_t max_order = 4);

/// E[Y^k] for Y = X - q, X ~ Bernoulli(q).
double bernoulli_centered_moment(double q, unsigned k);

/// Sum over compositions (k_1..k_j) of k with every k_i >= 2 of k!/(k_1!...k_j!),
/// split by the number of parts j. Index j = 0..k.
std::vector<double> composition_weights(unsigned k);

struct CenteredMomentBound {
  unsigned k = 0;
  double standardized = 0.0;       // E[(S - mean)^k] / variance^{k/2}
  double combinatorial_bound = 0;  // sum_j sum' k!/(k_1!...k_j!)
  double variance_bound = 0.0;     // sum_j c_j variance^{j - k/2}; valid for every variance
  bool bound_applies = false;      // variance >= 1, where the combinatorial bound is proven
  bool within = false;             // |standardized| <= applicable bound
};

/// Requires 2 <= k <= dist.max_order() and positive variance.
CenteredMomentBound centered_moment_bound(const PoissonBinomialDist& dist, unsigned k);

}  // namespace smoothek
