#include "smoothek/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "smoothek/errors.hpp"
#include "smoothek/rng.hpp"
#include "smoothek/saddle.hpp"
#include "smoothek/summation.hpp"

namespace smoothek {

const char* to_string(EnsembleMode m) {
  return m == EnsembleMode::exact ? "exact" : "approximate";
}

BernoulliEnsemble build_ensemble_exact(std::span<const std::uint32_t> primes, std::uint64_t psi_x,
                                       std::span<const std::uint64_t> psi_quotients) {
  if (primes.size() != psi_quotients.size())
    throw std::invalid_argument("build_ensemble_exact: one count per prime required");
  if (psi_x == 0 && !primes.empty()) throw ConsistencyError("build_ensemble_exact: Psi(x, y) = 0");
  BernoulliEnsemble e;
  e.mode = EnsembleMode::exact;
  e.primes.assign(primes.begin(), primes.end());
  e.probs.reserve(primes.size());
  for (std::size_t i = 0; i < primes.size(); ++i) {
    if (psi_quotients[i] > psi_x)
      throw ConsistencyError("build_ensemble_exact: Psi(x/" + std::to_string(primes[i]) +
                             ", y) = " + std::to_string(psi_quotients[i]) + " exceeds Psi(x, y) = " +
                             std::to_string(psi_x));
    e.probs.push_back(static_cast<double>(psi_quotients[i]) / static_cast<double>(psi_x));
  }
  return e;
}

BernoulliEnsemble build_ensemble_approximate(const SmoothContext& ctx, double alpha,
                                             std::span<const std::uint32_t> primes,
                                             std::uint64_t upto) {
  if (upto == 0) upto = ctx.Y;
  if (!(alpha > 0.0)) throw ConsistencyError("build_ensemble_approximate: alpha must be positive");
  BernoulliEnsemble e;
  e.mode = EnsembleMode::approximate;
  for (std::uint32_t p : primes) {
    if (p > upto) break;
    e.primes.push_back(p);
    // Same expression as prime_sum so that the ensemble mean reproduces M(Y).
    e.probs.push_back(std::exp(-alpha * std::log(static_cast<double>(p))));
  }
  return e;
}

PoissonBinomialDist exact_distribution(const BernoulliEnsemble& e, std::size_t moment_cap,
                                       std::size_t max_primes) {
  const std::size_t m = e.size();
  if (m > max_primes)
    throw BudgetError("exact_distribution: " + std::to_string(m) +
                      " indicators exceed the convolution budget of " + std::to_string(max_primes) +
                      "; use sample_S");
  PoissonBinomialDist d;
  d.pmf.assign(m + 1, 0.0L);
  d.pmf[0] = 1.0L;
  CompensatedSum<double> mean, var;
  for (std::size_t i = 0; i < m; ++i) {
    const double q = e.probs[i];
    if (!(q >= 0.0 && q <= 1.0))
      throw ConsistencyError("exact_distribution: probability outside [0, 1]");
    mean += q;
    var += q * (1.0 - q);
    const long double ql = q, pl = 1.0L - ql;
    for (std::size_t k = i + 1; k > 0; --k) d.pmf[k] = d.pmf[k] * pl + d.pmf[k - 1] * ql;
    d.pmf[0] *= pl;
  }
  d.mean = mean.value();
  d.variance = var.value();

  const std::size_t K = moment_cap;
  d.raw.assign(K + 1, 0.0L);
  d.central.assign(K + 1, 0.0L);
  std::vector<long double> abs_central(K + 1, 0.0L);
  const long double mu = d.mean;
  for (std::size_t k = 0; k <= m; ++k) {
    const long double w = d.pmf[k];
    long double r = w, c = w;
    const long double dev = static_cast<long double>(k) - mu;
    for (std::size_t j = 0; j <= K; ++j) {
      d.raw[j] += r;
      d.central[j] += c;
      abs_central[j] += std::abs(c);
      r *= static_cast<long double>(k);
      c *= dev;
    }
  }
  d.cancellation.assign(K + 1, false);
  for (std::size_t j = 0; j <= K; ++j)
    d.cancellation[j] = abs_central[j] > 0 && std::abs(d.central[j]) < 1e-3L * abs_central[j];
  d.pmf_mean = static_cast<double>(K >= 1 ? d.raw[1] : 0.0L);
  if (K >= 2) {
    long double c2 = 0;
    const long double pm = d.pmf_mean;
    for (std::size_t k = 0; k <= m; ++k) {
      const long double dev = static_cast<long double>(k) - pm;
      c2 += d.pmf[k] * dev * dev;
    }
    d.pmf_variance = static_cast<double>(c2);
  }
  return d;
}

SampleMoments sample_S(const BernoulliEnsemble& e, std::uint64_t n_samples, std::uint64_t seed,
                       unsigned threads, std::size_t max_order) {
  if (n_samples == 0) throw DomainError("sample_S: n_samples must be >= 1");
  constexpr std::uint64_t kBlock = 1 << 16;
  const std::uint64_t blocks = (n_samples + kBlock - 1) / kBlock;
  const std::size_t m = e.size();
  threads = std::max(1u, static_cast<unsigned>(std::min<std::uint64_t>(threads, blocks)));

  std::vector<std::vector<std::uint64_t>> hist(threads, std::vector<std::uint64_t>(m + 1, 0));
  auto work = [&](unsigned w) {
    auto& h = hist[w];
    for (std::uint64_t b = w; b < blocks; b += threads) {
      auto g = make_stream(seed, b);
      const std::uint64_t count = std::min(kBlock, n_samples - b * kBlock);
      for (std::uint64_t s = 0; s < count; ++s) {
        std::size_t k = 0;
        for (double q : e.probs) k += uniform01(g) < q;
        ++h[k];
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  SampleMoments out;
  out.n_samples = n_samples;
  out.seed = seed;
  out.histogram.assign(m + 1, 0);
  for (const auto& h : hist)
    for (std::size_t k = 0; k <= m; ++k) out.histogram[k] += h[k];

  std::vector<long double> raw(max_order + 1, 0.0L);
  for (std::size_t k = 0; k <= m; ++k) {
    long double v = static_cast<long double>(out.histogram[k]);
    for (std::size_t j = 0; j <= max_order; ++j) {
      raw[j] += v;
      v *= static_cast<long double>(k);
    }
  }
  out.raw.resize(max_order + 1);
  const long double n = static_cast<long double>(n_samples);
  for (std::size_t j = 0; j <= max_order; ++j) out.raw[j] = static_cast<double>(raw[j] / n);
  out.mean = max_order >= 1 ? out.raw[1] : 0.0;
  if (max_order >= 2) {
    long double c2 = 0;
    for (std::size_t k = 0; k <= m; ++k) {
      const long double dev = static_cast<long double>(k) - out.mean;
      c2 += static_cast<long double>(out.histogram[k]) * dev * dev;
    }
    out.variance = static_cast<double>(c2 / n);
  }
  return out;
}

double bernoulli_centered_moment(double q, unsigned k) {
  return q * std::pow(1.0 - q, k) + (1.0 - q) * std::pow(-q, k);
}

std::vector<double> composition_weights(unsigned k) {
  // w[n][j]: sum over compositions of n into j parts >= 2 of n!/prod(k_i!).
  // Built from w[n][j] = sum_{a>=2} C(n, a) w[n-a][j-1] (choose the first part).
  std::vector<std::vector<double>> w(k + 1, std::vector<double>(k + 1, 0.0));
  w[0][0] = 1.0;
  auto binom = [](unsigned n, unsigned r) {
    double b = 1.0;
    for (unsigned i = 1; i <= r; ++i) b = b * (n - r + i) / i;
    return b;
  };
  for (unsigned n = 2; n <= k; ++n)
    for (unsigned j = 1; 2 * j <= n; ++j)
      for (unsigned a = 2; a <= n; ++a) w[n][j] += binom(n, a) * w[n - a][j - 1];
  return w[k];
}

CenteredMomentBound centered_moment_bound(const PoissonBinomialDist& dist, unsigned k) {
  if (k < 2 || k > dist.max_order())
    throw DomainError("centered_moment_bound: k must lie in [2, " +
                      std::to_string(dist.max_order()) + "]");
  if (!(dist.variance > 0.0)) throw DomainError("centered_moment_bound: zero variance");
  CenteredMomentBound b;
  b.k = k;
  b.standardized = static_cast<double>(dist.central[k] /
                                       std::pow(static_cast<long double>(dist.variance), k / 2.0L));
  const auto c = composition_weights(k);
  for (unsigned j = 1; j <= k; ++j) {
    b.combinatorial_bound += c[j];
    b.variance_bound += c[j] * std::pow(dist.variance, static_cast<double>(j) - k / 2.0);
  }
  b.bound_applies = dist.variance >= 1.0;
  const double slack = 1e-12 * std::max(1.0, b.variance_bound);
  b.within = std::abs(b.standardized) <= b.variance_bound + slack &&
             (!b.bound_applies || std::abs(b.standardized) <= b.combinatorial_bound + slack);
  return b;
}

}  // namespace smoothek
