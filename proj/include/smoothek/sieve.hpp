#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "smoothek/context.hpp"

namespace smoothek {

/// All primes p <= n in increasing order (segmented Eratosthenes).
std::vector<std::uint32_t> primes_up_to(std::uint64_t n);

struct SieveConfig {
  std::size_t segment_length = std::size_t{1} << 18;
  // Upper bound on materialized LpfTable entries (4 bytes each).
  std::size_t max_table_entries = std::size_t{1} << 28;
  // Upper bound on x for streaming scans.
  std::uint64_t max_scan_x = 100'000'000'000ULL;
  unsigned threads = 1;
};

/// v_p = floor(log y / log p) for every prime p <= y, by integer powering.
class UltraBoundTable {
 public:
  UltraBoundTable() = default;
  UltraBoundTable(std::uint64_t y, std::span<const std::uint32_t> primes);

  std::uint64_t y() const { return y_; }
  std::span<const std::uint32_t> primes() const { return primes_; }
  std::span<const std::uint8_t> exponents() const { return v_; }
  // v_p for a prime p <= y; 0 for p > y or non-prime p.
  unsigned bound(std::uint64_t p) const;

 private:
  std::uint64_t y_ = 0;
  std::vector<std::uint32_t> primes_;
  std::vector<std::uint8_t> v_;
};

/// Largest prime factor for every n in [lo, hi], with P(1) = 1. hi < 2^32.
class LpfTable {
 public:
  LpfTable() = default;
  LpfTable(std::uint64_t lo, std::uint64_t hi, std::vector<std::uint32_t> lpf);

  std::uint64_t lo() const { return lo_; }
  std::uint64_t hi() const { return hi_; }
  bool contains(std::uint64_t n) const { return n >= lo_ && n <= hi_; }
  std::uint32_t operator()(std::uint64_t n) const;  // throws std::out_of_range
  std::span<const std::uint32_t> entries() const { return lpf_; }

 private:
  std::uint64_t lo_ = 1;
  std::uint64_t hi_ = 0;
  std::vector<std::uint32_t> lpf_;
};

LpfTable build_lpf(std::uint64_t lo, std::uint64_t hi, const SieveConfig& cfg = {});

bool is_smooth(std::uint64_t n, const SmoothContext& ctx, const LpfTable& lpf);
bool is_ultra_smooth(std::uint64_t n, const SmoothContext& ctx, const UltraBoundTable& ub,
                     const LpfTable& lpf);

/// Number of distinct primes p <= t dividing n (trial division).
unsigned omega_t(std::uint64_t n, std::uint64_t t);
inline unsigned omega(std::uint64_t n) { return omega_t(n, n < 2 ? 2 : n); }

// ---------------------------------------------------------------------------
// Streaming segment sieve.

/// Per-element data of one sieved segment [lo, lo + size). Every array is
/// indexed by n - lo. `smooth_part[i]` is the product of the full prime powers
/// of primes <= bound dividing n, so n is bound-smooth iff it equals n.
struct SegmentView {
  std::uint64_t lo = 0;
  std::span<const std::uint64_t> smooth_part;
  std::span<const std::uint8_t> omega;        // distinct primes <= bound
  std::span<const std::uint8_t> omega_low;    // distinct primes <= low_bound
  std::span<const std::uint8_t> ultra_ok;     // empty unless ultra bounds requested
  std::span<const std::uint32_t> largest;     // empty unless requested; 1 when no prime <= bound divides

  std::size_t size() const { return smooth_part.size(); }
  bool smooth(std::size_t i) const { return smooth_part[i] == lo + i; }
};

struct SegmentSieveOptions {
  std::uint64_t bound = 2;      // sieve with primes <= bound
  std::uint64_t low_bound = 2;  // omega_low counts primes <= low_bound (<= bound)
  bool ultra = false;           // flag p^{v_p+1} | n using v_p for y = bound
  bool track_largest = false;
};

/// Sieves [lo, hi] segment by segment and hands each segment to `visit`.
/// Workers own contiguous chunks; visit calls for one chunk are sequential and
/// in increasing order. With threads > 1 the visitor receives the worker index
/// and must only touch that worker's state.
class SegmentSieve {
 public:
  SegmentSieve(std::span<const std::uint32_t> primes, SegmentSieveOptions opts);

  using Visitor = std::function<void(unsigned worker, const SegmentView&)>;
  void run(std::uint64_t lo, std::uint64_t hi, std::size_t segment_length, unsigned threads,
           const Visitor& visit) const;

  const SegmentSieveOptions& options() const { return opts_; }

 private:
  struct Entry {
    std::uint64_t modulus;
    std::uint32_t prime;
    std::uint8_t first;   // modulus == prime
    std::uint8_t breaks;  // modulus == p^{v_p + 1}
  };

  void run_chunk(std::uint64_t lo, std::uint64_t hi, std::size_t segment_length, unsigned worker,
                 const Visitor& visit) const;

  SegmentSieveOptions opts_;
  std::vector<Entry> entries_;
  std::size_t low_end_ = 0;  // entries_[0, low_end_) have prime <= low_bound
};

// ---------------------------------------------------------------------------
// Counting and population scans.

/// Psi(x, y) by streaming sieve over [1, x]; n = 1 counts.
std::uint64_t count_smooth_sieve(const SmoothContext& ctx, const SieveConfig& cfg = {});
/// Upsilon(x, y) by the same sieve with the ultra-smooth predicate.
std::uint64_t count_ultra(const SmoothContext& ctx, const SieveConfig& cfg = {});

inline constexpr std::size_t kMaxOmega = 16;  // omega(n) <= 15 for n < 2^64
using JointHistogram = std::array<std::array<std::uint64_t, kMaxOmega>, kMaxOmega>;

/// Everything one pass over [1, x] collects. Histograms are indexed
/// [omega(n)][omega_Y(n)].
struct PopulationScan {
  std::uint64_t x = 0;
  std::uint64_t y = 0;
  std::uint64_t Y = 0;  // cut used for the second histogram index
  std::uint64_t psi = 0;
  std::uint64_t upsilon = 0;
  JointHistogram smooth{};
  JointHistogram ultra{};
  // Psi(t, y) for every requested threshold t (same order as requested).
  std::vector<std::uint64_t> thresholds;
  std::vector<std::uint64_t> psi_at;
};

struct ScanRequest {
  bool ultra = true;
  std::uint64_t low_bound = 0;            // omega_low cut; 0 selects ctx.Y
  std::vector<std::uint64_t> thresholds;  // each in [0, x]
};

PopulationScan scan_population(const SmoothContext& ctx, const ScanRequest& req,
                               const SieveConfig& cfg = {});

}  // namespace smoothek
