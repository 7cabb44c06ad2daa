#pragma once

#include <cstdint>
#include <list>
#include <unordered_map>
#include <vector>

namespace smoothek {

/// Psi(x, y) by the Buchstab-type recurrence
///   Psi(v, p_k) = 1 + sum_{i <= k} Psi(floor(v / p_i), p_i),
/// which is the unrolled form of Psi(v, p_k) = Psi(v, p_{k-1}) + Psi(floor(v/p_k), p_k).
/// Independent of the sieve: exact integer arithmetic over a prime list, with a
/// memo keyed on (floor(x/d), prime index) that evicts least-recently-used states.
class PsiRecurrence {
 public:
  explicit PsiRecurrence(std::uint64_t y, std::size_t memo_capacity = std::size_t{1} << 21);

  std::uint64_t y() const { return y_; }
  std::uint64_t operator()(std::uint64_t x);

  std::size_t memo_size() const { return index_.size(); }
  std::uint64_t evictions() const { return evictions_; }

 private:
  // Psi(v, primes_[0..k)) ; k primes allowed.
  std::uint64_t psi(std::uint64_t v, std::size_t k);
  std::uint64_t lookup_or_compute(std::uint64_t v, std::size_t k);

  struct Key {
    std::uint64_t v;
    std::uint32_t k;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& key) const {
      std::uint64_t h = key.v * 0x9E3779B97F4A7C15ULL ^ (std::uint64_t{key.k} + 0x632BE59BD9B4E019ULL);
      h ^= h >> 31;
      return static_cast<std::size_t>(h * 0xBF58476D1CE4E5B9ULL);
    }
  };
  using Lru = std::list<std::pair<Key, std::uint64_t>>;

  std::uint64_t y_;
  std::vector<std::uint32_t> primes_;
  std::size_t capacity_;
  Lru lru_;
  std::unordered_map<Key, Lru::iterator, KeyHash> index_;
  std::uint64_t evictions_ = 0;
};

/// One-shot convenience wrapper.
std::uint64_t count_smooth_recurrence(std::uint64_t x, std::uint64_t y);

}  // namespace smoothek
