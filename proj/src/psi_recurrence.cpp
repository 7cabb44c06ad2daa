#include "smoothek/psi_recurrence.hpp"

#include <algorithm>
#include <bit>

#include "smoothek/errors.hpp"
#include "smoothek/sieve.hpp"

namespace smoothek {

PsiRecurrence::PsiRecurrence(std::uint64_t y, std::size_t memo_capacity)
    : y_(y), primes_(primes_up_to(y)), capacity_(std::max<std::size_t>(memo_capacity, 1)) {
  if (y < 2) throw DomainError("PsiRecurrence: y must be >= 2");
}

std::uint64_t PsiRecurrence::operator()(std::uint64_t x) { return psi(x, primes_.size()); }

std::uint64_t PsiRecurrence::psi(std::uint64_t v, std::size_t k) {
  if (v == 0) return 0;
  if (k == 0 || v == 1) return 1;
  // Only primes <= v matter.
  if (primes_[k - 1] > v)
    k = static_cast<std::size_t>(std::upper_bound(primes_.begin(), primes_.begin() + k, v) -
                                 primes_.begin());
  if (k == 0) return 1;
  if (primes_[k - 1] >= v) return v;  // every n <= v is p_k-smooth
  if (k == 1) return static_cast<std::uint64_t>(std::bit_width(v));  // powers of 2 up to v, plus 1
  return lookup_or_compute(v, k);
}

std::uint64_t PsiRecurrence::lookup_or_compute(std::uint64_t v, std::size_t k) {
  const Key key{v, static_cast<std::uint32_t>(k)};
  if (auto it = index_.find(key); it != index_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->second;
  }

  std::uint64_t total = 1;
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint64_t p = primes_[i];
    const std::uint64_t q = v / p;
    // q <= p: every m <= q is p-smooth, so the term is q itself.
    total += (q <= p) ? q : psi(q, i + 1);
  }

  lru_.emplace_front(key, total);
  index_.emplace(key, lru_.begin());
  if (index_.size() > capacity_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
    ++evictions_;
  }
  return total;
}

std::uint64_t count_smooth_recurrence(std::uint64_t x, std::uint64_t y) {
  PsiRecurrence r(y);
  return r(x);
}

}  // namespace smoothek
