#include "smoothek/sieve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

#include "smoothek/errors.hpp"

namespace smoothek {

namespace {

std::uint64_t isqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

}  // namespace

std::vector<std::uint32_t> primes_up_to(std::uint64_t n) {
  std::vector<std::uint32_t> out;
  if (n < 2) return out;
  if (n > 0xFFFFFFFFULL) throw CapacityError("primes_up_to: bound exceeds 32-bit prime storage");

  const std::uint64_t root = isqrt(n);
  std::vector<std::uint8_t> small(root + 1, 1);
  std::vector<std::uint32_t> base;
  for (std::uint64_t i = 2; i <= root; ++i) {
    if (!small[i]) continue;
    base.push_back(static_cast<std::uint32_t>(i));
    for (std::uint64_t j = i * i; j <= root; j += i) small[j] = 0;
  }

  constexpr std::uint64_t kSegment = 1 << 20;
  std::vector<std::uint8_t> mark(kSegment);
  for (std::uint64_t lo = 2; lo <= n; lo += kSegment) {
    const std::uint64_t hi = std::min(n, lo + kSegment - 1);
    std::fill(mark.begin(), mark.end(), 1);
    for (std::uint32_t p : base) {
      const std::uint64_t pp = std::uint64_t{p} * p;
      if (pp > hi) break;
      std::uint64_t start = std::max(pp, (lo + p - 1) / p * p);
      for (std::uint64_t j = start; j <= hi; j += p) mark[j - lo] = 0;
    }
    for (std::uint64_t v = lo; v <= hi; ++v)
      if (mark[v - lo]) out.push_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

// ---------------------------------------------------------------------------

UltraBoundTable::UltraBoundTable(std::uint64_t y, std::span<const std::uint32_t> primes) : y_(y) {
  for (std::uint32_t p : primes) {
    if (p > y) break;
    unsigned v = 0;
    std::uint64_t pw = 1;
    while (pw <= y / p) {
      pw *= p;
      ++v;
    }
    primes_.push_back(p);
    v_.push_back(static_cast<std::uint8_t>(v));
  }
}

unsigned UltraBoundTable::bound(std::uint64_t p) const {
  auto it = std::lower_bound(primes_.begin(), primes_.end(), p);
  if (it == primes_.end() || *it != p) return 0;
  return v_[static_cast<std::size_t>(it - primes_.begin())];
}

// ---------------------------------------------------------------------------

LpfTable::LpfTable(std::uint64_t lo, std::uint64_t hi, std::vector<std::uint32_t> lpf)
    : lo_(lo), hi_(hi), lpf_(std::move(lpf)) {
  if (lo < 1 || hi < lo || lpf_.size() != hi - lo + 1)
    throw std::invalid_argument("LpfTable: entry count does not match [lo, hi]");
}

std::uint32_t LpfTable::operator()(std::uint64_t n) const {
  if (!contains(n))
    throw std::out_of_range("LpfTable: n=" + std::to_string(n) + " outside [" +
                            std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
  return lpf_[n - lo_];
}

LpfTable build_lpf(std::uint64_t lo, std::uint64_t hi, const SieveConfig& cfg) {
  if (lo < 1 || hi < lo) throw DomainError("build_lpf: need 1 <= lo <= hi");
  if (hi > 0xFFFFFFFFULL) throw CapacityError("build_lpf: hi exceeds 2^32 - 1");
  const std::uint64_t count = hi - lo + 1;
  if (count > cfg.max_table_entries)
    throw CapacityError("build_lpf: " + std::to_string(count) + " entries exceed budget of " +
                        std::to_string(cfg.max_table_entries));

  const auto primes = primes_up_to(isqrt(hi));
  SegmentSieveOptions opts;
  opts.bound = primes.empty() ? 2 : primes.back();
  opts.low_bound = opts.bound;
  opts.track_largest = true;
  SegmentSieve sieve(primes, opts);

  std::vector<std::uint32_t> lpf(count);
  sieve.run(lo, hi, cfg.segment_length, cfg.threads, [&](unsigned, const SegmentView& seg) {
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const std::uint64_t n = seg.lo + i;
      std::uint64_t p = seg.largest[i];
      if (!seg.smooth(i)) p = std::max(p, n / seg.smooth_part[i]);
      lpf[n - lo] = static_cast<std::uint32_t>(p);
    }
  });
  return LpfTable(lo, hi, std::move(lpf));
}

bool is_smooth(std::uint64_t n, const SmoothContext& ctx, const LpfTable& lpf) {
  return lpf(n) <= ctx.y;
}

bool is_ultra_smooth(std::uint64_t n, const SmoothContext& ctx, const UltraBoundTable& ub,
                     const LpfTable& lpf) {
  if (!is_smooth(n, ctx, lpf)) return false;
  if (ub.y() != ctx.y) throw std::invalid_argument("is_ultra_smooth: bound table built for another y");
  const bool chain = lpf.lo() == 1;
  std::uint64_t m = n;
  auto check = [&](std::uint64_t p) {
    unsigned e = 0;
    while (m % p == 0) {
      m /= p;
      ++e;
    }
    return e <= ub.bound(p);
  };
  if (chain) {
    while (m > 1)
      if (!check(lpf(m))) return false;
    return true;
  }
  for (std::uint32_t p : ub.primes()) {
    if (m == 1) break;
    if (m % p == 0 && !check(p)) return false;
  }
  return true;
}

unsigned omega_t(std::uint64_t n, std::uint64_t t) {
  if (n == 0) throw DomainError("omega_t: n must be >= 1");
  unsigned count = 0;
  for (std::uint64_t d = 2; d <= t && d <= n / d; d += (d == 2 ? 1 : 2)) {
    if (n % d != 0) continue;
    ++count;
    while (n % d == 0) n /= d;
  }
  if (n > 1 && n <= t) ++count;
  return count;
}

// ---------------------------------------------------------------------------

SegmentSieve::SegmentSieve(std::span<const std::uint32_t> primes, SegmentSieveOptions opts)
    : opts_(opts) {
  if (opts_.low_bound > opts_.bound) opts_.low_bound = opts_.bound;
  for (std::uint32_t p : primes) {
    if (p > opts_.bound) break;
    unsigned vp = 0;
    if (opts_.ultra) {
      std::uint64_t pw = 1;
      while (pw <= opts_.bound / p) {
        pw *= p;
        ++vp;
      }
    }
    std::uint64_t pw = p;
    for (unsigned e = 1;; ++e) {
      entries_.push_back({pw, p, static_cast<std::uint8_t>(e == 1),
                          static_cast<std::uint8_t>(opts_.ultra && e == vp + 1)});
      if (pw > UINT64_MAX / p) break;
      pw *= p;
    }
    if (p <= opts_.low_bound) low_end_ = entries_.size();
  }
}

void SegmentSieve::run(std::uint64_t lo, std::uint64_t hi, std::size_t segment_length,
                       unsigned threads, const Visitor& visit) const {
  if (lo < 1 || hi < lo) return;
  if (segment_length == 0) throw std::invalid_argument("segment length must be positive");
  const std::uint64_t span = hi - lo + 1;
  const std::uint64_t segments = (span + segment_length - 1) / segment_length;
  threads = std::max(1u, static_cast<unsigned>(std::min<std::uint64_t>(threads, segments)));
  if (threads == 1) {
    run_chunk(lo, hi, segment_length, 0, visit);
    return;
  }
  const std::uint64_t per = (segments + threads - 1) / threads;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned w = 0; w < threads; ++w) {
    const std::uint64_t a = lo + w * per * segment_length;
    if (a > hi) break;
    const std::uint64_t b = std::min(hi, a + per * segment_length - 1);
    pool.emplace_back([&, a, b, w] {
      try {
        run_chunk(a, b, segment_length, w, visit);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void SegmentSieve::run_chunk(std::uint64_t lo, std::uint64_t hi, std::size_t segment_length,
                             unsigned worker, const Visitor& visit) const {
  const std::size_t len_max =
      static_cast<std::size_t>(std::min<std::uint64_t>(segment_length, hi - lo + 1));
  std::vector<std::uint64_t> part(len_max);
  std::vector<std::uint8_t> om(len_max), om_low(len_max);
  std::vector<std::uint8_t> ultra(opts_.ultra ? len_max : 0);
  std::vector<std::uint32_t> largest(opts_.track_largest ? len_max : 0);

  // Absolute next multiple of each modulus; moduli above hi never fire.
  std::vector<std::uint64_t> next(entries_.size());
  std::size_t active = 0;
  for (const auto& e : entries_) {
    if (e.modulus > hi) {
      next[active++] = UINT64_MAX;
      continue;
    }
    next[active++] = (lo + e.modulus - 1) / e.modulus * e.modulus;
  }

  for (std::uint64_t seg = lo; seg <= hi;) {
    const std::uint64_t seg_end = std::min(hi, seg + len_max - 1);  // inclusive
    const std::size_t len = static_cast<std::size_t>(seg_end - seg + 1);
    std::fill_n(part.begin(), len, 1);
    std::fill_n(om.begin(), len, 0);
    if (opts_.ultra) std::fill_n(ultra.begin(), len, 1);
    if (opts_.track_largest) std::fill_n(largest.begin(), len, 1);

    auto apply = [&](std::size_t from, std::size_t to) {
      for (std::size_t k = from; k < to; ++k) {
        const Entry& e = entries_[k];
        std::uint64_t n = next[k];
        if (n > seg_end) continue;
        const std::uint64_t m = e.modulus;
        const std::uint64_t p = e.prime;
        std::size_t j = static_cast<std::size_t>(n - seg);
        if (e.first) {
          if (opts_.track_largest) {
            for (; j < len; j += m) {
              part[j] *= p;
              ++om[j];
              largest[j] = static_cast<std::uint32_t>(p);
            }
          } else {
            for (; j < len; j += m) {
              part[j] *= p;
              ++om[j];
            }
          }
        } else if (e.breaks) {
          for (; j < len; j += m) {
            part[j] *= p;
            ultra[j] = 0;
          }
        } else {
          for (; j < len; j += m) part[j] *= p;
        }
        next[k] = seg + j;
      }
    };

    apply(0, low_end_);
    std::copy_n(om.begin(), len, om_low.begin());
    apply(low_end_, entries_.size());

    SegmentView view;
    view.lo = seg;
    view.smooth_part = std::span<const std::uint64_t>(part.data(), len);
    view.omega = std::span<const std::uint8_t>(om.data(), len);
    view.omega_low = std::span<const std::uint8_t>(om_low.data(), len);
    if (opts_.ultra) view.ultra_ok = std::span<const std::uint8_t>(ultra.data(), len);
    if (opts_.track_largest) view.largest = std::span<const std::uint32_t>(largest.data(), len);
    visit(worker, view);

    if (seg_end == hi) break;
    seg = seg_end + 1;
  }
}

// ---------------------------------------------------------------------------

namespace {

void check_scan_budget(const SmoothContext& ctx, const SieveConfig& cfg) {
  if (!ctx.has_integer_x()) throw DomainError("sieve scan needs an integer x");
  if (ctx.x > cfg.max_scan_x)
    throw CapacityError("scan of x=" + std::to_string(ctx.x) + " exceeds max_scan_x=" +
                        std::to_string(cfg.max_scan_x) +
                        "; raise the budget or reduce x");
}

}  // namespace

PopulationScan scan_population(const SmoothContext& ctx, const ScanRequest& req,
                               const SieveConfig& cfg) {
  check_scan_budget(ctx, cfg);
  for (std::uint64_t t : req.thresholds)
    if (t > ctx.x) throw DomainError("scan threshold above x");

  const std::uint64_t bound = std::min(ctx.y, ctx.x);
  const auto primes = primes_up_to(bound);
  SegmentSieveOptions opts;
  opts.bound = bound;
  opts.low_bound = req.low_bound ? std::min(req.low_bound, bound) : ctx.Y;
  opts.ultra = req.ultra;
  SegmentSieve sieve(primes, opts);
  if (req.ultra && bound != ctx.y)
    throw DomainError("ultra scan needs y <= x");

  // Sorted unique thresholds; answers mapped back afterwards.
  std::vector<std::uint64_t> cuts(req.thresholds);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  struct Local {
    std::uint64_t psi = 0, ups = 0;
    JointHistogram smooth{}, ultra{};
    std::vector<std::uint64_t> below;  // smooth n <= cuts[i]
  };
  const unsigned threads = std::max(1u, cfg.threads);
  std::vector<Local> locals(threads);
  for (auto& l : locals) l.below.assign(cuts.size(), 0);

  sieve.run(1, ctx.x, cfg.segment_length, threads, [&](unsigned w, const SegmentView& seg) {
    Local& L = locals[w];
    const std::size_t len = seg.size();
    const std::uint64_t seg_last = seg.lo + len - 1;
    std::uint64_t seg_psi = 0;
    for (std::size_t i = 0; i < len; ++i) {
      if (!seg.smooth(i)) continue;
      ++seg_psi;
      ++L.smooth[seg.omega[i]][seg.omega_low[i]];
      if (req.ultra && seg.ultra_ok[i]) {
        ++L.ups;
        ++L.ultra[seg.omega[i]][seg.omega_low[i]];
      }
    }
    L.psi += seg_psi;
    // Thresholds at or beyond this segment take the whole segment; those
    // inside it take a partial count.
    auto it = std::lower_bound(cuts.begin(), cuts.end(), seg.lo);
    for (auto k = static_cast<std::size_t>(it - cuts.begin()); k < cuts.size(); ++k) {
      if (cuts[k] >= seg_last) {
        L.below[k] += seg_psi;
        continue;
      }
      std::uint64_t c = 0;
      for (std::size_t i = 0; seg.lo + i <= cuts[k]; ++i) c += seg.smooth(i);
      L.below[k] += c;
    }
  });

  PopulationScan out;
  out.x = ctx.x;
  out.y = ctx.y;
  out.Y = opts.low_bound;
  std::vector<std::uint64_t> below(cuts.size(), 0);
  for (const auto& L : locals) {
    out.psi += L.psi;
    out.upsilon += L.ups;
    for (std::size_t a = 0; a < kMaxOmega; ++a)
      for (std::size_t b = 0; b < kMaxOmega; ++b) {
        out.smooth[a][b] += L.smooth[a][b];
        out.ultra[a][b] += L.ultra[a][b];
      }
    for (std::size_t k = 0; k < cuts.size(); ++k) below[k] += L.below[k];
  }
  out.thresholds = req.thresholds;
  out.psi_at.reserve(req.thresholds.size());
  for (std::uint64_t t : req.thresholds) {
    auto it = std::lower_bound(cuts.begin(), cuts.end(), t);
    out.psi_at.push_back(below[static_cast<std::size_t>(it - cuts.begin())]);
  }
  return out;
}

std::uint64_t count_smooth_sieve(const SmoothContext& ctx, const SieveConfig& cfg) {
  ScanRequest req;
  req.ultra = false;
  return scan_population(ctx, req, cfg).psi;
}

std::uint64_t count_ultra(const SmoothContext& ctx, const SieveConfig& cfg) {
  ScanRequest req;
  req.ultra = true;
  return scan_population(ctx, req, cfg).upsilon;
}

}  // namespace smoothek
