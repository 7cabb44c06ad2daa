#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "smoothek/json_out.hpp"
#include "smoothek/sieve.hpp"

namespace smoothek {

/// Exclusive advisory lock (flock) on `<dir>/.smoothek.lock`, held for the
/// lifetime of the object. Creates `dir` if needed.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

/// Cache directory from an explicit value, else $SMOOTHEK_CACHE_DIR, else empty.
std::filesystem::path resolve_cache_dir(const std::string& flag);

// LpfTable file layout, all integers little-endian:
//   8 bytes  magic "SMKLPF\0\1"
//   u32      format version
//   u32      reserved (0)
//   u64      lo
//   u64      hi
//   u32 x (hi - lo + 1) entries
inline constexpr std::uint32_t kLpfCacheVersion = 1;

void write_lpf_cache(const std::filesystem::path& file, const LpfTable& table);
/// nullopt when the file does not exist. Throws std::runtime_error on a bad
/// magic, version or length.
std::optional<LpfTable> read_lpf_cache(const std::filesystem::path& file);

/// build_lpf(lo, hi) backed by `<cache_dir>/lpf_<lo>_<hi>.bin` when cache_dir
/// is non-empty. `hit` reports whether the table came from disk.
LpfTable build_lpf_cached(std::uint64_t lo, std::uint64_t hi, const SieveConfig& cfg,
                          const std::filesystem::path& cache_dir, bool* hit = nullptr);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

struct BaselineKey {
  std::string command;
  std::uint64_t config_hash = 0;
  std::string code_version;
};

enum class BaselineStatus { recorded, matched, mismatch };
const char* to_string(BaselineStatus s);

/// Append-only JSONL store at `<dir>/baselines.jsonl`. Each line holds the key,
/// the thresholds in force and the results of one run. A rerun with a key that
/// is already present is compared byte for byte against the first entry.
class BaselineStore {
 public:
  explicit BaselineStore(std::filesystem::path dir);
  BaselineStatus record(const BaselineKey& key, const Json& thresholds, const Json& results);
  const std::filesystem::path& file() const { return file_; }

 private:
  std::filesystem::path dir_;
  std::filesystem::path file_;
};

}  // namespace smoothek
