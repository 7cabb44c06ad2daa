#include "smoothek/cache.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <array>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace fs = std::filesystem;

namespace smoothek {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'M', 'K', 'L', 'P', 'F', '\0', '\1'};

template <class T>
void put_le(std::string& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

}  // namespace

DirLock::DirLock(const fs::path& dir) {
  fs::create_directories(dir);
  const auto path = (dir / ".smoothek.lock").string();
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw std::system_error(errno, std::generic_category(), "open " + path);
  while (::flock(fd_, LOCK_EX) != 0) {
    if (errno == EINTR) continue;
    const int err = errno;
    ::close(fd_);
    throw std::system_error(err, std::generic_category(), "flock " + path);
  }
}

DirLock::~DirLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

fs::path resolve_cache_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SMOOTHEK_CACHE_DIR"); env && *env) return env;
  return {};
}

void write_lpf_cache(const fs::path& file, const LpfTable& table) {
  std::string buf;
  const auto entries = table.entries();
  buf.reserve(32 + 4 * entries.size());
  buf.append(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(buf, kLpfCacheVersion);
  put_le<std::uint32_t>(buf, 0);
  put_le<std::uint64_t>(buf, table.lo());
  put_le<std::uint64_t>(buf, table.hi());
  for (auto v : entries) put_le<std::uint32_t>(buf, v);

  // Write then rename so readers never see a partial file.
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, file);
}

std::optional<LpfTable> read_lpf_cache(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  if (buf.size() < 32 || std::memcmp(p, kMagic.data(), kMagic.size()) != 0)
    throw std::runtime_error(file.string() + ": not an LPF cache file");
  if (get_le<std::uint32_t>(p + 8) != kLpfCacheVersion)
    throw std::runtime_error(file.string() + ": unsupported LPF cache version");
  const auto lo = get_le<std::uint64_t>(p + 16);
  const auto hi = get_le<std::uint64_t>(p + 24);
  if (hi < lo || buf.size() != 32 + 4 * (hi - lo + 1))
    throw std::runtime_error(file.string() + ": truncated LPF cache file");
  std::vector<std::uint32_t> lpf(hi - lo + 1);
  for (std::size_t i = 0; i < lpf.size(); ++i) lpf[i] = get_le<std::uint32_t>(p + 32 + 4 * i);
  return LpfTable(lo, hi, std::move(lpf));
}

LpfTable build_lpf_cached(std::uint64_t lo, std::uint64_t hi, const SieveConfig& cfg,
                          const fs::path& cache_dir, bool* hit) {
  if (hit) *hit = false;
  if (cache_dir.empty()) return build_lpf(lo, hi, cfg);
  DirLock lock(cache_dir);
  const auto file = cache_dir / ("lpf_" + std::to_string(lo) + "_" + std::to_string(hi) + ".bin");
  if (auto cached = read_lpf_cache(file)) {
    if (hit) *hit = true;
    return std::move(*cached);
  }
  auto table = build_lpf(lo, hi, cfg);
  write_lpf_cache(file, table);
  return table;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const char* to_string(BaselineStatus s) {
  switch (s) {
    case BaselineStatus::recorded: return "recorded";
    case BaselineStatus::matched: return "matched";
    case BaselineStatus::mismatch: return "mismatch";
  }
  return "?";
}

BaselineStore::BaselineStore(fs::path dir) : dir_(std::move(dir)), file_(dir_ / "baselines.jsonl") {}

BaselineStatus BaselineStore::record(const BaselineKey& key, const Json& thresholds,
                                     const Json& results) {
  DirLock lock(dir_);
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(key.config_hash));
  const std::string fresh = dump_json(results, -1);

  if (std::ifstream in(file_); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Json entry = Json::parse(line);
      if (entry.value("command", "") != key.command || entry.value("config_hash", "") != hash ||
          entry.value("code_version", "") != key.code_version)
        continue;
      return dump_json(entry.at("results"), -1) == fresh ? BaselineStatus::matched
                                                         : BaselineStatus::mismatch;
    }
  }

  Json entry;
  entry["command"] = key.command;
  entry["config_hash"] = hash;
  entry["code_version"] = key.code_version;
  entry["thresholds"] = thresholds;
  entry["results"] = results;
  std::ofstream out(file_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + file_.string());
  out << dump_json(entry, -1) << '\n';
  return BaselineStatus::recorded;
}

}  // namespace smoothek
