#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace guiagent {

// FNV-1a, 64 bit. Used for observation digests and content-addressed ids.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a parent seed and a salt.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t salt) noexcept {
  return splitmix64(parent ^ splitmix64(salt + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view salt) noexcept {
  return derive_seed(parent, fnv1a64(salt));
}

std::string to_hex(std::uint64_t value);

// Whole-file helpers. Throws Io on failure.
std::string read_file(const std::string& path);
// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view content);
// Creates `path` with `content` only if it does not exist yet; the file
// appears fully written or not at all. Returns false when it already exists.
bool write_file_exclusive(const std::string& path, std::string_view content);

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is
// handled exactly once; the first exception is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace guiagent
