#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace posaudit {

/// FNV-1a, 64-bit. Stable across platforms; used for trial keys and cache digests.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Per-trial seed derivation: root seed mixed with the trial key.
/// This is the documented splitting rule; callers may parallelize across
/// trials because each trial's stream depends only on (root_seed, key).
inline std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view key) {
  return splitmix64(root_seed ^ fnv1a64(key));
}

inline std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace posaudit
