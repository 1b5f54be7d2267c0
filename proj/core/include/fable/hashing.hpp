#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace fable {

// 64-bit FNV-1a. Used everywhere a stable, platform-independent content hash
// is needed (spec fingerprints, seed derivation, the mock provider). Not a
// cryptographic hash.
constexpr std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string to_hex(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

/// Uniform index in [0, count). Deterministic for a given (seed, count) on
/// every platform; std::uniform_int_distribution is implementation-defined,
/// so the reduction is done by hand.
inline std::uint64_t uniform_index(std::uint64_t seed, std::uint64_t count) {
  std::mt19937_64 rng(seed);
  return rng() % count;
}

/// Stable per-story seed: hashing keeps existing stories' seeds fixed when
/// premises are added or reordered.
inline std::uint64_t derive_seed(std::int64_t master_seed, std::string_view premise,
                                 std::string_view condition, int index) {
  std::string key = std::to_string(master_seed);
  key += '\x1f';
  key += premise;
  key += '\x1f';
  key += condition;
  key += '\x1f';
  key += std::to_string(index);
  return fnv1a64(key);
}

}  // namespace fable
