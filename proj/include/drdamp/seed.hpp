#pragma once

#include <cstdint>
#include <string_view>

namespace drdamp {

// FNV-1a, 64 bit.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : text) {
    h ^= static_cast<unsigned char>(ch);
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

/// Per-stage seed: splitmix64(master ^ fnv1a64(stage)). Stages can be re-run
/// on their own and still draw the same numbers as inside a full pipeline run.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::string_view stage) noexcept {
  return splitmix64(master ^ fnv1a64(stage));
}

} // namespace drdamp
