#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace utc {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; bijective mixing of a 64-bit word.
std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a hash of a stream name. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a(std::string_view name);

/// Derives independent engines from one root seed.
///
/// Each consumer asks for a named stream (optionally indexed), so adding a
/// new consumer never shifts the draws seen by existing ones.
class SeedTree {
 public:
  explicit SeedTree(std::uint64_t root) : root_(root) {}

  std::uint64_t root() const { return root_; }
  std::uint64_t seed(std::string_view name, std::uint64_t index = 0) const;
  Engine stream(std::string_view name, std::uint64_t index = 0) const;
  SeedTree child(std::string_view name, std::uint64_t index = 0) const {
    return SeedTree(seed(name, index));
  }

 private:
  std::uint64_t root_;
};

}  // namespace utc
