#include "utc/rng.hpp"

namespace utc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t SeedTree::seed(std::string_view name, std::uint64_t index) const {
  return splitmix64(splitmix64(root_ ^ fnv1a(name)) + index);
}

Engine SeedTree::stream(std::string_view name, std::uint64_t index) const {
  const std::uint64_t s = seed(name, index);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return Engine(seq);
}

}  // namespace utc
