#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pbac {

// Named independent RNG streams derived from one master seed, so that
// reordering draws in one subsystem never perturbs another.
class RngStreams {
 public:
  explicit RngStreams(std::uint64_t master_seed) : master_seed_(master_seed) {}

  std::mt19937_64 stream(std::string_view name) const {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    return std::mt19937_64(splitmix64(master_seed_ ^ h));
  }

  std::uint64_t master_seed() const { return master_seed_; }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t master_seed_;
};

}  // namespace pbac
