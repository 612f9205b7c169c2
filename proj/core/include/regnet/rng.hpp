#pragma once

#include <cstdint>
#include <string_view>

namespace regnet {

// xoshiro256** seeded through splitmix64. Every stochastic routine in the
// library takes one of these explicitly; nothing reads global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer in [0, bound). bound must be nonzero.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal via Box-Muller. Implemented here rather than with
  // <random> distributions so streams are identical across standard libraries.
  double normal();

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic child seed for a named stream ("init", "sampling", ...).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

// Deterministic child seed for the index-th item of a stream.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

// 64-bit FNV-1a. Used for stream names and configuration fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace regnet
