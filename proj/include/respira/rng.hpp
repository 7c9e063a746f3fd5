#pragma once

#include <cstdint>
#include <string_view>

namespace respira {

// Deterministic, splittable random source. Every stochastic stage derives
// its own substream from the run seed and a string tag, so stages can run
// in any order (or in parallel) without perturbing each other's draws.
//
// The generator is a hand-rolled splitmix64/xoshiro256** combination so the
// byte stream does not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { seed_state(seed); }

  // Child generator for an independent, reproducible substream.
  Rng split(std::string_view tag) const;
  Rng split(std::uint64_t salt) const;

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller (no cached spare: keeps the stream
  // position independent of call parity elsewhere).
  double normal();
  double normal(double mean, double stddev);

  // Fisher-Yates shuffle of indices [0, n).
  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      auto tmp = v[i - 1];
      v[i - 1] = v[j];
      v[j] = tmp;
    }
  }

 private:
  void seed_state(std::uint64_t seed);
  std::uint64_t s_[4];
};

// FNV-1a 64-bit hash, used for config fingerprints in provenance headers.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace respira
