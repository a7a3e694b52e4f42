#pragma once

#include <cstdint>
#include <string>

namespace arcast {

/// xoshiro256** by Blackman & Vigna, seeded through splitmix64.
/// Deterministic for a given seed on every platform; this is the only
/// random generator used anywhere in the library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  void reseed(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);

  /// Standard normal via Box-Muller; pairs are generated and the spare
  /// is cached so the stream stays deterministic.
  double gaussian();

  /// Derive an independent child seed (for per-purpose sub-streams).
  std::uint64_t fork_seed();

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// 64-bit FNV-1a over a byte string; used for config fingerprints and the
/// master-seed fan-out.
std::uint64_t fnv1a64(const std::string& bytes);

/// Per-run seed: hash of the master seed and the run coordinates, so any
/// single run can be reproduced without executing the rest of a sweep.
std::uint64_t run_seed(std::uint64_t master_seed, const std::string& pde, int sample,
                       const std::string& scheme, const std::string& strategy, int seed_index);

}  // namespace arcast
