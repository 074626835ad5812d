#pragma once

#include "fddet/types.hpp"

#include <cstdint>

namespace fddet {

/// Counter-based generator: the n-th 64-bit word is SplitMix64(seed + n * golden).
///
/// The stream depends only on (seed, number of draws so far), so results are
/// identical across platforms, compilers and thread counts. `fork(tag)` derives
/// an independent stream without advancing this one.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal(double mean = 0.0, double stddev = 1.0);

  Rng fork(std::uint64_t tag) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Matrix of iid normal draws, filled row-major so the layout does not leak
/// Eigen's storage order into the stream.
Matrix draw_normal(Rng& rng, Index rows, Index cols, double mean, double stddev);

}  // namespace fddet
