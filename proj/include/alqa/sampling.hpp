#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace alqa {

/// Seeded generator with platform-independent draws. std::mt19937_64's raw
/// sequence is fixed by the standard; the distributions in <random> are not,
/// so uniform draws are derived here directly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, n). n must be >= 1.
  std::uint64_t index(std::uint64_t n);
  /// Uniform real in [0, 1) with 53 random bits.
  double uniform();

 private:
  std::mt19937_64 engine_;
};

/// Deterministically derives an independent seed for a sub-stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Draws `count` distinct positions from [0, n) (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng);

/// Largest-remainder apportionment of `total` seats by `sizes`. Leftover
/// seats go to the largest remainders; equal remainders favor the lower
/// index. Throws ArgumentError if total exceeds the sum of sizes.
std::vector<std::size_t> apportion(std::span<const std::size_t> sizes, std::size_t total);

/// Picks `b` ids with per-cluster quotas from `apportion` and a uniform draw
/// without replacement inside each cluster. `cluster_of[i]` is the cluster
/// of `ids[i]`. The result is sorted by id.
std::vector<std::string> proportional_sample(std::span<const std::string> ids,
                                             std::span<const int> cluster_of, std::size_t b,
                                             std::uint64_t seed);

}  // namespace alqa
