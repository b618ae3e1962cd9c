#include "alqa/sampling.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "alqa/errors.hpp"

namespace alqa {

std::uint64_t Rng::index(std::uint64_t n) {
  if (n == 0) throw ArgumentError("Rng::index needs n >= 1");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t x = base ^ (stream * 0x9e3779b97f4a7c15ULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng) {
  if (count > n) throw ArgumentError("cannot sample more items than available");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.index(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

std::vector<std::size_t> apportion(std::span<const std::size_t> sizes, std::size_t total) {
  const std::size_t population = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (total > population) throw ArgumentError("apportion: more seats than members");
  std::vector<std::size_t> quota(sizes.size(), 0);
  if (population == 0) return quota;

  // Remainders kept as exact integers: size * total mod population.
  std::vector<std::size_t> remainder(sizes.size(), 0);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    quota[c] = sizes[c] * total / population;
    remainder[c] = sizes[c] * total % population;
    assigned += quota[c];
  }
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; assigned < total; ++r) {
    ++quota[order[r]];
    ++assigned;
  }
  return quota;
}

std::vector<std::string> proportional_sample(std::span<const std::string> ids,
                                             std::span<const int> cluster_of, std::size_t b,
                                             std::uint64_t seed) {
  if (ids.size() != cluster_of.size()) throw ArgumentError("ids and clusters differ in length");
  if (b > ids.size()) throw ArgumentError("batch larger than the number of points");
  int num_clusters = 0;
  for (int c : cluster_of) {
    if (c < 0) throw ArgumentError("negative cluster index");
    num_clusters = std::max(num_clusters, c + 1);
  }
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_clusters));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    members[static_cast<std::size_t>(cluster_of[i])].push_back(i);
  }
  std::vector<std::size_t> sizes;
  sizes.reserve(members.size());
  for (const auto& m : members) sizes.push_back(m.size());
  const auto quota = apportion(sizes, b);

  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(b);
  for (std::size_t c = 0; c < members.size(); ++c) {
    for (std::size_t pick : sample_without_replacement(members[c].size(), quota[c], rng)) {
      out.push_back(ids[members[c][pick]]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace alqa
