#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "alqa/errors.hpp"
#include "alqa/sampling.hpp"

namespace alqa {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// A vector tagged with the instance id it represents.
template <typename Scalar>
struct IndexedPoint {
  std::string id;
  VectorX<Scalar> vec;
};

template <typename A, typename B>
typename A::Scalar euclidean(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) throw ArgumentError("euclidean: dimension mismatch");
  return (a.derived() - b.derived()).norm();
}

template <typename Scalar>
struct Neighbor {
  std::string id;
  Scalar distance;
};

/// Neighbors of one query, ascending by distance (ties by id).
template <typename Scalar>
struct NeighborSet {
  std::string query_id;
  std::vector<Neighbor<Scalar>> neighbors;
};

/// Brute-force k nearest neighbors by Euclidean distance, skipping every
/// corpus entry whose context (looked up in `contexts`) equals
/// `excluded_context` exactly. Returns all eligible entries when fewer than k
/// remain. Throws NoEligibleNeighbors if nothing is eligible.
template <typename Derived>
NeighborSet<typename Derived::Scalar> knn(
    const Eigen::MatrixBase<Derived>& query,
    std::span<const IndexedPoint<typename Derived::Scalar>> corpus, int k,
    std::string_view excluded_context,
    const std::unordered_map<std::string, std::string>& contexts, std::string query_id = {}) {
  using Scalar = typename Derived::Scalar;
  if (k < 1) throw ArgumentError("knn: k must be >= 1");

  std::vector<Neighbor<Scalar>> eligible;
  eligible.reserve(corpus.size());
  for (const auto& p : corpus) {
    auto it = contexts.find(p.id);
    if (it == contexts.end()) throw LookupError("knn: no context for corpus id " + p.id);
    if (it->second == excluded_context) continue;
    eligible.push_back({p.id, euclidean(query, p.vec)});
  }
  if (eligible.empty()) throw NoEligibleNeighbors("knn: no eligible neighbors for " + query_id);

  const auto by_distance = [](const Neighbor<Scalar>& a, const Neighbor<Scalar>& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  };
  const auto keep = std::min(eligible.size(), static_cast<std::size_t>(k));
  std::partial_sort(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(keep),
                    eligible.end(), by_distance);
  eligible.resize(keep);
  return {std::move(query_id), std::move(eligible)};
}

template <typename Scalar>
struct KMeansResult {
  std::vector<int> assignment;    // cluster of each input column
  MatrixX<Scalar> centroids;      // one column per cluster
  std::vector<Scalar> distortion; // sum of squared distances after each centroid update
  int iterations = 0;
  bool converged = false;

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(centroids.cols()), 0);
    for (int c : assignment) ++sizes[static_cast<std::size_t>(c)];
    return sizes;
  }
};

namespace detail {

template <typename Derived, typename Scalar = typename Derived::Scalar>
int nearest_centroid(const Eigen::MatrixBase<Derived>& x, const MatrixX<Scalar>& centroids) {
  int best = 0;
  Scalar best_d = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index c = 0; c < centroids.cols(); ++c) {
    const Scalar d = (x - centroids.col(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace detail

/// Lloyd's algorithm on the columns of `points` with seeded k-means++
/// initialization. Stops when no assignment changes or after `max_iters`
/// updates. A cluster left empty takes the point farthest from its own
/// centroid (from clusters with more than one member). Assignment ties go to
/// the lower cluster index.
template <typename Derived>
KMeansResult<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& points, int k,
                                              std::uint64_t seed, int max_iters = 100) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = points.cols();
  if (k < 1 || k > n) throw ArgumentError("kmeans: need 1 <= k <= number of points");
  if (max_iters < 1) throw ArgumentError("kmeans: max_iters must be >= 1");

  KMeansResult<Scalar> r;
  r.centroids.resize(points.rows(), k);

  // k-means++ seeding
  Rng rng(seed);
  r.centroids.col(0) = points.col(static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n))));
  VectorX<Scalar> d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.col(i) - r.centroids.col(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const Scalar total = d2.sum();
    Eigen::Index pick = n - 1;
    if (total > Scalar(0)) {
      while (d2[pick] <= Scalar(0)) --pick;  // rounding fallback

      const Scalar target = static_cast<Scalar>(rng.uniform()) * total;
      Scalar acc = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > Scalar(0) && target < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
    }
    r.centroids.col(c) = points.col(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points.col(i) - r.centroids.col(c)).squaredNorm());
    }
  }

  r.assignment.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    r.assignment[static_cast<std::size_t>(i)] = detail::nearest_centroid(points.col(i), r.centroids);
  }

  auto repair_empty = [&] {
    for (;;) {
      auto sizes = r.cluster_sizes();
      auto empty = std::find(sizes.begin(), sizes.end(), std::size_t{0});
      if (empty == sizes.end()) return;
      Eigen::Index far = -1;
      Scalar far_d = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int c = r.assignment[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(c)] < 2) continue;
        const Scalar d = (points.col(i) - r.centroids.col(c)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      const auto target = static_cast<int>(empty - sizes.begin());
      r.assignment[static_cast<std::size_t>(far)] = target;
      r.centroids.col(target) = points.col(far);
    }
  };

  auto update_centroids = [&] {
    MatrixX<Scalar> sums = MatrixX<Scalar>::Zero(points.rows(), k);
    VectorX<Scalar> counts = VectorX<Scalar>::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = r.assignment[static_cast<std::size_t>(i)];
      sums.col(c) += points.col(i);
      counts[c] += Scalar(1);
    }
    for (int c = 0; c < k; ++c) r.centroids.col(c) = sums.col(c) / counts[c];
    Scalar distortion = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      distortion += (points.col(i) - r.centroids.col(r.assignment[static_cast<std::size_t>(i)])).squaredNorm();
    }
    r.distortion.push_back(distortion);
  };

  for (r.iterations = 1; r.iterations <= max_iters; ++r.iterations) {
    repair_empty();
    update_centroids();
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = detail::nearest_centroid(points.col(i), r.centroids);
      if (c != r.assignment[static_cast<std::size_t>(i)]) {
        r.assignment[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    if (!changed) {
      r.converged = true;
      break;
    }
  }
  if (!r.converged) {
    r.iterations = max_iters;
    repair_empty();
    update_centroids();
  }
  return r;
}

/// Stacks embeddings as the columns of a matrix.
template <typename Scalar>
MatrixX<Scalar> stack_columns(std::span<const IndexedPoint<Scalar>> points) {
  if (points.empty()) return {};
  MatrixX<Scalar> m(points.front().vec.size(), static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].vec.size() != m.rows()) throw ArgumentError("stack_columns: dimension mismatch");
    m.col(static_cast<Eigen::Index>(i)) = points[i].vec;
  }
  return m;
}

}  // namespace alqa
