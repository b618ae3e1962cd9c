#include <doctest.h>

#include <cmath>
#include <set>

#include "alqa/geometry.hpp"

using namespace alqa;

namespace {

double summed_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Eigen::VectorXd random_vector(Rng& rng, Eigen::Index dim) {
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.uniform() * 2.0 - 1.0;
  return v;
}

std::string pid(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "p%03zu", i);
  return buf;
}

}  // namespace

TEST_CASE("euclidean distance") {
  Eigen::Vector2d a(0, 0), b(3, 4);
  CHECK(euclidean(a, a) == 0.0);
  CHECK(euclidean(a, b) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(euclidean(b, a) == euclidean(a, b));
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_vector(rng, 64), y = random_vector(rng, 64);
    CHECK(euclidean(x, y) == doctest::Approx(summed_distance(x, y)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(euclidean(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)), ArgumentError);
}

TEST_CASE("knn examples") {
  std::vector<IndexedPoint<double>> corpus = {
      {"a", Eigen::Vector2d(0, 0)}, {"b", Eigen::Vector2d(1, 0)}, {"c", Eigen::Vector2d(0, 2)},
      {"d", Eigen::Vector2d(5, 5)}, {"e", Eigen::Vector2d(-1, 0)}};
  std::unordered_map<std::string, std::string> ctx = {
      {"a", "ctx0"}, {"b", "ctx1"}, {"c", "ctx2"}, {"d", "ctx3"}, {"e", "ctx4"}};
  const Eigen::Vector2d q(0, 0);

  SUBCASE("ascending with id tie-break") {
    const auto r = knn(q, std::span<const IndexedPoint<double>>(corpus), 3, "none", ctx, "q");
    REQUIRE(r.neighbors.size() == 3);
    CHECK(r.neighbors[0].id == "a");
    CHECK(r.neighbors[1].id == "b");  // b and e tie at 1
    CHECK(r.neighbors[2].id == "e");
    CHECK(r.query_id == "q");
  }
  SUBCASE("exclusion by context") {
    ctx["b"] = "same";
    const auto r = knn(q, std::span<const IndexedPoint<double>>(corpus), 2, "same", ctx);
    CHECK(r.neighbors[0].id == "a");
    CHECK(r.neighbors[1].id == "e");
  }
  SUBCASE("fewer eligible than k returns all") {
    const auto r = knn(q, std::span<const IndexedPoint<double>>(corpus), 50, "ctx0", ctx);
    CHECK(r.neighbors.size() == 4);
  }
  SUBCASE("nothing eligible") {
    for (auto& [id, c] : ctx) c = "x";
    CHECK_THROWS_AS(knn(q, std::span<const IndexedPoint<double>>(corpus), 1, "x", ctx), NoEligibleNeighbors);
  }
  SUBCASE("bad k") {
    CHECK_THROWS_AS(knn(q, std::span<const IndexedPoint<double>>(corpus), 0, "x", ctx), ArgumentError);
  }
}

TEST_CASE("knn matches a brute-force oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.index(200);
    std::vector<IndexedPoint<double>> corpus;
    std::unordered_map<std::string, std::string> ctx;
    for (std::size_t i = 0; i < n; ++i) {
      // coarse grid coordinates make distance ties common
      Eigen::VectorXd v(8);
      for (Eigen::Index d = 0; d < 8; ++d) v[d] = static_cast<double>(rng.index(3));
      corpus.push_back({pid(i), v});
      ctx[pid(i)] = "c" + std::to_string(rng.index(10));
    }
    Eigen::VectorXd q(8);
    for (Eigen::Index d = 0; d < 8; ++d) q[d] = static_cast<double>(rng.index(3));
    const std::string excluded = "c3";

    std::vector<std::pair<double, std::string>> oracle;
    for (const auto& p : corpus) {
      if (ctx[p.id] != excluded) oracle.emplace_back(summed_distance(q, p.vec), p.id);
    }
    std::sort(oracle.begin(), oracle.end());
    for (int k : {1, 5, 20}) {
      if (oracle.empty()) {
        CHECK_THROWS_AS(knn(q, std::span<const IndexedPoint<double>>(corpus), k, excluded, ctx), NoEligibleNeighbors);
        continue;
      }
      const auto r = knn(q, std::span<const IndexedPoint<double>>(corpus), k, excluded, ctx);
      const auto expect = std::min<std::size_t>(oracle.size(), static_cast<std::size_t>(k));
      REQUIRE(r.neighbors.size() == expect);
      for (std::size_t i = 0; i < expect; ++i) {
        CHECK(r.neighbors[i].id == oracle[i].second);
        CHECK(r.neighbors[i].distance == doctest::Approx(oracle[i].first).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("kmeans with k equal to n puts every point alone") {
  Eigen::MatrixXd pts(2, 5);
  pts << 0, 1, 2, 3, 4,
         0, 1, 0, 1, 0;
  const auto r = kmeans(pts, 5, 3);
  CHECK(std::set<int>(r.assignment.begin(), r.assignment.end()).size() == 5);
  CHECK(r.distortion.back() == doctest::Approx(0.0));
  CHECK(r.converged);
}

TEST_CASE("kmeans handles duplicate points without empty clusters") {
  Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(3, 6);
  pts.col(5) << 1, 1, 1;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(pts, 3, seed);
    for (auto s : r.cluster_sizes()) CHECK(s >= 1);
  }
}

TEST_CASE("kmeans on two separated blobs matches the best 2-partition") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 6 + static_cast<Eigen::Index>(rng.index(7));  // up to 12
    Eigen::MatrixXd pts(3, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double off = i % 2 ? 10.0 : -10.0;
      for (Eigen::Index d = 0; d < 3; ++d) pts(d, i) = off + rng.uniform();
    }
    // exhaustive oracle over every labelling
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
      Eigen::Vector3d s[2] = {Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
      int c[2] = {0, 0};
      for (Eigen::Index i = 0; i < n; ++i) {
        const int g = (mask >> i) & 1;
        s[g] += pts.col(i);
        ++c[g];
      }
      double cost = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int g = (mask >> i) & 1;
        cost += (pts.col(i) - s[g] / c[g]).squaredNorm();
      }
      best = std::min(best, cost);
    }
    const auto r = kmeans(pts, 2, static_cast<std::uint64_t>(trial));
    CHECK(r.distortion.back() == doctest::Approx(best).epsilon(1e-9));
    for (Eigen::Index i = 0; i < n; ++i) CHECK(r.assignment[i] == r.assignment[i % 2]);
  }
}

TEST_CASE("kmeans is deterministic and its distortion never increases") {
  Rng rng(19);
  Eigen::MatrixXd pts(16, 120);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) pts.col(i) = random_vector(rng, 16);
  for (int k : {1, 3, 10}) {
    const auto a = kmeans(pts, k, 123);
    const auto b = kmeans(pts, k, 123);
    CHECK(a.assignment == b.assignment);
    CHECK(a.centroids == b.centroids);
    for (std::size_t i = 1; i < a.distortion.size(); ++i) {
      CHECK(a.distortion[i] <= a.distortion[i - 1] * (1 + 1e-12));
    }
    for (auto s : a.cluster_sizes()) CHECK(s >= 1);
  }
  CHECK_THROWS_AS(kmeans(pts, 0, 1), ArgumentError);
  CHECK_THROWS_AS(kmeans(pts, 121, 1), ArgumentError);
}

TEST_CASE("stack_columns") {
  std::vector<IndexedPoint<double>> pts = {{"a", Eigen::Vector2d(1, 2)}, {"b", Eigen::Vector2d(3, 4)}};
  const auto m = stack_columns(std::span<const IndexedPoint<double>>(pts));
  CHECK(m.cols() == 2);
  CHECK(m(1, 1) == 4.0);
  pts[1].vec = Eigen::Vector3d(1, 1, 1);
  CHECK_THROWS_AS(stack_columns(std::span<const IndexedPoint<double>>(pts)), ArgumentError);
}

TEST_CASE("geometry works in single precision") {
  Eigen::MatrixXf pts(1, 4);
  pts << 0.f, 0.1f, 5.f, 5.1f;
  const auto r = kmeans(pts, 2, 1);
  CHECK(r.assignment[0] == r.assignment[1]);
  CHECK(r.assignment[2] == r.assignment[3]);
  CHECK(r.assignment[0] != r.assignment[2]);
}
