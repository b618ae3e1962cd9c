#pragma once

#include <cmath>

#include <Eigen/Core>

#include "alqa/errors.hpp"

namespace alqa {

/// Probability floor applied before every divergence.
inline constexpr double kProbabilityFloor = 1e-12;

/// First `n_original` entries of `p`, each floored at `floor`, rescaled to sum 1.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> restrict_renormalize(
    const Eigen::MatrixBase<Derived>& p, Eigen::Index n_original,
    typename Derived::Scalar floor = typename Derived::Scalar(kProbabilityFloor)) {
  if (n_original < 1 || n_original > p.size()) {
    throw ArgumentError("restrict_renormalize: need 1 <= n_original <= length");
  }
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out =
      p.derived().head(n_original).cwiseMax(floor);
  out /= out.sum();
  return out;
}

/// D_KL(p||q) + D_KL(q||p), natural log, summed as (p_i - q_i)(ln p_i - ln q_i).
/// That form is exactly symmetric in floating point. Inputs must be floored.
template <typename A, typename B>
typename A::Scalar sym_kl(const Eigen::MatrixBase<A>& p, const Eigen::MatrixBase<B>& q) {
  using Scalar = typename A::Scalar;
  if (p.size() != q.size()) throw ArgumentError("sym_kl: length mismatch");
  Scalar total = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar pi = p(i);
    const Scalar qi = q(i);
    if (pi == qi) continue;
    total += (pi - qi) * (std::log(pi) - std::log(qi));
  }
  return total;
}

}  // namespace alqa
