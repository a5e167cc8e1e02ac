#pragma once

#include <cmath>
#include <string>

#include "driftguard/errors.hpp"
#include "driftguard/types.hpp"

namespace driftguard {

// z_i = lambda s_i + (1 - lambda) z_{i-1}, z_0 = 0.
template <typename Scalar>
struct MewmaState {
  Vector<Scalar> z;
  Eigen::Index i{0};
  Scalar lambda{Scalar(0.01)};

  static MewmaState start(Eigen::Index dim, Scalar lambda) {
    if (!(lambda > Scalar(0) && lambda < Scalar(1))) throw InputError("MEWMA lambda must lie in (0, 1)");
    return {Vector<Scalar>::Zero(dim), 0, lambda};
  }
};

template <typename Scalar>
void advance(MewmaState<Scalar>& state, const Eigen::Ref<const Vector<Scalar>>& s) {
  if (s.size() != state.z.size()) throw InputError("MEWMA update: score dimension mismatch");
  state.z = state.lambda * s + (Scalar(1) - state.lambda) * state.z;
  ++state.i;
}

template <typename Scalar>
MewmaState<Scalar> update(MewmaState<Scalar> state, const Eigen::Ref<const Vector<Scalar>>& s) {
  advance(state, s);
  return state;
}

// Sample mean and population (1/n) covariance of a set of score vectors, plus
// the factorization of cov + epsilon I used by every T^2 evaluation.
template <typename Scalar>
struct ScoreMoments {
  Vector<Scalar> mean;
  Matrix<Scalar> cov;
  Scalar epsilon{0};
  Matrix<Scalar> precision;
  // Lower Cholesky factor L of cov + epsilon I; T^2 = |L^{-1} d|^2.
  Matrix<Scalar> chol_lower;

  Eigen::Index dim() const { return mean.size(); }
};

// 1e-8 * trace(cov) / d.
template <typename Scalar>
Scalar default_epsilon(const Eigen::Ref<const Matrix<Scalar>>& cov) {
  return Scalar(1e-8) * cov.trace() / static_cast<Scalar>(cov.rows());
}

template <typename Scalar>
ScoreMoments<Scalar> moments_from(Vector<Scalar> mean, Matrix<Scalar> cov, Scalar epsilon) {
  using std::isfinite;
  if (!(epsilon >= Scalar(0)) || !isfinite(epsilon)) throw InputError("epsilon must be finite and >= 0");
  if (!mean.allFinite() || !cov.allFinite()) throw ConditioningError("score moments are not finite");
  ScoreMoments<Scalar> m;
  m.mean = std::move(mean);
  m.cov = std::move(cov);
  m.epsilon = epsilon;
  const Eigen::Index d = m.cov.rows();
  Matrix<Scalar> reg = m.cov;
  reg.diagonal().array() += epsilon;
  Eigen::LLT<Matrix<Scalar>> llt(reg);
  if (llt.info() != Eigen::Success || !(llt.rcond() > Scalar(100) * Eigen::NumTraits<Scalar>::epsilon())) {
    throw ConditioningError("score covariance + epsilon*I is numerically singular (epsilon = " +
                            std::to_string(static_cast<double>(epsilon)) + "); increase epsilon");
  }
  m.chol_lower = llt.matrixL();
  m.precision = llt.solve(Matrix<Scalar>::Identity(d, d));
  m.precision = Scalar(0.5) * (m.precision + m.precision.transpose()).eval();
  return m;
}

// Rows of `scores` are the score vectors.
template <typename Scalar>
ScoreMoments<Scalar> estimate_moments(const Eigen::Ref<const Matrix<Scalar>>& scores, Scalar epsilon) {
  if (scores.rows() < 2) throw InputError("estimate_moments: need at least 2 score vectors");
  const Scalar n = static_cast<Scalar>(scores.rows());
  Vector<Scalar> mean = scores.colwise().sum().transpose() / n;
  const Matrix<Scalar> centered = scores.rowwise() - mean.transpose();
  Matrix<Scalar> cov = (centered.transpose() * centered) / n;
  cov = Scalar(0.5) * (cov + cov.transpose()).eval();
  return moments_from<Scalar>(std::move(mean), std::move(cov), epsilon);
}

// (z/shrink - mean)' (cov + eps I)^{-1} (z/shrink - mean).
template <typename Scalar>
Scalar t2(const Eigen::Ref<const Vector<Scalar>>& z, const ScoreMoments<Scalar>& moments, Scalar shrink = Scalar(1)) {
  if (z.size() != moments.dim()) throw InputError("t2: dimension mismatch");
  if (!(shrink > Scalar(0))) throw InputError("t2: shrink must be positive");
  const Vector<Scalar> d = z / shrink - moments.mean;
  return moments.chol_lower.template triangularView<Eigen::Lower>().solve(d).squaredNorm();
}

}  // namespace driftguard
