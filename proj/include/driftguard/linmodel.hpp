#pragma once

#include <cmath>

#include "driftguard/errors.hpp"
#include "driftguard/types.hpp"

namespace driftguard {

// Ridge regression with Gaussian likelihood. theta holds the intercept first,
// then one slope per predictor column.
template <typename Scalar>
struct FittedLinearModel {
  Vector<Scalar> theta;
  Scalar gamma{0};
  Eigen::Index n_train{0};

  Eigen::Index score_dim() const { return theta.size(); }
  Eigen::Index feature_dim() const { return theta.size() - 1; }
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> augment(const Eigen::Ref<const Matrix<Scalar>>& X) {
  Matrix<Scalar> Xa(X.rows(), X.cols() + 1);
  Xa.col(0).setOnes();
  Xa.rightCols(X.cols()) = X;
  return Xa;
}

}  // namespace detail

// Solves (X'X + gamma I) theta = X'y on the intercept-augmented design.
template <typename Scalar>
FittedLinearModel<Scalar> fit_ridge(const BasicDataset<Scalar>& data, Scalar gamma) {
  using std::isfinite;
  const Eigen::Index p = data.features();
  if (data.y.size() != data.rows()) throw InputError("fit_ridge: X and y row counts differ");
  if (!(gamma >= Scalar(0)) || !isfinite(gamma)) throw InputError("fit_ridge: gamma must be finite and >= 0");
  // The penalty keeps the system nonsingular, so any nonempty sample is
  // accepted when gamma > 0.
  if (data.rows() < (gamma > Scalar(0) ? 1 : p + 2))
    throw InputError("fit_ridge: need at least p+2 rows without a penalty, got " + std::to_string(data.rows()));
  if (!data.X.allFinite() || !data.y.allFinite()) throw InputError("fit_ridge: non-finite input");

  const Matrix<Scalar> Xa = detail::augment<Scalar>(data.X);
  Matrix<Scalar> normal = Xa.transpose() * Xa;
  normal.diagonal().array() += gamma;
  const Vector<Scalar> rhs = Xa.transpose() * data.y;

  Eigen::LDLT<Matrix<Scalar>> ldlt(normal);
  const Scalar scale = normal.diagonal().cwiseAbs().maxCoeff();
  const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                        ldlt.vectorD().cwiseAbs().minCoeff() <=
                            scale * Eigen::NumTraits<Scalar>::epsilon() * Scalar(p + 1);
  if (singular) throw DegenerateDesignError("fit_ridge: normal matrix is singular; use gamma > 0");

  FittedLinearModel<Scalar> model;
  model.theta = ldlt.solve(rhs);
  // One step of iterative refinement keeps the stationarity residual at
  // rounding level for moderately conditioned designs.
  model.theta += ldlt.solve(rhs - normal * model.theta);
  model.gamma = gamma;
  model.n_train = data.rows();
  if (!model.theta.allFinite()) throw DegenerateDesignError("fit_ridge: non-finite solution");
  return model;
}

template <typename Scalar>
Scalar predict(const FittedLinearModel<Scalar>& model, const Eigen::Ref<const Vector<Scalar>>& x) {
  return model.theta(0) + model.theta.tail(x.size()).dot(x);
}

// (y - x~'theta) x~ - (gamma / n_train) theta, with x~ = (1, x).
template <typename Scalar>
Vector<Scalar> score_linear(const FittedLinearModel<Scalar>& model,
                            const Eigen::Ref<const Vector<Scalar>>& x, Scalar y) {
  if (x.size() + 1 != model.theta.size()) throw InputError("score_linear: predictor dimension mismatch");
  const Scalar residual = y - predict(model, x);
  Vector<Scalar> s(model.theta.size());
  s(0) = residual;
  s.tail(x.size()) = residual * x;
  s -= (model.gamma / static_cast<Scalar>(model.n_train)) * model.theta;
  return s;
}

// Score vectors for every row, one per row of the result.
template <typename Scalar>
Matrix<Scalar> scores_linear(const FittedLinearModel<Scalar>& model, const BasicDataset<Scalar>& data) {
  if (data.features() + 1 != model.theta.size()) throw InputError("scores_linear: predictor dimension mismatch");
  const Matrix<Scalar> Xa = detail::augment<Scalar>(data.X);
  const Vector<Scalar> residual = data.y - Xa * model.theta;
  Matrix<Scalar> S = Xa.array().colwise() * residual.array();
  S.rowwise() -= ((model.gamma / static_cast<Scalar>(model.n_train)) * model.theta).transpose();
  return S;
}

}  // namespace driftguard
