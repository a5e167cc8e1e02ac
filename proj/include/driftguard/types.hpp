#pragma once

#include <vector>

#include <Eigen/Dense>

namespace driftguard {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Predictor rows plus response vector. Row i of X pairs with y(i).
template <typename Scalar>
struct BasicDataset {
  Matrix<Scalar> X;
  Vector<Scalar> y;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index features() const { return X.cols(); }

  BasicDataset subset(const std::vector<Eigen::Index>& idx) const {
    BasicDataset out;
    out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    out.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.X.row(static_cast<Eigen::Index>(r)) = X.row(idx[r]);
      out.y(static_cast<Eigen::Index>(r)) = y(idx[r]);
    }
    return out;
  }

  BasicDataset head(Eigen::Index count) const {
    return {X.topRows(count), y.head(count)};
  }

  BasicDataset tail(Eigen::Index count) const {
    return {X.bottomRows(count), y.tail(count)};
  }
};

using Dataset = BasicDataset<double>;

}  // namespace driftguard
