#include "driftguard/nnmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "driftguard/errors.hpp"
#include "driftguard/rng.hpp"

namespace driftguard {

namespace {

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

// Network parameters in the standardized coordinates used during training.
struct Params {
  MatrixXd V1;
  VectorXd c1;
  VectorXd u;
  double c = 0.0;
};

struct Standardizer {
  VectorXd x_mean, x_scale;
  double y_mean = 0.0, y_scale = 1.0;

  static Standardizer from(const Dataset& data) {
    Standardizer s;
    const double n = static_cast<double>(data.rows());
    s.x_mean = data.X.colwise().mean().transpose();
    s.x_scale = ((data.X.rowwise() - s.x_mean.transpose()).array().square().colwise().sum() / n).sqrt().transpose();
    for (Eigen::Index j = 0; j < s.x_scale.size(); ++j)
      if (!(s.x_scale(j) > 0.0)) s.x_scale(j) = 1.0;
    s.y_mean = data.y.mean();
    s.y_scale = std::sqrt((data.y.array() - s.y_mean).square().mean());
    if (!(s.y_scale > 0.0)) s.y_scale = 1.0;
    return s;
  }

  MatrixXd features(const MatrixXd& X) const {
    // p x n, one standardized observation per column.
    return ((X.rowwise() - x_mean.transpose()).array().rowwise() / x_scale.transpose().array()).transpose();
  }

  Params to_standard(const FittedMLP& m) const {
    Params p;
    p.V1 = m.W1 * x_scale.asDiagonal();
    p.c1 = m.b1 + m.W1 * x_mean;
    p.u = m.w / y_scale;
    p.c = (m.b - y_mean) / y_scale;
    return p;
  }

  void to_raw(const Params& p, FittedMLP& m) const {
    m.W1 = p.V1 * x_scale.cwiseInverse().asDiagonal();
    m.b1 = p.c1 - m.W1 * x_mean;
    m.w = y_scale * p.u;
    m.b = y_scale * p.c + y_mean;
  }
};

struct Gradient {
  MatrixXd V1;
  VectorXd c1;
  VectorXd u;
  double c = 0.0;

  double norm() const {
    return std::sqrt(V1.squaredNorm() + c1.squaredNorm() + u.squaredNorm() + c * c);
  }
};

// Objective and gradient of mean((yhat - y)^2) + pen * |params|^2.
double objective(const Params& p, const MatrixXd& Xs, const VectorXd& ys, double pen, Gradient* g) {
  const double n = static_cast<double>(ys.size());
  MatrixXd H = p.V1 * Xs;
  H.colwise() += p.c1;
  const MatrixXd A = H.cwiseMax(0.0);
  const VectorXd r = (A.transpose() * p.u).array() + p.c - ys.array();
  const double loss = r.squaredNorm() / n +
                      pen * (p.V1.squaredNorm() + p.c1.squaredNorm() + p.u.squaredNorm() + p.c * p.c);
  if (g != nullptr) {
    const VectorXd dr = (2.0 / n) * r;
    g->u = A * dr + 2.0 * pen * p.u;
    g->c = dr.sum() + 2.0 * pen * p.c;
    // Subgradient 0 at an exactly-zero pre-activation.
    const MatrixXd dH = ((p.u * dr.transpose()).array() * (H.array() > 0.0).cast<double>()).matrix();
    g->V1 = dH * Xs.transpose() + 2.0 * pen * p.V1;
    g->c1 = dH.rowwise().sum() + 2.0 * pen * p.c1;
  }
  return loss;
}

struct AdamResult {
  Params params;
  double loss;
  double grad_norm;
};

AdamResult run_adam(Params p, const MatrixXd& Xs, const VectorXd& ys, double pen, int epochs, double base_step) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Gradient g;
  Params m1{MatrixXd::Zero(p.V1.rows(), p.V1.cols()), VectorXd::Zero(p.c1.size()), VectorXd::Zero(p.u.size()), 0.0};
  Params m2 = m1;
  double b1t = 1.0, b2t = 1.0;
  auto step_block = [&](double step, auto& param, const auto& grad, auto& first, auto& second) {
    first = beta1 * first + (1.0 - beta1) * grad;
    second = beta2 * second + (1.0 - beta2) * grad.cwiseProduct(grad);
    param -= (step * (first / (1.0 - b1t)).array() / ((second / (1.0 - b2t)).array().sqrt() + eps)).matrix();
  };
  for (int epoch = 0; epoch < epochs; ++epoch) {
    // Linear decay to a tenth of the step over the run.
    const double step = base_step * (1.0 - 0.9 * static_cast<double>(epoch) / static_cast<double>(epochs));
    objective(p, Xs, ys, pen, &g);
    b1t *= beta1;
    b2t *= beta2;
    step_block(step, p.V1, g.V1, m1.V1, m2.V1);
    step_block(step, p.c1, g.c1, m1.c1, m2.c1);
    step_block(step, p.u, g.u, m1.u, m2.u);
    m1.c = beta1 * m1.c + (1.0 - beta1) * g.c;
    m2.c = beta2 * m2.c + (1.0 - beta2) * g.c * g.c;
    p.c -= step * (m1.c / (1.0 - b1t)) / (std::sqrt(m2.c / (1.0 - b2t)) + eps);
  }
  const double loss = objective(p, Xs, ys, pen, &g);
  return {std::move(p), loss, g.norm()};
}

Params random_init(Eigen::Index features, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Params p;
  p.V1.resize(kHiddenUnits, features);
  const double sd1 = std::sqrt(2.0 / static_cast<double>(features));
  for (Eigen::Index i = 0; i < p.V1.size(); ++i) p.V1(i) = sd1 * normal(rng);
  p.c1 = VectorXd::Constant(kHiddenUnits, 0.1);
  p.u.resize(kHiddenUnits);
  const double sd2 = std::sqrt(1.0 / static_cast<double>(kHiddenUnits));
  for (Eigen::Index i = 0; i < p.u.size(); ++i) p.u(i) = sd2 * normal(rng);
  p.c = 0.0;
  return p;
}

// Hidden-layer design [relu(W1 x + b1)', 1], one row per observation.
MatrixXd output_design(const FittedMLP& m, const MatrixXd& X) {
  MatrixXd H = X * m.W1.transpose();
  H.rowwise() += m.b1.transpose();
  MatrixXd A(X.rows(), kHiddenUnits + 1);
  A.leftCols(kHiddenUnits) = H.cwiseMax(0.0);
  A.col(kHiddenUnits).setOnes();
  return A;
}

double sigma2_floor(const VectorXd& y) {
  return std::max(1e-14 * y.squaredNorm() / static_cast<double>(y.size()), std::numeric_limits<double>::min());
}

// With W1, b1 frozen the mean score is zero iff
// (A'A + gamma sigma2 I) theta = A'y, where sigma2 is the mean squared
// residual at theta. Iterate that fixed point.
void solve_output_layer(FittedMLP& m, const Dataset& data) {
  const MatrixXd A = output_design(m, data.X);
  const MatrixXd gram = A.transpose() * A;
  const VectorXd rhs = A.transpose() * data.y;
  const double n = static_cast<double>(data.rows());
  const double floor = sigma2_floor(data.y);

  VectorXd theta(kHiddenUnits + 1);
  theta << m.w, m.b;
  double sigma2 = std::max((data.y - A * theta).squaredNorm() / n, floor);
  for (int iter = 0; iter < 50; ++iter) {
    MatrixXd normal = gram;
    normal.diagonal().array() += m.gamma * sigma2;
    Eigen::LDLT<MatrixXd> ldlt(normal);
    VectorXd next;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().minCoeff() > 1e-12 * normal.diagonal().maxCoeff()) {
      next = ldlt.solve(rhs);
    } else {
      next = normal.completeOrthogonalDecomposition().solve(rhs);
    }
    const double next_sigma2 = std::max((data.y - A * next).squaredNorm() / n, floor);
    const bool settled = std::abs(next_sigma2 - sigma2) <= 1e-14 * sigma2;
    theta = next;
    sigma2 = next_sigma2;
    if (settled) break;
  }
  m.w = theta.head(kHiddenUnits);
  m.b = theta(kHiddenUnits);
  m.sigma2 = sigma2;
}

}  // namespace

FittedMLP fit_mlp(const Dataset& data, double gamma, const MlpTrainConfig& cfg, const FittedMLP* warm_start) {
  if (data.rows() < 2) throw InputError("fit_mlp: need at least 2 observations");
  if (data.y.size() != data.rows()) throw InputError("fit_mlp: X and y row counts differ");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InputError("fit_mlp: gamma must be finite and >= 0");
  if (!data.X.allFinite() || !data.y.allFinite()) throw InputError("fit_mlp: non-finite input");
  if (warm_start != nullptr && warm_start->feature_dim() != data.features())
    throw InputError("fit_mlp: warm start has the wrong input dimension");

  const Standardizer stdz = Standardizer::from(data);
  const MatrixXd Xs = stdz.features(data.X);
  const VectorXd ys = (data.y.array() - stdz.y_mean) / stdz.y_scale;
  const double pen = gamma / static_cast<double>(data.rows());

  std::optional<AdamResult> best;
  if (warm_start != nullptr) {
    best = run_adam(stdz.to_standard(*warm_start), Xs, ys, pen, cfg.refit_epochs, cfg.step_size);
  } else {
    for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
      Rng rng = substream(cfg.seed, "mlp-init", {static_cast<std::uint64_t>(r)});
      AdamResult candidate = run_adam(random_init(data.features(), rng), Xs, ys, pen, cfg.epochs, cfg.step_size);
      if (!best || candidate.loss < best->loss) best = std::move(candidate);
    }
  }

  FittedMLP model;
  model.gamma = gamma;
  model.n_train = data.rows();
  stdz.to_raw(best->params, model);
  model.grad_norm = best->grad_norm;
  model.converged = std::isfinite(best->grad_norm) && best->grad_norm <= cfg.grad_tolerance;
  solve_output_layer(model, data);
  if (!model.W1.allFinite() || !model.b1.allFinite() || !model.w.allFinite() || !std::isfinite(model.b))
    throw NumericalError("fit_mlp: training diverged");
  return model;
}

Vector<double> hidden_activations(const FittedMLP& model, const Eigen::Ref<const Vector<double>>& x) {
  if (x.size() != model.feature_dim()) throw InputError("MLP: predictor dimension mismatch");
  return (model.W1 * x + model.b1).cwiseMax(0.0);
}

double predict(const FittedMLP& model, const Eigen::Ref<const Vector<double>>& x) {
  return model.w.dot(hidden_activations(model, x)) + model.b;
}

Vector<double> predict_all(const FittedMLP& model, const Eigen::Ref<const Matrix<double>>& X) {
  if (X.cols() != model.feature_dim()) throw InputError("MLP: predictor dimension mismatch");
  MatrixXd H = X * model.W1.transpose();
  H.rowwise() += model.b1.transpose();
  return (H.cwiseMax(0.0) * model.w).array() + model.b;
}

Vector<double> score_mlp(const FittedMLP& model, const Eigen::Ref<const Vector<double>>& x, double y) {
  const VectorXd a = hidden_activations(model, x);
  const double scaled = (y - (model.w.dot(a) + model.b)) / model.sigma2;
  const double shrink = model.gamma / static_cast<double>(model.n_train);
  VectorXd s(kHiddenUnits + 1);
  s.head(kHiddenUnits) = scaled * a - shrink * model.w;
  s(kHiddenUnits) = scaled - shrink * model.b;
  return s;
}

Matrix<double> scores_mlp(const FittedMLP& model, const Dataset& data) {
  if (data.features() != model.feature_dim()) throw InputError("MLP: predictor dimension mismatch");
  const MatrixXd A = output_design(model, data.X);
  VectorXd theta(kHiddenUnits + 1);
  theta << model.w, model.b;
  const VectorXd scaled = (data.y - A * theta) / model.sigma2;
  MatrixXd S = A.array().colwise() * scaled.array();
  S.rowwise() -= (model.gamma / static_cast<double>(model.n_train)) * theta.transpose();
  return S;
}

double cv_r2(const Dataset& data, double gamma, const MlpTrainConfig& cfg, int folds, std::uint64_t seed) {
  const Eigen::Index n = data.rows();
  if (folds < 2 || n < folds * 2) throw InputError("cv_r2: too few observations for the requested folds");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng = substream(seed, "cv-folds");
  std::shuffle(order.begin(), order.end(), rng);

  VectorXd oof(n);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, held;
    for (std::size_t k = 0; k < order.size(); ++k)
      (static_cast<int>(k % static_cast<std::size_t>(folds)) == f ? held : train).push_back(order[k]);
    const FittedMLP model = fit_mlp(data.subset(train), gamma, cfg);
    const Dataset test = data.subset(held);
    const VectorXd pred = predict_all(model, test.X);
    for (std::size_t k = 0; k < held.size(); ++k) oof(held[k]) = pred(static_cast<Eigen::Index>(k));
  }
  const double sse = (data.y - oof).squaredNorm();
  const double sst = (data.y.array() - data.y.mean()).square().sum();
  return 1.0 - sse / sst;
}

}  // namespace driftguard
