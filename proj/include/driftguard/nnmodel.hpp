#pragma once

#include <cstdint>
#include <optional>

#include "driftguard/errors.hpp"
#include "driftguard/types.hpp"

namespace driftguard {

inline constexpr Eigen::Index kHiddenUnits = 4;

// Full-batch Adam settings for fit_mlp. Every quantity that affects the
// result is listed here so that a fit is reproducible from its config.
struct MlpTrainConfig {
  int epochs = 3000;
  double step_size = 0.02;
  std::uint64_t seed = 1;
  // Random restarts for a cold fit; the lowest final loss wins.
  int restarts = 3;
  // Epochs used when refitting from a warm start (bootstrap replicates).
  int refit_epochs = 400;
  // Gradient norm (standardized parameterization) above which the fit is
  // flagged as not converged.
  double grad_tolerance = 5e-3;
};

// One-hidden-layer ReLU network g(x) = w' relu(W1 x + b1) + b with Gaussian
// noise variance sigma2. Only (w, b) is monitored; W1 and b1 are frozen.
struct FittedMLP {
  Matrix<double> W1;  // kHiddenUnits x p
  Vector<double> b1;  // kHiddenUnits
  Vector<double> w;   // kHiddenUnits
  double b = 0.0;
  double gamma = 0.0;
  double sigma2 = 1.0;
  Eigen::Index n_train = 0;
  bool converged = true;
  double grad_norm = 0.0;

  Eigen::Index score_dim() const { return kHiddenUnits + 1; }
  Eigen::Index feature_dim() const { return W1.cols(); }
};

// Minimizes mean squared error + (gamma/n)(|w|^2 + b^2 + |W1|^2 + |b1|^2)
// with full-batch Adam, then solves the output layer exactly so that the
// monitored score vectors average to zero over the training data. A warm
// start replaces the random restarts with refit_epochs from its parameters.
FittedMLP fit_mlp(const Dataset& data, double gamma, const MlpTrainConfig& cfg,
                  const FittedMLP* warm_start = nullptr);

Vector<double> hidden_activations(const FittedMLP& model, const Eigen::Ref<const Vector<double>>& x);

double predict(const FittedMLP& model, const Eigen::Ref<const Vector<double>>& x);

Vector<double> predict_all(const FittedMLP& model, const Eigen::Ref<const Matrix<double>>& X);

// ((y - g(x)) / sigma2) [relu(W1 x + b1); 1] - (gamma / n_train) [w; b].
Vector<double> score_mlp(const FittedMLP& model, const Eigen::Ref<const Vector<double>>& x, double y);

Matrix<double> scores_mlp(const FittedMLP& model, const Dataset& data);

// Out-of-fold R^2 from k-fold cross-validation with shuffled folds.
double cv_r2(const Dataset& data, double gamma, const MlpTrainConfig& cfg, int folds, std::uint64_t seed);

}  // namespace driftguard
