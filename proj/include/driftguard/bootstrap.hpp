#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftguard/errors.hpp"
#include "driftguard/mewma.hpp"
#include "driftguard/rng.hpp"
#include "driftguard/score_model.hpp"

namespace driftguard {

struct BootstrapConfig {
  int outer = 100;  // B_O
  int inner = 200;  // B_I
  double lambda = 0.01;
  double alpha = 0.001;
  Eigen::Index horizon = 1000;  // number of control-limit points M
  // Ridge added to every score covariance before inversion. Unset means
  // 1e-8 * trace / d of the full-training covariance.
  std::optional<double> epsilon;
  std::uint64_t seed = 1;
  // Skip the variance-inflation correction (shrink = 1 for every i).
  bool naive = false;
  int threads = 0;       // 0: hardware concurrency
  int max_redraws = 64;  // per outer replicate, for an empty out-of-bag set

  // Throws InputError on out-of-range values; returns warnings.
  std::vector<std::string> validate() const;
};

// Variance inflation of the inner-bootstrap MEWMA relative to live
// monitoring:
//   [a_i + (3.72/n) c_i] / [a_i + (1/n) c_i],
//   a_i = lambda/(2-lambda) (1 - (1-lambda)^{2i}),  c_i = (1 - (1-lambda)^i)^2.
// 3.72 = 1 + 1/0.368 (out-of-bag fraction of a size-n resample).
template <typename Scalar>
Scalar inflation_factor(Scalar lambda, std::int64_t i, Scalar n) {
  using std::expm1;
  using std::log1p;
  const Scalar log_keep = log1p(-lambda);
  const Scalar one_minus_pow_i = -expm1(static_cast<Scalar>(i) * log_keep);
  const Scalar one_minus_pow_2i = -expm1(Scalar(2) * static_cast<Scalar>(i) * log_keep);
  const Scalar a = lambda / (Scalar(2) - lambda) * one_minus_pow_2i;
  const Scalar c = one_minus_pow_i * one_minus_pow_i;
  return (a + Scalar(3.72) / n * c) / (a + c / n);
}

// k(lambda, i, n) for i = 1..horizon.
std::vector<double> k_curve(double lambda, Eigen::Index horizon, Eigen::Index n);

// 1-based rank of the upper-alpha order statistic, ceil((1 - alpha) N).
// A 1e-9 slack absorbs the binary representation error of decimal alphas.
inline std::int64_t upper_rank(std::int64_t count, double alpha) {
  const long double exact = (1.0L - static_cast<long double>(alpha)) * static_cast<long double>(count);
  const auto rank = static_cast<std::int64_t>(std::ceil(exact - 1e-9L));
  return std::clamp<std::int64_t>(rank, 1, count);
}

// Ascending order statistic at rank ceil((1 - alpha) N), no interpolation.
template <typename Scalar>
Scalar quantile_upper(std::vector<Scalar> values, double alpha) {
  if (values.empty()) throw InputError("quantile_upper: empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("quantile_upper: alpha must lie in (0, 1)");
  const auto rank = upper_rank(static_cast<std::int64_t>(values.size()), alpha);
  auto nth = values.begin() + (rank - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

struct OuterDraw {
  std::vector<Eigen::Index> resample;  // n indices drawn with replacement
  std::vector<Eigen::Index> oob;       // ascending indices never drawn
  int attempts = 1;
};

OuterDraw draw_outer(Eigen::Index n, Rng& rng);

// draw_outer on substream (seed, b, attempt), moving to the next attempt
// while the out-of-bag set is empty. Throws NumericalError after
// max_attempts.
OuterDraw draw_outer_nonempty(Eigen::Index n, std::uint64_t seed, std::uint64_t replicate, int max_attempts);

// T_1..T_M for one inner replicate: resample out-of-bag scores (rows of
// oob_scores) with replacement, run the MEWMA from zero and evaluate
// t2(z_i, outer_moments, shrink_i), shrink_i = sqrt(k_i) or 1 when naive.
std::vector<double> inner_t_curve(const Eigen::Ref<const Matrix<double>>& oob_scores,
                                  const ScoreMoments<double>& outer_moments, const BootstrapConfig& config,
                                  std::span<const double> k, Rng& rng);

struct Calibration {
  ModelSpec spec;
  ScoreModel model;
  ScoreMoments<double> moments;
  std::vector<double> cl;
  std::vector<double> k;
  BootstrapConfig config;
  Eigen::Index n_train = 0;
  std::vector<std::string> warnings;

  // CL_i for 1-based i; CL_M beyond the horizon.
  double cl_at(Eigen::Index i) const;
};

// Nested bootstrap control limits: fit on all of `data`, then B_O outer
// refits on resamples, each driving B_I inner MEWMA streams over its
// out-of-bag scores; CL_i is the pooled upper-alpha quantile at each i.
Calibration calibrate(const Dataset& data, const ModelSpec& spec, const BootstrapConfig& config);

struct BaselineCalibration {
  ScoreModel model;  // fit on the leading split
  ScoreMoments<double> moments;  // scores of the trailing split
  double cl = 0.0;
  double lambda = 0.01;
  Eigen::Index n_fit = 0;
  Eigen::Index n_holdout = 0;
  std::vector<std::string> warnings;
};

// Split-sample constant limit: fit on the first floor(split_fraction n)
// rows, run the MEWMA over the remaining rows' scores from z = 0 and take
// the upper-alpha quantile of their T^2 values.
BaselineCalibration baseline_split_cl(const Dataset& data, const ModelSpec& spec, double split_fraction,
                                      double lambda, double alpha, std::optional<double> epsilon);

}  // namespace driftguard
