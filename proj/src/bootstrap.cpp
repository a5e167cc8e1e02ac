#include "driftguard/bootstrap.hpp"

#include <functional>
#include <mutex>
#include <sstream>

#include "driftguard/parallel.hpp"

namespace driftguard {

std::vector<std::string> BootstrapConfig::validate() const {
  if (outer < 1 || inner < 1) throw InputError("bootstrap: B_O and B_I must be >= 1");
  if (!(lambda > 0.0 && lambda < 1.0)) throw InputError("bootstrap: lambda must lie in (0, 1)");
  if (!(alpha > 0.0 && alpha < 0.5)) throw InputError("bootstrap: alpha must lie in (0, 0.5)");
  if (horizon < 1) throw InputError("bootstrap: horizon must be >= 1");
  if (epsilon && !(*epsilon >= 0.0 && std::isfinite(*epsilon))) throw InputError("bootstrap: epsilon must be >= 0");
  if (max_redraws < 1) throw InputError("bootstrap: max_redraws must be >= 1");
  std::vector<std::string> warnings;
  const double pooled_tail = static_cast<double>(outer) * static_cast<double>(inner) * alpha;
  if (pooled_tail < 20.0) {
    std::ostringstream msg;
    msg << "B_O*B_I*alpha = " << pooled_tail << " < 20: too few pooled values above the control limit";
    warnings.push_back(msg.str());
  }
  return warnings;
}

std::vector<double> k_curve(double lambda, Eigen::Index horizon, Eigen::Index n) {
  std::vector<double> k(static_cast<std::size_t>(horizon));
  for (Eigen::Index i = 1; i <= horizon; ++i)
    k[static_cast<std::size_t>(i - 1)] = inflation_factor<double>(lambda, i, static_cast<double>(n));
  return k;
}

OuterDraw draw_outer(Eigen::Index n, Rng& rng) {
  if (n < 1) throw InputError("draw_outer: empty dataset");
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  OuterDraw draw;
  draw.resample.resize(static_cast<std::size_t>(n));
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (auto& idx : draw.resample) {
    idx = pick(rng);
    seen[static_cast<std::size_t>(idx)] = 1;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (!seen[static_cast<std::size_t>(i)]) draw.oob.push_back(i);
  return draw;
}

OuterDraw draw_outer_nonempty(Eigen::Index n, std::uint64_t seed, std::uint64_t replicate, int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng = substream(seed, "outer-draw", {replicate, static_cast<std::uint64_t>(attempt)});
    OuterDraw draw = draw_outer(n, rng);
    if (!draw.oob.empty()) {
      draw.attempts = attempt + 1;
      return draw;
    }
  }
  throw NumericalError("outer replicate " + std::to_string(replicate) + ": out-of-bag set empty after " +
                       std::to_string(max_attempts) + " draws");
}

namespace {

// Out-of-bag scores expressed in the whitened coordinates of the outer
// moments, so that T^2 = |w(z)/shrink - w(mean)|^2 and each inner step
// costs O(d).
struct WhitenedPool {
  Matrix<double> scores;  // d x m, one whitened score per column
  Vector<double> mean;
};

WhitenedPool whiten(const Eigen::Ref<const Matrix<double>>& oob_scores, const ScoreMoments<double>& moments) {
  const auto L = moments.chol_lower.triangularView<Eigen::Lower>();
  WhitenedPool pool;
  pool.scores = L.solve(oob_scores.transpose());
  pool.mean = L.solve(moments.mean);
  return pool;
}

template <typename Sink>
void run_inner(const WhitenedPool& pool, double lambda, std::span<const double> shrink, Rng& rng, Sink&& sink) {
  const Eigen::Index d = pool.scores.rows();
  std::uniform_int_distribution<Eigen::Index> pick(0, pool.scores.cols() - 1);
  Vector<double> z = Vector<double>::Zero(d);
  const double keep = 1.0 - lambda;
  for (std::size_t i = 0; i < shrink.size(); ++i) {
    const Eigen::Index j = pick(rng);
    double t = 0.0;
    const double inv = 1.0 / shrink[i];
    for (Eigen::Index a = 0; a < d; ++a) {
      z(a) = lambda * pool.scores(a, j) + keep * z(a);
      const double diff = z(a) * inv - pool.mean(a);
      t += diff * diff;
    }
    sink(i, t);
  }
}

std::vector<double> shrink_factors(const BootstrapConfig& config, std::span<const double> k) {
  std::vector<double> shrink(static_cast<std::size_t>(config.horizon), 1.0);
  if (!config.naive) {
    if (k.size() < shrink.size()) throw InputError("inflation curve shorter than the horizon");
    for (std::size_t i = 0; i < shrink.size(); ++i) shrink[i] = std::sqrt(k[i]);
  }
  return shrink;
}

// Keeps the K largest values seen at each horizon index. The K-th largest of
// the pooled values is the ceil((1 - alpha) N) order statistic, and the
// union of per-worker tails yields the same multiset in any merge order.
class UpperTail {
 public:
  UpperTail(std::size_t horizon, std::size_t keep) : keep_(keep), heaps_(horizon) {
    for (auto& h : heaps_) h.reserve(keep);
  }

  void push(std::size_t i, double v) {
    auto& h = heaps_[i];
    if (h.size() < keep_) {
      h.push_back(v);
      std::push_heap(h.begin(), h.end(), std::greater<>{});
    } else if (v > h.front()) {
      std::pop_heap(h.begin(), h.end(), std::greater<>{});
      h.back() = v;
      std::push_heap(h.begin(), h.end(), std::greater<>{});
    }
  }

  void merge(const UpperTail& other) {
    for (std::size_t i = 0; i < heaps_.size(); ++i)
      for (double v : other.heaps_[i]) push(i, v);
  }

  // K-th largest value at index i.
  double kth(std::size_t i) const { return heaps_[i].front(); }

 private:
  std::size_t keep_;
  std::vector<std::vector<double>> heaps_;
};

template <typename Error>
[[noreturn]] void rethrow_annotated(const Error& e, int replicate) {
  throw Error("outer replicate " + std::to_string(replicate) + ": " + e.what());
}

}  // namespace

std::vector<double> inner_t_curve(const Eigen::Ref<const Matrix<double>>& oob_scores,
                                  const ScoreMoments<double>& outer_moments, const BootstrapConfig& config,
                                  std::span<const double> k, Rng& rng) {
  if (oob_scores.rows() == 0) throw InputError("inner_t_curve: no out-of-bag scores");
  if (oob_scores.cols() != outer_moments.dim()) throw InputError("inner_t_curve: score dimension mismatch");
  const std::vector<double> shrink = shrink_factors(config, k);
  const WhitenedPool pool = whiten(oob_scores, outer_moments);
  std::vector<double> curve(shrink.size());
  run_inner(pool, config.lambda, shrink, rng, [&curve](std::size_t i, double t) { curve[i] = t; });
  return curve;
}

double Calibration::cl_at(Eigen::Index i) const {
  if (i < 1) throw InputError("control limit index must be >= 1");
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(i), cl.size()) - 1;
  return cl[idx];
}

Calibration calibrate(const Dataset& data, const ModelSpec& spec, const BootstrapConfig& config) {
  Calibration cal;
  cal.warnings = config.validate();
  const Eigen::Index n = data.rows();
  if (n < 30) throw InputError("calibrate: need at least 30 training observations, got " + std::to_string(n));

  cal.spec = spec;
  cal.config = config;
  cal.n_train = n;
  cal.model = fit_model(spec, data);
  if (const auto* mlp = std::get_if<FittedMLP>(&cal.model); mlp && !mlp->converged) {
    cal.warnings.push_back("network fit did not reach the gradient tolerance (|grad| = " +
                           std::to_string(mlp->grad_norm) + ")");
  }
  const Matrix<double> full_scores = score_all(cal.model, data);
  const double epsilon = config.epsilon.value_or(default_epsilon<double>(
      [&] {
        const Vector<double> mean = full_scores.colwise().mean().transpose();
        const Matrix<double> c = full_scores.rowwise() - mean.transpose();
        return Matrix<double>((c.transpose() * c) / static_cast<double>(n));
      }()));
  cal.config.epsilon = epsilon;
  cal.moments = estimate_moments<double>(full_scores, epsilon);
  cal.k = k_curve(config.lambda, config.horizon, n);
  const std::vector<double> shrink = shrink_factors(cal.config, cal.k);

  const auto pooled = static_cast<std::int64_t>(config.outer) * config.inner;
  const auto keep = static_cast<std::size_t>(pooled - upper_rank(pooled, config.alpha) + 1);
  const auto horizon = static_cast<std::size_t>(config.horizon);
  const int threads = resolve_threads(config.threads);
  const auto workers = static_cast<std::size_t>(std::max(1, std::min(threads, config.outer)));
  std::vector<UpperTail> tails(workers, UpperTail(horizon, keep));
  std::vector<int> attempts(static_cast<std::size_t>(config.outer), 1);

  parallel_for(static_cast<std::size_t>(config.outer), threads, [&](std::size_t task, std::size_t worker) {
    const int b = static_cast<int>(task);
    try {
      const OuterDraw draw = draw_outer_nonempty(n, config.seed, task, config.max_redraws);
      attempts[task] = draw.attempts;
      const Dataset resample = data.subset(draw.resample);
      const ScoreModel refit = fit_model(spec, resample, &cal.model);
      const ScoreMoments<double> outer_moments = estimate_moments<double>(score_all(refit, resample), epsilon);
      const WhitenedPool pool = whiten(score_all(refit, data.subset(draw.oob)), outer_moments);
      UpperTail& tail = tails[worker];
      for (int j = 0; j < config.inner; ++j) {
        Rng rng = substream(config.seed, "inner", {task, static_cast<std::uint64_t>(j)});
        run_inner(pool, config.lambda, shrink, rng, [&tail](std::size_t i, double t) { tail.push(i, t); });
      }
    } catch (const ConditioningError& e) {
      rethrow_annotated(e, b);
    } catch (const DegenerateDesignError& e) {
      rethrow_annotated(e, b);
    } catch (const DivergenceError& e) {
      rethrow_annotated(e, b);
    } catch (const InputError& e) {
      rethrow_annotated(e, b);
    } catch (const NumericalError& e) {
      rethrow_annotated(e, b);
    }
  });

  for (std::size_t w = 1; w < tails.size(); ++w) tails[0].merge(tails[w]);
  cal.cl.resize(horizon);
  for (std::size_t i = 0; i < horizon; ++i) cal.cl[i] = tails[0].kth(i);

  for (std::size_t b = 0; b < attempts.size(); ++b)
    if (attempts[b] > 1)
      cal.warnings.push_back("outer replicate " + std::to_string(b) + ": empty out-of-bag set, redrawn " +
                             std::to_string(attempts[b] - 1) + " time(s)");
  return cal;
}

BaselineCalibration baseline_split_cl(const Dataset& data, const ModelSpec& spec, double split_fraction,
                                      double lambda, double alpha, std::optional<double> epsilon) {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw InputError("baseline: split fraction must lie in (0, 1)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("baseline: alpha must lie in (0, 1)");
  const Eigen::Index n = data.rows();
  const auto n_fit = static_cast<Eigen::Index>(std::floor(split_fraction * static_cast<double>(n)));
  const Eigen::Index n_holdout = n - n_fit;
  if (n_fit < 30 || n_holdout < 30) throw InputError("baseline: both splits need at least 30 observations");

  BaselineCalibration base;
  base.lambda = lambda;
  base.n_fit = n_fit;
  base.n_holdout = n_holdout;
  base.model = fit_model(spec, data.head(n_fit));
  const Matrix<double> scores = score_all(base.model, data.tail(n_holdout));
  Vector<double> mean = scores.colwise().mean().transpose();
  const Matrix<double> centered = scores.rowwise() - mean.transpose();
  Matrix<double> cov = (centered.transpose() * centered) / static_cast<double>(n_holdout);
  const double eps = epsilon.value_or(default_epsilon<double>(cov));
  base.moments = moments_from<double>(std::move(mean), std::move(cov), eps);

  auto state = MewmaState<double>::start(scores.cols(), lambda);
  std::vector<double> t(static_cast<std::size_t>(n_holdout));
  for (Eigen::Index i = 0; i < n_holdout; ++i) {
    advance<double>(state, scores.row(i).transpose());
    t[static_cast<std::size_t>(i)] = t2<double>(state.z, base.moments);
  }
  base.cl = quantile_upper(std::move(t), alpha);
  // At n_holdout <= 1/alpha the limit is the hold-out maximum or close to it.
  if (static_cast<double>(n_holdout) * alpha <= 1.0 + 1e-9) {
    std::ostringstream msg;
    msg << "split-sample limit uses " << n_holdout << " hold-out points, no more than 1/alpha = " << 1.0 / alpha
        << "; the upper-alpha quantile is unreliable";
    base.warnings.push_back(msg.str());
  }
  return base;
}

}  // namespace driftguard
