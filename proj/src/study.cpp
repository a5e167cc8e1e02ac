#include "driftguard/study.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "driftguard/io.hpp"
#include "driftguard/monitor.hpp"

namespace driftguard {

using nlohmann::json;

std::string to_string(Scenario s) { return s == Scenario::linear ? "linear" : "oscillator"; }

Scenario parse_scenario(const std::string& text) {
  if (text == "linear") return Scenario::linear;
  if (text == "oscillator") return Scenario::oscillator;
  throw InputError("unknown scenario '" + text + "' (expected linear or oscillator)");
}

std::string to_string(OscStream s) { return s == OscStream::resample ? "resample" : "continuation"; }

OscStream parse_osc_stream(const std::string& text) {
  if (text == "resample") return OscStream::resample;
  if (text == "continuation") return OscStream::continuation;
  throw InputError("unknown oscillator stream mode '" + text + "' (expected resample or continuation)");
}

json StudyConfig::to_json() const {
  return {{"scenario", to_string(scenario)},
          {"replicates", replicates},
          {"n_train", n_train},
          {"stream_length", stream_length},
          {"shift_at", shift_at},
          {"model_kind", driftguard::to_string(model.kind)},
          {"gamma", model.gamma},
          {"train", driftguard::to_json(model.train)},
          {"bootstrap", driftguard::to_json(boot)},
          {"split_fraction", split_fraction},
          {"baseline", baseline},
          {"naive", naive},
          {"control_arm", control_arm},
          {"sigma", sigma},
          {"osc_params", driftguard::to_json(osc)},
          {"state0", driftguard::to_json(state0)},
          {"osc_stream", driftguard::to_string(osc_stream)},
          {"cv_folds", cv_folds},
          {"seed", seed}};
}

namespace {

std::uint64_t derived_seed(std::uint64_t seed, std::string_view label, int replicate) {
  Rng rng = substream(seed, label, {static_cast<std::uint64_t>(replicate)});
  return rng();
}

OscillatorGenConfig oscillator_base(const StudyConfig& cfg) {
  OscillatorGenConfig g;
  g.params = cfg.osc;
  g.state0 = cfg.state0;
  g.sigma = cfg.sigma;
  g.grid_n = cfg.n_train;
  return g;
}

void accumulate(const std::vector<MonitorRecord>& records, std::vector<int>& counts) {
  for (std::size_t k = 0; k < records.size(); ++k)
    if (records[k].signal) ++counts[k];
}

bool signalled_before(const std::vector<MonitorRecord>& records, Eigen::Index index) {
  return std::any_of(records.begin(), records.end(), [index](const MonitorRecord& r) { return r.signal && r.i < index; });
}

std::vector<double> rates(const std::vector<int>& counts, int replicates) {
  std::vector<double> out(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    out[k] = static_cast<double>(counts[k]) / static_cast<double>(replicates);
  return out;
}

json optional_indices(const std::vector<std::optional<Eigen::Index>>& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back(x ? json(*x) : json(nullptr));
  return out;
}

StudyResult run_study(const StudyConfig& cfg, bool shifted_stream) {
  if (cfg.replicates < 1) throw InputError("study: replicates must be >= 1");
  if (cfg.stream_length < 1) throw InputError("study: stream length must be >= 1");
  StudyResult res;
  res.replicates = cfg.replicates;
  res.meta = cfg.to_json();
  const auto m = static_cast<std::size_t>(cfg.stream_length);
  res.signals_bootstrap.assign(m, 0);
  if (cfg.baseline) res.signals_baseline.assign(m, 0);
  if (cfg.naive) res.signals_naive.assign(m, 0);

  for (int r = 0; r < cfg.replicates; ++r) {
    const Dataset train = study_training_data(cfg, r);
    const Dataset stream = study_stream(cfg, r, shifted_stream);
    BootstrapConfig boot = cfg.boot;
    boot.seed = derived_seed(cfg.seed, "calibration", r);
    boot.naive = false;
    const Calibration cal = calibrate(train, cfg.model, boot);
    for (const auto& w : cal.warnings) res.warnings.push_back("replicate " + std::to_string(r) + ": " + w);
    const auto rec = monitor(cal, stream);
    accumulate(rec, res.signals_bootstrap);
    res.first_bootstrap.push_back(first_signal(rec));
    res.pre_shift_bootstrap.push_back(signalled_before(rec, cfg.shift_at));
    res.cl_bootstrap.push_back(cal.cl);

    if (cfg.naive) {
      boot.naive = true;
      const Calibration naive = calibrate(train, cfg.model, boot);
      const auto nrec = monitor(naive, stream);
      accumulate(nrec, res.signals_naive);
      res.first_naive.push_back(first_signal(nrec));
      res.pre_shift_naive.push_back(signalled_before(nrec, cfg.shift_at));
      res.cl_naive.push_back(naive.cl);
    }
    if (cfg.baseline) {
      const BaselineCalibration base =
          baseline_split_cl(train, cfg.model, cfg.split_fraction, cfg.boot.lambda, cfg.boot.alpha, cfg.boot.epsilon);
      if (r == 0)
        for (const auto& w : base.warnings) res.warnings.push_back("baseline: " + w);
      const auto brec = monitor(base, stream);
      accumulate(brec, res.signals_baseline);
      res.first_baseline.push_back(first_signal(brec));
      res.cl_baseline.push_back(base.cl);
    }
    if (cfg.cv_folds > 0) {
      if (cfg.model.kind != ModelKind::mlp) throw InputError("study: CV R^2 is only computed for the mlp model");
      res.cv_r2.push_back(cv_r2(train, cfg.model.gamma, cfg.model.train, cfg.cv_folds,
                                derived_seed(cfg.seed, "cv", r)));
    }
  }
  res.far_bootstrap = rates(res.signals_bootstrap, cfg.replicates);
  res.far_baseline = rates(res.signals_baseline, cfg.replicates);
  res.far_naive = rates(res.signals_naive, cfg.replicates);
  return res;
}

}  // namespace

Dataset study_training_data(const StudyConfig& cfg, int replicate) {
  const std::uint64_t seed = derived_seed(cfg.seed, "data", replicate);
  if (cfg.scenario == Scenario::linear) {
    LinearGenConfig g;
    g.n = cfg.n_train;
    g.mode = LinearMode::single;
    g.seed = seed;
    return gen_linear(g);
  }
  OscillatorGenConfig g = oscillator_base(cfg);
  g.n = cfg.n_train;
  g.seed = seed;
  return gen_oscillator(g);
}

Dataset study_stream(const StudyConfig& cfg, int replicate, bool shifted) {
  const std::uint64_t seed = derived_seed(cfg.seed, "stream", replicate);
  const Eigen::Index shift_row = shifted ? cfg.shift_at - 1 : -1;
  if (shifted && (cfg.shift_at < 1 || cfg.shift_at > cfg.stream_length))
    throw InputError("study: shift_at must lie in [1, stream_length]");
  if (cfg.scenario == Scenario::linear) {
    LinearGenConfig g;
    g.n = cfg.stream_length;
    g.mode = shifted ? LinearMode::mixture : LinearMode::single;
    g.shift_at = shifted ? shift_row : 0;
    g.seed = seed;
    return gen_linear(g);
  }
  OscillatorGenConfig g = oscillator_base(cfg);
  g.n = cfg.stream_length;
  g.random_times = cfg.osc_stream == OscStream::resample;
  g.skip = cfg.osc_stream == OscStream::continuation ? cfg.n_train : 0;
  g.shift_at = shift_row;
  g.seed = seed;
  return gen_oscillator(g);
}

StudyResult far_study(const StudyConfig& cfg) { return run_study(cfg, false); }

StudyResult detect_study(const StudyConfig& cfg) { return run_study(cfg, !cfg.control_arm); }

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::optional<double> median_first_signal(const std::vector<std::optional<Eigen::Index>>& firsts) {
  if (firsts.empty()) return std::nullopt;
  constexpr double never = std::numeric_limits<double>::infinity();
  std::vector<double> v;
  for (const auto& f : firsts) v.push_back(f ? static_cast<double>(*f) : never);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double med = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  if (!std::isfinite(med)) return std::nullopt;
  return med;
}

json StudyResult::summary() const {
  json j;
  j["meta"] = meta;
  j["replicates"] = replicates;
  j["mean_far_bootstrap"] = mean_of(far_bootstrap);
  if (!far_baseline.empty()) j["mean_far_baseline"] = mean_of(far_baseline);
  if (!far_naive.empty()) j["mean_far_naive"] = mean_of(far_naive);
  const auto med = [](const auto& v) { const auto m = median_first_signal(v); return m ? json(*m) : json(nullptr); };
  j["first_signal_bootstrap"] = optional_indices(first_bootstrap);
  j["median_first_signal_bootstrap"] = med(first_bootstrap);
  if (!first_naive.empty()) {
    j["first_signal_naive"] = optional_indices(first_naive);
    j["median_first_signal_naive"] = med(first_naive);
  }
  if (!first_baseline.empty()) {
    j["first_signal_baseline"] = optional_indices(first_baseline);
    j["median_first_signal_baseline"] = med(first_baseline);
  }
  const auto count_true = [](const std::vector<bool>& v) { return std::count(v.begin(), v.end(), true); };
  j["pre_shift_signal_fraction_bootstrap"] =
      replicates > 0 ? static_cast<double>(count_true(pre_shift_bootstrap)) / replicates : 0.0;
  const auto silent = std::count_if(first_bootstrap.begin(), first_bootstrap.end(), [](const auto& f) { return !f; });
  j["no_signal_fraction_bootstrap"] = replicates > 0 ? static_cast<double>(silent) / replicates : 0.0;
  if (!cv_r2.empty()) {
    j["cv_r2"] = cv_r2;
    j["mean_cv_r2"] = mean_of(cv_r2);
  }
  if (!cl_baseline.empty()) j["cl_baseline"] = cl_baseline;
  j["warnings"] = warnings;
  return j;
}

}  // namespace driftguard
