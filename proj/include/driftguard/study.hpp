#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "driftguard/bootstrap.hpp"
#include "driftguard/datagen.hpp"

namespace driftguard {

enum class Scenario { linear, oscillator };

// How an oscillator monitoring stream is sampled. resample: independent
// uniform times on the training window. continuation: the regular grid
// continued past the end of the training trajectory.
enum class OscStream { resample, continuation };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& text);
std::string to_string(OscStream s);
OscStream parse_osc_stream(const std::string& text);

// Replicated monitoring experiment. Each replicate draws fresh training data,
// calibrates, and monitors a fresh stream; randomness comes from the master
// seed through the "data", "calibration" and "stream" substreams.
struct StudyConfig {
  Scenario scenario = Scenario::linear;
  int replicates = 20;
  Eigen::Index n_train = 2000;
  Eigen::Index stream_length = 1000;
  // 1-based index of the first post-shift observation; detect-study only.
  Eigen::Index shift_at = 201;
  ModelSpec model;
  BootstrapConfig boot;
  double split_fraction = 0.5;
  bool baseline = true;
  bool naive = false;
  // Detect-study: monitor a stream with no shift instead.
  bool control_arm = false;
  // Oscillator scenario.
  double sigma = 0.03;
  OscParams osc;
  OscState state0{1.0, 0.0, 0.0, 0.0, 0.0};
  OscStream osc_stream = OscStream::resample;
  // k-fold CV R^2 of the model per replicate; 0 disables.
  int cv_folds = 0;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
};

struct StudyResult {
  // Pointwise signal counts over replicates, one entry per stream index.
  std::vector<int> signals_bootstrap, signals_baseline, signals_naive;
  std::vector<double> far_bootstrap, far_baseline, far_naive;
  std::vector<std::optional<Eigen::Index>> first_bootstrap, first_baseline, first_naive;
  // Whether the bootstrap chart signalled before shift_at.
  std::vector<bool> pre_shift_bootstrap, pre_shift_naive;
  std::vector<double> cv_r2;
  std::vector<std::vector<double>> cl_bootstrap, cl_naive;  // per replicate
  std::vector<double> cl_baseline;
  std::vector<std::string> warnings;
  nlohmann::json meta;
  int replicates = 0;

  nlohmann::json summary() const;
};

Dataset study_training_data(const StudyConfig& cfg, int replicate);
// shifted = false gives an in-control stream.
Dataset study_stream(const StudyConfig& cfg, int replicate, bool shifted);

// No-shift streams; far_* curves are signals / replicates.
StudyResult far_study(const StudyConfig& cfg);
// Streams with the shift at cfg.shift_at (or none when control_arm).
StudyResult detect_study(const StudyConfig& cfg);

double mean_of(const std::vector<double>& v);
// Median first-signal index with "no signal" ordered after every index;
// nullopt when the median replicate never signalled.
std::optional<double> median_first_signal(const std::vector<std::optional<Eigen::Index>>& firsts);

}  // namespace driftguard
