#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "driftguard/bootstrap.hpp"

namespace driftguard {

struct MonitorRecord {
  Eigen::Index i = 0;  // 1-based observation index
  double t2 = 0.0;
  double cl = 0.0;
  bool signal = false;  // t2 > cl
};

// Scores each stream row with `model`, runs the MEWMA from zero and compares
// T^2 (shrink 1) with cl_at(i).
std::vector<MonitorRecord> monitor_stream(const ScoreModel& model, const ScoreMoments<double>& moments,
                                          double lambda, const std::function<double(Eigen::Index)>& cl_at,
                                          const Dataset& stream);

std::vector<MonitorRecord> monitor(const Calibration& cal, const Dataset& stream);
std::vector<MonitorRecord> monitor(const BaselineCalibration& base, const Dataset& stream);

std::optional<Eigen::Index> first_signal(const std::vector<MonitorRecord>& records);

}  // namespace driftguard
