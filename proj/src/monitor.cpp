#include "driftguard/monitor.hpp"

namespace driftguard {

std::vector<MonitorRecord> monitor_stream(const ScoreModel& model, const ScoreMoments<double>& moments,
                                          double lambda, const std::function<double(Eigen::Index)>& cl_at,
                                          const Dataset& stream) {
  if (stream.features() != feature_dim(model))
    throw InputError("monitor: stream has " + std::to_string(stream.features()) + " predictor columns, model expects " +
                     std::to_string(feature_dim(model)));
  const Matrix<double> scores = score_all(model, stream);
  auto state = MewmaState<double>::start(scores.cols(), lambda);
  std::vector<MonitorRecord> out;
  out.reserve(static_cast<std::size_t>(stream.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    advance<double>(state, scores.row(r).transpose());
    MonitorRecord rec;
    rec.i = state.i;
    rec.t2 = t2<double>(state.z, moments);
    rec.cl = cl_at(rec.i);
    rec.signal = rec.t2 > rec.cl;
    out.push_back(rec);
  }
  return out;
}

std::vector<MonitorRecord> monitor(const Calibration& cal, const Dataset& stream) {
  return monitor_stream(cal.model, cal.moments, cal.config.lambda, [&cal](Eigen::Index i) { return cal.cl_at(i); },
                        stream);
}

std::vector<MonitorRecord> monitor(const BaselineCalibration& base, const Dataset& stream) {
  return monitor_stream(base.model, base.moments, base.lambda, [&base](Eigen::Index) { return base.cl; }, stream);
}

std::optional<Eigen::Index> first_signal(const std::vector<MonitorRecord>& records) {
  for (const auto& r : records)
    if (r.signal) return r.i;
  return std::nullopt;
}

}  // namespace driftguard
