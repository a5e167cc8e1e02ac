#include "driftguard/score_model.hpp"

#include "driftguard/errors.hpp"

namespace driftguard {

std::string to_string(ModelKind kind) { return kind == ModelKind::linear ? "linear" : "mlp"; }

ModelKind parse_model_kind(const std::string& text) {
  if (text == "linear" || text == "ridge") return ModelKind::linear;
  if (text == "mlp") return ModelKind::mlp;
  throw InputError("unknown model kind '" + text + "' (expected linear or mlp)");
}

ScoreModel fit_model(const ModelSpec& spec, const Dataset& data, const ScoreModel* warm) {
  if (spec.kind == ModelKind::linear) return fit_ridge(data, spec.gamma);
  const FittedMLP* start = warm != nullptr ? std::get_if<FittedMLP>(warm) : nullptr;
  return fit_mlp(data, spec.gamma, spec.train, start);
}

Matrix<double> score_all(const ScoreModel& model, const Dataset& data) {
  return std::visit(
      [&data](const auto& m) -> Matrix<double> {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, FittedMLP>) {
          return scores_mlp(m, data);
        } else {
          return scores_linear(m, data);
        }
      },
      model);
}

Vector<double> score_one(const ScoreModel& model, const Eigen::Ref<const Vector<double>>& x, double y) {
  return std::visit(
      [&](const auto& m) -> Vector<double> {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, FittedMLP>) {
          return score_mlp(m, x, y);
        } else {
          return score_linear(m, x, y);
        }
      },
      model);
}

Eigen::Index score_dim(const ScoreModel& model) {
  return std::visit([](const auto& m) { return m.score_dim(); }, model);
}

Eigen::Index feature_dim(const ScoreModel& model) {
  return std::visit([](const auto& m) { return m.feature_dim(); }, model);
}

ModelKind kind_of(const ScoreModel& model) {
  return std::holds_alternative<FittedMLP>(model) ? ModelKind::mlp : ModelKind::linear;
}

}  // namespace driftguard
