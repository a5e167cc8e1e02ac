#pragma once

#include <string>
#include <variant>

#include "driftguard/linmodel.hpp"
#include "driftguard/nnmodel.hpp"

namespace driftguard {

enum class ModelKind { linear, mlp };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

// Everything needed to refit a model with fixed hyperparameters.
struct ModelSpec {
  ModelKind kind = ModelKind::linear;
  double gamma = 0.1;
  MlpTrainConfig train;
};

using ScoreModel = std::variant<FittedLinearModel<double>, FittedMLP>;

// `warm` seeds the optimizer for iterative models; closed-form fits ignore it.
ScoreModel fit_model(const ModelSpec& spec, const Dataset& data, const ScoreModel* warm = nullptr);

// One score vector per row of `data`.
Matrix<double> score_all(const ScoreModel& model, const Dataset& data);

Vector<double> score_one(const ScoreModel& model, const Eigen::Ref<const Vector<double>>& x, double y);

Eigen::Index score_dim(const ScoreModel& model);
Eigen::Index feature_dim(const ScoreModel& model);
ModelKind kind_of(const ScoreModel& model);

}  // namespace driftguard
