#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftguard/bootstrap.hpp"
#include "driftguard/datagen.hpp"
#include "driftguard/monitor.hpp"

namespace driftguard {

inline constexpr const char* kCalibrationVersion = "driftguard-cal/1";

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Header `x1,...,xp,y`, one observation per line, LF endings.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(const std::filesystem::path& path);

void write_monitor_csv(const std::filesystem::path& path, const std::vector<MonitorRecord>& records);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

nlohmann::json to_json(const ScoreModel& model);
ScoreModel model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MlpTrainConfig& cfg);
nlohmann::json to_json(const BootstrapConfig& cfg);
nlohmann::json to_json(const OscParams& p);
nlohmann::json to_json(const OscState& s);

nlohmann::json calibration_to_json(const Calibration& cal);
// Validates the version field and array shapes; throws InputError.
Calibration calibration_from_json(const nlohmann::json& j);

}  // namespace driftguard
