#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "rvlab/mc_lab.hpp"

namespace rvlab {

using Json = nlohmann::ordered_json;

/// 12 significant digits, the format of every printed statistic.
std::string format_sig(double x, int digits = 12);

Json model_to_json(const ModelSpec& model);
ModelSpec model_from_json(const Json& j);

Json config_to_json(const ExperimentConfig& config);
/// Throws std::invalid_argument naming the offending key.
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// The "run" member holds the timestamp and wall time; everything else is
/// a pure function of the config.
Json report_to_json(const ExperimentReport& report);
std::string report_to_csv(const ExperimentReport& report);

/// Removes the run block (JSON) or the run comment line (CSV).
Json strip_run_info(Json j);
std::string strip_run_info(const std::string& csv);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace rvlab
