#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "insideout/datagen.hpp"
#include "insideout/detect.hpp"
#include "insideout/experiment.hpp"
#include "insideout/regress.hpp"
#include "insideout/status.hpp"

namespace insideout {

/// Version of the JSON and CSV layouts written by this library.
inline constexpr int kFormatVersion = 1;

/// JSON helpers. Readers throw ParseError on malformed input or unknown
/// keys; doubles round-trip exactly.
std::string dataset_spec_to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(std::string_view text);

std::string detector_to_json(const DetectorModel& model);
DetectorModel detector_from_json(std::string_view text);
std::string detectors_to_json(std::span<const DetectorModel> models);
std::vector<DetectorModel> detectors_from_json(std::string_view text);

std::string profile_to_json(const Profile& profile);
Profile profile_from_json(std::string_view text);

/// Variant name, hyperparameters and the selection report.
std::string model_summary_json(const RegressionModel& model);

/// Every result-affecting field; `jobs` is left out so the text is
/// identical across worker counts.
std::string experiment_config_to_json(const ExperimentConfig& cfg);
/// Overlays the keys present in `text` onto `base`. Accepts `jobs`.
ExperimentConfig experiment_config_from_json(std::string_view text,
                                             const ExperimentConfig& base = {});

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace insideout
