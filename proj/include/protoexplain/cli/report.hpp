// report.hpp - JSON report layouts (see schema/ for the published schemas).
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "protoexplain/analysis.hpp"
#include "protoexplain/explain.hpp"

namespace protoexplain::report {

using Json = nlohmann::ordered_json;

inline constexpr int kReportVersion = 1;

Json scores_json(const ImportanceVector& v);
ImportanceVector scores_from_json(const Json& j);

Json strengths_json(const StrengthSet& s);

Json calibration_json(const CalibrationResult& result);
CalibrationResult calibration_from_json(const Json& j);

Json welch_json(const WelchResult& r);
Json summary_json(const Summary& s);

/// One prototype entry of a global-explanation report.
struct GlobalEntry {
  Index prototype = 0;
  int class_index = 0;
  std::optional<ImportanceVector> scores;  // empty when degenerate
};

std::vector<GlobalEntry> global_entries_from_json(const Json& report);

/// Pretty-printed with a trailing newline; identical input gives identical bytes.
void write_json(const Json& j, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace protoexplain::report
