#include "protoexplain/cli/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "protoexplain/cli/config.hpp"

namespace protoexplain::report {

Json scores_json(const ImportanceVector& v) {
  Json j = Json::object();
  for (auto c : kAllCharacteristics) j[std::string(name_of(c))] = v[index_of(c)];
  return j;
}

ImportanceVector scores_from_json(const Json& j) {
  ImportanceVector v{};
  for (auto c : kAllCharacteristics) {
    const std::string key(name_of(c));
    if (!j.contains(key) || !j[key].is_number()) throw cli::UsageError("scores are missing '" + key + "'");
    v[index_of(c)] = j[key].get<double>();
  }
  return v;
}

Json strengths_json(const StrengthSet& s) { return scores_json(s); }

Json calibration_json(const CalibrationResult& result) {
  Json j;
  j["target"] = result.target;
  j["tolerance"] = result.tolerance;
  j["all_converged"] = result.all_converged();
  Json entries = Json::array();
  for (const auto& e : result.entries) {
    Json x;
    x["characteristic"] = std::string(name_of(e.characteristic));
    x["strength"] = e.strength;
    x["achieved"] = e.achieved;
    x["iterations"] = e.iterations;
    x["converged"] = e.converged;
    if (!e.message.empty()) x["message"] = e.message;
    entries.push_back(std::move(x));
  }
  j["entries"] = std::move(entries);
  return j;
}

CalibrationResult calibration_from_json(const Json& j) {
  try {
    const Json& body = j.contains("calibration") ? j.at("calibration") : j;
    CalibrationResult r;
    r.target = body.at("target").get<double>();
    r.tolerance = body.at("tolerance").get<double>();
    for (const auto& x : body.at("entries")) {
      CalibrationEntry e;
      const auto name = x.at("characteristic").get<std::string>();
      const auto c = parse_characteristic(name);
      if (!c) throw cli::UsageError("unknown characteristic '" + name + "' in calibration");
      e.characteristic = *c;
      e.strength = x.at("strength").get<double>();
      e.achieved = x.at("achieved").get<double>();
      e.iterations = x.at("iterations").get<int>();
      e.converged = x.at("converged").get<bool>();
      if (x.contains("message")) e.message = x.at("message").get<std::string>();
      r.entries.push_back(e);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw cli::UsageError(std::string("malformed calibration JSON: ") + e.what());
  }
}

Json welch_json(const WelchResult& r) {
  Json j;
  // JSON has no infinity; a zero-variance split with distinct means is "inf".
  if (std::isfinite(r.t)) {
    j["t"] = r.t;
  } else {
    j["t"] = r.t > 0 ? "inf" : "-inf";
  }
  j["df"] = r.df;
  j["p"] = r.p;
  j["n_a"] = r.n_a;
  j["n_b"] = r.n_b;
  j["mean_a"] = r.mean_a;
  j["mean_b"] = r.mean_b;
  j["var_a"] = r.var_a;
  j["var_b"] = r.var_b;
  return j;
}

Json summary_json(const Summary& s) {
  Json j;
  j["min"] = s.min;
  j["q1"] = s.q1;
  j["median"] = s.median;
  j["q3"] = s.q3;
  j["max"] = s.max;
  j["mean"] = s.mean;
  j["count"] = s.count;
  j["whisker_low"] = s.whisker_low;
  j["whisker_high"] = s.whisker_high;
  return j;
}

std::vector<GlobalEntry> global_entries_from_json(const Json& report) {
  try {
    if (report.value("kind", std::string()) != "global_explanations") {
      throw cli::UsageError("not a global explanation report");
    }
    std::vector<GlobalEntry> out;
    for (const auto& p : report.at("prototypes")) {
      GlobalEntry e;
      e.prototype = p.at("index").get<Index>();
      e.class_index = p.at("class").get<int>();
      if (!p.at("scores").is_null()) e.scores = scores_from_json(p.at("scores"));
      out.push_back(e);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw cli::UsageError(std::string("malformed explanation report: ") + e.what());
  }
}

void write_json(const Json& j, const std::filesystem::path& path) { write_text(j.dump(2) + "\n", path); }

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw cli::UsageError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw cli::UsageError(path.string() + ": " + e.what());
  }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace protoexplain::report
