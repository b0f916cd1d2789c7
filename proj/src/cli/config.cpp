#include "protoexplain/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace protoexplain::cli {

namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace

CalibrationOptions RunConfig::calibration_options() const {
  CalibrationOptions o;
  o.target = target;
  o.tolerance = tolerance;
  o.max_iter = max_iter;
  return o;
}

void RunConfig::validate() const {
  if (!(target >= 0.0)) throw UsageError("--target must be >= 0");
  if (!(tolerance >= 0.0)) throw UsageError("--tol must be >= 0");
  if (max_iter < 1) throw UsageError("--max-iter must be >= 1");
  if (!(tau >= 0.0)) throw UsageError("--tau must be >= 0");
  if (depth < 1) throw UsageError("--depth must be >= 1");
  for (auto c : kAllCharacteristics) {
    const auto& o = overrides[index_of(c)];
    if (o && !std::isfinite(*o)) throw UsageError("strength for " + std::string(name_of(c)) + " must be finite");
  }
}

std::vector<std::string> read_config_tokens(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

std::vector<std::string> expand_config_args(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::vector<std::string> from_files;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    std::filesystem::path file;
    if (a == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file argument");
      file = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      file = a.substr(9);
    } else {
      rest.push_back(a);
      continue;
    }
    const auto tokens = read_config_tokens(file);
    from_files.insert(from_files.end(), tokens.begin(), tokens.end());
  }
  // File values go right after the subcommand name; the parser keeps the last
  // occurrence of an option, so explicit flags win.
  const auto at = rest.empty() ? rest.end() : rest.begin() + 1;
  rest.insert(at, from_files.begin(), from_files.end());
  return rest;
}

std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw UsageError("image directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace protoexplain::cli
