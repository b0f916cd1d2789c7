// config.hpp - run configuration shared by the subcommands, plus the
// key=value config file reader.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "protoexplain/errors.hpp"
#include "protoexplain/explain.hpp"
#include "protoexplain/reference_extractor.hpp"

namespace protoexplain::cli {

/// Bad flags, missing inputs, inconsistent files. Maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitUsage = 2, kExitNotConverged = 3 };

/// Contrast, saturation, hue and texture defaults; shape has no fixed
/// default and is calibrated when not given.
inline constexpr double kDefaultContrast = 0.45;
inline constexpr double kDefaultSaturation = 0.7;
inline constexpr double kDefaultHue = 0.1;
inline constexpr double kDefaultTexture = 4.0;

struct RunConfig {
  std::filesystem::path image_dir;
  std::filesystem::path image_file;
  std::filesystem::path prototype_dir;
  std::filesystem::path latent_dir;
  std::filesystem::path output_dir;
  std::filesystem::path calibration_file;

  std::uint64_t extractor_seed = ReferenceExtractor::kDefaultSeed;
  long depth = ReferenceExtractor::kDefaultDepth;

  double target = 0.0002;
  double tolerance = 0.01;
  int max_iter = 40;
  double tau = 0.15;

  std::array<std::optional<double>, kNumCharacteristics> overrides;

  bool use_latents() const { return !latent_dir.empty(); }
  CalibrationOptions calibration_options() const;
  /// Throws UsageError when a numeric field is out of its valid range.
  void validate() const;
};

/// Parses `key=value` lines (blank lines and lines starting with '#' are
/// skipped) into `--key=value` tokens.
std::vector<std::string> read_config_tokens(const std::filesystem::path& path);

/// Replaces every `--config FILE` / `--config=FILE` argument by the file's
/// tokens, placed directly after the subcommand name (args[0]) so explicit
/// command-line flags take precedence.
std::vector<std::string> expand_config_args(const std::vector<std::string>& args);

/// PNG files of a directory, sorted by file name.
std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

}  // namespace protoexplain::cli
