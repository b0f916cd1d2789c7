// explain.hpp - local and global characteristic importance, and strength calibration.
//
// A local score is the similarity drop g - g_hat for one image, where g_hat
// is taken at the latent location that prototype j matched on the unmodified
// image. A global score is the g-weighted mean of local scores over a set.
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protoexplain/image_mods.hpp"
#include "protoexplain/proto_engine.hpp"

namespace protoexplain {

/// One score per characteristic, indexed by index_of(Characteristic).
using ImportanceVector = std::array<double, kNumCharacteristics>;

/// Strength per characteristic.
using StrengthSet = std::array<double, kNumCharacteristics>;

inline constexpr StrengthSet kZeroStrengths{0.0, 0.0, 0.0, 0.0, 0.0};

Modification spec_for(const StrengthSet& strengths, Characteristic c);

/// Everything needed to score, modify and rescore images.
struct ExplainContext {
  const FeatureExtractor& extractor;
  const PrototypeSet& prototypes;
  StrengthSet strengths = kZeroStrengths;
};

/// Latents for one image: the original plus one per modified copy.
struct ImageLatents {
  LatentMap original;
  std::array<LatentMap, kNumCharacteristics> modified;
};

struct LocalExplanation {
  Index prototype = 0;
  LatentLocation location;  // argmin on the original image
  double g = 0.0;
  std::array<double, kNumCharacteristics> g_hat{};
  ImportanceVector scores{};
};

struct Contribution {
  double g = 0.0;
  ImportanceVector local{};
};

struct GlobalExplanation {
  Index prototype = 0;
  ImportanceVector scores{};
  double weight_sum = 0.0;
  std::vector<Contribution> contributions;  // input order
};

/// Latent-level core of local_importance.
LocalExplanation local_from_latents(const ImageLatents& latents, const PrototypeSet& protos, Index j);

LocalExplanation local_importance(const Image& image, Index j, const ExplainContext& ctx);

/// g-weighted mean of the contributions. Throws DegenerateWeightError when
/// the weights do not sum to a positive value.
GlobalExplanation fold_global(Index j, std::vector<Contribution> contributions);

GlobalExplanation global_importance(std::span<const Image> images, Index j, const ExplainContext& ctx);

/// Extracts the original and all five modified latents of every image:
/// exactly six extractor passes per image.
std::vector<ImageLatents> extract_latent_sets(std::span<const Image> images, const ExplainContext& ctx);

/// Outcome of explaining one prototype inside a batch; `explanation` is
/// empty when its weights were degenerate.
struct PrototypeOutcome {
  Index prototype = 0;
  std::optional<GlobalExplanation> explanation;
  std::string error;
};

/// One outcome per prototype. Latents are computed once per image and reused
/// across prototypes.
std::vector<PrototypeOutcome> explain_all(std::span<const Image> images, const ExplainContext& ctx);
std::vector<PrototypeOutcome> explain_all_latents(std::span<const ImageLatents> latents,
                                                  const PrototypeSet& protos);

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationOptions {
  double target = 0.0002;
  double tolerance = 0.01;  // relative to target
  int max_iter = 40;
  std::optional<double> upper;  // default per characteristic
};

/// Search upper bound per characteristic (contrast/saturation 1, hue 0.5
/// turns, shape 10 px, texture h 20).
double default_upper_bound(Characteristic c);

struct CalibrationEntry {
  Characteristic characteristic = Characteristic::Contrast;
  double strength = 0.0;
  double achieved = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;  // why the search failed, empty on success
};

struct CalibrationResult {
  double target = 0.0;
  double tolerance = 0.0;
  std::vector<CalibrationEntry> entries;

  const CalibrationEntry* find(Characteristic c) const;
  bool all_converged() const;
};

/// Bisection on a response curve over [0, upper]. Throws CalibrationError
/// when response(upper) does not reach the target for a positive target.
CalibrationEntry bisect_strength(Characteristic c, const std::function<double(double)>& response, double upper,
                                 const CalibrationOptions& options);

CalibrationEntry calibrate(Characteristic c, std::span<const Image> images, const FeatureExtractor& extractor,
                           const CalibrationOptions& options = {});

/// Calibrates every characteristic in order. Entries whose search is not
/// bracketed are included with converged = false.
CalibrationResult calibrate_all(std::span<const Image> images, const FeatureExtractor& extractor,
                                const CalibrationOptions& options = {});

}  // namespace protoexplain
