#include "protoexplain/explain.hpp"

#include <cmath>
#include <sstream>

#include "protoexplain/errors.hpp"
#include "protoexplain/parallel.hpp"

namespace protoexplain {

Modification spec_for(const StrengthSet& strengths, Characteristic c) {
  return Modification{c, strengths[index_of(c)]};
}

LocalExplanation local_from_latents(const ImageLatents& latents, const PrototypeSet& protos, Index j) {
  if (j < 0 || j >= protos.size()) throw BoundsError("prototype index " + std::to_string(j) + " out of range");
  const ActivationMap map = activation_map(latents.original, protos.prototype(j));
  LocalExplanation out;
  out.prototype = j;
  out.location = map.argmin;
  out.g = similarity(map.min_distance, protos.epsilon());
  for (auto c : kAllCharacteristics) {
    const std::size_t i = index_of(c);
    out.g_hat[i] = score_latent_at(latents.modified[i], protos, j, out.location);
    out.scores[i] = out.g - out.g_hat[i];
  }
  return out;
}

namespace {

ImageLatents extract_latent_set(const Image& image, const ExplainContext& ctx) {
  ImageLatents out;
  out.original = ctx.extractor.extract(image);
  for (auto c : kAllCharacteristics) {
    out.modified[index_of(c)] = ctx.extractor.extract(apply(spec_for(ctx.strengths, c), image));
  }
  return out;
}

void check_image(const Image& image, const FeatureExtractor& extractor) {
  if (image.height() < extractor.min_input_size() || image.width() < extractor.min_input_size()) {
    throw DimensionError("image is below the extractor minimum size");
  }
}

}  // namespace

LocalExplanation local_importance(const Image& image, Index j, const ExplainContext& ctx) {
  check_image(image, ctx.extractor);
  return local_from_latents(extract_latent_set(image, ctx), ctx.prototypes, j);
}

GlobalExplanation fold_global(Index j, std::vector<Contribution> contributions) {
  if (contributions.empty()) throw ArgumentError("global importance needs at least one image");
  GlobalExplanation out;
  out.prototype = j;
  ImportanceVector weighted{};
  for (const auto& c : contributions) {
    out.weight_sum += c.g;
    for (std::size_t i = 0; i < kNumCharacteristics; ++i) weighted[i] += c.local[i] * c.g;
  }
  if (!(out.weight_sum > 0.0)) {
    std::ostringstream msg;
    msg << "prototype " << j << ": similarity weights sum to " << out.weight_sum
        << ", global importance is undefined";
    throw DegenerateWeightError(msg.str());
  }
  for (std::size_t i = 0; i < kNumCharacteristics; ++i) out.scores[i] = weighted[i] / out.weight_sum;
  out.contributions = std::move(contributions);
  return out;
}

std::vector<ImageLatents> extract_latent_sets(std::span<const Image> images, const ExplainContext& ctx) {
  for (const auto& img : images) check_image(img, ctx.extractor);
  std::vector<ImageLatents> out(images.size());
  parallel_for(images.size(), [&](std::size_t k) { out[k] = extract_latent_set(images[k], ctx); });
  return out;
}

GlobalExplanation global_importance(std::span<const Image> images, Index j, const ExplainContext& ctx) {
  if (images.empty()) throw ArgumentError("global importance needs at least one image");
  if (j < 0 || j >= ctx.prototypes.size()) throw BoundsError("prototype index " + std::to_string(j) + " out of range");
  const auto latents = extract_latent_sets(images, ctx);
  std::vector<Contribution> contributions;
  contributions.reserve(latents.size());
  for (const auto& l : latents) {
    const auto local = local_from_latents(l, ctx.prototypes, j);
    contributions.push_back({local.g, local.scores});
  }
  return fold_global(j, std::move(contributions));
}

std::vector<PrototypeOutcome> explain_all_latents(std::span<const ImageLatents> latents, const PrototypeSet& protos) {
  if (latents.empty()) throw ArgumentError("explain_all needs at least one image");
  const auto P = static_cast<std::size_t>(protos.size());
  std::vector<PrototypeOutcome> out(P);
  parallel_for(P, [&](std::size_t j) {
    const auto jj = static_cast<Index>(j);
    std::vector<Contribution> contributions;
    contributions.reserve(latents.size());
    for (const auto& l : latents) {
      const auto local = local_from_latents(l, protos, jj);
      contributions.push_back({local.g, local.scores});
    }
    out[j].prototype = jj;
    try {
      out[j].explanation = fold_global(jj, std::move(contributions));
    } catch (const DegenerateWeightError& e) {
      out[j].error = e.what();
    }
  });
  return out;
}

std::vector<PrototypeOutcome> explain_all(std::span<const Image> images, const ExplainContext& ctx) {
  if (images.empty()) throw ArgumentError("explain_all needs at least one image");
  const auto latents = extract_latent_sets(images, ctx);
  return explain_all_latents(latents, ctx.prototypes);
}

// ---------------------------------------------------------------------------

double default_upper_bound(Characteristic c) {
  switch (c) {
    case Characteristic::Contrast:
    case Characteristic::Saturation:
      return 1.0;
    case Characteristic::Hue:
      return 0.5;
    case Characteristic::Shape:
      return 10.0;
    case Characteristic::Texture:
      return 20.0;
  }
  return 1.0;
}

const CalibrationEntry* CalibrationResult::find(Characteristic c) const {
  for (const auto& e : entries) {
    if (e.characteristic == c) return &e;
  }
  return nullptr;
}

bool CalibrationResult::all_converged() const {
  for (const auto& e : entries) {
    if (!e.converged) return false;
  }
  return !entries.empty();
}

CalibrationEntry bisect_strength(Characteristic c, const std::function<double(double)>& response, double upper,
                                 const CalibrationOptions& options) {
  if (!(options.target >= 0.0) || !std::isfinite(options.target)) throw ArgumentError("calibration target must be >= 0");
  if (!(options.tolerance >= 0.0)) throw ArgumentError("calibration tolerance must be >= 0");
  if (!(upper > 0.0)) throw ArgumentError("calibration upper bound must be > 0");
  CalibrationEntry entry;
  entry.characteristic = c;
  const double band = options.tolerance * options.target;

  if (options.target == 0.0) {
    // Strength 0 is the identity, so it meets a zero target exactly.
    entry.achieved = response(0.0);
    entry.converged = entry.achieved <= band;
    if (!entry.converged) entry.message = "response at strength 0 is not zero";
    return entry;
  }

  const double at_upper = response(upper);
  if (!(at_upper >= options.target)) {
    std::ostringstream msg;
    msg << name_of(c) << ": calibration not bracketed, response " << at_upper << " at upper bound " << upper
        << " is below target " << options.target;
    throw CalibrationError(msg.str());
  }

  double lo = 0.0;
  double hi = upper;
  for (int it = 1; it <= options.max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double value = response(mid);
    entry.strength = mid;
    entry.achieved = value;
    entry.iterations = it;
    if (std::abs(value - options.target) <= band) {
      entry.converged = true;
      return entry;
    }
    if (value < options.target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  entry.message = "no strength within tolerance after " + std::to_string(options.max_iter) + " iterations";
  return entry;
}

CalibrationEntry calibrate(Characteristic c, std::span<const Image> images, const FeatureExtractor& extractor,
                           const CalibrationOptions& options) {
  if (images.empty()) throw ArgumentError("calibration needs at least one image");
  const auto originals = extract_all(images, extractor);
  auto response = [&](double strength) {
    std::vector<LatentMap> modified(images.size());
    const Modification mod{c, strength};
    parallel_for(images.size(), [&](std::size_t k) { modified[k] = extractor.extract(apply(mod, images[k])); });
    return mean_latent_l1(originals, modified);
  };
  return bisect_strength(c, response, options.upper.value_or(default_upper_bound(c)), options);
}

CalibrationResult calibrate_all(std::span<const Image> images, const FeatureExtractor& extractor,
                                const CalibrationOptions& options) {
  CalibrationResult result;
  result.target = options.target;
  result.tolerance = options.tolerance;
  for (auto c : kAllCharacteristics) {
    try {
      result.entries.push_back(calibrate(c, images, extractor, options));
    } catch (const CalibrationError& e) {
      CalibrationEntry failed;
      failed.characteristic = c;
      failed.message = e.what();
      result.entries.push_back(failed);
    }
  }
  return result;
}

}  // namespace protoexplain
