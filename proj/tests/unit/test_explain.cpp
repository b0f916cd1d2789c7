#include <doctest.h>

#include <cmath>

#include "protoexplain/errors.hpp"
#include "protoexplain/explain.hpp"
#include "protoexplain/reference_extractor.hpp"
#include "protoexplain/rng.hpp"
#include "../support/extractors.hpp"

using namespace protoexplain;
using protoexplain::testing::ConstantExtractor;
using protoexplain::testing::CountingExtractor;
using protoexplain::testing::IdentityExtractor;

namespace {

constexpr StrengthSet kStrengths{0.45, 0.7, 0.1, 1.5, 4.0};

Image random_image(std::uint64_t seed, Index h, Index w) {
  SplitMix64 rng(seed);
  Plane r(h, w), g(h, w), b(h, w);
  for (Index i = 0; i < r.size(); ++i) {
    r(i) = rng.uniform();
    g(i) = rng.uniform();
    b(i) = rng.uniform();
  }
  return Image(r, g, b);
}

Image random_gray(std::uint64_t seed, Index h, Index w) {
  SplitMix64 rng(seed);
  Plane p(h, w);
  for (Index i = 0; i < p.size(); ++i) p(i) = rng.uniform();
  return Image(p, p, p);
}

std::vector<Image> image_set(std::size_t n, Index size, std::uint64_t seed) {
  std::vector<Image> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(random_image(seed + k, size, size));
  return out;
}

/// Prototypes taken from latent columns of the given images, one per class.
PrototypeSet prototypes_from(const FeatureExtractor& ex, std::span<const Image> images, Index count) {
  Matrix protos(count, ex.depth());
  std::vector<int> classes;
  for (Index j = 0; j < count; ++j) {
    const LatentMap lat = ex.extract(images[static_cast<std::size_t>(j) % images.size()]);
    protos.row(j) = lat.columns().row(j % lat.locations());
    classes.push_back(static_cast<int>(j % 2));
  }
  return PrototypeSet(protos, classes, 2, PrototypeSet::default_fc_weights(classes, 2));
}

}  // namespace

TEST_CASE("zero strengths give exactly zero scores") {
  const ReferenceExtractor ex;
  const auto images = image_set(4, 24, 1);
  const PrototypeSet protos = prototypes_from(ex, images, 5);
  const ExplainContext ctx{ex, protos, kZeroStrengths};
  for (const auto& o : explain_all(images, ctx)) {
    REQUIRE(o.explanation.has_value());
    for (double s : o.explanation->scores) CHECK(s == 0.0);
    for (const auto& c : o.explanation->contributions) {
      for (double s : c.local) CHECK(s == 0.0);
    }
  }
}

TEST_CASE("gray images have zero saturation and hue scores") {
  const ReferenceExtractor ex;
  const std::vector<Image> images{random_gray(2, 24, 24), random_gray(3, 24, 24)};
  const PrototypeSet protos = prototypes_from(ex, images, 4);
  const ExplainContext ctx{ex, protos, kStrengths};
  for (Index j = 0; j < protos.size(); ++j) {
    const LocalExplanation e = local_importance(images[0], j, ctx);
    CHECK(e.scores[index_of(Characteristic::Saturation)] == 0.0);
    CHECK(e.scores[index_of(Characteristic::Hue)] == 0.0);
  }
}

TEST_CASE("modified scores are taken at the original argmin") {
  // Prototype equals pixel (0,0) of the original. After the hue shift the
  // best match moves elsewhere, but g_hat stays at (0,0).
  Plane r = Plane::Constant(2, 2, 0.5), g = r, b = r;
  r(0, 0) = 1.0;
  g(0, 0) = 0.0;
  b(0, 0) = 0.0;
  g(1, 1) = 1.0;
  r(1, 1) = 0.0;
  b(1, 1) = 0.0;
  const Image img(r, g, b);
  const IdentityExtractor ex;
  Matrix proto(1, 3);
  proto << 1, 0, 0;
  const PrototypeSet protos(proto, {0}, 1, Matrix::Ones(1, 1));
  const ExplainContext ctx{ex, protos, {0.0, 0.0, 1.0 / 3.0, 0.0, 0.0}};
  const LocalExplanation e = local_importance(img, 0, ctx);
  CHECK(e.location == LatentLocation{0, 0});
  const LatentMap shifted = ex.extract(modify_hue(img, 1.0 / 3.0));
  CHECK(e.g_hat[index_of(Characteristic::Hue)] == score_latent_at(shifted, protos, 0, {0, 0}));
  CHECK_FALSE(activation_map(shifted, protos.prototype(0)).argmin == LatentLocation{0, 0});
  CHECK(e.scores[index_of(Characteristic::Hue)] > 0.0);
}

TEST_CASE("local score is g minus g_hat") {
  const ReferenceExtractor ex;
  const auto images = image_set(2, 32, 4);
  const PrototypeSet protos = prototypes_from(ex, images, 3);
  const ExplainContext ctx{ex, protos, kStrengths};
  const LocalExplanation e = local_importance(images[1], 2, ctx);
  const auto scores = score_image(images[1], ex, protos);
  CHECK(e.g == scores[2].g);
  CHECK(e.location == scores[2].location);
  for (auto c : kAllCharacteristics) {
    const double g_hat = score_at_location(apply(spec_for(kStrengths, c), images[1]), ex, protos, 2, e.location);
    CHECK(e.g_hat[index_of(c)] == g_hat);
    CHECK(e.scores[index_of(c)] == e.g - g_hat);
  }
}

TEST_CASE("weighted mean of contributions") {
  const GlobalExplanation one = fold_global(0, {{2.0, {0.5, -0.1, 0.3, 0.0, 7.0}}});
  CHECK(one.scores == ImportanceVector{0.5, -0.1, 0.3, 0.0, 7.0});
  CHECK(one.weight_sum == 2.0);

  const GlobalExplanation two = fold_global(0, {{1.0, {0.2, 0, 0, 0, 0}}, {3.0, {0.6, 0, 0, 0, 0}}});
  CHECK(two.scores[0] == doctest::Approx(0.5).epsilon(1e-15));

  const GlobalExplanation four = fold_global(
      0, {{1.0, {0.2, 0, 0, 0, 0}}, {3.0, {0.6, 0, 0, 0, 0}}, {1.0, {0.2, 0, 0, 0, 0}}, {3.0, {0.6, 0, 0, 0, 0}}});
  CHECK(four.scores[0] == doctest::Approx(two.scores[0]).epsilon(1e-15));

  CHECK_THROWS_AS(fold_global(0, {}), ArgumentError);
  CHECK_THROWS_AS(fold_global(0, {{0.0, {1, 1, 1, 1, 1}}}), DegenerateWeightError);
}

TEST_CASE("global scores lie between the extreme local scores") {
  const ReferenceExtractor ex;
  const auto images = image_set(6, 24, 10);
  const PrototypeSet protos = prototypes_from(ex, images, 4);
  const ExplainContext ctx{ex, protos, kStrengths};
  for (const auto& o : explain_all(images, ctx)) {
    REQUIRE(o.explanation.has_value());
    const auto& ge = *o.explanation;
    for (std::size_t i = 0; i < kNumCharacteristics; ++i) {
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& c : ge.contributions) {
        lo = std::min(lo, c.local[i]);
        hi = std::max(hi, c.local[i]);
      }
      CHECK(ge.scores[i] >= lo - 1e-12);
      CHECK(ge.scores[i] <= hi + 1e-12);
    }
  }
}

TEST_CASE("batch explanation needs six extractor passes per image") {
  const ReferenceExtractor inner;
  const auto images = image_set(3, 20, 20);
  for (Index p : {1, 4, 9}) {
    CountingExtractor ex(inner);
    const PrototypeSet protos = prototypes_from(inner, images, p);
    const ExplainContext ctx{ex, protos, kStrengths};
    const auto outcomes = explain_all(images, ctx);
    CHECK(outcomes.size() == static_cast<std::size_t>(p));
    CHECK(ex.calls() == 6 * static_cast<long>(images.size()));
  }
}

TEST_CASE("batch results equal individual global_importance calls") {
  const ReferenceExtractor ex;
  const auto images = image_set(3, 24, 30);
  const PrototypeSet protos = prototypes_from(ex, images, 3);
  const ExplainContext ctx{ex, protos, kStrengths};
  const auto outcomes = explain_all(images, ctx);
  for (Index j = 0; j < protos.size(); ++j) {
    const GlobalExplanation single = global_importance(images, j, ctx);
    REQUIRE(outcomes[static_cast<std::size_t>(j)].explanation.has_value());
    CHECK(outcomes[static_cast<std::size_t>(j)].explanation->scores == single.scores);
    CHECK(outcomes[static_cast<std::size_t>(j)].explanation->weight_sum == single.weight_sum);
  }
}

TEST_CASE("epsilon of one makes every weight zero and the prototype degenerate") {
  const ReferenceExtractor ex;
  const auto images = image_set(2, 20, 40);
  const PrototypeSet base = prototypes_from(ex, images, 2);
  const PrototypeSet protos(base.prototypes(), base.classes(), 2, base.fc_weights(), 1.0);
  const ExplainContext ctx{ex, protos, kStrengths};
  CHECK_THROWS_AS(global_importance(images, 0, ctx), DegenerateWeightError);
  const auto outcomes = explain_all(images, ctx);
  REQUIRE(outcomes.size() == 2);
  for (const auto& o : outcomes) {
    CHECK_FALSE(o.explanation.has_value());
    CHECK_FALSE(o.error.empty());
  }
}

TEST_CASE("calibration to a zero target returns strength zero") {
  const ReferenceExtractor ex;
  const auto images = image_set(2, 20, 50);
  CalibrationOptions opts;
  opts.target = 0.0;
  for (auto c : kAllCharacteristics) {
    const CalibrationEntry e = calibrate(c, images, ex, opts);
    CHECK(e.converged);
    CHECK(e.strength == 0.0);
    CHECK(e.achieved == 0.0);
  }
}

TEST_CASE("calibration recovers the root of a linear response") {
  // With identity latents and no clamping, the contrast response is
  // s * mean|m - p| exactly.
  const IdentityExtractor ex;
  const auto images = image_set(3, 12, 60);
  double slope = 0.0;
  for (const auto& img : images) {
    const double m = mean_gray(img);
    for (int c = 0; c < 3; ++c) slope += (img.channel(c) - m).abs().sum();
  }
  slope /= static_cast<double>(images.size() * 12 * 12 * 3);
  for (double target : {0.0002, 0.01, 0.1}) {
    CalibrationOptions opts;
    opts.target = target;
    const CalibrationEntry e = calibrate(Characteristic::Contrast, images, ex, opts);
    REQUIRE(e.converged);
    CHECK(e.iterations <= 40);
    CHECK(std::abs(e.achieved - target) <= opts.tolerance * target);
    CHECK(std::abs(e.strength - target / slope) <= opts.tolerance * target / slope * (1 + 1e-9));
  }
}

TEST_CASE("bisection narrows the error on monotone responses") {
  const auto response = [](double s) { return s * s * s; };
  CalibrationOptions opts;
  opts.target = 0.3;
  opts.tolerance = 1e-9;
  const CalibrationEntry e = bisect_strength(Characteristic::Hue, response, 1.0, opts);
  CHECK(e.converged);
  CHECK(std::abs(e.achieved - 0.3) <= 1e-9 * 0.3);
  CHECK(std::abs(e.strength - std::cbrt(0.3)) < 1e-8);
  CHECK(e.iterations <= 40);
}

TEST_CASE("unbracketed calibration names the characteristic") {
  const ConstantExtractor ex;
  const auto images = image_set(2, 10, 70);
  try {
    calibrate(Characteristic::Saturation, images, ex);
    FAIL("expected CalibrationError");
  } catch (const CalibrationError& e) {
    CHECK(std::string(e.what()).find("saturation") != std::string::npos);
  }
  const CalibrationResult all = calibrate_all(images, ex);
  REQUIRE(all.entries.size() == 5);
  CHECK_FALSE(all.all_converged());
  for (const auto& entry : all.entries) {
    CHECK_FALSE(entry.converged);
    CHECK(entry.message.find(std::string(name_of(entry.characteristic))) != std::string::npos);
  }
}

TEST_CASE("calibration runs out of iterations") {
  CalibrationOptions opts;
  opts.target = 0.5;
  opts.tolerance = 0.0;
  opts.max_iter = 5;
  const CalibrationEntry e = bisect_strength(Characteristic::Shape, [](double s) { return s * 0.9; }, 1.0, opts);
  CHECK_FALSE(e.converged);
  CHECK(e.iterations == 5);
  CHECK_FALSE(e.message.empty());
}
