#include "protoexplain/cli/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "protoexplain/errors.hpp"
#include "protoexplain/image_mods.hpp"
#include "protoexplain/rng.hpp"

namespace protoexplain::synth {
namespace {

constexpr std::array<double, 4> kHues{0.0, 0.33, 0.62, 0.14};

struct Layout {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
};

SplitMix64 sample_rng(std::uint64_t seed, int class_index, int index) {
  return SplitMix64(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(class_index) + 1),
                             static_cast<std::uint64_t>(index) + 1));
}

Layout layout(SplitMix64& rng, Index size) {
  const double s = static_cast<double>(size);
  Layout l;
  l.cx = 0.5 * s + rng.uniform(-0.1, 0.1) * s;
  l.cy = 0.5 * s + rng.uniform(-0.1, 0.1) * s;
  l.radius = s * rng.uniform(0.26, 0.32);
  return l;
}

bool inside(ShapeKind shape, double dx, double dy, double r) {
  switch (shape) {
    case ShapeKind::Disk:
      return dx * dx + dy * dy <= r * r;
    case ShapeKind::Square:
      return std::max(std::abs(dx), std::abs(dy)) <= 0.85 * r;
    case ShapeKind::Diamond:
      return std::abs(dx) + std::abs(dy) <= 1.2 * r;
  }
  return false;
}

}  // namespace

ClassStyle class_style(int class_index) {
  ClassStyle s;
  const int c = class_index;
  s.hue = kHues[static_cast<std::size_t>(c % 4)] + 0.07 * ((c / 12) % 3);
  s.hue -= std::floor(s.hue);
  s.shape = static_cast<ShapeKind>(c % 3);
  s.texture = static_cast<TextureKind>((c / 2 + 1) % 3);
  return s;
}

Image render(std::uint64_t seed, int class_index, int index, Index size) {
  if (size < 1) throw ArgumentError("image size must be positive");
  SplitMix64 rng = sample_rng(seed, class_index, index);
  const ClassStyle style = class_style(class_index);
  const Layout l = layout(rng, size);
  const double stripe_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  Plane r(size, size), g(size, size), b(size, size);
  for (Index y = 0; y < size; ++y) {
    for (Index x = 0; x < size; ++x) {
      // Gray noise background; the draw happens for every pixel so the
      // stream position never depends on the object mask.
      const double bg = 0.45 + rng.uniform(-0.12, 0.12);
      const double grain = rng.uniform(-1.0, 1.0);
      const double dx = static_cast<double>(x) + 0.5 - l.cx;
      const double dy = static_cast<double>(y) + 0.5 - l.cy;
      if (!inside(style.shape, dx, dy, l.radius)) {
        r(y, x) = g(y, x) = b(y, x) = bg;
        continue;
      }
      double v = 0.8;
      switch (style.texture) {
        case TextureKind::Flat:
          break;
        case TextureKind::Grain:
          v *= 1.0 + 0.25 * grain;
          break;
        case TextureKind::Stripes:
          v *= 1.0 + 0.2 * std::sin(2.0 * std::numbers::pi * (static_cast<double>(x + y)) / 6.0 + stripe_phase);
          break;
      }
      const auto rgb = hsv_to_rgb({style.hue, 0.75, std::clamp(v, 0.0, 1.0)});
      r(y, x) = rgb[0];
      g(y, x) = rgb[1];
      b(y, x) = rgb[2];
    }
  }
  return quantize_8bit(Image(std::move(r), std::move(g), std::move(b)));
}

std::vector<Sample> generate_samples(const Options& options) {
  if (options.n_classes < 2) throw ArgumentError("synthetic data needs at least two classes");
  if (options.n_per_class < 1) throw ArgumentError("synthetic data needs at least one image per class");
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(options.n_classes * options.n_per_class));
  for (int c = 0; c < options.n_classes; ++c) {
    for (int k = 0; k < options.n_per_class; ++k) {
      char name[32];
      std::snprintf(name, sizeof(name), "c%03d_%03d", c, k);
      out.push_back({name, c, render(options.seed, c, k, options.image_size)});
    }
  }
  return out;
}

Dataset generate(const Options& options, const FeatureExtractor& extractor) {
  if (options.protos_per_class < 0 || options.protos_per_class > options.n_per_class) {
    throw ArgumentError("protos_per_class must be between 0 and n_per_class");
  }
  Dataset ds;
  ds.samples = generate_samples(options);
  std::vector<Image> images;
  images.reserve(ds.samples.size());
  for (const auto& s : ds.samples) images.push_back(s.image);
  const auto latents = extract_all(images, extractor);

  const Index P = static_cast<Index>(options.n_classes) * options.protos_per_class;
  Matrix protos(P, extractor.depth());
  std::vector<int> classes;
  Index j = 0;
  for (int c = 0; c < options.n_classes; ++c) {
    const std::size_t first = static_cast<std::size_t>(c) * static_cast<std::size_t>(options.n_per_class);
    // Class mean of the columns under each object's centre.
    RowVector mean = RowVector::Zero(extractor.depth());
    for (int k = 0; k < options.n_per_class; ++k) {
      SplitMix64 rng = sample_rng(options.seed, c, k);
      const Layout l = layout(rng, options.image_size);
      const LatentMap& lat = latents[first + static_cast<std::size_t>(k)];
      const auto row = std::min<Index>(static_cast<Index>(l.cy * lat.rows() / options.image_size), lat.rows() - 1);
      const auto col = std::min<Index>(static_cast<Index>(l.cx * lat.cols() / options.image_size), lat.cols() - 1);
      mean += lat.column(row, col);
    }
    mean /= static_cast<double>(options.n_per_class);
    for (int m = 0; m < options.protos_per_class; ++m, ++j) {
      const std::size_t sample = first + static_cast<std::size_t>(m);
      const ActivationMap map = activation_map(latents[sample], mean);
      protos.row(j) = latents[sample].column(map.argmin.row, map.argmin.col);
      classes.push_back(c);
      ds.sources.push_back({j, sample, map.argmin});
    }
  }
  Matrix fc = PrototypeSet::default_fc_weights(classes, options.n_classes);
  ds.prototypes = PrototypeSet(std::move(protos), std::move(classes), options.n_classes, std::move(fc),
                               options.epsilon);
  return ds;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  const auto image_dir = dir / "images";
  std::filesystem::create_directories(image_dir);
  for (const auto& s : dataset.samples) save_image(s.image, image_dir / (s.name + ".png"));
  save_prototype_set(dataset.prototypes, dir / "prototypes");
}

}  // namespace protoexplain::synth
