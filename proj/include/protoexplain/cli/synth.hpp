// synth.hpp - deterministic synthetic dataset of coloured, textured shapes.
//
// Each class is a (hue, shape, texture) combination drawn on a gray noise
// background. Prototypes are latent columns of class exemplars, so every
// prototype attains zero distance on the image it came from.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "protoexplain/proto_engine.hpp"
#include "protoexplain/tensor_io.hpp"

namespace protoexplain::synth {

enum class ShapeKind { Disk = 0, Square = 1, Diamond = 2 };
enum class TextureKind { Flat = 0, Grain = 1, Stripes = 2 };

struct ClassStyle {
  double hue = 0.0;  // turns
  ShapeKind shape = ShapeKind::Disk;
  TextureKind texture = TextureKind::Flat;
};

ClassStyle class_style(int class_index);

struct Options {
  std::uint64_t seed = 1;
  int n_classes = 4;
  int n_per_class = 10;
  int protos_per_class = 5;
  Index image_size = 64;
  double epsilon = kDefaultEpsilon;
};

struct Sample {
  std::string name;  // file stem, e.g. c002_007
  int class_index = 0;
  Image image;       // already on the 8-bit grid
};

struct PrototypeSource {
  Index prototype = 0;
  std::size_t sample = 0;
  LatentLocation location;
};

struct Dataset {
  std::vector<Sample> samples;
  PrototypeSet prototypes;
  std::vector<PrototypeSource> sources;
};

/// Renders one image; identical arguments give identical pixels.
Image render(std::uint64_t seed, int class_index, int index, Index size);

std::vector<Sample> generate_samples(const Options& options);

/// Prototype m of class c comes from the class's m-th image: the latent
/// column closest to the class mean of object-centre columns.
Dataset generate(const Options& options, const FeatureExtractor& extractor);

/// Writes images/<name>.png and prototypes/ under `dir`.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

}  // namespace protoexplain::synth
