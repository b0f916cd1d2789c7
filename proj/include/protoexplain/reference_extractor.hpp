// reference_extractor.hpp - small seeded CNN used when no external model is supplied.
//
// Three 3x3 stride-2 convolutions (zero padding 1, widths 16 -> 32 -> D),
// ReLU after each, then 2x2 average pooling with stride 2. A 224x224 input
// yields a 14x14xD map. Weights are uniform in +-sqrt(6 / fan_in), drawn from
// one splitmix64 stream in layer order, each layer laid out
// [out][kernel_row][kernel_col][in]. Biases are zero.
#pragma once

#include <array>
#include <cstdint>

#include "protoexplain/proto_engine.hpp"

namespace protoexplain {

class ReferenceExtractor final : public FeatureExtractor {
 public:
  static constexpr std::uint64_t kDefaultSeed = 20210604;
  static constexpr Index kDefaultDepth = 32;

  explicit ReferenceExtractor(std::uint64_t seed = kDefaultSeed, Index depth = kDefaultDepth);

  LatentMap extract(const Image& image) const override;
  Index depth() const override { return depth_; }
  /// Three halvings then a 2x2 pool need at least 9 pixels per side.
  Index min_input_size() const override { return 9; }

  std::uint64_t seed() const { return seed_; }
  /// Latent grid size for an input side length.
  static Index output_size(Index input);

 private:
  struct Conv {
    Index in_channels = 0;
    Index out_channels = 0;
    Matrix weights;  // (9 * in) x out, im2col layout
  };

  std::uint64_t seed_;
  Index depth_;
  std::array<Conv, 3> layers_;
};

}  // namespace protoexplain
