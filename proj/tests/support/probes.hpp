// probes.hpp - handcrafted extractors that read a single image property.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "protoexplain/image_mods.hpp"
#include "protoexplain/proto_engine.hpp"
#include "protoexplain/rng.hpp"
#include "protoexplain/tensor_io.hpp"

namespace protoexplain::testing {

/// Splits the image into `cell` x `cell` blocks (the last row/column of
/// blocks absorbs any remainder) and calls fn(y0, y1, x0, x1, out_row).
template <typename Fn>
LatentMap per_cell(const Image& image, Index cell, Index depth, Fn&& fn) {
  const Index rows = std::max<Index>(1, image.height() / cell);
  const Index cols = std::max<Index>(1, image.width() / cell);
  Matrix columns = Matrix::Zero(rows * cols, depth);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const Index y1 = r + 1 == rows ? image.height() : (r + 1) * cell;
      const Index x1 = c + 1 == cols ? image.width() : (c + 1) * cell;
      fn(r * cell, y1, c * cell, x1, columns.row(r * cols + c));
    }
  }
  return LatentMap(rows, cols, std::move(columns));
}

/// Latent = per-cell mean hue direction (cos, sin) over chromatic pixels.
class HueProbe final : public FeatureExtractor {
 public:
  explicit HueProbe(Index cell = 16) : cell_(cell) {}
  LatentMap extract(const Image& image) const override {
    return per_cell(image, cell_, 2, [&](Index y0, Index y1, Index x0, Index x1, auto out) {
      double cs = 0.0, sn = 0.0;
      Index n = 0;
      for (Index y = y0; y < y1; ++y) {
        for (Index x = x0; x < x1; ++x) {
          const Hsv hsv = rgb_to_hsv(image.channel(0)(y, x), image.channel(1)(y, x), image.channel(2)(y, x));
          if (hsv.s <= 0.05) continue;
          cs += std::cos(2.0 * std::numbers::pi * hsv.h);
          sn += std::sin(2.0 * std::numbers::pi * hsv.h);
          ++n;
        }
      }
      if (n > 0) {
        out(0) = cs / static_cast<double>(n);
        out(1) = sn / static_cast<double>(n);
      }
    });
  }
  Index depth() const override { return 2; }
  Index min_input_size() const override { return 2; }

 private:
  Index cell_;
};

/// Latent = per-cell mean squared luma gradient (forward differences),
/// luma on [0, 1], times `scale`.
class TextureProbe final : public FeatureExtractor {
 public:
  explicit TextureProbe(Index cell = 16, double scale = 100.0) : cell_(cell), scale_(scale) {}
  LatentMap extract(const Image& image) const override {
    const Plane luma = to_grayscale(image).channel(0);
    return per_cell(image, cell_, 1, [&](Index y0, Index y1, Index x0, Index x1, auto out) {
      double e = 0.0;
      Index n = 0;
      for (Index y = y0; y < y1; ++y) {
        for (Index x = x0; x < x1; ++x) {
          if (y + 1 < luma.rows()) {
            e += (luma(y + 1, x) - luma(y, x)) * (luma(y + 1, x) - luma(y, x));
            ++n;
          }
          if (x + 1 < luma.cols()) {
            e += (luma(y, x + 1) - luma(y, x)) * (luma(y, x + 1) - luma(y, x));
            ++n;
          }
        }
      }
      out(0) = n > 0 ? scale_ * e / static_cast<double>(n) : 0.0;
    });
  }
  Index depth() const override { return 1; }
  Index min_input_size() const override { return 2; }

 private:
  Index cell_;
  double scale_;
};

/// Full-frame field of one colour with uniform brightness grain of
/// +-`amplitude`, quantized to 8 bits. No edges, so texture is its only
/// structure.
inline Image grain_field(std::uint64_t seed, double hue, double amplitude, Index size) {
  SplitMix64 rng(seed);
  Plane r(size, size), g(size, size), b(size, size);
  for (Index y = 0; y < size; ++y) {
    for (Index x = 0; x < size; ++x) {
      const auto c = hsv_to_rgb({hue, 0.6, 0.7 + amplitude * rng.uniform(-1.0, 1.0)});
      r(y, x) = c[0];
      g(y, x) = c[1];
      b(y, x) = c[2];
    }
  }
  return quantize_8bit(Image(std::move(r), std::move(g), std::move(b)));
}

}  // namespace protoexplain::testing
