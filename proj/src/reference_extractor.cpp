#include "protoexplain/reference_extractor.hpp"

#include <cmath>
#include <string>

#include "protoexplain/errors.hpp"
#include "protoexplain/rng.hpp"

namespace protoexplain {
namespace {

constexpr Index kKernel = 3;
constexpr Index kStride = 2;
constexpr Index kPad = 1;

Index conv_out(Index in) { return (in + 2 * kPad - kKernel) / kStride + 1; }

// Feature maps are (rows * cols) x channels, row-major over locations.
struct FeatureMap {
  Index rows = 0;
  Index cols = 0;
  Matrix data;
};

FeatureMap conv_relu(const FeatureMap& in, const Matrix& weights, Index in_channels) {
  FeatureMap out;
  out.rows = conv_out(in.rows);
  out.cols = conv_out(in.cols);
  Matrix patches = Matrix::Zero(out.rows * out.cols, kKernel * kKernel * in_channels);
  for (Index oy = 0; oy < out.rows; ++oy) {
    for (Index ox = 0; ox < out.cols; ++ox) {
      auto row = patches.row(oy * out.cols + ox);
      for (Index ky = 0; ky < kKernel; ++ky) {
        const Index iy = oy * kStride + ky - kPad;
        if (iy < 0 || iy >= in.rows) continue;
        for (Index kx = 0; kx < kKernel; ++kx) {
          const Index ix = ox * kStride + kx - kPad;
          if (ix < 0 || ix >= in.cols) continue;
          row.segment((ky * kKernel + kx) * in_channels, in_channels) = in.data.row(iy * in.cols + ix);
        }
      }
    }
  }
  out.data = (patches * weights).cwiseMax(0.0);
  return out;
}

FeatureMap avg_pool2(const FeatureMap& in) {
  FeatureMap out;
  out.rows = in.rows / 2;
  out.cols = in.cols / 2;
  out.data.resize(out.rows * out.cols, in.data.cols());
  for (Index r = 0; r < out.rows; ++r) {
    for (Index c = 0; c < out.cols; ++c) {
      const Index a = (2 * r) * in.cols + 2 * c;
      const Index b = (2 * r + 1) * in.cols + 2 * c;
      out.data.row(r * out.cols + c) =
          0.25 * (in.data.row(a) + in.data.row(a + 1) + in.data.row(b) + in.data.row(b + 1));
    }
  }
  return out;
}

}  // namespace

ReferenceExtractor::ReferenceExtractor(std::uint64_t seed, Index depth) : seed_(seed), depth_(depth) {
  if (depth_ < 1) throw ArgumentError("extractor depth must be >= 1");
  const std::array<Index, 4> widths{3, 16, 32, depth_};
  SplitMix64 rng(seed_);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Conv& conv = layers_[l];
    conv.in_channels = widths[l];
    conv.out_channels = widths[l + 1];
    const Index fan_in = kKernel * kKernel * conv.in_channels;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    conv.weights.resize(fan_in, conv.out_channels);
    for (Index o = 0; o < conv.out_channels; ++o) {
      for (Index k = 0; k < kKernel * kKernel; ++k) {
        for (Index ci = 0; ci < conv.in_channels; ++ci) {
          conv.weights(k * conv.in_channels + ci, o) = rng.uniform(-bound, bound);
        }
      }
    }
  }
}

Index ReferenceExtractor::output_size(Index input) { return conv_out(conv_out(conv_out(input))) / 2; }

LatentMap ReferenceExtractor::extract(const Image& image) const {
  if (image.height() < min_input_size() || image.width() < min_input_size()) {
    throw DimensionError("reference extractor needs images of at least " + std::to_string(min_input_size()) +
                         " pixels per side");
  }
  FeatureMap x;
  x.rows = image.height();
  x.cols = image.width();
  x.data.resize(x.rows * x.cols, 3);
  for (int ch = 0; ch < 3; ++ch) {
    x.data.col(ch) = image.channel(ch).reshaped<Eigen::RowMajor>().matrix();
  }
  for (const Conv& conv : layers_) x = conv_relu(x, conv.weights, conv.in_channels);
  FeatureMap pooled = avg_pool2(x);
  return LatentMap(pooled.rows, pooled.cols, std::move(pooled.data));
}

}  // namespace protoexplain
