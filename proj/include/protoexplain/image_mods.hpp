// image_mods.hpp - the five characteristic-reducing image modifications.
//
// Every modification takes a strength >= 0 and is the identity at strength 0.
// All of them are deterministic pure functions and keep values in [0, 1].
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "protoexplain/tensor_io.hpp"

namespace protoexplain {

/// Fixed order; used to index ImportanceVector and friends.
enum class Characteristic : int { Contrast = 0, Saturation = 1, Hue = 2, Shape = 3, Texture = 4 };

inline constexpr std::size_t kNumCharacteristics = 5;
inline constexpr std::array<Characteristic, kNumCharacteristics> kAllCharacteristics{
    Characteristic::Contrast, Characteristic::Saturation, Characteristic::Hue,
    Characteristic::Shape, Characteristic::Texture};

constexpr std::size_t index_of(Characteristic c) { return static_cast<std::size_t>(c); }

std::string_view name_of(Characteristic c);
std::optional<Characteristic> parse_characteristic(std::string_view name);

struct Modification {
  Characteristic characteristic = Characteristic::Contrast;
  double strength = 0.0;
};

/// Sine-warp wavelength in pixels.
inline constexpr double kWarpWavelength = 32.0;

/// Non-local means geometry: 7x7 patches compared within a 21x21 window.
struct NlmParams {
  int patch_radius = 3;
  int search_radius = 10;
};

/// BT.601 luma replicated to all three channels.
Image to_grayscale(const Image& image);

/// Mean BT.601 luma over all pixels.
double mean_gray(const Image& image);

/// Blend toward the image's mean gray level: (1-s)*img + s*mean.
Image modify_contrast(const Image& image, double strength);

/// Blend toward the per-pixel grayscale: (1-s)*img + s*gray.
Image modify_saturation(const Image& image, double strength);

/// Rotate hue by `strength` turns in HSV; S and V are untouched.
Image modify_hue(const Image& image, double strength);

/// Sine-wave displacement of amplitude `strength` pixels along both axes,
/// sampled bilinearly with edge clamping.
Image modify_shape(const Image& image, double strength);

/// Per-channel non-local means with filter strength h = `strength`
/// (expressed on the 0-255 scale).
Image modify_texture(const Image& image, double strength, const NlmParams& params = {});

Image apply(const Modification& mod, const Image& image);

// HSV helpers, hue in turns [0, 1).
struct Hsv {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};
Hsv rgb_to_hsv(double r, double g, double b);
std::array<double, 3> hsv_to_rgb(const Hsv& hsv);

/// Bilinear sample at (x = column, y = row), coordinates clamped to the plane.
double bilinear_sample(const Plane& plane, double x, double y);

}  // namespace protoexplain
