#include "protoexplain/image_mods.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "protoexplain/errors.hpp"

namespace protoexplain {
namespace {

constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;

// Gray pixels map to their own value exactly, so grayscale images are exact
// fixed points of every blend below.
Plane luma(const Image& image) {
  const Plane& r = image.channel(0);
  const Plane& g = image.channel(1);
  const Plane& b = image.channel(2);
  const Plane weighted = kLumaR * r + kLumaG * g + kLumaB * b;
  return ((r == g) && (g == b)).select(r, weighted);
}

// p + s * (target - p) leaves p untouched wherever it already equals target.
Plane blend_toward(const Plane& p, const Plane& target, double s) {
  return (p + s * (target - p)).max(0.0).min(1.0);
}

Plane clamp_unit(const Plane& p) { return p.max(0.0).min(1.0); }

void check_strength(double strength, const char* what) {
  if (!std::isfinite(strength)) throw ArgumentError(std::string(what) + " strength must be finite");
}

// Replicates edge pixels outward by `pad` on every side.
Plane pad_clamped(const Plane& p, int pad) {
  const Index h = p.rows();
  const Index w = p.cols();
  Plane out(h + 2 * pad, w + 2 * pad);
  for (Index r = 0; r < out.rows(); ++r) {
    const Index sr = std::clamp<Index>(r - pad, 0, h - 1);
    for (Index c = 0; c < out.cols(); ++c) {
      out(r, c) = p(sr, std::clamp<Index>(c - pad, 0, w - 1));
    }
  }
  return out;
}

Plane nlm_channel(const Plane& in, double h, const NlmParams& params) {
  const int pr = params.patch_radius;
  const int sr = params.search_radius;
  const int side = 2 * pr + 1;
  const Index rows = in.rows();
  const Index cols = in.cols();
  const double n = static_cast<double>(side * side);
  // Distances are taken on the 0-255 scale; the averaging itself is linear so
  // it can stay on the unit scale.
  const double scale = 255.0 * 255.0 / (h * h * n);

  const Plane padded = pad_clamped(in, pr);
  Plane num = Plane::Zero(rows, cols);
  Plane den = Plane::Zero(rows, cols);

  for (int dy = -sr; dy <= sr; ++dy) {
    const Index y0 = std::max<Index>(0, -dy);
    const Index y1 = std::min<Index>(rows, rows - dy);
    if (y1 <= y0) continue;
    for (int dx = -sr; dx <= sr; ++dx) {
      const Index x0 = std::max<Index>(0, -dx);
      const Index x1 = std::min<Index>(cols, cols - dx);
      if (x1 <= x0) continue;
      const Index out_h = y1 - y0;
      const Index out_w = x1 - x0;
      const Index ext_h = out_h + 2 * pr;
      const Index ext_w = out_w + 2 * pr;

      const Plane diff2 = (padded.block(y0, x0, ext_h, ext_w) -
                           padded.block(y0 + dy, x0 + dx, ext_h, ext_w))
                              .square();
      Plane row_sum = Plane::Zero(ext_h, out_w);
      for (int u = 0; u < side; ++u) row_sum += diff2.block(0, u, ext_h, out_w);
      Plane dist = Plane::Zero(out_h, out_w);
      for (int u = 0; u < side; ++u) dist += row_sum.block(u, 0, out_h, out_w);

      const Plane weight = (-scale * dist).exp();
      num.block(y0, x0, out_h, out_w) += weight * in.block(y0 + dy, x0 + dx, out_h, out_w);
      den.block(y0, x0, out_h, out_w) += weight;
    }
  }
  // den >= 1 everywhere: the zero offset always contributes weight 1.
  return clamp_unit(num / den);
}

}  // namespace

std::string_view name_of(Characteristic c) {
  switch (c) {
    case Characteristic::Contrast:
      return "contrast";
    case Characteristic::Saturation:
      return "saturation";
    case Characteristic::Hue:
      return "hue";
    case Characteristic::Shape:
      return "shape";
    case Characteristic::Texture:
      return "texture";
  }
  return "unknown";
}

std::optional<Characteristic> parse_characteristic(std::string_view name) {
  for (auto c : kAllCharacteristics) {
    if (name_of(c) == name) return c;
  }
  return std::nullopt;
}

Image to_grayscale(const Image& image) {
  Plane y = clamp_unit(luma(image));
  return Image(y, y, y);
}

double mean_gray(const Image& image) {
  const Plane y = luma(image);
  const double lo = y.minCoeff();
  return lo == y.maxCoeff() ? lo : y.mean();
}

Image modify_contrast(const Image& image, double strength) {
  check_strength(strength, "contrast");
  if (strength < 0.0 || strength > 1.0) throw ArgumentError("contrast strength must be in [0, 1]");
  if (strength == 0.0) return image;
  const double m = mean_gray(image);
  const Plane target = Plane::Constant(image.height(), image.width(), m);
  auto blend = [&](const Plane& p) { return blend_toward(p, target, strength); };
  return Image(blend(image.channel(0)), blend(image.channel(1)), blend(image.channel(2)));
}

Image modify_saturation(const Image& image, double strength) {
  check_strength(strength, "saturation");
  if (strength < 0.0 || strength > 1.0) throw ArgumentError("saturation strength must be in [0, 1]");
  if (strength == 0.0) return image;
  const Plane y = luma(image);
  auto blend = [&](const Plane& p) { return blend_toward(p, y, strength); };
  return Image(blend(image.channel(0)), blend(image.channel(1)), blend(image.channel(2)));
}

Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta > 0.0) {
    double h;
    if (mx == r) {
      h = (g - b) / delta;
    } else if (mx == g) {
      h = 2.0 + (b - r) / delta;
    } else {
      h = 4.0 + (r - g) / delta;
    }
    h /= 6.0;
    if (h < 0.0) h += 1.0;
    out.h = h >= 1.0 ? h - 1.0 : h;
  }
  return out;
}

std::array<double, 3> hsv_to_rgb(const Hsv& hsv) {
  const double v = hsv.v;
  if (hsv.s <= 0.0) return {v, v, v};
  double sector = hsv.h * 6.0;
  if (sector >= 6.0) sector -= 6.0;
  const int i = static_cast<int>(std::floor(sector));
  const double f = sector - i;
  const double p = v * (1.0 - hsv.s);
  const double q = v * (1.0 - hsv.s * f);
  const double t = v * (1.0 - hsv.s * (1.0 - f));
  switch (i) {
    case 0:
      return {v, t, p};
    case 1:
      return {q, v, p};
    case 2:
      return {p, v, t};
    case 3:
      return {p, q, v};
    case 4:
      return {t, p, v};
    default:
      return {v, p, q};
  }
}

Image modify_hue(const Image& image, double strength) {
  check_strength(strength, "hue");
  if (strength == 0.0) return image;
  const Index h = image.height();
  const Index w = image.width();
  const double shift = strength - std::floor(strength);
  std::array<Plane, 3> out{Plane(h, w), Plane(h, w), Plane(h, w)};
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      Hsv hsv = rgb_to_hsv(image.channel(0)(r, c), image.channel(1)(r, c), image.channel(2)(r, c));
      hsv.h += shift;
      if (hsv.h >= 1.0) hsv.h -= 1.0;
      const auto rgb = hsv_to_rgb(hsv);
      for (int ch = 0; ch < 3; ++ch) out[ch](r, c) = std::clamp(rgb[ch], 0.0, 1.0);
    }
  }
  return Image(std::move(out[0]), std::move(out[1]), std::move(out[2]));
}

double bilinear_sample(const Plane& plane, double x, double y) {
  const Index h = plane.rows();
  const Index w = plane.cols();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const auto x0 = static_cast<Index>(std::floor(x));
  const auto y0 = static_cast<Index>(std::floor(y));
  const Index x1 = std::min(x0 + 1, w - 1);
  const Index y1 = std::min(y0 + 1, h - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double top = (1.0 - fx) * plane(y0, x0) + fx * plane(y0, x1);
  const double bottom = (1.0 - fx) * plane(y1, x0) + fx * plane(y1, x1);
  return (1.0 - fy) * top + fy * bottom;
}

Image modify_shape(const Image& image, double strength) {
  check_strength(strength, "shape");
  if (strength < 0.0) throw ArgumentError("shape strength must be >= 0");
  if (strength == 0.0) return image;
  const Index h = image.height();
  const Index w = image.width();
  constexpr double k = 2.0 * std::numbers::pi / kWarpWavelength;
  std::array<Plane, 3> out{Plane(h, w), Plane(h, w), Plane(h, w)};
  for (Index r = 0; r < h; ++r) {
    const double dx = strength * std::sin(k * static_cast<double>(r));
    for (Index c = 0; c < w; ++c) {
      const double sx = static_cast<double>(c) + dx;
      const double sy = static_cast<double>(r) + strength * std::sin(k * static_cast<double>(c));
      for (int ch = 0; ch < 3; ++ch) {
        out[ch](r, c) = std::clamp(bilinear_sample(image.channel(ch), sx, sy), 0.0, 1.0);
      }
    }
  }
  return Image(std::move(out[0]), std::move(out[1]), std::move(out[2]));
}

Image modify_texture(const Image& image, double strength, const NlmParams& params) {
  check_strength(strength, "texture");
  if (strength < 0.0) throw ArgumentError("texture strength must be >= 0");
  if (params.patch_radius < 0 || params.search_radius < 0) {
    throw ArgumentError("non-local means radii must be >= 0");
  }
  // h = 0 sends every weight except the centre's to exp(-inf) = 0.
  if (strength == 0.0) return image;
  return Image(nlm_channel(image.channel(0), strength, params),
               nlm_channel(image.channel(1), strength, params),
               nlm_channel(image.channel(2), strength, params));
}

Image apply(const Modification& mod, const Image& image) {
  switch (mod.characteristic) {
    case Characteristic::Contrast:
      return modify_contrast(image, mod.strength);
    case Characteristic::Saturation:
      return modify_saturation(image, mod.strength);
    case Characteristic::Hue:
      return modify_hue(image, mod.strength);
    case Characteristic::Shape:
      return modify_shape(image, mod.strength);
    case Characteristic::Texture:
      return modify_texture(image, mod.strength);
  }
  throw ArgumentError("unknown characteristic");
}

}  // namespace protoexplain
