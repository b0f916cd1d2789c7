#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "protoexplain/errors.hpp"
#include "protoexplain/tensor_io.hpp"

namespace protoexplain {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors through longjmp. These helpers keep only trivially
// destructible locals between setjmp and the libpng calls.
enum class PngStatus { Ok, LibError, BadColorType };

struct RawPng {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int channels = 0;
  std::vector<unsigned char> pixels;  // sized by the caller after the header read
};

PngStatus read_header(png_structp png, png_infop info, std::FILE* fp, RawPng* out) {
  if (setjmp(png_jmpbuf(png))) return PngStatus::LibError;
  png_init_io(png, fp);
  png_read_info(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth != 8 || (color_type != PNG_COLOR_TYPE_RGB && color_type != PNG_COLOR_TYPE_RGB_ALPHA)) {
    return PngStatus::BadColorType;
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 4;
  return PngStatus::Ok;
}

PngStatus read_rows(png_structp png, png_infop info, png_bytep* rows) {
  if (setjmp(png_jmpbuf(png))) return PngStatus::LibError;
  png_read_image(png, rows);
  png_read_end(png, info);
  return PngStatus::Ok;
}

PngStatus write_png(png_structp png, png_infop info, std::FILE* fp, png_uint_32 width,
                    png_uint_32 height, png_bytep* rows) {
  if (setjmp(png_jmpbuf(png))) return PngStatus::LibError;
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return PngStatus::Ok;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());

  unsigned char signature[8];
  if (std::fread(signature, 1, 8, fp.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw FormatError(path.string() + ": not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng initialisation failed");
  }
  png_set_sig_bytes(png, 8);

  RawPng raw;
  PngStatus status = read_header(png, info, fp.get(), &raw);
  if (status == PngStatus::Ok) {
    raw.pixels.resize(static_cast<std::size_t>(raw.width) * raw.height * raw.channels);
    std::vector<png_bytep> rows(raw.height);
    for (png_uint_32 y = 0; y < raw.height; ++y) {
      rows[y] = raw.pixels.data() + static_cast<std::size_t>(y) * raw.width * raw.channels;
    }
    status = read_rows(png, info, rows.data());
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (status == PngStatus::BadColorType) {
    throw FormatError(path.string() + ": unsupported PNG color type (need 8-bit RGB or RGBA)");
  }
  if (status == PngStatus::LibError) throw FormatError(path.string() + ": corrupt PNG");

  const auto h = static_cast<Index>(raw.height);
  const auto w = static_cast<Index>(raw.width);
  std::array<Plane, 3> planes{Plane(h, w), Plane(h, w), Plane(h, w)};
  std::size_t i = 0;
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c, i += static_cast<std::size_t>(raw.channels)) {
      for (int ch = 0; ch < 3; ++ch) planes[ch](r, c) = raw.pixels[i + ch] / 255.0;
    }
  }
  return Image(std::move(planes[0]), std::move(planes[1]), std::move(planes[2]));
}

void save_image(const Image& image, const std::filesystem::path& path) {
  const auto h = image.height();
  const auto w = image.width();
  std::vector<unsigned char> pixels(static_cast<std::size_t>(h * w * 3));
  std::size_t i = 0;
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const double v = std::round(image.channel(ch)(r, c) * 255.0);
        pixels[i++] = static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (Index y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = pixels.data() + y * w * 3;

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialisation failed");
  }
  const PngStatus status = write_png(png, info, fp.get(), static_cast<png_uint_32>(w),
                                     static_cast<png_uint_32>(h), rows.data());
  png_destroy_write_struct(&png, &info);
  if (status != PngStatus::Ok) throw IoError("PNG encoding failed for " + path.string());
  if (std::fflush(fp.get()) != 0) throw IoError("write failed for " + path.string());
}

}  // namespace protoexplain
