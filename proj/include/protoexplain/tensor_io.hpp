// tensor_io.hpp - core array types and the PXTF interchange format.
//
// File layout (all integers little-endian):
//   bytes 0-3   magic "PXTF"
//   byte  4     version (1)
//   byte  5     dtype (1 = float32, 2 = float64)
//   byte  6     ndim
//   bytes 7..   ndim x u64 dims
//   then        row-major payload, product(dims) elements
//
// A zero-dimensional shape holds exactly one scalar.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "protoexplain/types.hpp"

namespace protoexplain {

enum class DType : std::uint8_t { Float32 = 1, Float64 = 2 };

std::size_t element_size(DType dtype);

inline constexpr std::array<char, 4> kTensorMagic{'P', 'X', 'T', 'F'};
inline constexpr std::uint8_t kTensorVersion = 1;

/// Raw tensor as it sits on disk. The payload is kept as bytes so a
/// read/write cycle reproduces the file exactly.
struct TensorFile {
  DType dtype = DType::Float64;
  std::vector<std::uint64_t> shape;
  std::vector<std::byte> payload;

  std::uint64_t element_count() const;

  /// Decodes the payload, widening float32 to double.
  std::vector<double> values() const;

  /// Encodes `values` with `dtype`. Throws DimensionError if the count does
  /// not match the shape.
  static TensorFile from_values(DType dtype, std::vector<std::uint64_t> shape,
                                std::span<const double> values);

  bool operator==(const TensorFile&) const = default;
};

TensorFile read_tensor(const std::filesystem::path& path);
void write_tensor(const TensorFile& tensor, const std::filesystem::path& path);

// In-memory encode/decode, shared by the file functions.
std::vector<std::byte> encode_tensor(const TensorFile& tensor);
TensorFile decode_tensor(std::span<const std::byte> bytes);

/// H x W x 3 RGB image with every value finite and in [0, 1].
class Image {
 public:
  Image() = default;
  /// Throws ArgumentError when the planes disagree in size, are empty, or
  /// hold values outside [0, 1].
  Image(Plane red, Plane green, Plane blue);

  static Image filled(Index height, Index width, double red, double green, double blue);

  Index height() const { return channels_[0].rows(); }
  Index width() const { return channels_[0].cols(); }
  const Plane& channel(int c) const { return channels_[static_cast<std::size_t>(c)]; }
  const std::array<Plane, 3>& channels() const { return channels_; }

  bool operator==(const Image& other) const;

 private:
  std::array<Plane, 3> channels_;
};

/// H' x W' x D latent feature tensor. Columns are stored one per row of a
/// (H'*W') x D row-major matrix, in row-major location order.
class LatentMap {
 public:
  LatentMap() = default;
  /// Throws ArgumentError on empty dimensions, a size mismatch, or
  /// non-finite entries.
  LatentMap(Index rows, Index cols, Matrix columns);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index depth() const { return columns_.cols(); }
  Index locations() const { return rows_ * cols_; }

  const Matrix& columns() const { return columns_; }
  auto column(Index row, Index col) const { return columns_.row(row * cols_ + col); }

  bool operator==(const LatentMap& other) const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Matrix columns_;
};

TensorFile image_to_tensor(const Image& image, DType dtype = DType::Float32);
Image tensor_to_image(const TensorFile& tensor);

TensorFile latent_to_tensor(const LatentMap& latent, DType dtype = DType::Float64);
/// Accepts an H' x W' x D tensor.
LatentMap tensor_to_latent(const TensorFile& tensor);

TensorFile matrix_to_tensor(const Matrix& m, DType dtype = DType::Float64);
Matrix tensor_to_matrix(const TensorFile& tensor);

/// PNG, 8 bits per channel, RGB or RGBA (alpha dropped). Byte b loads as b/255.
Image load_image(const std::filesystem::path& path);
/// Writes 8-bit RGB; each value is stored as round(v * 255) clamped to [0, 255].
void save_image(const Image& image, const std::filesystem::path& path);

/// Quantizes to the byte grid save_image would write, without touching disk.
Image quantize_8bit(const Image& image);

}  // namespace protoexplain
