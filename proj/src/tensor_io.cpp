#include "protoexplain/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "protoexplain/errors.hpp"

namespace protoexplain {
namespace {

constexpr std::size_t kHeaderFixedBytes = 7;

template <typename UInt>
void put_le(std::vector<std::byte>& out, UInt value) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFFu));
  }
}

template <typename UInt>
UInt get_le(const std::byte* p) {
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
  }
  return value;
}

std::uint64_t checked_product(std::span<const std::uint64_t> shape) {
  std::uint64_t n = 1;
  for (auto d : shape) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
      throw FormatError("tensor shape overflows element count");
    }
    n *= d;
  }
  return n;
}

void check_finite_unit(const Plane& p) {
  if (!p.allFinite() || (p < 0.0).any() || (p > 1.0).any()) {
    throw ArgumentError("image values must be finite and within [0, 1]");
  }
}

}  // namespace

std::size_t element_size(DType dtype) {
  switch (dtype) {
    case DType::Float32:
      return 4;
    case DType::Float64:
      return 8;
  }
  throw FormatError("unknown dtype");
}

std::uint64_t TensorFile::element_count() const { return checked_product(shape); }

std::vector<double> TensorFile::values() const {
  const auto count = element_count();
  const auto width = element_size(dtype);
  if (payload.size() != count * width) {
    throw TruncationError("tensor payload size does not match shape");
  }
  std::vector<double> out(count);
  const std::byte* p = payload.data();
  for (std::uint64_t i = 0; i < count; ++i, p += width) {
    if (dtype == DType::Float32) {
      out[i] = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)));
    } else {
      out[i] = std::bit_cast<double>(get_le<std::uint64_t>(p));
    }
  }
  return out;
}

TensorFile TensorFile::from_values(DType dtype, std::vector<std::uint64_t> shape,
                                   std::span<const double> values) {
  TensorFile t;
  t.dtype = dtype;
  t.shape = std::move(shape);
  if (t.element_count() != values.size()) {
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape element count " +
                         std::to_string(t.element_count()));
  }
  t.payload.reserve(values.size() * element_size(dtype));
  for (double v : values) {
    if (dtype == DType::Float32) {
      put_le(t.payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_le(t.payload, std::bit_cast<std::uint64_t>(v));
    }
  }
  return t;
}

std::vector<std::byte> encode_tensor(const TensorFile& tensor) {
  if (tensor.shape.size() > 255) {
    throw FormatError("tensor rank exceeds 255");
  }
  if (tensor.payload.size() != tensor.element_count() * element_size(tensor.dtype)) {
    throw DimensionError("tensor payload size does not match shape");
  }
  std::vector<std::byte> out;
  out.reserve(kHeaderFixedBytes + 8 * tensor.shape.size() + tensor.payload.size());
  for (char c : kTensorMagic) out.push_back(static_cast<std::byte>(c));
  out.push_back(static_cast<std::byte>(kTensorVersion));
  out.push_back(static_cast<std::byte>(tensor.dtype));
  out.push_back(static_cast<std::byte>(tensor.shape.size()));
  for (auto d : tensor.shape) put_le<std::uint64_t>(out, d);
  out.insert(out.end(), tensor.payload.begin(), tensor.payload.end());
  return out;
}

TensorFile decode_tensor(std::span<const std::byte> bytes) {
  if (bytes.size() < kHeaderFixedBytes) {
    throw FormatError("tensor header is shorter than 7 bytes");
  }
  for (std::size_t i = 0; i < kTensorMagic.size(); ++i) {
    if (std::to_integer<char>(bytes[i]) != kTensorMagic[i]) {
      throw FormatError("bad tensor magic, expected PXTF");
    }
  }
  if (std::to_integer<std::uint8_t>(bytes[4]) != kTensorVersion) {
    throw FormatError("unsupported tensor version " +
                      std::to_string(std::to_integer<int>(bytes[4])));
  }
  TensorFile t;
  const auto code = std::to_integer<std::uint8_t>(bytes[5]);
  if (code != 1 && code != 2) {
    throw FormatError("unknown dtype code " + std::to_string(code));
  }
  t.dtype = static_cast<DType>(code);
  const std::size_t ndim = std::to_integer<std::uint8_t>(bytes[6]);
  const std::size_t header = kHeaderFixedBytes + 8 * ndim;
  if (bytes.size() < header) {
    throw FormatError("tensor header truncated in dims");
  }
  t.shape.resize(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    t.shape[i] = get_le<std::uint64_t>(bytes.data() + kHeaderFixedBytes + 8 * i);
  }
  const auto count = t.element_count();
  const auto expected = count * element_size(t.dtype);
  if (count > std::numeric_limits<std::uint64_t>::max() / element_size(t.dtype) ||
      bytes.size() - header != expected) {
    throw TruncationError("tensor payload holds " + std::to_string(bytes.size() - header) +
                          " bytes, header declares " + std::to_string(expected));
  }
  t.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

TensorFile read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  try {
    return decode_tensor(std::as_bytes(std::span<const char>(raw)));
  } catch (const FormatError& e) {
    // Keep the subtype (truncation vs header) while adding the path.
    if (dynamic_cast<const TruncationError*>(&e) != nullptr) {
      throw TruncationError(path.string() + ": " + e.what());
    }
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_tensor(const TensorFile& tensor, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

Image::Image(Plane red, Plane green, Plane blue)
    : channels_{std::move(red), std::move(green), std::move(blue)} {
  const auto h = channels_[0].rows();
  const auto w = channels_[0].cols();
  if (h < 1 || w < 1) throw ArgumentError("image must be at least 1x1");
  for (const auto& c : channels_) {
    if (c.rows() != h || c.cols() != w) throw ArgumentError("image channels differ in size");
    check_finite_unit(c);
  }
}

Image Image::filled(Index height, Index width, double red, double green, double blue) {
  return Image(Plane::Constant(height, width, red), Plane::Constant(height, width, green),
               Plane::Constant(height, width, blue));
}

bool Image::operator==(const Image& other) const {
  if (height() != other.height() || width() != other.width()) return false;
  for (int c = 0; c < 3; ++c) {
    if ((channel(c) != other.channel(c)).any()) return false;
  }
  return true;
}

LatentMap::LatentMap(Index rows, Index cols, Matrix columns)
    : rows_(rows), cols_(cols), columns_(std::move(columns)) {
  if (rows_ < 1 || cols_ < 1 || columns_.cols() < 1) {
    throw ArgumentError("latent map dimensions must be positive");
  }
  if (columns_.rows() != rows_ * cols_) {
    throw ArgumentError("latent column count does not match rows*cols");
  }
  if (!columns_.allFinite()) throw ArgumentError("latent map holds non-finite values");
}

bool LatentMap::operator==(const LatentMap& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && columns_.cols() == other.columns_.cols() &&
         columns_ == other.columns_;
}

TensorFile image_to_tensor(const Image& image, DType dtype) {
  const auto h = image.height();
  const auto w = image.width();
  std::vector<double> values(static_cast<std::size_t>(h * w * 3));
  std::size_t i = 0;
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      for (int ch = 0; ch < 3; ++ch) values[i++] = image.channel(ch)(r, c);
    }
  }
  return TensorFile::from_values(
      dtype, {static_cast<std::uint64_t>(h), static_cast<std::uint64_t>(w), 3}, values);
}

Image tensor_to_image(const TensorFile& tensor) {
  if (tensor.shape.size() != 3 || tensor.shape[2] != 3) {
    throw DimensionError("image tensor must have shape H x W x 3");
  }
  const auto h = static_cast<Index>(tensor.shape[0]);
  const auto w = static_cast<Index>(tensor.shape[1]);
  const auto values = tensor.values();
  std::array<Plane, 3> planes{Plane(h, w), Plane(h, w), Plane(h, w)};
  std::size_t i = 0;
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      for (auto& p : planes) p(r, c) = values[i++];
    }
  }
  return Image(std::move(planes[0]), std::move(planes[1]), std::move(planes[2]));
}

TensorFile latent_to_tensor(const LatentMap& latent, DType dtype) {
  const Matrix& m = latent.columns();
  return TensorFile::from_values(
      dtype,
      {static_cast<std::uint64_t>(latent.rows()), static_cast<std::uint64_t>(latent.cols()),
       static_cast<std::uint64_t>(latent.depth())},
      std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

LatentMap tensor_to_latent(const TensorFile& tensor) {
  if (tensor.shape.size() != 3) throw DimensionError("latent tensor must have shape H' x W' x D");
  const auto rows = static_cast<Index>(tensor.shape[0]);
  const auto cols = static_cast<Index>(tensor.shape[1]);
  const auto depth = static_cast<Index>(tensor.shape[2]);
  const auto values = tensor.values();
  Matrix m = Eigen::Map<const Matrix>(values.data(), rows * cols, depth);
  return LatentMap(rows, cols, std::move(m));
}

TensorFile matrix_to_tensor(const Matrix& m, DType dtype) {
  return TensorFile::from_values(
      dtype, {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
      std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

Matrix tensor_to_matrix(const TensorFile& tensor) {
  if (tensor.shape.size() != 2) throw DimensionError("expected a rank-2 tensor");
  const auto values = tensor.values();
  return Eigen::Map<const Matrix>(values.data(), static_cast<Index>(tensor.shape[0]),
                                  static_cast<Index>(tensor.shape[1]));
}

Image quantize_8bit(const Image& image) {
  auto q = [](const Plane& p) -> Plane {
    return ((p * 255.0).round().max(0.0).min(255.0)) / 255.0;
  };
  return Image(q(image.channel(0)), q(image.channel(1)), q(image.channel(2)));
}

}  // namespace protoexplain
