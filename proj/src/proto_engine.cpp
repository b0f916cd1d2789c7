#include "protoexplain/proto_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "protoexplain/errors.hpp"
#include "protoexplain/parallel.hpp"

namespace protoexplain {

namespace {

std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(path.string() + ": expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key,
                           const std::filesystem::path& path) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError(path.string() + ": missing '" + key + "'");
  return it->second;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw FormatError("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw FormatError("cannot parse " + what + " '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& what) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("cannot parse " + what + " '" + s + "'");
  return v;
}

}  // namespace

PrototypeSet::PrototypeSet(Matrix prototypes, std::vector<int> class_of, int num_classes,
                           Matrix fc_weights, double epsilon)
    : prototypes_(std::move(prototypes)),
      class_of_(std::move(class_of)),
      num_classes_(num_classes),
      fc_weights_(std::move(fc_weights)),
      epsilon_(epsilon) {
  if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) throw ArgumentError("epsilon must be finite and > 0");
  if (num_classes_ < 1) throw ArgumentError("num_classes must be >= 1");
  if (prototypes_.cols() < 1) throw ArgumentError("prototype depth must be >= 1");
  if (!prototypes_.allFinite()) throw ArgumentError("prototype vectors must be finite");
  if (static_cast<Index>(class_of_.size()) != prototypes_.rows()) {
    throw ArgumentError("class assignment count differs from prototype count");
  }
  for (int c : class_of_) {
    if (c < 0 || c >= num_classes_) throw ArgumentError("prototype class index out of range");
  }
  if (fc_weights_.rows() != num_classes_ || fc_weights_.cols() != prototypes_.rows()) {
    throw ArgumentError("fc_weights must be num_classes x num_prototypes");
  }
  if (!fc_weights_.allFinite()) throw ArgumentError("fc_weights must be finite");
}

Matrix PrototypeSet::default_fc_weights(std::span<const int> class_of, int num_classes) {
  Matrix w = Matrix::Constant(num_classes, static_cast<Index>(class_of.size()), -0.5);
  for (std::size_t j = 0; j < class_of.size(); ++j) w(class_of[j], static_cast<Index>(j)) = 1.0;
  return w;
}

PrototypeSet load_prototype_set(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.txt";
  const auto meta = read_manifest(meta_path);
  const double epsilon = parse_double(require(meta, "epsilon", meta_path), "epsilon");
  const long depth = parse_long(require(meta, "depth", meta_path), "depth");
  const long num_classes = parse_long(require(meta, "num_classes", meta_path), "num_classes");

  Matrix protos = tensor_to_matrix(read_tensor(dir / "prototypes.pxtf"));
  if (protos.cols() != depth) {
    throw FormatError(dir.string() + ": prototypes have depth " + std::to_string(protos.cols()) +
                      ", meta.txt declares " + std::to_string(depth));
  }
  const TensorFile classes_t = read_tensor(dir / "classes.pxtf");
  if (classes_t.shape.size() != 1) throw FormatError(dir.string() + ": classes tensor must be rank 1");
  std::vector<int> classes;
  for (double v : classes_t.values()) {
    if (v != std::floor(v)) throw FormatError(dir.string() + ": class index " + std::to_string(v) + " is not integral");
    classes.push_back(static_cast<int>(v));
  }
  Matrix fc = tensor_to_matrix(read_tensor(dir / "fc_weights.pxtf"));
  return PrototypeSet(std::move(protos), std::move(classes), static_cast<int>(num_classes), std::move(fc),
                      epsilon);
}

void save_prototype_set(const PrototypeSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_tensor(matrix_to_tensor(set.prototypes()), dir / "prototypes.pxtf");
  std::vector<double> classes(set.classes().begin(), set.classes().end());
  write_tensor(TensorFile::from_values(DType::Float64, {classes.size()}, classes), dir / "classes.pxtf");
  write_tensor(matrix_to_tensor(set.fc_weights()), dir / "fc_weights.pxtf");
  std::ofstream meta(dir / "meta.txt", std::ios::trunc);
  if (!meta) throw IoError("cannot write " + (dir / "meta.txt").string());
  std::ostringstream eps;
  eps.precision(17);
  eps << set.epsilon();
  meta << "epsilon=" << eps.str() << "\n"
       << "depth=" << set.depth() << "\n"
       << "num_classes=" << set.num_classes() << "\n";
}

void check_depth(const LatentMap& latent, Index depth) {
  if (latent.depth() != depth) {
    throw DimensionError("latent depth " + std::to_string(latent.depth()) + " differs from prototype depth " +
                         std::to_string(depth));
  }
}

std::vector<PrototypeScore> score_latent(const LatentMap& latent, const PrototypeSet& protos) {
  std::vector<PrototypeScore> out;
  out.reserve(static_cast<std::size_t>(protos.size()));
  for (Index j = 0; j < protos.size(); ++j) {
    PrototypeScore s;
    s.map = activation_map(latent, protos.prototype(j));
    s.location = s.map.argmin;
    s.g = similarity(s.map.min_distance, protos.epsilon());
    out.push_back(std::move(s));
  }
  return out;
}

namespace {
void check_min_size(const Image& image, const FeatureExtractor& extractor) {
  const Index m = extractor.min_input_size();
  if (image.height() < m || image.width() < m) {
    throw DimensionError("image " + std::to_string(image.height()) + "x" + std::to_string(image.width()) +
                         " is below the extractor minimum of " + std::to_string(m));
  }
}
}  // namespace

std::vector<PrototypeScore> score_image(const Image& image, const FeatureExtractor& extractor,
                                        const PrototypeSet& protos) {
  check_min_size(image, extractor);
  return score_latent(extractor.extract(image), protos);
}

double score_latent_at(const LatentMap& latent, const PrototypeSet& protos, Index j, LatentLocation loc) {
  if (j < 0 || j >= protos.size()) throw BoundsError("prototype index " + std::to_string(j) + " out of range");
  if (loc.row < 0 || loc.row >= latent.rows() || loc.col < 0 || loc.col >= latent.cols()) {
    throw BoundsError("latent location (" + std::to_string(loc.row) + ", " + std::to_string(loc.col) +
                      ") outside " + std::to_string(latent.rows()) + "x" + std::to_string(latent.cols()) + " grid");
  }
  check_depth(latent, protos.depth());
  const double d = squared_distance(latent, loc.row * latent.cols() + loc.col, protos.prototype(j));
  return similarity(d, protos.epsilon());
}

double score_at_location(const Image& image, const FeatureExtractor& extractor, const PrototypeSet& protos,
                         Index j, LatentLocation loc) {
  check_min_size(image, extractor);
  return score_latent_at(extractor.extract(image), protos, j, loc);
}

Classification classify(const Vector& g, const PrototypeSet& protos) {
  if (g.size() != protos.size()) {
    throw DimensionError("similarity vector has " + std::to_string(g.size()) + " entries, expected " +
                         std::to_string(protos.size()));
  }
  Classification out;
  out.class_scores = protos.fc_weights() * g;
  const double peak = out.class_scores.maxCoeff();
  const Vector e = (out.class_scores.array() - peak).exp();
  out.probabilities = e / e.sum();
  Index best = 0;
  for (Index c = 1; c < out.class_scores.size(); ++c) {
    if (out.class_scores[c] > out.class_scores[best]) best = c;
  }
  out.predicted = static_cast<int>(best);
  return out;
}

Plane upsample_activation(const ActivationMap& map, Index out_h, Index out_w) {
  const Index h = map.distances.rows();
  const Index w = map.distances.cols();
  if (out_h < h || out_w < w) throw ArgumentError("upsample target must be at least the map size");
  const Plane src = map.distances.array();
  Plane out(out_h, out_w);
  const double sy = out_h > 1 ? static_cast<double>(h - 1) / static_cast<double>(out_h - 1) : 0.0;
  const double sx = out_w > 1 ? static_cast<double>(w - 1) / static_cast<double>(out_w - 1) : 0.0;
  for (Index r = 0; r < out_h; ++r) {
    const double y = static_cast<double>(r) * sy;
    const auto y0 = std::min<Index>(static_cast<Index>(std::floor(y)), h - 1);
    const Index y1 = std::min(y0 + 1, h - 1);
    const double fy = y - static_cast<double>(y0);
    for (Index c = 0; c < out_w; ++c) {
      const double x = static_cast<double>(c) * sx;
      const auto x0 = std::min<Index>(static_cast<Index>(std::floor(x)), w - 1);
      const Index x1 = std::min(x0 + 1, w - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = fx == 0.0 ? src(y0, x0) : (1.0 - fx) * src(y0, x0) + fx * src(y0, x1);
      const double bottom = fx == 0.0 ? src(y1, x0) : (1.0 - fx) * src(y1, x0) + fx * src(y1, x1);
      out(r, c) = fy == 0.0 ? top : (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

double latent_l1(const LatentMap& a, const LatentMap& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.depth() != b.depth()) {
    throw DimensionError("latent maps differ in shape");
  }
  return (a.columns() - b.columns()).cwiseAbs().sum() / static_cast<double>(a.columns().size());
}

double mean_latent_l1(std::span<const LatentMap> originals, std::span<const LatentMap> modified) {
  if (originals.empty()) throw ArgumentError("mean_latent_l1 needs at least one pair");
  if (originals.size() != modified.size()) throw ArgumentError("original and modified lists differ in length");
  double total = 0.0;
  for (std::size_t k = 0; k < originals.size(); ++k) total += latent_l1(originals[k], modified[k]);
  return total / static_cast<double>(originals.size());
}

double mean_latent_l1(std::span<const Image> originals, std::span<const Image> modified,
                      const FeatureExtractor& extractor) {
  if (originals.empty()) throw ArgumentError("mean_latent_l1 needs at least one pair");
  if (originals.size() != modified.size()) throw ArgumentError("original and modified lists differ in length");
  for (std::size_t k = 0; k < originals.size(); ++k) {
    if (originals[k].height() != modified[k].height() || originals[k].width() != modified[k].width()) {
      throw ArgumentError("image pair " + std::to_string(k) + " differs in size");
    }
  }
  const auto a = extract_all(originals, extractor);
  const auto b = extract_all(modified, extractor);
  return mean_latent_l1(a, b);
}

std::vector<LatentMap> extract_all(std::span<const Image> images, const FeatureExtractor& extractor) {
  for (const auto& img : images) check_min_size(img, extractor);
  std::vector<LatentMap> out(images.size());
  parallel_for(images.size(), [&](std::size_t k) { out[k] = extractor.extract(images[k]); });
  return out;
}

}  // namespace protoexplain
