// proto_engine.hpp - prototype scoring: latent distances, similarity, class head.
#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "protoexplain/tensor_io.hpp"
#include "protoexplain/types.hpp"

namespace protoexplain {

/// Maps an image to its latent feature tensor. Implementations must be
/// deterministic and safe to call concurrently.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual LatentMap extract(const Image& image) const = 0;
  virtual Index depth() const = 0;
  /// Smallest accepted image side, in pixels.
  virtual Index min_input_size() const { return 1; }
};

inline constexpr double kDefaultEpsilon = 1e-4;

/// P prototype vectors of length D with their class assignment and the
/// C x P fully-connected head.
class PrototypeSet {
 public:
  PrototypeSet() = default;
  /// Throws ArgumentError when any invariant fails.
  PrototypeSet(Matrix prototypes, std::vector<int> class_of, int num_classes, Matrix fc_weights,
               double epsilon = kDefaultEpsilon);

  Index size() const { return prototypes_.rows(); }
  Index depth() const { return prototypes_.cols(); }
  int num_classes() const { return num_classes_; }
  double epsilon() const { return epsilon_; }

  const Matrix& prototypes() const { return prototypes_; }
  auto prototype(Index j) const { return prototypes_.row(j); }
  int class_of(Index j) const { return class_of_[static_cast<std::size_t>(j)]; }
  const std::vector<int>& classes() const { return class_of_; }
  const Matrix& fc_weights() const { return fc_weights_; }

  /// Default head: weight 1 to the prototype's own class, -0.5 elsewhere.
  static Matrix default_fc_weights(std::span<const int> class_of, int num_classes);

 private:
  Matrix prototypes_;
  std::vector<int> class_of_;
  int num_classes_ = 0;
  Matrix fc_weights_;
  double epsilon_ = kDefaultEpsilon;
};

/// Reads a prototype directory: prototypes.pxtf (P x D), classes.pxtf (P),
/// fc_weights.pxtf (C x P) and meta.txt (epsilon=, depth=, num_classes=).
PrototypeSet load_prototype_set(const std::filesystem::path& dir);
void save_prototype_set(const PrototypeSet& set, const std::filesystem::path& dir);

struct LatentLocation {
  Index row = 0;
  Index col = 0;
  bool operator==(const LatentLocation&) const = default;
};

struct ActivationMap {
  Matrix distances;  // H' x W' squared Euclidean distances
  LatentLocation argmin;
  double min_distance = 0.0;
};

/// Squared Euclidean distance from `proto` to every latent column.
/// Ties resolve to the first location in row-major order.
template <typename Derived>
ActivationMap activation_map(const LatentMap& latent, const Eigen::MatrixBase<Derived>& proto);

/// Similarity log((d + 1) / (d + eps)), written as log1p so large d keeps its
/// relative precision.
template <typename Scalar>
Scalar similarity(Scalar d, Scalar epsilon) {
  using std::log1p;
  return log1p((Scalar(1) - epsilon) / (d + epsilon));
}

struct PrototypeScore {
  double g = 0.0;
  LatentLocation location;
  ActivationMap map;
};

/// One record per prototype, in prototype order.
std::vector<PrototypeScore> score_latent(const LatentMap& latent, const PrototypeSet& protos);
std::vector<PrototypeScore> score_image(const Image& image, const FeatureExtractor& extractor,
                                        const PrototypeSet& protos);

/// Similarity of prototype j at exactly `loc`, with no argmin search.
double score_latent_at(const LatentMap& latent, const PrototypeSet& protos, Index j,
                       LatentLocation loc);
double score_at_location(const Image& image, const FeatureExtractor& extractor,
                         const PrototypeSet& protos, Index j, LatentLocation loc);

struct Classification {
  Vector class_scores;
  Vector probabilities;
  int predicted = 0;
};

Classification classify(const Vector& g, const PrototypeSet& protos);

/// Corner-aligned bilinear upsampling of the distance map.
Plane upsample_activation(const ActivationMap& map, Index out_h, Index out_w);

/// Mean over pairs of the per-element L1 distance between latent maps.
double mean_latent_l1(std::span<const LatentMap> originals, std::span<const LatentMap> modified);
double mean_latent_l1(std::span<const Image> originals, std::span<const Image> modified,
                      const FeatureExtractor& extractor);

/// Sum |a - b| / element count for one pair.
double latent_l1(const LatentMap& a, const LatentMap& b);

/// Extracts every image, in parallel when worker threads are available.
/// Output order equals input order.
std::vector<LatentMap> extract_all(std::span<const Image> images, const FeatureExtractor& extractor);

// ---------------------------------------------------------------------------

void check_depth(const LatentMap& latent, Index depth);

/// Squared distance of latent column `index` to `proto`. Shared by the map
/// and by fixed-location scoring so both round identically.
inline double squared_distance(const LatentMap& latent, Index index, const RowVector& proto) {
  return (latent.columns().row(index) - proto).squaredNorm();
}

template <typename Derived>
ActivationMap activation_map(const LatentMap& latent, const Eigen::MatrixBase<Derived>& proto) {
  check_depth(latent, proto.size());
  const RowVector p = proto.derived().reshaped().transpose();
  Vector distances(latent.locations());
  Index best = 0;
  for (Index i = 0; i < distances.size(); ++i) {
    distances[i] = squared_distance(latent, i, p);
    if (distances[i] < distances[best]) best = i;
  }
  ActivationMap out;
  out.min_distance = distances[best];
  out.argmin = {best / latent.cols(), best % latent.cols()};
  out.distances = Eigen::Map<const Matrix>(distances.data(), latent.rows(), latent.cols());
  return out;
}

}  // namespace protoexplain
