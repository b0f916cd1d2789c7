// analysis.hpp - statistics over explanations and prototype redundancy.
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "protoexplain/explain.hpp"
#include "protoexplain/proto_engine.hpp"

namespace protoexplain {

// --- redundancy ------------------------------------------------------------

inline constexpr double kDefaultTau = 0.15;

enum class PairCategory { Identical, VisuallySimilar, Other };

std::string_view name_of(PairCategory c);

struct PairRecord {
  int class_index = 0;
  Index first = 0;   // first < second
  Index second = 0;
  double latent_distance = 0.0;
  double explanation_distance = 0.0;
  PairCategory category = PairCategory::Other;
};

/// All unordered same-class prototype pairs, sorted by (class, first, second),
/// with latent distances filled in. Explanation distance and category are
/// left at their defaults.
std::vector<PairRecord> pairs(const PrototypeSet& protos);

/// Identical when d == 0, VisuallySimilar when 0 < d < tau, else Other.
PairCategory categorize(double latent_distance, double tau = kDefaultTau);

double explanation_distance(const ImportanceVector& a, const ImportanceVector& b);

/// Fills explanation distances (from `scores`, indexed by prototype) and categories.
void annotate_pairs(std::vector<PairRecord>& records, std::span<const ImportanceVector> scores,
                    double tau = kDefaultTau);

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

/// Uniform bins over [lo, hi]; each bin is [left, right) except the last,
/// which also includes hi. Values outside the range are dropped.
Histogram histogram(std::span<const double> values, int bins, double lo, double hi);

// --- Welch's t-test --------------------------------------------------------

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double var_a = 0.0;  // unbiased sample variances
  double var_b = 0.0;
};

/// Two-sided Welch test. Both samples need at least two values. When both
/// variances are zero the result is t = 0, p = 1 for equal means and
/// t = +-inf, p = 0 otherwise.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

// --- distributions ---------------------------------------------------------

struct Summary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::size_t count = 0;
  double whisker_low = 0.0;   // max(min, q1 - 1.5 IQR)
  double whisker_high = 0.0;  // min(max, q3 + 1.5 IQR)
};

/// Quantile by linear interpolation between order statistics at
/// position q * (n - 1) (the inclusive method).
double quantile(std::span<const double> sorted, double q);

Summary summarize(std::span<const double> values);

using DistributionSummary = std::array<Summary, kNumCharacteristics>;

/// One summary per characteristic over the explanations' global scores.
DistributionSummary distribution_summary(std::span<const ImportanceVector> explanations);

/// Moment-based stand-in for a formal normality test. This is not
/// Shapiro-Wilk; it reports sample skewness, excess kurtosis and the
/// Jarque-Bera statistic with its asymptotic chi-square(2) p-value.
struct NormalityReport {
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double jarque_bera = 0.0;
  double p_value = 1.0;
};

NormalityReport normality_report(std::span<const double> values);

}  // namespace protoexplain
