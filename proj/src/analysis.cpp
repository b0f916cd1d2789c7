#include "protoexplain/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "protoexplain/errors.hpp"
#include "protoexplain/special_functions.hpp"

namespace protoexplain {

std::string_view name_of(PairCategory c) {
  switch (c) {
    case PairCategory::Identical:
      return "identical";
    case PairCategory::VisuallySimilar:
      return "visually_similar";
    case PairCategory::Other:
      return "other";
  }
  return "unknown";
}

std::vector<PairRecord> pairs(const PrototypeSet& protos) {
  std::map<int, std::vector<Index>> by_class;
  for (Index j = 0; j < protos.size(); ++j) by_class[protos.class_of(j)].push_back(j);
  std::vector<PairRecord> out;
  for (const auto& [cls, members] : by_class) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        PairRecord r;
        r.class_index = cls;
        r.first = members[a];
        r.second = members[b];
        r.latent_distance = (protos.prototype(r.first) - protos.prototype(r.second)).norm();
        out.push_back(r);
      }
    }
  }
  return out;
}

PairCategory categorize(double latent_distance, double tau) {
  if (latent_distance == 0.0) return PairCategory::Identical;
  if (latent_distance > 0.0 && latent_distance < tau) return PairCategory::VisuallySimilar;
  return PairCategory::Other;
}

double explanation_distance(const ImportanceVector& a, const ImportanceVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

void annotate_pairs(std::vector<PairRecord>& records, std::span<const ImportanceVector> scores, double tau) {
  for (auto& r : records) {
    if (static_cast<std::size_t>(std::max(r.first, r.second)) >= scores.size()) {
      throw BoundsError("pair references a prototype without global scores");
    }
    r.explanation_distance = explanation_distance(scores[static_cast<std::size_t>(r.first)],
                                                  scores[static_cast<std::size_t>(r.second)]);
    r.category = categorize(r.latent_distance, tau);
  }
}

Histogram histogram(std::span<const double> values, int bins, double lo, double hi) {
  if (bins < 1) throw ArgumentError("histogram needs at least one bin");
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) throw ArgumentError("histogram range is empty");
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  const double width = (hi - lo) / bins;
  for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + width * i;
  h.edges.back() = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    if (!(v >= lo && v <= hi)) continue;
    auto bin = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * bins));
    bin = std::min(bin, static_cast<std::size_t>(bins - 1));
    // Guard against round-off placing v on the wrong side of an edge.
    while (bin > 0 && v < h.edges[bin]) --bin;
    while (bin + 1 < h.counts.size() && v >= h.edges[bin + 1]) ++bin;
    ++h.counts[bin];
  }
  return h;
}

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // unbiased
};

Moments moments(std::span<const double> x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(x.size() - 1);
  return m;
}

}  // namespace

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ArgumentError("Welch t-test needs at least two values per sample");
  WelchResult r;
  r.n_a = a.size();
  r.n_b = b.size();
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  r.mean_a = ma.mean;
  r.mean_b = mb.mean;
  r.var_a = ma.var;
  r.var_b = mb.var;
  const double sa = ma.var / static_cast<double>(r.n_a);
  const double sb = mb.var / static_cast<double>(r.n_b);
  const double se2 = sa + sb;
  const double diff = ma.mean - mb.mean;
  if (se2 == 0.0) {
    r.df = static_cast<double>(r.n_a + r.n_b - 2);
    if (diff == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
      r.p = 0.0;
    }
    return r;
  }
  r.t = diff / std::sqrt(se2);
  r.df = se2 * se2 / (sa * sa / static_cast<double>(r.n_a - 1) + sb * sb / static_cast<double>(r.n_b - 1));
  r.p = student_t_two_sided(r.t, r.df);
  return r;
}

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ArgumentError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("summary of an empty sample");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  Summary out;
  out.count = s.size();
  out.min = s.front();
  out.max = s.back();
  out.q1 = quantile(s, 0.25);
  out.median = quantile(s, 0.5);
  out.q3 = quantile(s, 0.75);
  double total = 0.0;
  for (double v : s) total += v;
  out.mean = total / static_cast<double>(s.size());
  const double iqr = out.q3 - out.q1;
  out.whisker_low = std::max(out.min, out.q1 - 1.5 * iqr);
  out.whisker_high = std::min(out.max, out.q3 + 1.5 * iqr);
  return out;
}

DistributionSummary distribution_summary(std::span<const ImportanceVector> explanations) {
  if (explanations.empty()) throw ArgumentError("distribution summary needs at least one explanation");
  DistributionSummary out;
  for (std::size_t i = 0; i < kNumCharacteristics; ++i) {
    std::vector<double> column;
    column.reserve(explanations.size());
    for (const auto& e : explanations) column.push_back(e[i]);
    out[i] = summarize(column);
  }
  return out;
}

NormalityReport normality_report(std::span<const double> values) {
  if (values.size() < 2) throw ArgumentError("normality report needs at least two values");
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  NormalityReport r;
  if (m2 > 0.0) {
    r.skewness = m3 / std::pow(m2, 1.5);
    r.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  r.jarque_bera = n / 6.0 * (r.skewness * r.skewness + 0.25 * r.excess_kurtosis * r.excess_kurtosis);
  r.p_value = std::exp(-0.5 * r.jarque_bera);
  return r;
}

}  // namespace protoexplain
