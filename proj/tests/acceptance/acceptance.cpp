// Runs every primary acceptance criterion and prints one PASS/FAIL line each.
#include <boost/math/distributions/students_t.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <iostream>
#include <sstream>
#include <string>

#include "protoexplain/analysis.hpp"
#include "protoexplain/cli/commands.hpp"
#include "protoexplain/cli/synth.hpp"
#include "protoexplain/explain.hpp"
#include "protoexplain/reference_extractor.hpp"
#include "protoexplain/rng.hpp"
#include "../support/probes.hpp"
#include "../support/tempdir.hpp"

using namespace protoexplain;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Shared {
  std::vector<Image> images;  // 40-image synthetic set
  synth::Dataset dataset;
  std::optional<double> shape_strength;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

StrengthSet default_strengths(const Shared& s) {
  return {0.45, 0.7, 0.1, s.shape_strength.value_or(1.0), 4.0};
}

Outcome similarity_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const double err = std::abs(similarity(0.0, 1e-4) - std::log(1e4));
  bool decreasing = true;
  double prev = similarity(0.0, 1e-4);
  for (int i = 1; i < 1000; ++i) {
    const double d = 1e-6 * std::pow(1e15, i / 999.0);
    const double s = similarity(d, 1e-4);
    decreasing = decreasing && s < prev;
    prev = s;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {err <= 1e-12 && decreasing && secs < 1.0,
          fmt("|sim(0)-ln 1e4| = %.2e", err) + (decreasing ? ", strictly decreasing on 1000 d" : ", NOT decreasing") +
              fmt(", %.3f s", secs)};
}

Outcome zero_identity(const Shared& s) {
  const auto start = std::chrono::steady_clock::now();
  const ReferenceExtractor ex;
  const ExplainContext ctx{ex, s.dataset.prototypes, kZeroStrengths};
  std::size_t nonzero = 0, checked = 0;
  for (const auto& o : explain_all(s.images, ctx)) {
    if (!o.explanation) return {false, "prototype " + std::to_string(o.prototype) + " degenerate"};
    for (double v : o.explanation->scores) nonzero += v != 0.0, ++checked;
    for (const auto& c : o.explanation->contributions) {
      for (double v : c.local) nonzero += v != 0.0, ++checked;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {nonzero == 0 && secs < 60.0 && checked == 20 * 41 * 5,
          std::to_string(checked) + " scores over " + std::to_string(s.images.size()) + " images x " +
              std::to_string(s.dataset.prototypes.size()) + " prototypes, " + std::to_string(nonzero) + " nonzero" +
              fmt(", %.1f s", secs)};
}

Outcome weighted_mean_oracle(const Shared& s) {
  const ReferenceExtractor ex;
  const ExplainContext ctx{ex, s.dataset.prototypes, default_strengths(s)};
  double worst = 0.0;
  std::size_t count = 0;
  for (const auto& o : explain_all(s.images, ctx)) {
    if (!o.explanation) return {false, "prototype " + std::to_string(o.prototype) + " degenerate"};
    for (std::size_t i = 0; i < kNumCharacteristics; ++i) {
      long double num = 0, den = 0;
      for (const auto& c : o.explanation->contributions) {
        num += static_cast<long double>(c.g) * c.local[i];
        den += c.g;
      }
      worst = std::max(worst, std::abs(static_cast<double>(num / den) - o.explanation->scores[i]));
    }
    ++count;
  }
  // The retained contributions must themselves be the per-image local scores.
  const LocalExplanation direct = local_importance(s.images[7], 3, ctx);
  const GlobalExplanation g = global_importance(s.images, 3, ctx);
  const bool consistent = g.contributions[7].g == direct.g && g.contributions[7].local == direct.scores;
  return {worst <= 1e-12 && consistent && count == 20,
          fmt("max |global - brute force| = %.2e over %g prototypes", worst, static_cast<double>(count)) +
              (consistent ? "" : ", contributions differ from local_importance")};
}

Outcome calibration(Shared& s) {
  const auto start = std::chrono::steady_clock::now();
  const ReferenceExtractor ex;
  const CalibrationResult r = calibrate_all(s.images, ex);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool ok = r.entries.size() == 5;
  std::ostringstream d;
  for (const auto& e : r.entries) {
    const double rel = std::abs(e.achieved - 0.0002) / 0.0002;
    ok = ok && e.converged && rel <= 0.01 && e.iterations <= 40;
    d << name_of(e.characteristic) << "=" << e.strength << " (" << e.iterations << " it, " << rel * 100 << "%) ";
    if (e.characteristic == Characteristic::Shape && e.converged) s.shape_strength = e.strength;
  }
  d << fmt("%.1f s", secs);
  return {ok && secs < 300.0, d.str()};
}

Outcome nlm_oracle() {
  // Narrow-band noise (+-6 grey levels) so off-centre weights are far from
  // zero at h = 4; full-range noise would leave the filter an identity.
  SplitMix64 rng(2021);
  double worst = 0.0, moved = 0.0;
  for (int k = 0; k < 10; ++k) {
    Plane ch[3];
    for (auto& p : ch) {
      p.resize(8, 8);
      const double base = rng.uniform(0.1, 0.9);
      for (Index i = 0; i < p.size(); ++i) p(i) = base + rng.uniform(-6.0, 6.0) / 255.0;
    }
    const Image img(ch[0], ch[1], ch[2]);
    const Image out = modify_texture(img, 4.0);
    for (int c = 0; c < 3; ++c) {
      moved = std::max(moved, 255.0 * (out.channel(c) - ch[c]).abs().maxCoeff());
      for (Index py = 0; py < 8; ++py) {
        for (Index px = 0; px < 8; ++px) {
          double num = 0, den = 0;
          for (Index qy = 0; qy < 8; ++qy) {
            for (Index qx = 0; qx < 8; ++qx) {
              double d2 = 0;
              for (int oy = -3; oy <= 3; ++oy) {
                for (int ox = -3; ox <= 3; ++ox) {
                  auto at = [&](Index y, Index x) {
                    return 255.0 * ch[c](std::clamp<Index>(y, 0, 7), std::clamp<Index>(x, 0, 7));
                  };
                  const double diff = at(py + oy, px + ox) - at(qy + oy, qx + ox);
                  d2 += diff * diff;
                }
              }
              const double w = std::exp(-(d2 / 49.0) / 16.0);
              num += w * ch[c](qy, qx);
              den += w;
            }
          }
          worst = std::max(worst, std::abs(out.channel(c)(py, px) - num / den));
        }
      }
    }
  }
  return {worst <= 1e-9 && moved > 0.5,
          fmt("max deviation %.2e over 10 images x 3 channels (filter moved pixels by up to %.2f grey levels)", worst,
              moved)};
}

int dominant(const ImportanceVector& v) {
  int best = 0;
  for (int i = 1; i < 5; ++i) {
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

bool strictly_dominates(const ImportanceVector& v, Characteristic c) {
  for (auto o : kAllCharacteristics) {
    if (o != c && !(v[index_of(c)] > v[index_of(o)])) return false;
  }
  return true;
}

Outcome directional(const Shared& s) {
  const StrengthSet strengths = default_strengths(s);
  // Hue: colour-defined prototypes of the synthetic set, read by a hue probe.
  const testing::HueProbe hue_probe;
  synth::Options opts;
  const synth::Dataset hue_ds = synth::generate(opts, hue_probe);
  int hue_wins = 0, hue_total = 0;
  for (const auto& o : explain_all(s.images, ExplainContext{hue_probe, hue_ds.prototypes, strengths})) {
    ++hue_total;
    hue_wins += o.explanation && strictly_dominates(o.explanation->scores, Characteristic::Hue);
  }
  // Texture: fine-grain fields (texture is their only structure) against
  // flat fields, read by a gradient-energy probe.
  const testing::TextureProbe tex_probe;
  std::vector<Image> fields;
  for (int k = 0; k < 8; ++k) fields.push_back(testing::grain_field(900 + k, 0.125 * k, 6.0 / 255.0, 64));
  for (int k = 0; k < 4; ++k) fields.push_back(testing::grain_field(950 + k, 0.125 * k + 0.06, 0.0, 64));
  Matrix protos(4, 1);
  for (Index j = 0; j < 4; ++j) {
    protos(j, 0) = tex_probe.extract(fields[static_cast<std::size_t>(2 * j)]).columns()(5 * j % 16, 0);
  }
  const std::vector<int> classes{0, 0, 0, 0};
  const PrototypeSet tex_set(protos, classes, 2, PrototypeSet::default_fc_weights(classes, 2));
  int tex_wins = 0, tex_total = 0;
  ImportanceVector example{};
  for (const auto& o : explain_all(fields, ExplainContext{tex_probe, tex_set, strengths})) {
    ++tex_total;
    if (o.explanation) {
      tex_wins += strictly_dominates(o.explanation->scores, Characteristic::Texture);
      if (o.prototype == 0) example = o.explanation->scores;
    }
  }
  std::ostringstream d;
  d << "hue dominant for " << hue_wins << "/" << hue_total << " synthetic prototypes; texture dominant for "
    << tex_wins << "/" << tex_total << " grain prototypes (e.g. scores";
  for (double v : example) d << " " << v;
  d << ", top=" << name_of(kAllCharacteristics[static_cast<std::size_t>(dominant(example))]) << ")";
  return {hue_total > 0 && hue_wins == hue_total && tex_total > 0 && tex_wins == tex_total, d.str()};
}

Outcome redundancy() {
  SplitMix64 rng(77);
  Matrix protos(40, 8);
  for (Index i = 0; i < protos.size(); ++i) protos(i) = rng.uniform();
  std::vector<int> classes;
  for (int c = 0; c < 4; ++c) classes.insert(classes.end(), 10, c);
  // Class 1: prototype 13 duplicates 11. Class 2: 25 sits 0.05 from 21.
  protos.row(13) = protos.row(11);
  protos.row(25) = protos.row(21);
  protos(25, 0) += 0.05;
  const PrototypeSet set(protos, classes, 4, PrototypeSet::default_fc_weights(classes, 4));
  auto recs = pairs(set);
  std::vector<ImportanceVector> scores(40);
  annotate_pairs(recs, scores, kDefaultTau);
  std::map<int, int> per_class;
  bool dup_identical = false, near_similar = false, rule_holds = true;
  for (const auto& r : recs) {
    ++per_class[r.class_index];
    if (r.first == 11 && r.second == 13) dup_identical = r.category == PairCategory::Identical;
    if (r.first == 21 && r.second == 25) near_similar = r.category == PairCategory::VisuallySimilar;
    const bool in_open = r.latent_distance > 0.0 && r.latent_distance < 0.15;
    rule_holds = rule_holds && (r.latent_distance == 0.0) == (r.category == PairCategory::Identical) &&
                 in_open == (r.category == PairCategory::VisuallySimilar);
  }
  bool counts = recs.size() == 180;
  for (int c = 0; c < 4; ++c) counts = counts && per_class[c] == 45;
  return {counts && dup_identical && near_similar && rule_holds,
          std::to_string(recs.size()) + " pairs (45 per class: " + (counts ? "yes" : "no") +
              "), duplicate identical: " + (dup_identical ? "yes" : "no") +
              ", d=0.05 pair visually similar: " + (near_similar ? "yes" : "no")};
}

Outcome welch_oracle() {
  SplitMix64 rng(55);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto na = 2 + rng.below(60), nb = 2 + rng.below(60);
    std::vector<double> a(na), b(nb);
    const double sa = rng.uniform(0.05, 2), sb = rng.uniform(0.05, 2), shift = rng.uniform(-1, 1);
    for (auto& x : a) x = sa * (rng.uniform() + rng.uniform() - 1.0);
    for (auto& x : b) x = shift + sb * (rng.uniform() + rng.uniform() - 1.0);
    const WelchResult r = welch_t_test(a, b);
    if (!(r.df > 0.0) || !std::isfinite(r.t)) return {false, "degenerate statistic in trial " + std::to_string(trial)};
    const boost::math::students_t dist(r.df);
    const double ref = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    worst = std::max(worst, std::abs(r.p - ref));
  }
  const std::vector<double> same{0.1, 0.4, 0.2, 0.9};
  const WelchResult id = welch_t_test(same, same);
  return {worst <= 1e-8 && id.p == 1.0,
          fmt("max |dp| vs Boost.Math = %.2e on 50 pairs; identical samples p = %g", worst, id.p)};
}

Outcome stability(const Shared& s) {
  const ReferenceExtractor ex;
  synth::Options half;
  std::vector<Image> a, b;
  half.seed = 2;
  for (const auto& x : synth::generate_samples(half)) a.push_back(x.image);
  half.seed = 3;
  for (const auto& x : synth::generate_samples(half)) b.push_back(x.image);
  const ExplainContext ctx{ex, s.dataset.prototypes, default_strengths(s)};
  const auto ra = explain_all(a, ctx);
  const auto rb = explain_all(b, ctx);
  int within = 0;
  std::ostringstream d;
  d << "p:";
  for (auto c : kAllCharacteristics) {
    std::vector<double> xa, xb;
    for (std::size_t j = 0; j < ra.size(); ++j) {
      if (ra[j].explanation && rb[j].explanation) {
        xa.push_back(ra[j].explanation->scores[index_of(c)]);
        xb.push_back(rb[j].explanation->scores[index_of(c)]);
      }
    }
    if (xa.size() < 2) return {false, "too few non-degenerate prototypes"};
    const WelchResult w = welch_t_test(xa, xb);
    const double se = std::sqrt(w.var_a / w.n_a + w.var_b / w.n_b);
    const bool ok = std::abs(w.mean_a - w.mean_b) <= 3.0 * se;
    within += ok;
    d << " " << name_of(c) << "=" << w.p << (ok ? "" : "(outside 3 SE)");
  }
  d << "; " << within << "/5 within 3 SE";
  return {within >= 4, d.str()};
}

Outcome determinism(const Shared& s) {
  testing::TempDir dir;
  synth::write_dataset(s.dataset, dir.path());
  std::string bodies[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path out = dir / ("run" + std::to_string(k));
    std::ostringstream o, e;
    const int code =
        cli::run({"explain-global", "--images", (dir / "images").string(), "--prototypes",
                  (dir / "prototypes").string(), "--shape", std::to_string(s.shape_strength.value_or(1.0)), "--out",
                  out.string()},
                 o, e);
    if (code != 0) return {false, "explain-global exited with " + std::to_string(code) + ": " + e.str()};
    std::ifstream in(out / "explanations.json", std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    bodies[k] = body.str();
  }
  return {!bodies[0].empty() && bodies[0] == bodies[1],
          std::to_string(bodies[0].size()) + " bytes, " + (bodies[0] == bodies[1] ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  Shared shared;
  const ReferenceExtractor ex;
  shared.dataset = synth::generate(synth::Options{}, ex);
  for (const auto& x : shared.dataset.samples) shared.images.push_back(x.image);

  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  // Calibration runs before the criteria that use the calibrated shape strength.
  const std::vector<Criterion> criteria{
      {"similarity-oracle", [] { return similarity_oracle(); }},
      {"zero-modification-identity", [&] { return zero_identity(shared); }},
      {"calibration", [&] { return calibration(shared); }},
      {"weighted-mean-oracle", [&] { return weighted_mean_oracle(shared); }},
      {"nlm-oracle", [] { return nlm_oracle(); }},
      {"directional-sanity", [&] { return directional(shared); }},
      {"redundancy-combinatorics", [] { return redundancy(); }},
      {"welch-oracle", [] { return welch_oracle(); }},
      {"stability", [&] { return stability(shared); }},
      {"determinism", [&] { return determinism(shared); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
