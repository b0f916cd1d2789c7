#include "protoexplain/cli/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "protoexplain/analysis.hpp"
#include "protoexplain/cli/config.hpp"
#include "protoexplain/cli/report.hpp"
#include "protoexplain/cli/svg.hpp"
#include "protoexplain/cli/synth.hpp"
#include "protoexplain/errors.hpp"
#include "protoexplain/explain.hpp"
#include "protoexplain/reference_extractor.hpp"

namespace protoexplain::cli {
namespace {

namespace fs = std::filesystem;
using report::Json;

struct NamedImage {
  std::string name;
  Image image;
};

std::vector<std::string> characteristic_labels() {
  std::vector<std::string> out;
  for (auto c : kAllCharacteristics) out.emplace_back(name_of(c));
  return out;
}

std::string padded(Index j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04ld", static_cast<long>(j));
  return buf;
}

std::vector<NamedImage> load_images(const fs::path& dir) {
  std::vector<NamedImage> out;
  for (const auto& p : list_pngs(dir)) out.push_back({p.stem().string(), load_image(p)});
  if (out.empty()) throw UsageError("no PNG images in " + dir.string());
  return out;
}

std::vector<Image> images_only(const std::vector<NamedImage>& named) {
  std::vector<Image> out;
  out.reserve(named.size());
  for (const auto& n : named) out.push_back(n.image);
  return out;
}

void require_dir(const fs::path& p, const char* flag) {
  if (p.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_directory(p)) throw UsageError(std::string(flag) + " " + p.string() + " is not a directory");
}

void ensure_output(const fs::path& p) {
  if (p.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw UsageError("cannot create output directory " + p.string());
}

PrototypeSet load_prototypes(const RunConfig& cfg) {
  require_dir(cfg.prototype_dir, "--prototypes");
  try {
    return load_prototype_set(cfg.prototype_dir);
  } catch (const IoError& e) {
    throw UsageError(e.what());
  }
}

Json extractor_json(const RunConfig& cfg) {
  Json j;
  if (cfg.use_latents()) {
    j["kind"] = "external_latents";
    j["latents"] = cfg.latent_dir.generic_string();
  } else {
    j["kind"] = "reference";
    j["seed"] = cfg.extractor_seed;
    j["depth"] = cfg.depth;
  }
  return j;
}

Json config_json(const RunConfig& cfg) {
  Json j;
  auto path = [](const fs::path& p) -> Json { return p.empty() ? Json(nullptr) : Json(p.generic_string()); };
  j["images"] = path(cfg.image_dir);
  j["image"] = path(cfg.image_file);
  j["prototypes"] = path(cfg.prototype_dir);
  j["latents"] = path(cfg.latent_dir);
  j["calibration_file"] = path(cfg.calibration_file);
  j["extractor"] = extractor_json(cfg);
  j["target"] = cfg.target;
  j["tolerance"] = cfg.tolerance;
  j["max_iter"] = cfg.max_iter;
  j["tau"] = cfg.tau;
  Json overrides = Json::object();
  for (auto c : kAllCharacteristics) {
    const auto& o = cfg.overrides[index_of(c)];
    overrides[std::string(name_of(c))] = o ? Json(*o) : Json(nullptr);
  }
  j["strength_overrides"] = std::move(overrides);
  return j;
}

// --- strengths -------------------------------------------------------------

struct ResolvedStrengths {
  StrengthSet strengths = kZeroStrengths;
  std::array<std::string, kNumCharacteristics> sources;
  std::optional<CalibrationResult> calibration;
};

/// Per characteristic: explicit flag, else the calibration file, else the
/// fixed default. Shape has no fixed default and is calibrated inline.
ResolvedStrengths resolve_strengths(const RunConfig& cfg, std::span<const Image> images,
                                    const FeatureExtractor& extractor) {
  ResolvedStrengths r;
  std::optional<CalibrationResult> from_file;
  if (!cfg.calibration_file.empty()) {
    from_file = report::calibration_from_json(report::read_json(cfg.calibration_file));
  }
  const std::array<std::optional<double>, kNumCharacteristics> defaults{
      kDefaultContrast, kDefaultSaturation, kDefaultHue, std::nullopt, kDefaultTexture};
  std::vector<Characteristic> to_calibrate;
  for (auto c : kAllCharacteristics) {
    const std::size_t i = index_of(c);
    if (cfg.overrides[i]) {
      r.strengths[i] = *cfg.overrides[i];
      r.sources[i] = "override";
    } else if (from_file) {
      const CalibrationEntry* e = from_file->find(c);
      if (e == nullptr) throw UsageError("calibration file has no entry for " + std::string(name_of(c)));
      if (!e->converged) {
        throw CalibrationError("calibration file entry for " + std::string(name_of(c)) + " did not converge");
      }
      r.strengths[i] = e->strength;
      r.sources[i] = "calibration_file";
    } else if (defaults[i]) {
      r.strengths[i] = *defaults[i];
      r.sources[i] = "default";
    } else {
      to_calibrate.push_back(c);
    }
  }
  if (from_file) r.calibration = from_file;
  if (!to_calibrate.empty()) {
    CalibrationResult inline_result;
    inline_result.target = cfg.target;
    inline_result.tolerance = cfg.tolerance;
    for (auto c : to_calibrate) {
      CalibrationEntry e = calibrate(c, images, extractor, cfg.calibration_options());
      if (!e.converged) throw CalibrationError(std::string(name_of(c)) + ": " + e.message);
      r.strengths[index_of(c)] = e.strength;
      r.sources[index_of(c)] = "calibrated";
      inline_result.entries.push_back(e);
    }
    if (!r.calibration) r.calibration = inline_result;
  }
  return r;
}

Json strengths_block(const ResolvedStrengths& r) {
  Json j;
  j["values"] = report::strengths_json(r.strengths);
  Json src = Json::object();
  for (auto c : kAllCharacteristics) src[std::string(name_of(c))] = r.sources[index_of(c)];
  j["sources"] = std::move(src);
  return j;
}

// --- external latents --------------------------------------------------------

struct NamedLatents {
  std::string name;
  ImageLatents latents;
};

bool has_characteristic_suffix(const std::string& stem) {
  for (auto c : kAllCharacteristics) {
    const std::string suffix = "_" + std::string(name_of(c));
    if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return true;
    }
  }
  return false;
}

/// A latent directory holds <stem>.pxtf for each original image and
/// <stem>_<characteristic>.pxtf for each of its modified copies.
std::vector<NamedLatents> load_latent_dir(const fs::path& dir) {
  require_dir(dir, "--latents");
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".pxtf") continue;
    const std::string stem = entry.path().stem().string();
    if (!has_characteristic_suffix(stem)) stems.push_back(stem);
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw UsageError("no latent tensors in " + dir.string());
  std::vector<NamedLatents> out;
  for (const auto& stem : stems) {
    NamedLatents n;
    n.name = stem;
    n.latents.original = tensor_to_latent(read_tensor(dir / (stem + ".pxtf")));
    for (auto c : kAllCharacteristics) {
      const fs::path p = dir / (stem + "_" + std::string(name_of(c)) + ".pxtf");
      if (!fs::exists(p)) throw UsageError("missing modified latent " + p.string());
      n.latents.modified[index_of(c)] = tensor_to_latent(read_tensor(p));
    }
    out.push_back(std::move(n));
  }
  return out;
}

// --- shared option groups ----------------------------------------------------

void add_extractor_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--extractor-seed", cfg.extractor_seed, "Seed of the reference extractor weights");
  sub->add_option("--depth", cfg.depth, "Latent depth of the reference extractor");
}

void add_calibration_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--target", cfg.target, "Mean per-element latent L1 distance to calibrate to");
  sub->add_option("--tol", cfg.tolerance, "Relative calibration tolerance");
  sub->add_option("--max-iter", cfg.max_iter, "Bisection iteration cap");
}

void add_strength_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--calibration", cfg.calibration_file, "calibration.json providing all five strengths");
  for (auto c : kAllCharacteristics) {
    const std::string name(name_of(c));
    sub->add_option_function<double>(
        "--" + name, [&cfg, c](double v) { cfg.overrides[index_of(c)] = v; },
        "Strength override for " + name);
  }
}

// --- subcommands -------------------------------------------------------------

int cmd_modify(const std::string& characteristic, double strength, const fs::path& in, const fs::path& out_dir,
               std::ostream& out) {
  const auto c = parse_characteristic(characteristic);
  if (!c) throw UsageError("unknown characteristic '" + characteristic + "'");
  if (!std::isfinite(strength)) throw UsageError("--strength must be finite");
  ensure_output(out_dir);
  std::vector<fs::path> inputs;
  if (fs::is_directory(in)) {
    inputs = list_pngs(in);
  } else if (fs::is_regular_file(in)) {
    inputs.push_back(in);
  } else {
    throw UsageError("input " + in.string() + " does not exist");
  }
  for (const auto& p : inputs) {
    const Image modified = apply({*c, strength}, load_image(p));
    save_image(modified, out_dir / (p.stem().string() + "_" + characteristic + ".png"));
  }
  out << "modified " << inputs.size() << " image(s) with " << characteristic << " strength " << strength << "\n";
  return kExitOk;
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  if (cfg.use_latents()) throw UsageError("calibration needs an extractor; it cannot run on precomputed latents");
  require_dir(cfg.image_dir, "--images");
  ensure_output(cfg.output_dir);
  const auto images = images_only(load_images(cfg.image_dir));
  const ReferenceExtractor extractor(cfg.extractor_seed, cfg.depth);
  const CalibrationResult result = calibrate_all(images, extractor, cfg.calibration_options());

  Json j;
  j["schema"] = "protoexplain.report";
  j["version"] = report::kReportVersion;
  j["kind"] = "calibration";
  j["config"] = config_json(cfg);
  j["image_count"] = images.size();
  j["calibration"] = report::calibration_json(result);
  report::write_json(j, cfg.output_dir / "calibration.json");
  for (const auto& e : result.entries) {
    out << std::left << std::setw(11) << name_of(e.characteristic) << " strength=" << e.strength
        << " achieved=" << e.achieved << " iterations=" << e.iterations << (e.converged ? "" : "  NOT CONVERGED")
        << "\n";
  }
  return result.all_converged() ? kExitOk : kExitNotConverged;
}

int cmd_explain_global(const RunConfig& cfg, bool with_contributions, std::ostream& out) {
  cfg.validate();
  ensure_output(cfg.output_dir);
  const PrototypeSet protos = load_prototypes(cfg);

  std::vector<std::string> names;
  std::vector<PrototypeOutcome> outcomes;
  std::optional<ResolvedStrengths> strengths;
  if (cfg.use_latents()) {
    auto named = load_latent_dir(cfg.latent_dir);
    std::vector<ImageLatents> latents;
    for (auto& n : named) {
      names.push_back(n.name);
      latents.push_back(std::move(n.latents));
    }
    outcomes = explain_all_latents(latents, protos);
  } else {
    require_dir(cfg.image_dir, "--images");
    const auto named = load_images(cfg.image_dir);
    for (const auto& n : named) names.push_back(n.name);
    const auto images = images_only(named);
    const ReferenceExtractor extractor(cfg.extractor_seed, cfg.depth);
    strengths = resolve_strengths(cfg, images, extractor);
    outcomes = explain_all(images, ExplainContext{extractor, protos, strengths->strengths});
  }

  Json j;
  j["schema"] = "protoexplain.report";
  j["version"] = report::kReportVersion;
  j["kind"] = "global_explanations";
  j["config"] = config_json(cfg);
  j["epsilon"] = protos.epsilon();
  j["strengths"] = strengths ? strengths_block(*strengths) : Json(nullptr);
  j["calibration"] =
      strengths && strengths->calibration ? report::calibration_json(*strengths->calibration) : Json(nullptr);
  j["images"] = names;
  Json entries = Json::array();
  const fs::path svg_dir = cfg.output_dir / "svg";
  fs::create_directories(svg_dir);
  const auto labels = characteristic_labels();
  std::size_t degenerate = 0;
  for (const auto& o : outcomes) {
    Json e;
    e["index"] = o.prototype;
    e["class"] = protos.class_of(o.prototype);
    e["degenerate"] = !o.explanation.has_value();
    if (o.explanation) {
      const GlobalExplanation& g = *o.explanation;
      e["weight_sum"] = g.weight_sum;
      e["scores"] = report::scores_json(g.scores);
      if (with_contributions) {
        Json contrib = Json::array();
        for (std::size_t k = 0; k < g.contributions.size(); ++k) {
          Json c;
          c["image"] = names[k];
          c["g"] = g.contributions[k].g;
          c["local"] = report::scores_json(g.contributions[k].local);
          contrib.push_back(std::move(c));
        }
        e["contributions"] = std::move(contrib);
      }
      report::write_text(svg::bar_chart("Prototype " + std::to_string(o.prototype) + " (class " +
                                            std::to_string(protos.class_of(o.prototype)) + ")",
                                        labels, g.scores),
                         svg_dir / ("prototype_" + padded(o.prototype) + ".svg"));
    } else {
      ++degenerate;
      e["weight_sum"] = nullptr;
      e["scores"] = nullptr;
      e["error"] = o.error;
    }
    entries.push_back(std::move(e));
  }
  j["prototypes"] = std::move(entries);
  report::write_json(j, cfg.output_dir / "explanations.json");
  out << "explained " << outcomes.size() << " prototype(s) over " << names.size() << " image(s)";
  if (degenerate > 0) out << ", " << degenerate << " flagged degenerate";
  out << "\n";
  return kExitOk;
}

int cmd_explain_local(const RunConfig& cfg, std::optional<long> prototype, bool all, std::ostream& out) {
  cfg.validate();
  if (prototype.has_value() == all) throw UsageError("give exactly one of --prototype J or --all");
  if (cfg.use_latents()) throw UsageError("explain-local works on images and needs the reference extractor");
  ensure_output(cfg.output_dir);
  const PrototypeSet protos = load_prototypes(cfg);
  if (prototype && (*prototype < 0 || *prototype >= protos.size())) {
    throw UsageError("--prototype " + std::to_string(*prototype) + " is out of range (have " +
                     std::to_string(protos.size()) + ")");
  }

  std::vector<NamedImage> named;
  if (!cfg.image_file.empty()) {
    if (!fs::is_regular_file(cfg.image_file)) throw UsageError("--image " + cfg.image_file.string() + " not found");
    named.push_back({cfg.image_file.stem().string(), load_image(cfg.image_file)});
  } else {
    require_dir(cfg.image_dir, "--image or --images");
    named = load_images(cfg.image_dir);
  }

  const ReferenceExtractor extractor(cfg.extractor_seed, cfg.depth);
  // Strength resolution (including inline shape calibration) uses the
  // explained images themselves when no calibration file is given.
  const auto images = images_only(named);
  const ResolvedStrengths strengths = resolve_strengths(cfg, images, extractor);
  const ExplainContext ctx{extractor, protos, strengths.strengths};
  const auto labels = characteristic_labels();

  if (all) {
    std::ofstream csv(cfg.output_dir / "local.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write local.csv");
    csv << std::setprecision(17) << "image,prototype,row,col,g";
    for (const auto& l : labels) csv << ",g_hat_" << l;
    for (const auto& l : labels) csv << ",phi_" << l;
    csv << "\n";
    for (const auto& n : named) {
      const auto sets = extract_latent_sets(std::span<const Image>(&n.image, 1), ctx);
      for (Index j = 0; j < protos.size(); ++j) {
        const LocalExplanation e = local_from_latents(sets.front(), protos, j);
        csv << n.name << "," << j << "," << e.location.row << "," << e.location.col << "," << e.g;
        for (double v : e.g_hat) csv << "," << v;
        for (double v : e.scores) csv << "," << v;
        csv << "\n";
      }
    }
    out << "wrote local explanations for " << named.size() << " image(s) x " << protos.size()
        << " prototype(s) to local.csv\n";
    return kExitOk;
  }

  const Index j = *prototype;
  for (const auto& n : named) {
    const auto sets = extract_latent_sets(std::span<const Image>(&n.image, 1), ctx);
    const LocalExplanation e = local_from_latents(sets.front(), protos, j);
    const ActivationMap map = activation_map(sets.front().original, protos.prototype(j));

    Json r;
    r["schema"] = "protoexplain.report";
    r["version"] = report::kReportVersion;
    r["kind"] = "local_explanation";
    r["config"] = config_json(cfg);
    r["epsilon"] = protos.epsilon();
    r["strengths"] = strengths_block(strengths);
    r["image"] = n.name;
    r["prototype"] = j;
    r["class"] = protos.class_of(j);
    r["location"] = {{"row", e.location.row}, {"col", e.location.col}};
    r["g"] = e.g;
    Json chars = Json::array();
    for (auto c : kAllCharacteristics) {
      const std::size_t i = index_of(c);
      chars.push_back({{"characteristic", std::string(name_of(c))}, {"g_hat", e.g_hat[i]}, {"phi", e.scores[i]}});
    }
    r["characteristics"] = std::move(chars);
    r["scores"] = report::scores_json(e.scores);
    const std::string stem = "local_" + n.name + "_p" + padded(j);
    report::write_json(r, cfg.output_dir / (stem + ".json"));
    const Plane heat = upsample_activation(map, n.image.height(), n.image.width());
    report::write_text(svg::bars_with_heatmap(n.name + " vs prototype " + std::to_string(j), labels, e.scores, heat),
                       cfg.output_dir / (stem + ".svg"));
  }
  out << "wrote " << named.size() << " local explanation(s) for prototype " << j << "\n";
  return kExitOk;
}

int cmd_redundancy(const RunConfig& cfg, const fs::path& explanations, int bins, std::ostream& out) {
  cfg.validate();
  if (bins < 1) throw UsageError("--bins must be >= 1");
  ensure_output(cfg.output_dir);
  const PrototypeSet protos = load_prototypes(cfg);
  if (explanations.empty()) throw UsageError("--explanations is required");
  const auto entries = report::global_entries_from_json(report::read_json(explanations));
  if (static_cast<Index>(entries.size()) != protos.size()) {
    throw UsageError("explanation report covers " + std::to_string(entries.size()) + " prototypes, set has " +
                     std::to_string(protos.size()));
  }
  std::vector<ImportanceVector> scores(entries.size());
  std::vector<bool> valid(entries.size());
  for (const auto& e : entries) {
    if (e.prototype < 0 || e.prototype >= protos.size() || e.class_index != protos.class_of(e.prototype)) {
      throw UsageError("explanation report does not match the prototype set");
    }
    const auto k = static_cast<std::size_t>(e.prototype);
    valid[k] = e.scores.has_value();
    scores[k] = e.scores.value_or(ImportanceVector{});
  }

  auto records = pairs(protos);
  annotate_pairs(records, scores, cfg.tau);

  std::ofstream csv(cfg.output_dir / "pairs.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write pairs.csv");
  csv << std::setprecision(17) << "class,i,j,latent_dist,expl_dist,category\n";
  std::map<std::string, std::size_t> counts{{"identical", 0}, {"visually_similar", 0}, {"other", 0}};
  std::vector<double> all_dist, similar_dist;
  for (const auto& r : records) {
    const bool usable = valid[static_cast<std::size_t>(r.first)] && valid[static_cast<std::size_t>(r.second)];
    csv << r.class_index << "," << r.first << "," << r.second << "," << r.latent_distance << ",";
    if (usable) csv << r.explanation_distance;
    csv << "," << name_of(r.category) << "\n";
    ++counts[std::string(name_of(r.category))];
    if (usable) {
      all_dist.push_back(r.explanation_distance);
      if (r.category == PairCategory::VisuallySimilar) similar_dist.push_back(r.explanation_distance);
    }
  }
  double hi = 0.0;
  for (double d : all_dist) hi = std::max(hi, d);
  if (hi == 0.0) hi = 1.0;
  const Histogram h_all = histogram(all_dist, bins, 0.0, hi);
  const Histogram h_sim = histogram(similar_dist, bins, 0.0, hi);

  Json j;
  j["schema"] = "protoexplain.report";
  j["version"] = report::kReportVersion;
  j["kind"] = "redundancy";
  j["config"] = config_json(cfg);
  j["explanations"] = explanations.generic_string();
  j["tau"] = cfg.tau;
  j["total_pairs"] = records.size();
  j["counts"] = counts;
  j["histogram"] = {{"edges", h_all.edges}, {"all", h_all.counts}, {"visually_similar", h_sim.counts}};
  report::write_json(j, cfg.output_dir / "redundancy.json");
  report::write_text(svg::histogram_overlay("Explanation distance of same-class prototype pairs", h_all, "all pairs",
                                            h_sim, "visually similar pairs"),
                     cfg.output_dir / "histogram.svg");
  out << records.size() << " pairs: " << counts["identical"] << " identical, " << counts["visually_similar"]
      << " visually similar, " << counts["other"] << " other\n";
  return kExitOk;
}

int cmd_stats(const RunConfig& cfg, const fs::path& a_path, const fs::path& b_path, std::ostream& out) {
  if (a_path.empty() || b_path.empty()) throw UsageError("--a and --b are required");
  ensure_output(cfg.output_dir);
  const auto a = report::global_entries_from_json(report::read_json(a_path));
  const auto b = report::global_entries_from_json(report::read_json(b_path));
  if (a.size() != b.size()) throw UsageError("explanation sets cover different prototype counts");
  std::array<std::vector<double>, kNumCharacteristics> col_a, col_b;
  std::vector<ImportanceVector> rows_a;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].prototype != b[k].prototype || a[k].class_index != b[k].class_index) {
      throw UsageError("explanation sets refer to different prototypes");
    }
    if (!a[k].scores || !b[k].scores) continue;
    rows_a.push_back(*a[k].scores);
    for (std::size_t i = 0; i < kNumCharacteristics; ++i) {
      col_a[i].push_back((*a[k].scores)[i]);
      col_b[i].push_back((*b[k].scores)[i]);
    }
  }
  if (rows_a.size() < 2) throw UsageError("need at least two prototypes with scores in both sets");

  Json tests = Json::array();
  Json normality = Json::array();
  for (auto c : kAllCharacteristics) {
    const std::size_t i = index_of(c);
    Json w = report::welch_json(welch_t_test(col_a[i], col_b[i]));
    w["characteristic"] = std::string(name_of(c));
    tests.push_back(std::move(w));
    const auto na = normality_report(col_a[i]);
    const auto nb = normality_report(col_b[i]);
    auto nj = [](const NormalityReport& n) {
      return Json{{"skewness", n.skewness},
                  {"excess_kurtosis", n.excess_kurtosis},
                  {"jarque_bera", n.jarque_bera},
                  {"p_value", n.p_value}};
    };
    normality.push_back({{"characteristic", std::string(name_of(c))}, {"a", nj(na)}, {"b", nj(nb)}});
  }
  const DistributionSummary summary = distribution_summary(rows_a);
  Json summaries = Json::array();
  for (auto c : kAllCharacteristics) {
    Json s = report::summary_json(summary[index_of(c)]);
    s["characteristic"] = std::string(name_of(c));
    summaries.push_back(std::move(s));
  }

  Json j;
  j["schema"] = "protoexplain.report";
  j["version"] = report::kReportVersion;
  j["kind"] = "stats";
  j["a"] = a_path.generic_string();
  j["b"] = b_path.generic_string();
  j["prototypes_compared"] = rows_a.size();
  j["welch"] = std::move(tests);
  j["normality"] = std::move(normality);
  j["normality_method"] = "moment-based (skewness, excess kurtosis, Jarque-Bera); not Shapiro-Wilk";
  j["summary_a"] = std::move(summaries);
  report::write_json(j, cfg.output_dir / "stats.json");
  const auto labels = characteristic_labels();
  report::write_text(svg::box_plot("Global importance scores", labels, summary), cfg.output_dir / "boxplot.svg");
  out << "compared " << rows_a.size() << " prototype(s) across " << kNumCharacteristics << " characteristics\n";
  return kExitOk;
}

int cmd_synth(const synth::Options& options, const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  ensure_output(cfg.output_dir);
  if (options.n_classes < 2) throw UsageError("--classes must be >= 2");
  if (options.n_per_class < 1) throw UsageError("--per-class must be >= 1");
  if (options.protos_per_class < 0 || options.protos_per_class > options.n_per_class) {
    throw UsageError("--protos-per-class must be between 0 and --per-class");
  }
  const ReferenceExtractor extractor(cfg.extractor_seed, cfg.depth);
  if (options.image_size < extractor.min_input_size()) {
    throw UsageError("--size must be at least " + std::to_string(extractor.min_input_size()));
  }
  const synth::Dataset ds = synth::generate(options, extractor);
  synth::write_dataset(ds, cfg.output_dir);

  Json j;
  j["schema"] = "protoexplain.report";
  j["version"] = report::kReportVersion;
  j["kind"] = "synthetic_dataset";
  j["seed"] = options.seed;
  j["classes"] = options.n_classes;
  j["per_class"] = options.n_per_class;
  j["protos_per_class"] = options.protos_per_class;
  j["image_size"] = options.image_size;
  j["epsilon"] = options.epsilon;
  j["extractor"] = extractor_json(cfg);
  Json styles = Json::array();
  for (int c = 0; c < options.n_classes; ++c) {
    const auto s = synth::class_style(c);
    styles.push_back({{"class", c},
                      {"hue", s.hue},
                      {"shape", static_cast<int>(s.shape)},
                      {"texture", static_cast<int>(s.texture)}});
  }
  j["class_styles"] = std::move(styles);
  Json sources = Json::array();
  for (const auto& s : ds.sources) {
    sources.push_back({{"prototype", s.prototype},
                       {"image", ds.samples[s.sample].name},
                       {"row", s.location.row},
                       {"col", s.location.col}});
  }
  j["prototype_sources"] = std::move(sources);
  report::write_json(j, cfg.output_dir / "synth.json");
  out << "wrote " << ds.samples.size() << " images and " << ds.prototypes.size() << " prototypes to "
      << cfg.output_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"protoexplain - explain prototype similarity through image characteristics", "protoexplain"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  RunConfig cfg;
  std::string characteristic;
  double strength = 0.0;
  fs::path modify_in, modify_out;
  bool with_contributions = false;
  std::optional<long> local_prototype;
  bool local_all = false;
  fs::path explanations_file, stats_a, stats_b;
  int bins = 20;
  synth::Options synth_options;

  auto* modify = app.add_subcommand("modify", "Apply one characteristic modification to PNG images");
  modify->add_option("--char", characteristic, "contrast | saturation | hue | shape | texture")->required();
  modify->add_option("--strength", strength, "Modification strength")->required();
  modify->add_option("input", modify_in, "Input PNG or directory")->required();
  modify->add_option("output", modify_out, "Output directory")->required();

  auto* calibrate_cmd = app.add_subcommand("calibrate", "Calibrate modification strengths to a latent distance");
  calibrate_cmd->add_option("--images", cfg.image_dir, "Directory of PNG images");
  calibrate_cmd->add_option("--latents", cfg.latent_dir, "Not supported: calibration needs an extractor");
  calibrate_cmd->add_option("--out", cfg.output_dir, "Output directory");
  add_extractor_options(calibrate_cmd, cfg);
  add_calibration_options(calibrate_cmd, cfg);

  auto* global = app.add_subcommand("explain-global", "Global importance scores for every prototype");
  global->add_option("--images", cfg.image_dir, "Directory of PNG images");
  global->add_option("--prototypes", cfg.prototype_dir, "Prototype directory");
  global->add_option("--latents", cfg.latent_dir, "Precomputed latents (<stem>.pxtf and <stem>_<char>.pxtf)");
  global->add_option("--out", cfg.output_dir, "Output directory");
  global->add_flag("--contributions", with_contributions, "Include per-image (g, local scores) in the report");
  add_extractor_options(global, cfg);
  add_calibration_options(global, cfg);
  add_strength_options(global, cfg);

  auto* local = app.add_subcommand("explain-local", "Local importance scores for images against prototypes");
  local->add_option("--image", cfg.image_file, "One PNG image");
  local->add_option("--images", cfg.image_dir, "Directory of PNG images");
  local->add_option("--prototypes", cfg.prototype_dir, "Prototype directory");
  local->add_option_function<long>("--prototype", [&](long v) { local_prototype = v; }, "Prototype index");
  local->add_flag("--all", local_all, "All prototypes, streamed to local.csv");
  local->add_option("--out", cfg.output_dir, "Output directory");
  add_extractor_options(local, cfg);
  add_calibration_options(local, cfg);
  add_strength_options(local, cfg);

  auto* redundancy = app.add_subcommand("redundancy", "Same-class prototype pair analysis");
  redundancy->add_option("--prototypes", cfg.prototype_dir, "Prototype directory");
  redundancy->add_option("--explanations", explanations_file, "explanations.json from explain-global");
  redundancy->add_option("--tau", cfg.tau, "Latent distance threshold for visually similar pairs");
  redundancy->add_option("--bins", bins, "Histogram bins");
  redundancy->add_option("--out", cfg.output_dir, "Output directory");

  auto* stats = app.add_subcommand("stats", "Compare two global explanation sets");
  stats->add_option("--a", stats_a, "First explanations.json");
  stats->add_option("--b", stats_b, "Second explanations.json");
  stats->add_option("--out", cfg.output_dir, "Output directory");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset and prototype set");
  synth_cmd->add_option("--seed", synth_options.seed, "Dataset seed");
  synth_cmd->add_option("--classes", synth_options.n_classes, "Number of classes");
  synth_cmd->add_option("--per-class", synth_options.n_per_class, "Images per class");
  synth_cmd->add_option("--protos-per-class", synth_options.protos_per_class, "Prototypes per class");
  synth_cmd->add_option("--size", synth_options.image_size, "Image side length in pixels");
  synth_cmd->add_option("--epsilon", synth_options.epsilon, "Similarity epsilon stored with the prototypes");
  synth_cmd->add_option("--out", cfg.output_dir, "Output directory");
  add_extractor_options(synth_cmd, cfg);

  try {
    const auto args = expand_config_args(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (modify->parsed()) return cmd_modify(characteristic, strength, modify_in, modify_out, out);
    if (calibrate_cmd->parsed()) return cmd_calibrate(cfg, out);
    if (global->parsed()) return cmd_explain_global(cfg, with_contributions, out);
    if (local->parsed()) return cmd_explain_local(cfg, local_prototype, local_all, out);
    if (redundancy->parsed()) return cmd_redundancy(cfg, explanations_file, bins, out);
    if (stats->parsed()) return cmd_stats(cfg, stats_a, stats_b, out);
    if (synth_cmd->parsed()) return cmd_synth(synth_options, cfg, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CalibrationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  err << "error: no subcommand\n";
  return kExitUsage;
}

}  // namespace protoexplain::cli
