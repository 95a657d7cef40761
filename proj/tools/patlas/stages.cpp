#include "stages.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <json.hpp>

#include "capi.hpp"

namespace patlas::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void log(const std::string& msg) { std::cerr << "patlas: " << msg << "\n"; }

void require_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw ConfigError(what + " is not configured");
  if (!fs::exists(p)) throw MissingInput("missing " + what + ": " + p.string());
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw LibraryError(PATLAS_ERR_IO, "cannot create directory " + p.string());
}

double round9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

void write_json(const fs::path& p, const json& j) {
  ensure_dir(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw LibraryError(PATLAS_ERR_IO, "cannot write " + p.string());
}

FeatureSetPtr load_features(const fs::path& p, const std::string& what) {
  require_file(p, what);
  patlas_feature_set* raw = nullptr;
  check(patlas_feature_set_load(p.c_str(), &raw));
  return FeatureSetPtr(raw);
}

FeatureSetPtr normalized(const patlas_feature_set* fs) {
  patlas_feature_set* raw = nullptr;
  check(patlas_feature_set_normalize(fs, &raw));
  return FeatureSetPtr(raw);
}

FeatureSetPtr select(const patlas_feature_set* fs, const std::string& diagnosis) {
  patlas_feature_set* raw = nullptr;
  check(patlas_feature_set_select(fs, diagnosis.c_str(), &raw));
  return FeatureSetPtr(raw);
}

std::vector<std::string> labels_of(const patlas_feature_set* fs) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < patlas_feature_set_label_count(fs); ++i)
    out.emplace_back(patlas_feature_set_label(fs, i));
  return out;
}

/// Labels that actually have tiles, in label-set order.
std::vector<std::string> populated_labels(const patlas_feature_set* fs) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < patlas_feature_set_size(fs); ++i)
    seen.insert(patlas_feature_set_diagnosis(fs, i));
  std::vector<std::string> out;
  for (const auto& l : labels_of(fs))
    if (seen.count(l)) out.push_back(l);
  return out;
}

patlas_kmeans_params kmeans_params(const RunConfig& cfg, int k, std::uint64_t seed) {
  auto p = patlas_kmeans_params_default();
  p.k = k;
  p.seed = seed;
  p.max_iter = cfg.max_iter;
  p.tol = cfg.tol;
  p.threads = effective_threads(cfg);
  return p;
}

struct Fit {
  ModelPtr model;
  AssignmentPtr assignment;
};

Fit fit(const patlas_feature_set* fs, const patlas_kmeans_params& p) {
  patlas_cluster_model* m = nullptr;
  patlas_assignment* a = nullptr;
  check(patlas_kmeans_fit(fs, &p, &m, &a));
  return {ModelPtr(m), AssignmentPtr(a)};
}

SweepPtr load_sweep(const fs::path& p) {
  require_file(p, "sweep result (run `sweep` first)");
  patlas_sweep* raw = nullptr;
  check(patlas_sweep_load(p.c_str(), &raw));
  return SweepPtr(raw);
}

int chosen_k(const patlas_sweep* s, const std::string& method) {
  return method == "elbow" ? patlas_sweep_elbow_k(s) : patlas_sweep_compactness_k(s);
}

json t_test_json(const std::string& metric, const std::vector<double>& diffs) {
  json j;
  j["metric"] = metric;
  auto d = json::array();
  for (double v : diffs) d.push_back(round9(v));
  j["differences"] = std::move(d);
  patlas_t_test t{};
  const auto st = patlas_one_sample_t(diffs.data(), diffs.size(), &t);
  if (st != PATLAS_OK) {
    j["result"] = nullptr;
    j["reason"] = patlas_last_error();
    return j;
  }
  j["result"] = json{{"mean_diff", round9(t.mean_diff)},
                     {"ci95", json::array({round9(t.ci_lo), round9(t.ci_hi)})},
                     {"t", round9(t.t_statistic)},
                     {"df", t.df},
                     {"p", round9(t.p_value)},
                     {"normality_advisory", t.normality_advisory != 0}};
  j["p_value_raw"] = t.p_value;
  return j;
}

}  // namespace

std::vector<std::string> methods_of(Method m) {
  switch (m) {
    case Method::kElbow: return {"elbow"};
    case Method::kCompactness: return {"compactness"};
    case Method::kBoth: return {"elbow", "compactness"};
  }
  return {};
}

void stage_tile(const RunConfig& cfg, RunManifest& manifest) {
  require_file(cfg.manifest, "ingestion manifest");
  const fs::path out = cfg.tiles.empty() ? Layout{cfg.out_dir}.tiles() : cfg.tiles;
  patlas_tiling_options* raw = nullptr;
  check(patlas_tiling_options_create(&raw));
  TilingOptionsPtr opts(raw);
  const patlas_tile_spec spec{cfg.tile_size, cfg.overlap, cfg.min_lesion_fraction};
  check(patlas_tiling_options_set_spec(opts.get(), &spec));
  const auto scope = cfg.color == "image"  ? PATLAS_COLOR_PER_IMAGE
                     : cfg.color == "none" ? PATLAS_COLOR_NONE
                                           : PATLAS_COLOR_PER_TILE;
  check(patlas_tiling_options_set_color(opts.get(), scope, cfg.minkowski_p));
  check(patlas_tiling_options_set_seed(opts.get(), *cfg.seed));
  check(patlas_tiling_options_set_threads(opts.get(), effective_threads(cfg)));
  for (const auto& [l, n] : cfg.image_caps)
    check(patlas_tiling_options_set_image_cap(opts.get(), l.c_str(), n));
  for (const auto& [l, n] : cfg.tile_caps)
    check(patlas_tiling_options_set_tile_cap(opts.get(), l.c_str(), n));
  patlas_tiling_report rep{};
  check(patlas_tile_corpus(cfg.manifest.c_str(), out.c_str(), opts.get(), &rep));
  log("tiled " + std::to_string(rep.images_used) + "/" + std::to_string(rep.images_in) +
      " images into " + std::to_string(rep.tiles_written) + " tiles (" +
      std::to_string(rep.images_without_tiles) + " without tiles, " +
      std::to_string(rep.color_warnings) + " colour warnings) in " + out.string());
  manifest.add(out / "tiles.csv");
}

void stage_validate(const fs::path& features) {
  const auto fs = load_features(features, "features file");
  std::cout << features.string() << ": OK\n"
            << "  records:    " << patlas_feature_set_size(fs.get()) << "\n"
            << "  dim:        " << patlas_feature_set_dim(fs.get()) << "\n"
            << "  images:     " << patlas_feature_set_image_count(fs.get()) << "\n"
            << "  normalized: " << (patlas_feature_set_is_normalized(fs.get()) ? "yes" : "no")
            << "\n"
            << "  labels:    ";
  std::map<std::string, std::size_t> per;
  for (std::size_t i = 0; i < patlas_feature_set_size(fs.get()); ++i)
    ++per[patlas_feature_set_diagnosis(fs.get(), i)];
  for (const auto& l : labels_of(fs.get())) std::cout << " " << l << "=" << per[l];
  std::cout << "\n";
}

void stage_cluster(const RunConfig& cfg, int k, const std::string& diagnosis,
                   RunManifest& manifest) {
  const auto all = load_features(cfg.features, "features file");
  const auto norm = normalized(all.get());
  const std::string set = diagnosis.empty() ? kPooledSet : diagnosis;
  const auto part = diagnosis.empty() ? FeatureSetPtr() : select(norm.get(), diagnosis);
  const patlas_feature_set* data = part ? part.get() : norm.get();
  const auto f = fit(data, kmeans_params(cfg, k, *cfg.seed + static_cast<std::uint64_t>(k)));
  double w = 0.0;
  check(patlas_compute_w(data, f.model.get(), f.assignment.get(), &w));
  const Layout lay{cfg.out_dir};
  ensure_dir(lay.cluster_dir());
  const auto model_path = lay.cluster_dir() / (set + ".model.json");
  const auto asg_path = lay.cluster_dir() / (set + ".assignment.csv");
  check(patlas_model_save(f.model.get(), model_path.c_str()));
  check(patlas_assignment_save(f.assignment.get(), data, asg_path.c_str()));
  manifest.add(model_path);
  manifest.add(asg_path);
  log(set + ": k=" + std::to_string(k) + " inertia=" +
      std::to_string(patlas_model_inertia(f.model.get())) + " W=" + std::to_string(w) +
      " iterations=" + std::to_string(patlas_model_iterations(f.model.get())));
}

void stage_sweep(const RunConfig& cfg, const std::vector<std::string>& diagnoses, bool pooled,
                 RunManifest& manifest) {
  const auto all = load_features(cfg.features, "features file");
  const auto norm = normalized(all.get());
  auto p = patlas_sweep_params_default();
  p.k_min = cfg.k_min;
  p.k_max = cfg.k_max;
  p.seed = *cfg.seed;
  p.max_iter = cfg.max_iter;
  p.tol = cfg.tol;
  p.threads = effective_threads(cfg);
  const Layout lay{cfg.out_dir};
  ensure_dir(lay.root / "sweep");

  auto run = [&](const patlas_feature_set* data, const std::string& set) {
    patlas_sweep* raw = nullptr;
    check(patlas_sweep_run(data, &p, &raw));
    const SweepPtr s(raw);
    const auto jp = lay.sweep_json(set);
    const auto cp = lay.sweep_csv(set);
    check(patlas_sweep_save(s.get(), jp.c_str(), cp.c_str()));
    manifest.add(jp);
    manifest.add(cp);
    const int e = patlas_sweep_elbow_k(s.get());
    std::string msg = set + ": " + std::to_string(patlas_feature_set_size(data)) + " tiles, elbow k=" +
                      (e ? std::to_string(e) : std::string("none")) +
                      ", compactness k=" + std::to_string(patlas_sweep_compactness_k(s.get()));
    if (const auto n = patlas_sweep_flagged_increases(s.get()))
      msg += ", " + std::to_string(n) + " inertia increase(s) > 5% flagged";
    log(msg);
  };

  std::vector<std::string> sets = diagnoses;
  if (sets.empty() && !pooled) sets = populated_labels(norm.get());
  for (const auto& d : sets) {
    const auto part = select(norm.get(), d);
    run(part.get(), d);
  }
  if (pooled) run(norm.get(), kPooledSet);
}

void stage_catalog(const RunConfig& cfg, RunManifest& manifest) {
  const auto all = load_features(cfg.features, "features file");
  const auto norm = normalized(all.get());
  const Layout lay{cfg.out_dir};
  const auto diagnoses = populated_labels(norm.get());
  if (!cfg.annotations.empty()) require_file(cfg.annotations, "annotation file");
  const fs::path tile_dir = cfg.tiles.empty() ? lay.tiles() : cfg.tiles;

  for (const auto& method : methods_of(cfg.method)) {
    patlas_catalog* raw = nullptr;
    check(patlas_catalog_create(method.c_str(), &raw));
    const CatalogPtr cat(raw);
    ensure_dir(lay.models(method));
    for (const auto& d : diagnoses) {
      const auto sweep = load_sweep(lay.sweep_json(d));
      const int k = chosen_k(sweep.get(), method);
      if (k == 0) {
        log(method + "/" + d + ": no knee in the inertia curve; diagnosis left out of this catalog");
        continue;
      }
      const auto part = select(norm.get(), d);
      const auto f = fit(part.get(),
                         kmeans_params(cfg, k, patlas_sweep_seed(sweep.get()) + static_cast<std::uint64_t>(k)));
      const auto mp = lay.models(method) / (d + ".model.json");
      const auto ap = lay.models(method) / (d + ".assignment.csv");
      check(patlas_model_save(f.model.get(), mp.c_str()));
      check(patlas_assignment_save(f.assignment.get(), part.get(), ap.c_str()));
      manifest.add(mp);
      manifest.add(ap);
      check(patlas_catalog_add(cat.get(), d.c_str(), k, part.get(), f.model.get(),
                               f.assignment.get()));
      log(method + "/" + d + ": k=" + std::to_string(k) + ", " +
          std::to_string(patlas_catalog_non_informative(cat.get(), d.c_str())) +
          " non-informative cluster(s)");
    }
    if (!cfg.annotations.empty())
      check(patlas_catalog_ingest_annotations(cat.get(), cfg.annotations.c_str()));
    std::size_t warnings = 0;
    check(patlas_catalog_render(cat.get(), tile_dir.c_str(), lay.report(method).c_str(), &warnings));
    for (const auto& entry : fs::directory_iterator(lay.report(method))) manifest.add(entry.path());
    log(method + ": report in " + lay.report(method).string() + " (" + std::to_string(warnings) +
        " missing tile image(s))");
  }
}

void stage_compare(const RunConfig& cfg, RunManifest& manifest) {
  const Layout lay{cfg.out_dir};
  std::vector<CatalogPtr> cats;
  for (const auto& method : methods_of(cfg.method)) {
    require_file(lay.catalog_json(method), method + " catalog (run `catalog` first)");
    patlas_catalog* raw = nullptr;
    check(patlas_catalog_load_json(lay.catalog_json(method).c_str(), &raw));
    cats.emplace_back(raw);
  }
  std::vector<const patlas_catalog*> ptrs;
  for (const auto& c : cats) ptrs.push_back(c.get());
  check(patlas_catalog_summarize(ptrs.data(), ptrs.size(), lay.summary().c_str()));
  manifest.add(lay.summary());
  log("summary in " + lay.summary().string());
  if (cats.size() != 2) return;

  // Paired by diagnosis: compactness minus elbow.
  const patlas_catalog* elbow = cats[0].get();
  const patlas_catalog* compact = cats[1].get();
  std::vector<std::string> shared;
  for (std::size_t i = 0; i < patlas_catalog_diagnosis_count(compact); ++i) {
    const std::string d = patlas_catalog_diagnosis(compact, i);
    for (std::size_t j = 0; j < patlas_catalog_diagnosis_count(elbow); ++j)
      if (d == patlas_catalog_diagnosis(elbow, j)) shared.push_back(d);
  }
  std::vector<double> count_diff, frac_diff;
  json per = json::object();
  for (const auto& d : shared) {
    const std::size_t ce = patlas_catalog_cluster_count(elbow, d.c_str());
    const std::size_t cc = patlas_catalog_cluster_count(compact, d.c_str());
    const std::size_t ne = patlas_catalog_non_informative(elbow, d.c_str());
    const std::size_t nc = patlas_catalog_non_informative(compact, d.c_str());
    const double fe = ce > 0 ? static_cast<double>(ne) / static_cast<double>(ce) : 0.0;
    const double fc = cc > 0 ? static_cast<double>(nc) / static_cast<double>(cc) : 0.0;
    count_diff.push_back(static_cast<double>(cc) - static_cast<double>(ce));
    frac_diff.push_back(fc - fe);
    per[d] = json{{"elbow_clusters", ce},
                  {"compactness_clusters", cc},
                  {"elbow_non_informative", ne},
                  {"compactness_non_informative", nc}};
  }
  json j;
  j["difference"] = "compactness - elbow";
  j["diagnoses"] = shared;
  j["per_diagnosis"] = per;
  auto tests = json::array();
  if (shared.size() >= 2) {
    tests.push_back(t_test_json("cluster_count", count_diff));
    tests.push_back(t_test_json("non_informative_fraction", frac_diff));
  }
  std::vector<double> raw_p;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < tests.size(); ++i)
    if (tests[i].contains("p_value_raw")) {
      raw_p.push_back(tests[i]["p_value_raw"].get<double>());
      idx.push_back(i);
    }
  std::vector<double> adj(raw_p.size());
  if (!raw_p.empty()) check(patlas_holm_correct(raw_p.data(), raw_p.size(), adj.data()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    tests[idx[i]]["result"]["p_holm"] = round9(adj[i]);
    tests[idx[i]].erase("p_value_raw");
  }
  j["tests"] = std::move(tests);
  if (shared.size() < 2) j["note"] = "fewer than two shared diagnoses; no paired test";
  write_json(lay.compare(), j);
  manifest.add(lay.compare());
  log("paired comparison in " + lay.compare().string());
}

void stage_classify(const RunConfig& cfg, int k_override, RunManifest& manifest) {
  const auto train_raw = load_features(cfg.features, "training features file");
  const auto test_raw = load_features(cfg.test_features, "test features file");
  if (!cfg.lesions.empty()) require_file(cfg.lesions, "lesion list");
  const auto train = normalized(train_raw.get());
  const auto test = normalized(test_raw.get());
  const Layout lay{cfg.out_dir};

  std::vector<std::pair<std::string, int>> runs;
  std::uint64_t base_seed = *cfg.seed;
  if (k_override > 0) {
    runs.push_back({"k" + std::to_string(k_override), k_override});
  } else {
    const auto sweep = load_sweep(lay.sweep_json(kPooledSet));
    base_seed = patlas_sweep_seed(sweep.get());
    for (const auto& method : methods_of(cfg.method)) {
      const int k = chosen_k(sweep.get(), method);
      if (k == 0) {
        log(method + ": no knee on the pooled sweep; skipped");
        continue;
      }
      runs.push_back({method, k});
    }
  }
  for (const auto& [name, k] : runs) {
    const auto f = fit(train.get(), kmeans_params(cfg, k, base_seed + static_cast<std::uint64_t>(k)));
    patlas_probability_table* traw = nullptr;
    check(patlas_probability_table_build(train.get(), f.assignment.get(),
                                         static_cast<std::size_t>(k), &traw));
    const TablePtr table(traw);
    patlas_predictions* praw = nullptr;
    check(patlas_classify(test.get(), f.model.get(), table.get(),
                          cfg.lesions.empty() ? nullptr : cfg.lesions.c_str(),
                          effective_threads(cfg), &praw));
    const PredictionsPtr preds(praw);
    const auto dir = lay.classify(name);
    ensure_dir(dir);
    check(patlas_model_save(f.model.get(), (dir / "model.json").c_str()));
    check(patlas_probability_table_save(table.get(), (dir / "table.json").c_str()));
    check(patlas_predictions_save(preds.get(), (dir / "predictions.csv").c_str()));
    for (const char* n : {"model.json", "table.json", "predictions.csv"}) manifest.add(dir / n);
    log(name + ": k=" + std::to_string(k) + ", " + std::to_string(patlas_predictions_size(preds.get())) +
        " lesion prediction(s) in " + dir.string());
  }
}

void stage_evaluate(const RunConfig& cfg, RunManifest& manifest) {
  const Layout lay{cfg.out_dir};
  std::vector<fs::path> dirs;
  if (fs::exists(lay.root / "classify"))
    for (const auto& e : fs::directory_iterator(lay.root / "classify"))
      if (fs::exists(e.path() / "predictions.csv")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty())
    throw MissingInput("missing predictions: no " + (lay.root / "classify" / "*" / "predictions.csv").string() +
                       " (run `classify` first)");
  for (const auto& dir : dirs) {
    patlas_predictions* raw = nullptr;
    check(patlas_predictions_load((dir / "predictions.csv").c_str(), &raw));
    const PredictionsPtr preds(raw);
    patlas_evaluation_summary s{};
    check(patlas_evaluate(preds.get(), (dir / "evaluation.json").c_str(), &s));
    manifest.add(dir / "evaluation.json");
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "%s: accuracy %.4f (95%% CI %.4f-%.4f), mean recall %.4f, %zu scored, %zu excluded",
                  dir.filename().c_str(), s.accuracy, s.accuracy_ci_lo, s.accuracy_ci_hi,
                  s.mean_recall, s.n_scored, s.n_excluded);
    log(buf);
  }
}

void stage_run_all(const RunConfig& cfg, RunManifest& manifest) {
  if (!cfg.manifest.empty()) stage_tile(cfg, manifest);
  require_file(cfg.features, "features file");
  const bool classify = !cfg.test_features.empty();
  stage_sweep(cfg, {}, false, manifest);
  if (classify) stage_sweep(cfg, {}, true, manifest);
  stage_catalog(cfg, manifest);
  stage_compare(cfg, manifest);
  if (classify) {
    stage_classify(cfg, 0, manifest);
    stage_evaluate(cfg, manifest);
  }
}

}  // namespace patlas::cli
