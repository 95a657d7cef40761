#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capi.hpp"
#include "config.hpp"
#include "manifest.hpp"
#include "stages.hpp"

namespace {

namespace fs = std::filesystem;
using namespace patlas::cli;

enum Exit {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kConfig = 3,
  kMissing = 4,
  kIo = 5,
  kFormat = 6,
  kNumeric = 7,
  kDegenerate = 8,
  kNotFound = 9,
};

int exit_for(patlas_status st) {
  switch (st) {
    case PATLAS_ERR_INVALID_ARGUMENT: return kUsage;
    case PATLAS_ERR_IO: return kIo;
    case PATLAS_ERR_FORMAT: return kFormat;
    case PATLAS_ERR_NUMERIC: return kNumeric;
    case PATLAS_ERR_DEGENERATE: return kDegenerate;
    case PATLAS_ERR_NOT_FOUND: return kNotFound;
    default: return kInternal;
  }
}

// Command-line values that take precedence over the config file.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out, manifest, tiles, features, test_features, lesions, annotations;
  std::optional<int> k_min, k_max;
  std::string method;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config, "TOML configuration file");
  app->add_option("--seed", o.seed, "Random seed (overrides config and PATTERN_ATLAS_SEED)");
  app->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  app->add_option("-o,--out", o.out, "Output directory");
  app->add_option("--manifest", o.manifest, "Ingestion manifest CSV");
  app->add_option("--tiles", o.tiles, "Tile directory (default <out>/tiles)");
  app->add_option("--features", o.features, "Training feature file");
  app->add_option("--test-features", o.test_features, "Held-out feature file");
  app->add_option("--lesions", o.lesions, "Lesion list CSV (lesion_id,true_label)");
  app->add_option("--annotations", o.annotations, "Expert annotation CSV");
  app->add_option("--k-min", o.k_min, "Smallest k of the sweep");
  app->add_option("--k-max", o.k_max, "Largest k of the sweep");
  app->add_option("--method", o.method, "elbow | compactness | both");
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = o.seed;
  if (o.threads) cfg.threads = *o.threads;
  auto set = [](fs::path& dst, const std::string& v) {
    if (!v.empty()) dst = fs::absolute(v);
  };
  set(cfg.out_dir, o.out);
  set(cfg.manifest, o.manifest);
  set(cfg.tiles, o.tiles);
  set(cfg.features, o.features);
  set(cfg.test_features, o.test_features);
  set(cfg.lesions, o.lesions);
  set(cfg.annotations, o.annotations);
  if (o.k_min) cfg.k_min = *o.k_min;
  if (o.k_max) cfg.k_max = *o.k_max;
  if (!o.method.empty()) cfg.method = method_from_string(o.method);
  if (cfg.out_dir.empty()) cfg.out_dir = fs::absolute("patlas-out");
  finalize(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Builds per-diagnosis catalogues of recurring tile patterns from lesion features"};
  app.set_version_flag("--version", std::string(patlas_version()));
  app.require_subcommand(1);
  Overrides o;

  auto* tile = app.add_subcommand("tile", "Cut lesion images into colour-corrected tiles");
  add_common(tile, o);

  auto* validate = app.add_subcommand("features-validate", "Check a feature file and print a summary");
  std::string validate_path;
  validate->add_option("file", validate_path, "Feature file")->required();

  auto* cluster = app.add_subcommand("cluster", "Fit k-means at a single k");
  add_common(cluster, o);
  int cluster_k = 0;
  std::string cluster_diag;
  cluster->add_option("-k", cluster_k, "Number of clusters")->required()->check(CLI::PositiveNumber);
  cluster->add_option("--diagnosis", cluster_diag, "Restrict to one diagnosis (default: all tiles)");

  auto* sweep = app.add_subcommand("sweep", "Fit k-means over a range of k and choose k both ways");
  add_common(sweep, o);
  std::vector<std::string> sweep_diags;
  bool sweep_pooled = false;
  sweep->add_option("--diagnosis", sweep_diags, "Diagnoses to sweep (default: every populated label)");
  sweep->add_flag("--pooled", sweep_pooled, "Also sweep all tiles together (used by classify)");

  auto* catalog = app.add_subcommand("catalog", "Refit at the chosen k and render the pattern catalogue");
  add_common(catalog, o);

  auto* compare = app.add_subcommand("compare", "Summarise catalogues and compare the two k choices");
  add_common(compare, o);

  auto* classify = app.add_subcommand("classify", "Predict lesion diagnoses from cluster membership");
  add_common(classify, o);
  int classify_k = 0;
  classify->add_option("-k", classify_k, "Use this k instead of the pooled sweep's choice")
      ->check(CLI::PositiveNumber);

  auto* evaluate = app.add_subcommand("evaluate", "Score every prediction set under <out>/classify");
  add_common(evaluate, o);

  auto* run_all = app.add_subcommand("run-all", "Run every stage the configuration allows");
  add_common(run_all, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  auto* sub = app.get_subcommands().front();
  std::optional<RunManifest> manifest;
  try {
    if (sub == validate) {
      stage_validate(fs::absolute(validate_path));
      return kOk;
    }
    const RunConfig cfg = resolve(o);
    manifest.emplace(cfg.out_dir, sub->get_name(), to_json(cfg));
    if (sub == tile) stage_tile(cfg, *manifest);
    else if (sub == cluster) stage_cluster(cfg, cluster_k, cluster_diag, *manifest);
    else if (sub == sweep) stage_sweep(cfg, sweep_diags, sweep_pooled, *manifest);
    else if (sub == catalog) stage_catalog(cfg, *manifest);
    else if (sub == compare) stage_compare(cfg, *manifest);
    else if (sub == classify) stage_classify(cfg, classify_k, *manifest);
    else if (sub == evaluate) stage_evaluate(cfg, *manifest);
    else if (sub == run_all) stage_run_all(cfg, *manifest);
    manifest->write();
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "patlas: config error: " << e.what() << "\n";
    return kConfig;
  } catch (const MissingInput& e) {
    std::cerr << "patlas: " << e.what() << "\n";
    if (manifest) manifest->write(e.what());
    return kMissing;
  } catch (const LibraryError& e) {
    std::cerr << "patlas: error: " << e.what() << "\n";
    if (manifest) {
      try {
        manifest->write(e.what());
      } catch (const std::exception&) {
      }
    }
    return exit_for(e.status());
  } catch (const std::exception& e) {
    std::cerr << "patlas: internal error: " << e.what() << "\n";
    return kInternal;
  }
}
