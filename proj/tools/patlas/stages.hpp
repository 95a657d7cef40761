#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"
#include "manifest.hpp"

namespace patlas::cli {

/// Where every stage reads and writes, derived from out_dir.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path tiles() const { return root / "tiles"; }
  std::filesystem::path sweep_json(const std::string& set) const {
    return root / "sweep" / (set + ".json");
  }
  std::filesystem::path sweep_csv(const std::string& set) const {
    return root / "sweep" / (set + ".csv");
  }
  std::filesystem::path cluster_dir() const { return root / "cluster"; }
  std::filesystem::path models(const std::string& method) const { return root / "models" / method; }
  std::filesystem::path report(const std::string& method) const { return root / "report" / method; }
  std::filesystem::path catalog_json(const std::string& method) const {
    return report(method) / "catalog.json";
  }
  std::filesystem::path summary() const { return root / "summary.json"; }
  std::filesystem::path compare() const { return root / "compare.json"; }
  std::filesystem::path classify(const std::string& method) const {
    return root / "classify" / method;
  }
};

/// Name used for the sweep over all training tiles regardless of diagnosis.
inline constexpr const char* kPooledSet = "all";

std::vector<std::string> methods_of(Method m);

/// Each stage logs one line per artifact group to stderr and registers every
/// file it writes with the manifest. They throw ConfigError, MissingInput or
/// LibraryError on failure.
void stage_tile(const RunConfig& cfg, RunManifest& manifest);
void stage_validate(const std::filesystem::path& features);
void stage_cluster(const RunConfig& cfg, int k, const std::string& diagnosis,
                   RunManifest& manifest);
void stage_sweep(const RunConfig& cfg, const std::vector<std::string>& diagnoses, bool pooled,
                 RunManifest& manifest);
void stage_catalog(const RunConfig& cfg, RunManifest& manifest);
void stage_compare(const RunConfig& cfg, RunManifest& manifest);
void stage_classify(const RunConfig& cfg, int k_override, RunManifest& manifest);
void stage_evaluate(const RunConfig& cfg, RunManifest& manifest);
void stage_run_all(const RunConfig& cfg, RunManifest& manifest);

}  // namespace patlas::cli
