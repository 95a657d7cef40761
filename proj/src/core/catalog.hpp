#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clustering.hpp"
#include "feature_store.hpp"
#include "stats.hpp"

namespace patlas {

inline constexpr std::size_t kMaxRepresentatives = 7;
// Clusters with fewer tiles than this carry no reviewable pattern.
inline constexpr std::size_t kMinInformativeSize = 6;

struct Representative {
  std::string tile_id;
  double distance = 0.0;
  bool operator==(const Representative&) const = default;
};

struct Annotation {
  std::vector<std::string> patterns;
  std::optional<int> redundant_with;
  std::optional<bool> informative_override;
  bool operator==(const Annotation&) const = default;
};

struct CatalogEntry {
  std::string diagnosis;
  int cluster_index = 0;
  std::size_t size = 0;
  std::vector<Representative> representatives;  // ascending distance
  std::optional<Annotation> annotation;

  bool informative() const;
  bool operator==(const CatalogEntry&) const = default;
};

bool is_informative(std::size_t size, std::optional<bool> override_flag);

/// One entry per cluster, in cluster order.
std::vector<CatalogEntry> build_catalog(const FeatureSet& fs, const ClusterModel& model,
                                        const Assignment& assignment,
                                        const std::string& diagnosis);

/// Catalog entries for one selection method, keyed by diagnosis.
struct MethodCatalog {
  std::string method;
  std::map<std::string, std::vector<CatalogEntry>> by_diagnosis;
  std::map<std::string, int> chosen_k;
  bool operator==(const MethodCatalog&) const = default;
};

/// Attaches rows of an annotation CSV
/// (diagnosis,cluster_index,patterns,redundant_with,informative_override).
/// Throws kNotFound for a row naming a cluster that does not exist.
void ingest_annotations(MethodCatalog& catalog, const std::filesystem::path& csv);

/// Share of a diagnosis' clusters marked redundant with another cluster.
double redundancy_fraction(const std::vector<CatalogEntry>& entries);

struct DiagnosisSummary {
  int chosen_k = 0;
  std::size_t clusters = 0;
  std::size_t non_informative = 0;
  double non_informative_fraction = 0.0;
  std::size_t informative_clusters = 0;
};

struct MethodSummary {
  std::string method;
  std::map<std::string, DiagnosisSummary> per_diagnosis;
  stats::MeanCi cluster_count;
  stats::MeanCi informative_count;
  stats::MeanCi non_informative_fraction;
};

struct CatalogSummary {
  std::vector<MethodSummary> methods;
};

/// Per-method means with 95% t intervals across diagnoses.
CatalogSummary summarize(const std::vector<MethodCatalog>& catalogs);

std::string catalog_to_json(const MethodCatalog& catalog);
MethodCatalog catalog_from_json(const std::string& text);
std::string summary_to_json(const CatalogSummary& summary);

struct ReportResult {
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> pages;
};

/// Writes <out_dir>/<diagnosis>.html per diagnosis and <out_dir>/catalog.json.
/// Tile images are expected at <tile_dir>/<tile_id>.png and are linked
/// relative to out_dir; missing ones become placeholders plus a warning.
ReportResult render_report(const MethodCatalog& catalog,
                           const std::filesystem::path& tile_dir,
                           const std::filesystem::path& out_dir);

}  // namespace patlas
