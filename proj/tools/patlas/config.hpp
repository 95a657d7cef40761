#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace patlas::cli {

/// Invalid or incomplete configuration (distinct exit code from I/O and
/// library errors).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { kElbow, kCompactness, kBoth };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct RunConfig {
  std::optional<std::uint64_t> seed;

  // [paths]; relative entries resolve against the config file's directory.
  std::filesystem::path manifest;       // ingestion manifest for `tile`
  std::filesystem::path tiles;          // tile directory (written by `tile`)
  std::filesystem::path features;       // training FeatureSet
  std::filesystem::path test_features;  // optional held-out FeatureSet
  std::filesystem::path lesions;        // optional lesion list for classify
  std::filesystem::path annotations;    // optional annotation CSV
  std::filesystem::path out_dir;

  // [tile]
  int tile_size = 128;
  double overlap = 0.25;
  double min_lesion_fraction = 0.60;
  std::string color = "tile";  // tile | image | none
  double minkowski_p = 6.0;

  // [caps.images], [caps.tiles]
  std::map<std::string, std::size_t> image_caps;
  std::map<std::string, std::size_t> tile_caps;

  // [sweep]
  int k_min = 2;
  int k_max = 50;

  // [kmeans]
  int max_iter = 300;
  double tol = 1e-6;

  // [selection]
  Method method = Method::kBoth;

  // Not part of the reproducibility hash: results do not depend on it.
  unsigned threads = 0;
};

/// Loads a TOML config. Throws ConfigError with the file and line on parse
/// errors, unknown keys and wrongly typed values.
RunConfig load_config(const std::filesystem::path& path);

/// Applies PATTERN_ATLAS_SEED when no seed was given and checks ranges.
/// Throws ConfigError when the seed is still missing or a value is invalid.
void finalize(RunConfig& cfg);

/// Canonical JSON of everything that influences outputs (threads excluded).
nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Thread count to use: cfg.threads or the hardware concurrency.
unsigned effective_threads(const RunConfig& cfg);

}  // namespace patlas::cli
