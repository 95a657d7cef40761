#include "config.hpp"

#include <cerrno>
#include <cstdlib>
#include <set>
#include <thread>

#include "toml_subset.hpp"

namespace patlas::cli {
namespace {

using json = nlohmann::ordered_json;

std::string where(const std::filesystem::path& file, const std::string& key) {
  return file.string() + ": " + key;
}

std::int64_t as_int(const json& v, const std::filesystem::path& file, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError(where(file, key) + " must be an integer");
  return v.get<std::int64_t>();
}

double as_real(const json& v, const std::filesystem::path& file, const std::string& key) {
  if (!v.is_number()) throw ConfigError(where(file, key) + " must be a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::filesystem::path& file, const std::string& key) {
  if (!v.is_string()) throw ConfigError(where(file, key) + " must be a string");
  return v.get<std::string>();
}

void reject_unknown(const json& table, const std::set<std::string>& known,
                    const std::filesystem::path& file, const std::string& prefix) {
  for (const auto& [k, v] : table.items())
    if (!known.count(k)) throw ConfigError(where(file, prefix + k) + " is not a known setting");
}

std::map<std::string, std::size_t> caps_of(const json& t, const std::filesystem::path& file,
                                           const std::string& prefix) {
  if (!t.is_object()) throw ConfigError(where(file, prefix) + " must be a table");
  std::map<std::string, std::size_t> out;
  for (const auto& [label, v] : t.items()) {
    const auto n = as_int(v, file, prefix + "." + label);
    if (n < 0) throw ConfigError(where(file, prefix + "." + label) + " must be >= 0");
    out[label] = static_cast<std::size_t>(n);
  }
  return out;
}

json path_json(const std::filesystem::path& p) {
  return p.empty() ? json(nullptr) : json(p.generic_string());
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::kElbow: return "elbow";
    case Method::kCompactness: return "compactness";
    case Method::kBoth: return "both";
  }
  return "both";
}

Method method_from_string(const std::string& s) {
  if (s == "elbow") return Method::kElbow;
  if (s == "compactness") return Method::kCompactness;
  if (s == "both") return Method::kBoth;
  throw ConfigError("selection method must be elbow, compactness or both, got '" + s + "'");
}

RunConfig load_config(const std::filesystem::path& file) {
  json root;
  try {
    root = parse_toml_file(file);
  } catch (const TomlError& e) {
    throw ConfigError(file.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  RunConfig cfg;
  const auto base = file.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() || p.empty() ? fp : std::filesystem::absolute(base / fp).lexically_normal();
  };
  reject_unknown(root, {"seed", "threads", "paths", "tile", "caps", "sweep", "kmeans", "selection"},
                 file, "");
  if (root.contains("seed")) {
    const auto s = as_int(root["seed"], file, "seed");
    if (s < 0) throw ConfigError(where(file, "seed") + " must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (root.contains("threads")) {
    const auto t = as_int(root["threads"], file, "threads");
    if (t < 0) throw ConfigError(where(file, "threads") + " must be >= 0");
    cfg.threads = static_cast<unsigned>(t);
  }
  if (root.contains("paths")) {
    const auto& p = root["paths"];
    reject_unknown(p, {"manifest", "tiles", "features", "test_features", "lesions", "annotations",
                       "out_dir"},
                   file, "paths.");
    auto get = [&](const char* k, std::filesystem::path& dst) {
      if (p.contains(k)) dst = resolve(as_string(p[k], file, std::string("paths.") + k));
    };
    get("manifest", cfg.manifest);
    get("tiles", cfg.tiles);
    get("features", cfg.features);
    get("test_features", cfg.test_features);
    get("lesions", cfg.lesions);
    get("annotations", cfg.annotations);
    get("out_dir", cfg.out_dir);
  }
  if (root.contains("tile")) {
    const auto& t = root["tile"];
    reject_unknown(t, {"size", "overlap", "min_lesion_fraction", "color", "minkowski_p"}, file,
                   "tile.");
    if (t.contains("size")) cfg.tile_size = static_cast<int>(as_int(t["size"], file, "tile.size"));
    if (t.contains("overlap")) cfg.overlap = as_real(t["overlap"], file, "tile.overlap");
    if (t.contains("min_lesion_fraction"))
      cfg.min_lesion_fraction = as_real(t["min_lesion_fraction"], file, "tile.min_lesion_fraction");
    if (t.contains("color")) cfg.color = as_string(t["color"], file, "tile.color");
    if (t.contains("minkowski_p")) cfg.minkowski_p = as_real(t["minkowski_p"], file, "tile.minkowski_p");
  }
  if (root.contains("caps")) {
    const auto& c = root["caps"];
    reject_unknown(c, {"images", "tiles"}, file, "caps.");
    if (c.contains("images")) cfg.image_caps = caps_of(c["images"], file, "caps.images");
    if (c.contains("tiles")) cfg.tile_caps = caps_of(c["tiles"], file, "caps.tiles");
  }
  if (root.contains("sweep")) {
    const auto& s = root["sweep"];
    reject_unknown(s, {"k_min", "k_max"}, file, "sweep.");
    if (s.contains("k_min")) cfg.k_min = static_cast<int>(as_int(s["k_min"], file, "sweep.k_min"));
    if (s.contains("k_max")) cfg.k_max = static_cast<int>(as_int(s["k_max"], file, "sweep.k_max"));
  }
  if (root.contains("kmeans")) {
    const auto& k = root["kmeans"];
    reject_unknown(k, {"max_iter", "tol"}, file, "kmeans.");
    if (k.contains("max_iter"))
      cfg.max_iter = static_cast<int>(as_int(k["max_iter"], file, "kmeans.max_iter"));
    if (k.contains("tol")) cfg.tol = as_real(k["tol"], file, "kmeans.tol");
  }
  if (root.contains("selection")) {
    const auto& s = root["selection"];
    reject_unknown(s, {"method"}, file, "selection.");
    if (s.contains("method"))
      cfg.method = method_from_string(as_string(s["method"], file, "selection.method"));
  }
  return cfg;
}

void finalize(RunConfig& cfg) {
  if (!cfg.seed) {
    if (const char* env = std::getenv("PATTERN_ATLAS_SEED"); env && *env) {
      char* end = nullptr;
      errno = 0;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (errno != 0 || *end != '\0' || env[0] == '-')
        throw ConfigError(std::string("PATTERN_ATLAS_SEED is not a non-negative integer: '") +
                          env + "'");
      cfg.seed = v;
    }
  }
  if (!cfg.seed)
    throw ConfigError("no seed: set `seed` in the config, pass --seed or set PATTERN_ATLAS_SEED");
  if (cfg.k_min < 1 || cfg.k_max < cfg.k_min)
    throw ConfigError("invalid k range [" + std::to_string(cfg.k_min) + ", " +
                      std::to_string(cfg.k_max) + "]");
  if (cfg.max_iter < 1) throw ConfigError("kmeans.max_iter must be >= 1");
  if (!(cfg.tol >= 0.0)) throw ConfigError("kmeans.tol must be >= 0");
  if (cfg.color != "tile" && cfg.color != "image" && cfg.color != "none")
    throw ConfigError("tile.color must be tile, image or none, got '" + cfg.color + "'");
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  j["paths"] = {{"manifest", path_json(cfg.manifest)},
                {"tiles", path_json(cfg.tiles)},
                {"features", path_json(cfg.features)},
                {"test_features", path_json(cfg.test_features)},
                {"lesions", path_json(cfg.lesions)},
                {"annotations", path_json(cfg.annotations)},
                {"out_dir", path_json(cfg.out_dir)}};
  j["tile"] = {{"size", cfg.tile_size},
               {"overlap", cfg.overlap},
               {"min_lesion_fraction", cfg.min_lesion_fraction},
               {"color", cfg.color},
               {"minkowski_p", cfg.minkowski_p}};
  json images = json::object(), tiles = json::object();
  for (const auto& [l, n] : cfg.image_caps) images[l] = n;
  for (const auto& [l, n] : cfg.tile_caps) tiles[l] = n;
  j["caps"] = {{"images", images}, {"tiles", tiles}};
  j["sweep"] = {{"k_min", cfg.k_min}, {"k_max", cfg.k_max}};
  j["kmeans"] = {{"max_iter", cfg.max_iter}, {"tol", cfg.tol}};
  j["selection"] = {{"method", to_string(cfg.method)}};
  return j;
}

unsigned effective_threads(const RunConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

}  // namespace patlas::cli
