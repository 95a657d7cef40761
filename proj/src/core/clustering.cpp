#include "clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "text_util.hpp"

namespace patlas {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Shared by fit and assign so both produce bit-identical distances.
double cos_dist_with_norms(std::span<const double> u, double nu,
                           std::span<const double> v, double nv) {
  const double d = 1.0 - dot(u, v) / (nu * nv);
  return std::clamp(d, 0.0, 2.0);
}

double round9(double v) { return std::strtod(format_real(v).c_str(), nullptr); }

std::vector<double> record_norms(const FeatureSet& fs) {
  std::vector<double> out(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    out[i] = norm(fs[i].features);
    if (out[i] == 0.0)
      fail(ErrorCode::kNumeric, "tile '" + fs[i].tile_id + "' has a zero feature vector");
  }
  return out;
}

std::vector<double> centroid_norms(const Centroids& c) {
  std::vector<double> out(c.k());
  for (std::size_t i = 0; i < c.k(); ++i) {
    out[i] = norm(c.row(i));
    if (out[i] == 0.0)
      fail(ErrorCode::kDegenerate,
           "centroid " + std::to_string(i) + " has zero norm (its members cancel out)");
  }
  return out;
}

// Nearest centroid for every record; strict '<' keeps the lowest index on ties.
void assign_into(const Centroids& c, const FeatureSet& fs,
                 const std::vector<double>& rnorms, unsigned threads,
                 Assignment& out) {
  const auto cnorms = centroid_norms(c);
  out.cluster.assign(fs.size(), 0);
  out.distance.assign(fs.size(), 0.0);
  parallel_for(fs.size(), threads, [&](std::size_t i) {
    std::span<const double> x = fs[i].features;
    int best = 0;
    double best_d = cos_dist_with_norms(x, rnorms[i], c.row(0), cnorms[0]);
    for (std::size_t j = 1; j < c.k(); ++j) {
      const double d = cos_dist_with_norms(x, rnorms[i], c.row(j), cnorms[j]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    out.cluster[i] = best;
    out.distance[i] = best_d;
  });
}

double total(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

Centroids kmeanspp_init(const FeatureSet& fs, const std::vector<double>& rnorms,
                        std::size_t k, Rng& rng, unsigned threads) {
  const std::size_t n = fs.size();
  Centroids c(k, fs.dim());
  std::vector<bool> chosen(n, false);
  auto take = [&](std::size_t c_idx, std::size_t p) {
    chosen[p] = true;
    std::copy(fs[p].features.begin(), fs[p].features.end(), c.row(c_idx).begin());
  };

  std::size_t first = static_cast<std::size_t>(rng.below(n));
  take(0, first);
  std::vector<double> min_d(n);
  parallel_for(n, threads, [&](std::size_t i) {
    min_d[i] = cos_dist_with_norms(fs[i].features, rnorms[i], fs[first].features,
                                   rnorms[first]);
  });

  // Greedy variant: draw several candidates per center and keep the one that
  // lowers the total potential most.
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<double> cand_d(n);
  std::vector<double> best_d(n);
  for (std::size_t ci = 1; ci < k; ++ci) {
    const double sum = total(min_d);
    std::size_t pick = n;
    if (sum > 0.0) {
      double best_potential = 0.0;
      for (std::size_t t = 0; t < trials; ++t) {
        const double r = rng.uniform() * sum;
        double cum = 0.0;
        std::size_t cand = n;
        for (std::size_t i = 0; i < n; ++i) {
          cum += min_d[i];
          if (cum > r && min_d[i] > 0.0) {
            cand = i;
            break;
          }
        }
        if (cand == n) continue;
        parallel_for(n, threads, [&](std::size_t i) {
          cand_d[i] = std::min(min_d[i], cos_dist_with_norms(fs[i].features, rnorms[i],
                                                             fs[cand].features, rnorms[cand]));
        });
        const double potential = total(cand_d);
        if (pick == n || potential < best_potential) {
          pick = cand;
          best_potential = potential;
          best_d.swap(cand_d);
        }
      }
    }
    if (pick == n) {
      // Every remaining point coincides with a chosen one.
      pick = static_cast<std::size_t>(
          std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
      parallel_for(n, threads, [&](std::size_t i) {
        best_d[i] = std::min(min_d[i], cos_dist_with_norms(fs[i].features, rnorms[i],
                                                           fs[pick].features, rnorms[pick]));
      });
    }
    take(ci, pick);
    min_d.swap(best_d);
  }
  return c;
}

void update_means(const FeatureSet& fs, const Assignment& a, Centroids& c) {
  std::vector<std::size_t> counts(c.k(), 0);
  std::vector<double> acc(c.k() * c.dim(), 0.0);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto j = static_cast<std::size_t>(a.cluster[i]);
    ++counts[j];
    double* row = acc.data() + j * c.dim();
    for (std::size_t d = 0; d < c.dim(); ++d) row[d] += fs[i].features[d];
  }
  for (std::size_t j = 0; j < c.k(); ++j) {
    if (counts[j] == 0) continue;  // repaired before we get here
    auto row = c.row(j);
    for (std::size_t d = 0; d < c.dim(); ++d)
      row[d] = acc[j * c.dim() + d] / static_cast<double>(counts[j]);
  }
}

// Moves each empty centroid onto the point farthest from its own centroid,
// taken from clusters that can spare a member. Returns true if anything moved.
bool repair_empty(const FeatureSet& fs, Assignment& a, Centroids& c) {
  std::vector<std::size_t> counts(c.k(), 0);
  for (int j : a.cluster) ++counts[static_cast<std::size_t>(j)];
  bool moved = false;
  for (std::size_t e = 0; e < c.k(); ++e) {
    if (counts[e] != 0) continue;
    std::size_t far = fs.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (counts[static_cast<std::size_t>(a.cluster[i])] < 2) continue;
      if (a.distance[i] > far_d) {
        far_d = a.distance[i];
        far = i;
      }
    }
    if (far == fs.size()) break;
    --counts[static_cast<std::size_t>(a.cluster[far])];
    ++counts[e];
    a.cluster[far] = static_cast<int>(e);
    a.distance[far] = 0.0;
    std::copy(fs[far].features.begin(), fs[far].features.end(), c.row(e).begin());
    moved = true;
  }
  return moved;
}

}  // namespace

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    fail(ErrorCode::kInvalidArgument, "cosine_distance: length mismatch");
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0)
    fail(ErrorCode::kNumeric, "cosine distance is undefined for a zero vector");
  return cos_dist_with_norms(u, nu, v, nv);
}

KMeansResult fit_kmeans(const FeatureSet& fs, const KMeansParams& p) {
  if (!fs.normalized())
    fail(ErrorCode::kInvalidArgument, "fit_kmeans requires a normalized feature set");
  if (p.k < 1)
    fail(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (static_cast<std::size_t>(p.k) > fs.size())
    fail(ErrorCode::kInvalidArgument,
         "k=" + std::to_string(p.k) + " exceeds the number of records (" +
             std::to_string(fs.size()) + ")");
  if (p.max_iter < 1) fail(ErrorCode::kInvalidArgument, "max_iter must be >= 1");

  const auto rnorms = record_norms(fs);
  const auto k = static_cast<std::size_t>(p.k);
  Rng rng(p.seed);

  KMeansResult res;
  res.model.seed = p.seed;
  Centroids c = kmeanspp_init(fs, rnorms, k, rng, p.threads);

  Assignment current;
  Assignment next;
  bool last_repaired = false;
  int it = 0;
  while (it < p.max_iter) {
    ++it;
    assign_into(c, fs, rnorms, p.threads, next);
    last_repaired = repair_empty(fs, next, c);
    const double inertia = total(next.distance);
    const bool unchanged = !last_repaired && it > 1 && next.cluster == current.cluster;
    const bool small_gain =
        !last_repaired && !res.inertia_history.empty() &&
        res.inertia_history.back() - inertia < p.tol * res.inertia_history.back();
    res.inertia_history.push_back(inertia);
    current = next;
    if (unchanged || small_gain) break;
    if (it < p.max_iter) update_means(fs, current, c);
  }
  if (last_repaired) {
    // Stopped on max_iter right after a relocation; settle one plain step so
    // the returned assignment is the nearest-centroid one.
    update_means(fs, current, c);
    assign_into(c, fs, rnorms, p.threads, current);
  }
  std::vector<std::size_t> counts(k, 0);
  for (int j : current.cluster) ++counts[static_cast<std::size_t>(j)];
  for (std::size_t j = 0; j < k; ++j)
    if (counts[j] == 0)
      fail(ErrorCode::kDegenerate,
           "cannot populate " + std::to_string(k) +
               " clusters: too few distinct feature directions");

  res.model.centroids = std::move(c);
  res.model.iterations_run = it;
  res.model.inertia = total(current.distance);
  res.assignment = std::move(current);
  return res;
}

Assignment assign(const ClusterModel& model, const FeatureSet& fs, unsigned threads) {
  if (model.dim() != fs.dim())
    fail(ErrorCode::kInvalidArgument,
         "dimension mismatch: model has " + std::to_string(model.dim()) +
             ", features have " + std::to_string(fs.dim()));
  if (model.k() == 0) fail(ErrorCode::kInvalidArgument, "model has no centroids");
  Assignment out;
  assign_into(model.centroids, fs, record_norms(fs), threads, out);
  return out;
}

std::string model_to_json(const ClusterModel& m) {
  nlohmann::ordered_json j;
  j["k"] = m.k();
  j["dim"] = m.dim();
  j["seed"] = m.seed;
  j["iterations_run"] = m.iterations_run;
  j["inertia"] = round9(m.inertia);
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.k(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (double v : m.centroids.row(i)) row.push_back(round9(v));
    rows.push_back(std::move(row));
  }
  j["centroids"] = std::move(rows);
  return j.dump(2) + "\n";
}

ClusterModel model_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto k = j.at("k").get<std::size_t>();
    const auto dim = j.at("dim").get<std::size_t>();
    const auto& rows = j.at("centroids");
    if (k == 0 || dim == 0 || rows.size() != k)
      fail(ErrorCode::kFormat, "model: centroid count does not match k");
    ClusterModel m;
    m.centroids = Centroids(k, dim);
    for (std::size_t i = 0; i < k; ++i) {
      if (rows[i].size() != dim)
        fail(ErrorCode::kFormat, "model: centroid " + std::to_string(i) + " has wrong width");
      for (std::size_t d = 0; d < dim; ++d) {
        m.centroids.row(i)[d] = rows[i][d].get<double>();
        if (!std::isfinite(m.centroids.row(i)[d]))
          fail(ErrorCode::kNumeric, "model: non-finite centroid value");
      }
    }
    m.seed = j.at("seed").get<std::uint64_t>();
    m.iterations_run = j.at("iterations_run").get<int>();
    m.inertia = j.at("inertia").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("model JSON: ") + e.what());
  }
}

void save_model(const ClusterModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << model_to_json(model);
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

ClusterModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

void save_assignment(const Assignment& a, const FeatureSet& fs,
                     const std::filesystem::path& path) {
  if (a.size() != fs.size())
    fail(ErrorCode::kInvalidArgument, "assignment does not match feature set");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << "tile_id,cluster,distance\n";
  for (std::size_t i = 0; i < a.size(); ++i)
    out << fs[i].tile_id << ',' << a.cluster[i] << ',' << format_real(a.distance[i]) << '\n';
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

Assignment load_assignment(const FeatureSet& fs, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open assignment file " + path.string());
  std::string line;
  std::getline(in, line);
  if (text::trim(line) != "tile_id,cluster,distance")
    fail(ErrorCode::kFormat, path.string() + ": bad assignment header");
  Assignment a;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto f = text::split(text::trim(line), ',');
    const auto c = f.size() == 3 ? text::parse_int(f[1]) : std::nullopt;
    const auto d = f.size() == 3 ? text::parse_double(f[2]) : std::nullopt;
    if (!c || !d || *c < 0)
      fail(ErrorCode::kFormat, path.string() + ": malformed row " + std::to_string(row + 2));
    if (row >= fs.size() || f[0] != fs[row].tile_id)
      fail(ErrorCode::kFormat, path.string() + ": row " + std::to_string(row + 2) +
                                   " does not match the feature set order");
    a.cluster.push_back(static_cast<int>(*c));
    a.distance.push_back(*d);
    ++row;
  }
  if (row != fs.size())
    fail(ErrorCode::kFormat, path.string() + ": assignment covers " + std::to_string(row) +
                                 " of " + std::to_string(fs.size()) + " tiles");
  return a;
}

}  // namespace patlas
