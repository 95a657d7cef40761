#include "model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "parallel.hpp"

namespace patlas {
namespace {

double round9(double v) { return std::strtod(format_real(v).c_str(), nullptr); }

}  // namespace

double compute_w(const FeatureSet& fs, const ClusterModel& model,
                 const Assignment& assignment) {
  if (assignment.size() != fs.size())
    fail(ErrorCode::kInvalidArgument, "assignment does not cover the feature set");
  if (model.dim() != fs.dim())
    fail(ErrorCode::kInvalidArgument, "model and feature dimensions differ");
  if (fs.empty()) fail(ErrorCode::kInvalidArgument, "W is undefined for an empty set");

  std::map<std::string, std::vector<std::size_t>> images;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const int c = assignment.cluster[i];
    if (c < 0 || static_cast<std::size_t>(c) >= model.k())
      fail(ErrorCode::kInvalidArgument, "tile '" + fs[i].tile_id + "' has no valid cluster");
    images[fs[i].image_id].push_back(i);
  }

  const double n_clst = static_cast<double>(model.k());
  const std::size_t dim = fs.dim();
  double sum_w = 0.0;
  std::vector<double> center(dim);
  for (const auto& [image_id, tiles] : images) {
    std::set<int> clusters;
    for (std::size_t i : tiles) clusters.insert(assignment.cluster[i]);
    const double big_k = static_cast<double>(clusters.size());
    const double big_l = static_cast<double>(tiles.size());

    std::fill(center.begin(), center.end(), 0.0);
    for (int c : clusters) {
      const auto row = model.centroids.row(static_cast<std::size_t>(c));
      for (std::size_t d = 0; d < dim; ++d) center[d] += row[d];
    }
    for (double& v : center) v /= big_k;
    if (std::all_of(center.begin(), center.end(), [](double v) { return v == 0.0; }))
      fail(ErrorCode::kNumeric,
           "image '" + image_id + "': mean of its centroids is the zero vector");

    double spread = 0.0;
    for (std::size_t i : tiles) spread += cosine_distance(center, fs[i].features);
    sum_w += big_k / std::min(n_clst, big_l) * spread;
  }
  return sum_w / static_cast<double>(images.size());
}

KSweepResult sweep_k(const FeatureSet& fs, const SweepParams& p) {
  if (p.k_min < 1 || p.k_max < p.k_min)
    fail(ErrorCode::kInvalidArgument, "invalid k range [" + std::to_string(p.k_min) +
                                          ", " + std::to_string(p.k_max) + "]");
  if (static_cast<std::size_t>(p.k_max) > fs.size())
    fail(ErrorCode::kInvalidArgument,
         "k_max=" + std::to_string(p.k_max) + " exceeds the number of records (" +
             std::to_string(fs.size()) + ")");

  const std::size_t n = static_cast<std::size_t>(p.k_max - p.k_min + 1);
  KSweepResult r;
  r.seed = p.seed;
  r.k_values.resize(n);
  r.inertia_curve.resize(n);
  r.w_curve.resize(n);
  r.iterations.resize(n);
  std::set<std::string> image_ids;
  for (const auto& rec : fs.records()) image_ids.insert(rec.image_id);
  r.images = image_ids.size();

  parallel_for(n, p.threads, [&](std::size_t idx) {
    const int k = p.k_min + static_cast<int>(idx);
    KMeansParams kp;
    kp.k = k;
    kp.seed = p.seed + static_cast<std::uint64_t>(k);
    kp.max_iter = p.max_iter;
    kp.tol = p.tol;
    kp.threads = 1;
    const auto fit = fit_kmeans(fs, kp);
    r.k_values[idx] = k;
    r.inertia_curve[idx] = fit.model.inertia;
    r.w_curve[idx] = compute_w(fs, fit.model, fit.assignment);
    r.iterations[idx] = fit.model.iterations_run;
  });

  for (std::size_t i = 1; i < n; ++i)
    if (r.inertia_curve[i] > r.inertia_curve[i - 1] * (1.0 + kInertiaIncreaseFlag))
      r.inertia_increase_ks.push_back(r.k_values[i]);

  if (n >= 5) {
    const auto knee = select_k_elbow(r.k_values, r.inertia_curve);
    r.chosen_elbow_k = knee.k;
    r.elbow_diagnostic = knee.diagnostic;
  } else {
    r.elbow_diagnostic = "elbow needs at least 5 k values";
  }
  r.chosen_compactness_k = select_k_compactness(r.k_values, r.w_curve);
  return r;
}

KneeResult select_k_elbow(std::span<const int> ks, std::span<const double> y,
                          double sensitivity) {
  if (ks.size() != y.size())
    fail(ErrorCode::kInvalidArgument, "k values and curve differ in length");
  const std::size_t n = y.size();
  if (n < 5)
    fail(ErrorCode::kInvalidArgument,
         "elbow selection needs at least 5 points, got " + std::to_string(n));
  for (double v : y)
    if (!std::isfinite(v)) fail(ErrorCode::kNumeric, "elbow curve has a non-finite value");
  for (std::size_t i = 1; i < n; ++i)
    if (ks[i] <= ks[i - 1])
      fail(ErrorCode::kInvalidArgument, "k values must be strictly increasing");

  KneeResult out;
  if (!(y.front() > y.back())) {
    out.diagnostic = "curve does not decrease overall";
    return out;
  }

  const double x_lo = ks.front();
  const double x_span = static_cast<double>(ks.back()) - x_lo;
  const auto [y_lo_it, y_hi_it] = std::minmax_element(y.begin(), y.end());
  const double y_lo = *y_lo_it;
  const double y_span = *y_hi_it - y_lo;

  // Decreasing convex -> flip y so the elbow becomes a knee of an increasing
  // concave curve, then take the difference to the diagonal.
  std::vector<double> xn(n), diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    xn[i] = (static_cast<double>(ks[i]) - x_lo) / x_span;
    diff[i] = (1.0 - (y[i] - y_lo) / y_span) - xn[i];
  }
  if (*std::max_element(diff.begin(), diff.end()) <= 1e-12) {
    out.diagnostic = "difference curve has no positive bulge (no knee)";
    return out;
  }

  // Relative extrema with clipped boundaries (non-strict comparisons).
  auto at = [&](std::ptrdiff_t i) {
    return diff[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n - 1))];
  };
  std::vector<bool> is_max(n), is_min(n);
  std::vector<std::size_t> maxima;
  for (std::size_t i = 0; i < n; ++i) {
    const auto si = static_cast<std::ptrdiff_t>(i);
    is_max[i] = diff[i] >= at(si - 1) && diff[i] >= at(si + 1);
    is_min[i] = diff[i] <= at(si - 1) && diff[i] <= at(si + 1);
    if (is_max[i]) maxima.push_back(i);
  }

  double mean_step = 0.0;
  for (std::size_t i = 1; i < n; ++i) mean_step += std::abs(xn[i] - xn[i - 1]);
  mean_step /= static_cast<double>(n - 1);

  std::size_t next_max = 0;
  double threshold = 0.0;
  std::size_t threshold_index = 0;
  for (std::size_t i = maxima.front(); i + 1 < n; ++i) {
    if (is_max[i]) {
      threshold = diff[maxima[next_max]] - sensitivity * mean_step;
      threshold_index = i;
      ++next_max;
    }
    if (is_min[i]) threshold = 0.0;
    if (diff[i + 1] < threshold) {
      out.k = ks[threshold_index];
      return out;
    }
  }
  out.diagnostic = "difference curve never dropped below the knee threshold";
  return out;
}

int select_k_compactness(std::span<const int> ks, std::span<const double> w) {
  if (ks.size() != w.size())
    fail(ErrorCode::kInvalidArgument, "k values and W curve differ in length");
  if (w.empty()) fail(ErrorCode::kInvalidArgument, "W curve is empty");
  std::size_t best = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i])) fail(ErrorCode::kNumeric, "W curve has a non-finite value");
    if (w[i] < w[best] || (w[i] == w[best] && ks[i] < ks[best])) best = i;
  }
  return ks[best];
}

std::string sweep_to_json(const KSweepResult& r) {
  nlohmann::ordered_json j;
  j["k_values"] = r.k_values;
  auto inertia = nlohmann::ordered_json::array();
  auto w = nlohmann::ordered_json::array();
  for (double v : r.inertia_curve) inertia.push_back(round9(v));
  for (double v : r.w_curve) w.push_back(round9(v));
  j["inertia_curve"] = std::move(inertia);
  j["w_curve"] = std::move(w);
  j["iterations"] = r.iterations;
  j["chosen_elbow_k"] = r.chosen_elbow_k ? nlohmann::ordered_json(*r.chosen_elbow_k) : nullptr;
  j["chosen_compactness_k"] =
      r.chosen_compactness_k ? nlohmann::ordered_json(*r.chosen_compactness_k) : nullptr;
  j["elbow_diagnostic"] = r.elbow_diagnostic;
  j["inertia_increase_ks"] = r.inertia_increase_ks;
  j["M"] = r.images;
  j["seed"] = r.seed;
  return j.dump(2) + "\n";
}

KSweepResult sweep_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    KSweepResult r;
    r.k_values = j.at("k_values").get<std::vector<int>>();
    r.inertia_curve = j.at("inertia_curve").get<std::vector<double>>();
    r.w_curve = j.at("w_curve").get<std::vector<double>>();
    r.iterations = j.value("iterations", std::vector<int>{});
    if (r.inertia_curve.size() != r.k_values.size() || r.w_curve.size() != r.k_values.size())
      fail(ErrorCode::kFormat, "sweep JSON: curves differ in length from k_values");
    if (!j.at("chosen_elbow_k").is_null()) r.chosen_elbow_k = j["chosen_elbow_k"].get<int>();
    if (!j.at("chosen_compactness_k").is_null())
      r.chosen_compactness_k = j["chosen_compactness_k"].get<int>();
    r.elbow_diagnostic = j.value("elbow_diagnostic", std::string{});
    r.inertia_increase_ks = j.value("inertia_increase_ks", std::vector<int>{});
    r.images = j.at("M").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("sweep JSON: ") + e.what());
  }
}

void save_sweep(const KSweepResult& r, const std::filesystem::path& json_path,
                const std::filesystem::path& csv_path) {
  {
    std::ofstream out(json_path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + json_path.string());
    out << sweep_to_json(r);
  }
  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) fail(ErrorCode::kIo, "cannot write " + csv_path.string());
  csv << "k,inertia,W\n";
  for (std::size_t i = 0; i < r.k_values.size(); ++i)
    csv << r.k_values[i] << ',' << format_real(r.inertia_curve[i]) << ','
        << format_real(r.w_curve[i]) << '\n';
  if (!csv) fail(ErrorCode::kIo, "write failed for " + csv_path.string());
}

KSweepResult load_sweep(const std::filesystem::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open sweep file " + json_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return sweep_from_json(ss.str());
}

}  // namespace patlas
