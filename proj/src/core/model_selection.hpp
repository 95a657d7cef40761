#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clustering.hpp"
#include "feature_store.hpp"

namespace patlas {

/// Compactness metric W over images (groups of tiles sharing image_id).
///
/// For each image q with L tiles spread over K distinct clusters, the tiles'
/// cosine distances to the plain average of those K centroids are summed and
/// scaled by K / min(n_clst, L). W is the mean of that per-image score over
/// all images. Lower is better: it rewards images whose tiles land in few
/// clusters that sit close to the tiles.
///
/// Throws kNumeric when an image's centroid average is the zero vector.
double compute_w(const FeatureSet& fs, const ClusterModel& model,
                 const Assignment& assignment);

struct SweepParams {
  int k_min = 2;
  int k_max = 50;
  std::uint64_t seed = 0;  // per-k fit uses seed + k
  int max_iter = 300;
  double tol = 1e-6;
  unsigned threads = 1;
};

struct KSweepResult {
  std::vector<int> k_values;
  std::vector<double> inertia_curve;
  std::vector<double> w_curve;
  std::vector<int> iterations;
  std::optional<int> chosen_elbow_k;
  std::optional<int> chosen_compactness_k;
  std::string elbow_diagnostic;          // set when no knee was found
  std::vector<int> inertia_increase_ks;  // k whose inertia rose > 5% over k-1
  std::size_t images = 0;                // M
  std::uint64_t seed = 0;
};

/// Fits one model per k in [k_min, k_max] and records inertia and W, then
/// fills both chosen-k fields. Per-k fits are independent; with threads > 1
/// they run concurrently and results are still assembled in k order.
KSweepResult sweep_k(const FeatureSet& fs, const SweepParams& params);

/// Fractional rise of inertia that gets flagged during a sweep.
inline constexpr double kInertiaIncreaseFlag = 0.05;

struct KneeResult {
  std::optional<int> k;
  std::string diagnostic;
};

/// Kneedle on a decreasing convex curve, sensitivity 1. Needs >= 5 points.
/// Throws kInvalidArgument on too few points or mismatched lengths and
/// kNumeric on non-finite values; "no knee" is a result, not an error.
KneeResult select_k_elbow(std::span<const int> ks, std::span<const double> curve,
                          double sensitivity = 1.0);

/// argmin W, ties to the smallest k.
int select_k_compactness(std::span<const int> ks, std::span<const double> w_curve);

std::string sweep_to_json(const KSweepResult& r);
KSweepResult sweep_from_json(const std::string& text);
void save_sweep(const KSweepResult& r, const std::filesystem::path& json_path,
                const std::filesystem::path& csv_path);
KSweepResult load_sweep(const std::filesystem::path& json_path);

}  // namespace patlas
