#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "feature_store.hpp"

namespace patlas {

/// 1 - u.v / (|u||v|), clamped to [0, 2]. Throws kNumeric on a zero vector.
double cosine_distance(std::span<const double> u, std::span<const double> v);

/// Row-major k x dim centroid matrix.
class Centroids {
 public:
  Centroids() = default;
  Centroids(std::size_t k, std::size_t dim) : k_(k), dim_(dim), data_(k * dim, 0.0) {}

  std::size_t k() const noexcept { return k_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Centroids&) const = default;

 private:
  std::size_t k_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

struct ClusterModel {
  Centroids centroids;  // plain member means, not re-normalized
  std::uint64_t seed = 0;
  int iterations_run = 0;
  double inertia = 0.0;  // sum of cosine distances to assigned centroids

  std::size_t k() const noexcept { return centroids.k(); }
  std::size_t dim() const noexcept { return centroids.dim(); }
};

/// Cluster index and distance per record, in FeatureSet order.
struct Assignment {
  std::vector<int> cluster;
  std::vector<double> distance;

  std::size_t size() const noexcept { return cluster.size(); }
  bool operator==(const Assignment&) const = default;
};

struct KMeansParams {
  int k = 2;
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-6;     // relative inertia improvement
  unsigned threads = 1;
};

struct KMeansResult {
  ClusterModel model;
  Assignment assignment;
  std::vector<double> inertia_history;  // one entry per assignment step
};

/// Cosine-distance Lloyd iteration with seeded k-means++ initialization.
/// Requires a normalized FeatureSet and 1 <= k <= fs.size().
KMeansResult fit_kmeans(const FeatureSet& fs, const KMeansParams& params);

/// Nearest-centroid assignment, ties to the lowest index.
Assignment assign(const ClusterModel& model, const FeatureSet& fs,
                  unsigned threads = 1);

// JSON: {k, dim, seed, iterations_run, inertia, centroids}
std::string model_to_json(const ClusterModel& model);
ClusterModel model_from_json(const std::string& text);
void save_model(const ClusterModel& model, const std::filesystem::path& path);
ClusterModel load_model(const std::filesystem::path& path);

// CSV: tile_id,cluster,distance
void save_assignment(const Assignment& a, const FeatureSet& fs,
                     const std::filesystem::path& path);
Assignment load_assignment(const FeatureSet& fs, const std::filesystem::path& path);

}  // namespace patlas
