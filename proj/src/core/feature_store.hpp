#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace patlas {

/// One image tile: where it came from and its feature vector.
struct TileRecord {
  std::string tile_id;
  std::string image_id;  // groups the tiles of one lesion
  std::string diagnosis;
  int x = 0;
  int y = 0;
  std::vector<double> features;

  bool operator==(const TileRecord&) const = default;
};

/// A validated collection of tiles sharing one feature width.
///
/// Construction checks every invariant (label membership, arity, finite
/// values, unique tile ids, unit norms when flagged normalized) and throws
/// patlas::Error on the first violation. Instances are immutable afterwards
/// and safe to share between threads.
class FeatureSet {
 public:
  FeatureSet(std::size_t dim, std::vector<std::string> labels,
             std::vector<TileRecord> records, bool normalized = false);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  bool normalized() const noexcept { return normalized_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<TileRecord>& records() const noexcept { return records_; }
  const TileRecord& operator[](std::size_t i) const { return records_[i]; }

  std::optional<std::size_t> label_index(std::string_view label) const;

  /// Records whose diagnosis equals `label`, same label set and flags.
  FeatureSet select_diagnosis(std::string_view label) const;

  bool operator==(const FeatureSet&) const = default;

 private:
  std::size_t dim_;
  std::vector<std::string> labels_;
  std::vector<TileRecord> records_;
  bool normalized_;
};

// Unit norm tolerance for sets produced in memory by normalize().
inline constexpr double kUnitNormTolerance = 1e-9;
// Looser tolerance for normalized sets read back from disk, where values
// carry only 9 significant digits.
inline constexpr double kStoredUnitNormTolerance = 1e-6;

FeatureSet load_feature_set(const std::filesystem::path& path);
void save_feature_set(const FeatureSet& fs, const std::filesystem::path& path);

/// Scales every vector to unit Euclidean norm. Throws kNumeric naming the
/// tile when a vector has zero norm.
FeatureSet normalize(const FeatureSet& fs);

/// Equality at the serialization precision (9 significant digits).
bool equivalent(const FeatureSet& a, const FeatureSet& b);

/// Shortest "%.9g" rendering used by every text artifact.
std::string format_real(double v);

}  // namespace patlas
