#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clustering.hpp"
#include "feature_store.hpp"

namespace patlas {

/// Per-cluster training-label frequencies, one row per cluster.
struct ProbabilityTable {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
};

ProbabilityTable build_probability_table(const Assignment& assignment,
                                         const FeatureSet& train, std::size_t k);

struct LesionPrediction {
  std::string lesion_id;
  std::string true_label;
  std::optional<std::string> predicted;  // empty when the lesion has no tiles
  std::vector<double> probabilities;     // mean over tiles, label_set order
};

/// Averages the nearest clusters' probability vectors over a lesion's tiles;
/// argmax with ties to the earliest label. `tile_clusters` are the nearest
/// cluster indices of the lesion's tiles.
LesionPrediction predict_lesion(const std::vector<int>& tile_clusters,
                                const ProbabilityTable& table);

struct LesionRef {
  std::string lesion_id;
  std::string true_label;
};

/// Groups test tiles by image_id (first-appearance order) and predicts each
/// lesion. Lesions listed in `lesions` that have no tiles are emitted as
/// excluded predictions.
std::vector<LesionPrediction> classify(const FeatureSet& test, const ClusterModel& model,
                                       const ProbabilityTable& table,
                                       const std::vector<LesionRef>& lesions = {},
                                       unsigned threads = 1);

struct EvaluationResult {
  std::vector<std::string> labels;
  std::size_t n_lesions = 0;
  std::size_t n_excluded = 0;
  std::size_t n_scored = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
  double accuracy_ci_lo = 0.0;  // Wilson 95%
  double accuracy_ci_hi = 0.0;
  double mean_recall = 0.0;     // macro over classes present in ground truth
  std::vector<std::optional<double>> recall;  // per label; absent if unseen
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<std::vector<double>> confusion_proportions;
};

EvaluationResult evaluate(const std::vector<LesionPrediction>& predictions,
                          const std::vector<std::string>& labels);

std::string table_to_json(const ProbabilityTable& t);
ProbabilityTable table_from_json(const std::string& text);
std::string evaluation_to_json(const EvaluationResult& r);

// CSV: lesion_id,true_label,predicted_label,p_<label>...
void save_predictions(const std::vector<LesionPrediction>& predictions,
                      const std::vector<std::string>& labels,
                      const std::filesystem::path& path);
std::vector<LesionPrediction> load_predictions(const std::filesystem::path& path,
                                               std::vector<std::string>& labels_out);

/// Lesion list CSV with header lesion_id,true_label.
std::vector<LesionRef> load_lesion_list(const std::filesystem::path& path);

}  // namespace patlas
