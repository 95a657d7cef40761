#include "classifier.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "stats.hpp"
#include "text_util.hpp"

namespace patlas {
namespace {

using ojson = nlohmann::ordered_json;

double round9(double v) { return std::strtod(format_real(v).c_str(), nullptr); }

std::size_t index_of(const std::vector<std::string>& labels, const std::string& l) {
  const auto it = std::find(labels.begin(), labels.end(), l);
  if (it == labels.end()) fail(ErrorCode::kInvalidArgument, "unknown label '" + l + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

}  // namespace

ProbabilityTable build_probability_table(const Assignment& assignment,
                                         const FeatureSet& train, std::size_t k) {
  if (assignment.size() != train.size())
    fail(ErrorCode::kInvalidArgument, "assignment does not cover the training set");
  ProbabilityTable t;
  t.labels = train.labels();
  std::vector<std::vector<std::size_t>> counts(k, std::vector<std::size_t>(t.labels.size(), 0));
  for (std::size_t i = 0; i < train.size(); ++i) {
    const int c = assignment.cluster[i];
    if (c < 0 || static_cast<std::size_t>(c) >= k)
      fail(ErrorCode::kInvalidArgument, "cluster index out of range");
    ++counts[static_cast<std::size_t>(c)][*train.label_index(train[i].diagnosis)];
  }
  t.rows.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t total = 0;
    for (auto v : counts[c]) total += v;
    if (total == 0)
      fail(ErrorCode::kDegenerate, "cluster " + std::to_string(c) + " has no training tiles");
    t.rows[c].resize(t.labels.size());
    for (std::size_t l = 0; l < t.labels.size(); ++l)
      t.rows[c][l] = static_cast<double>(counts[c][l]) / static_cast<double>(total);
  }
  return t;
}

LesionPrediction predict_lesion(const std::vector<int>& tile_clusters,
                                const ProbabilityTable& table) {
  LesionPrediction p;
  if (tile_clusters.empty()) return p;
  p.probabilities.assign(table.labels.size(), 0.0);
  for (int c : tile_clusters) {
    if (c < 0 || static_cast<std::size_t>(c) >= table.rows.size())
      fail(ErrorCode::kInvalidArgument, "cluster index out of range");
    const auto& row = table.rows[static_cast<std::size_t>(c)];
    for (std::size_t l = 0; l < row.size(); ++l) p.probabilities[l] += row[l];
  }
  for (double& v : p.probabilities) v /= static_cast<double>(tile_clusters.size());
  std::size_t best = 0;
  for (std::size_t l = 1; l < p.probabilities.size(); ++l)
    if (p.probabilities[l] > p.probabilities[best]) best = l;
  p.predicted = table.labels[best];
  return p;
}

std::vector<LesionPrediction> classify(const FeatureSet& test, const ClusterModel& model,
                                       const ProbabilityTable& table,
                                       const std::vector<LesionRef>& lesions,
                                       unsigned threads) {
  if (test.labels() != table.labels)
    fail(ErrorCode::kInvalidArgument, "test label set differs from the training label set");
  if (table.rows.size() != model.k())
    fail(ErrorCode::kInvalidArgument, "probability table and model disagree on k");
  const Assignment a = assign(model, test, threads);

  std::vector<std::string> order;
  std::map<std::string, std::vector<int>> clusters;
  std::map<std::string, std::string> truth;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& r = test[i];
    auto [it, inserted] = truth.emplace(r.image_id, r.diagnosis);
    if (inserted) order.push_back(r.image_id);
    else if (it->second != r.diagnosis)
      fail(ErrorCode::kFormat, "lesion '" + r.image_id + "' has tiles with differing labels");
    clusters[r.image_id].push_back(a.cluster[i]);
  }
  for (const auto& l : lesions) {
    index_of(table.labels, l.true_label);
    auto [it, inserted] = truth.emplace(l.lesion_id, l.true_label);
    if (inserted) order.push_back(l.lesion_id);
    else if (it->second != l.true_label)
      fail(ErrorCode::kFormat, "lesion '" + l.lesion_id + "' label disagrees with its tiles");
  }

  std::vector<LesionPrediction> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    const auto c = clusters.find(id);
    LesionPrediction p =
        c != clusters.end() ? predict_lesion(c->second, table) : LesionPrediction{};
    p.lesion_id = id;
    p.true_label = truth[id];
    out.push_back(std::move(p));
  }
  return out;
}

EvaluationResult evaluate(const std::vector<LesionPrediction>& preds,
                          const std::vector<std::string>& labels) {
  EvaluationResult r;
  r.labels = labels;
  const std::size_t nl = labels.size();
  r.confusion.assign(nl, std::vector<std::size_t>(nl, 0));
  for (const auto& p : preds) {
    ++r.n_lesions;
    const std::size_t t = index_of(labels, p.true_label);
    if (!p.predicted) {
      ++r.n_excluded;
      continue;
    }
    const std::size_t q = index_of(labels, *p.predicted);
    ++r.confusion[t][q];
    ++r.n_scored;
    if (t == q) ++r.n_correct;
  }
  if (r.n_scored == 0) fail(ErrorCode::kInvalidArgument, "no scored lesions to evaluate");
  r.accuracy = static_cast<double>(r.n_correct) / static_cast<double>(r.n_scored);
  std::tie(r.accuracy_ci_lo, r.accuracy_ci_hi) = stats::wilson_ci95(r.n_correct, r.n_scored);

  r.recall.assign(nl, std::nullopt);
  r.confusion_proportions.assign(nl, std::vector<double>(nl, 0.0));
  double recall_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t t = 0; t < nl; ++t) {
    std::size_t row_total = 0;
    for (auto v : r.confusion[t]) row_total += v;
    if (row_total == 0) continue;
    for (std::size_t q = 0; q < nl; ++q)
      r.confusion_proportions[t][q] =
          static_cast<double>(r.confusion[t][q]) / static_cast<double>(row_total);
    r.recall[t] = r.confusion_proportions[t][t];
    recall_sum += *r.recall[t];
    ++present;
  }
  r.mean_recall = recall_sum / static_cast<double>(present);
  return r;
}

std::string table_to_json(const ProbabilityTable& t) {
  ojson j;
  j["labels"] = t.labels;
  auto rows = ojson::array();
  for (const auto& row : t.rows) {
    auto jr = ojson::array();
    for (double v : row) jr.push_back(round9(v));
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

ProbabilityTable table_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ProbabilityTable t;
    t.labels = j.at("labels").get<std::vector<std::string>>();
    t.rows = j.at("rows").get<std::vector<std::vector<double>>>();
    for (const auto& row : t.rows)
      if (row.size() != t.labels.size())
        fail(ErrorCode::kFormat, "probability table row has the wrong width");
    return t;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("probability table JSON: ") + e.what());
  }
}

std::string evaluation_to_json(const EvaluationResult& r) {
  ojson j;
  j["labels"] = r.labels;
  j["n_lesions"] = r.n_lesions;
  j["n_excluded"] = r.n_excluded;
  j["n_scored"] = r.n_scored;
  j["n_correct"] = r.n_correct;
  j["accuracy"] = round9(r.accuracy);
  j["accuracy_ci95"] = ojson{{"method", "wilson"},
                             {"lo", round9(r.accuracy_ci_lo)},
                             {"hi", round9(r.accuracy_ci_hi)}};
  j["mean_recall"] = round9(r.mean_recall);
  auto recall = ojson::object();
  for (std::size_t i = 0; i < r.labels.size(); ++i)
    recall[r.labels[i]] = r.recall[i] ? ojson(round9(*r.recall[i])) : ojson(nullptr);
  j["recall"] = std::move(recall);
  j["confusion"] = r.confusion;
  auto props = ojson::array();
  for (const auto& row : r.confusion_proportions) {
    auto jr = ojson::array();
    for (double v : row) jr.push_back(round9(v));
    props.push_back(std::move(jr));
  }
  j["confusion_proportions"] = std::move(props);
  return j.dump(2) + "\n";
}

void save_predictions(const std::vector<LesionPrediction>& preds,
                      const std::vector<std::string>& labels,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << "lesion_id,true_label,predicted_label";
  for (const auto& l : labels) out << ",p_" << l;
  out << '\n';
  for (const auto& p : preds) {
    out << p.lesion_id << ',' << p.true_label << ',' << p.predicted.value_or("");
    for (std::size_t l = 0; l < labels.size(); ++l) {
      out << ',';
      if (p.predicted) out << format_real(p.probabilities[l]);
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<LesionPrediction> load_predictions(const std::filesystem::path& path,
                                               std::vector<std::string>& labels) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open predictions file " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kFormat, path.string() + ": empty file");
  const auto head = text::split(text::trim(line), ',');
  if (head.size() < 4 || head[0] != "lesion_id" || head[1] != "true_label" ||
      head[2] != "predicted_label")
    fail(ErrorCode::kFormat, path.string() + ": bad predictions header");
  labels.clear();
  for (std::size_t i = 3; i < head.size(); ++i) {
    if (!text::starts_with(head[i], "p_"))
      fail(ErrorCode::kFormat, path.string() + ": probability columns must be p_<label>");
    labels.emplace_back(head[i].substr(2));
  }
  std::vector<LesionPrediction> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (row.empty()) continue;
    const auto f = text::split(row, ',');
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (f.size() != head.size()) fail(ErrorCode::kFormat, where + "wrong field count");
    LesionPrediction p;
    p.lesion_id = std::string(f[0]);
    p.true_label = std::string(f[1]);
    if (!f[2].empty()) {
      p.predicted = std::string(f[2]);
      for (std::size_t i = 3; i < f.size(); ++i) {
        const auto v = text::parse_double(f[i]);
        if (!v) fail(ErrorCode::kFormat, where + "bad probability value");
        p.probabilities.push_back(*v);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<LesionRef> load_lesion_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open lesion list " + path.string());
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "lesion_id,true_label")
    fail(ErrorCode::kFormat, path.string() + ": header must be lesion_id,true_label");
  std::vector<LesionRef> out;
  while (std::getline(in, line)) {
    const auto row = text::trim(line);
    if (row.empty()) continue;
    const auto f = text::split(row, ',');
    if (f.size() != 2 || f[0].empty() || f[1].empty())
      fail(ErrorCode::kFormat, path.string() + ": malformed lesion row");
    out.push_back({std::string(f[0]), std::string(f[1])});
  }
  return out;
}

}  // namespace patlas
