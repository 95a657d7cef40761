#include <cmath>

#include "classifier.hpp"
#include "doctest.h"
#include "error.hpp"
#include "oracles.hpp"
#include "random.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace patlas;

namespace {

const std::vector<std::string> kLabels{"A", "B", "C"};

// Separated groups relabelled so group g carries class kLabels[g]; lesion ids
// are prefixed so train and test lesions never collide.
FeatureSet labelled_groups(std::uint64_t seed, const std::string& prefix) {
  std::vector<int> truth;
  const auto raw = synth::make_separated_groups(3, 6, 24, 0.1, seed, truth);
  std::vector<TileRecord> rs = raw.records();
  for (std::size_t i = 0; i < rs.size(); ++i) {
    rs[i].diagnosis = kLabels[static_cast<std::size_t>(truth[i])];
    rs[i].image_id = prefix + rs[i].image_id;
    rs[i].tile_id = prefix + rs[i].tile_id;
  }
  return normalize(FeatureSet(raw.dim(), kLabels, rs));
}

Assignment with_clusters(std::vector<int> c) {
  Assignment a;
  a.distance.assign(c.size(), 0.0);
  a.cluster = std::move(c);
  return a;
}

FeatureSet tiles_with_labels(const std::vector<std::string>& dx) {
  std::vector<TileRecord> rs;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    TileRecord r;
    r.tile_id = "t" + std::to_string(i);
    r.image_id = "i" + std::to_string(i);
    r.diagnosis = dx[i];
    r.features = {1.0};
    rs.push_back(r);
  }
  return FeatureSet(1, {"MEL", "NV", "BCC"}, rs);
}

LesionPrediction pred(std::string t, std::optional<std::string> p) {
  LesionPrediction l;
  l.lesion_id = "l";
  l.true_label = std::move(t);
  l.predicted = std::move(p);
  return l;
}

}  // namespace

TEST_CASE("probability table frequencies") {
  const auto train = tiles_with_labels({"MEL", "MEL", "MEL", "NV", "BCC", "BCC", "BCC", "BCC",
                                        "BCC", "BCC", "BCC", "BCC"});
  const auto t =
      build_probability_table(with_clusters({0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1}), train, 2);
  CHECK(t.rows[0] == std::vector<double>{0.75, 0.25, 0.0});
  CHECK(t.rows[1] == std::vector<double>{0.0, 0.0, 1.0});
  for (const auto& row : t.rows) {
    double s = 0;
    for (double v : row) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(build_probability_table(with_clusters({0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}),
                                          train, 2),
                  Error);
}

TEST_CASE("lesion prediction tie and single tile") {
  ProbabilityTable t;
  t.labels = {"M", "N"};
  t.rows = {{0.75, 0.25}, {0.25, 0.75}, {0.0, 1.0}};
  const auto tie = predict_lesion({0, 1}, t);
  CHECK(tie.probabilities == std::vector<double>{0.5, 0.5});
  CHECK(tie.predicted == "M");
  CHECK(predict_lesion({2}, t).predicted == "N");
  CHECK_FALSE(predict_lesion({}, t).predicted.has_value());
}

TEST_CASE("class-pure separated data is classified perfectly") {
  const auto train = labelled_groups(1, "tr_");
  const auto test = labelled_groups(2, "te_");
  KMeansParams p;
  p.k = 3;
  p.seed = 5;
  const auto fit = fit_kmeans(train, p);
  const auto table = build_probability_table(fit.assignment, train, 3);

  // Brute-force nearest centroid per test tile.
  std::vector<std::vector<double>> cents;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto row = fit.model.centroids.row(c);
    cents.emplace_back(row.begin(), row.end());
  }
  const auto a = assign(fit.model, test);
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::size_t best = 0;
    long double best_d = 10;
    for (std::size_t c = 0; c < 3; ++c) {
      std::vector<long double> cl(cents[c].begin(), cents[c].end());
      const auto d = oracle::cos_dst(cl, test[i].features);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    CHECK(a.cluster[i] == static_cast<int>(best));
  }

  const auto preds = classify(test, fit.model, table);
  CHECK(preds.size() == 18);
  const auto ev = evaluate(preds, kLabels);
  CHECK(ev.accuracy == 1.0);
  CHECK(ev.mean_recall == 1.0);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t q = 0; q < 3; ++q)
      CHECK(ev.confusion_proportions[t][q] == (t == q ? 1.0 : 0.0));
}

TEST_CASE("lesions without tiles are excluded") {
  const auto train = labelled_groups(1, "tr_");
  const auto test = labelled_groups(2, "te_");
  KMeansParams p;
  p.k = 3;
  const auto fit = fit_kmeans(train, p);
  const auto table = build_probability_table(fit.assignment, train, 3);
  const auto preds = classify(test, fit.model, table, {{"ghost", "B"}});
  REQUIRE(preds.size() == 19);
  CHECK(preds.back().lesion_id == "ghost");
  CHECK_FALSE(preds.back().predicted.has_value());
  const auto ev = evaluate(preds, kLabels);
  CHECK(ev.n_excluded == 1);
  CHECK(ev.n_scored == 18);
}

TEST_CASE("macro recall") {
  std::vector<LesionPrediction> ps;
  for (int i = 0; i < 5; ++i) ps.push_back(pred("A", i < 4 ? "A" : "B"));
  for (int i = 0; i < 5; ++i) ps.push_back(pred("B", i < 3 ? "B" : "A"));
  const auto ev = evaluate(ps, {"A", "B", "C"});
  CHECK(ev.mean_recall == doctest::Approx(0.7).epsilon(1e-15));
  CHECK_FALSE(ev.recall[2].has_value());
  CHECK(ev.accuracy == doctest::Approx(0.7));

  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(6);
    std::vector<std::string> labels;
    for (std::size_t l = 0; l < n; ++l) labels.push_back("L" + std::to_string(l));
    std::vector<std::vector<long long>> conf(n, std::vector<long long>(n, 0));
    std::vector<LesionPrediction> preds;
    for (std::size_t t = 0; t < n; ++t) {
      if (rng.below(4) == 0) continue;  // absent class
      for (std::size_t q = 0; q < n; ++q) {
        conf[t][q] = static_cast<long long>(rng.below(9));
        for (long long c = 0; c < conf[t][q]; ++c) preds.push_back(pred(labels[t], labels[q]));
      }
    }
    if (preds.empty()) continue;
    const auto got = evaluate(preds, labels);
    CHECK(std::abs(got.mean_recall - oracle::macro_recall(conf)) <= 1e-12);
    for (const auto& row : got.confusion_proportions) {
      double s = 0;
      for (double v : row) s += v;
      if (s != 0.0) CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("prediction and table files") {
  testutil::TempDir dir;
  ProbabilityTable t;
  t.labels = {"M", "N"};
  t.rows = {{0.75, 0.25}, {1.0 / 3.0, 2.0 / 3.0}};
  const auto back = table_from_json(table_to_json(t));
  CHECK(back.labels == t.labels);
  CHECK(back.rows[1][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  std::vector<LesionPrediction> ps{pred("M", "N"), pred("N", std::nullopt)};
  ps[0].lesion_id = "a";
  ps[0].probabilities = {0.25, 0.75};
  ps[1].lesion_id = "b";
  save_predictions(ps, t.labels, dir / "p.csv");
  const auto text = testutil::read_text(dir / "p.csv");
  CHECK(text.rfind("lesion_id,true_label,predicted_label,p_M,p_N\n", 0) == 0);
  std::vector<std::string> labels;
  const auto loaded = load_predictions(dir / "p.csv", labels);
  CHECK(labels == t.labels);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].predicted == "N");
  CHECK_FALSE(loaded[1].predicted.has_value());

  testutil::write_text(dir / "l.csv", "lesion_id,true_label\nx,M\ny,N\n");
  const auto lesions = load_lesion_list(dir / "l.csv");
  REQUIRE(lesions.size() == 2);
  CHECK(lesions[1].true_label == "N");
}
