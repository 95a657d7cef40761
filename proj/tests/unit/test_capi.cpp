// Exercises the shared library through its C header only.
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "patlas/patlas.h"
#include "test_util.hpp"

namespace {

void write_features(const testutil::TempDir& dir, const std::string& name) {
  testutil::write_text(dir / name,
                       "#featureset v1 dim=2 labels=MEL|NV\n"
                       "t0,i0,MEL,0,0,1,0\n"
                       "t1,i0,MEL,96,0,0.9,0.1\n"
                       "t2,i1,NV,0,0,0,1\n"
                       "t3,i1,NV,96,0,0.1,0.9\n");
}

}  // namespace

TEST_CASE("status strings and version") {
  CHECK(std::strlen(patlas_version()) > 0);
  CHECK(std::string(patlas_status_string(PATLAS_OK)) != "");
  CHECK(std::string(patlas_status_string(PATLAS_ERR_FORMAT)) !=
        std::string(patlas_status_string(PATLAS_ERR_IO)));
}

TEST_CASE("null arguments are rejected with a message") {
  patlas_feature_set* fs = nullptr;
  CHECK(patlas_feature_set_load(nullptr, &fs) == PATLAS_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(patlas_last_error()) > 0);
  CHECK(patlas_feature_set_load("x.csv", nullptr) == PATLAS_ERR_INVALID_ARGUMENT);
  patlas_feature_set_free(nullptr);
  patlas_model_free(nullptr);
}

TEST_CASE("missing and malformed files map to distinct codes") {
  testutil::TempDir dir;
  patlas_feature_set* fs = nullptr;
  CHECK(patlas_feature_set_load((dir / "absent.csv").c_str(), &fs) == PATLAS_ERR_IO);
  CHECK(std::string(patlas_last_error()).find("absent.csv") != std::string::npos);
  testutil::write_text(dir / "bad.csv", "#featureset v1 dim=2 labels=MEL\nt0,i0,MEL,0,0,1\n");
  CHECK(patlas_feature_set_load((dir / "bad.csv").c_str(), &fs) == PATLAS_ERR_FORMAT);
  CHECK(fs == nullptr);
}

TEST_CASE("feature set, k-means and classification round trip") {
  testutil::TempDir dir;
  write_features(dir, "f.csv");
  patlas_feature_set* raw = nullptr;
  REQUIRE(patlas_feature_set_load((dir / "f.csv").c_str(), &raw) == PATLAS_OK);
  CHECK(patlas_feature_set_size(raw) == 4);
  CHECK(patlas_feature_set_dim(raw) == 2);
  CHECK(patlas_feature_set_image_count(raw) == 2);
  CHECK(patlas_feature_set_label_count(raw) == 2);
  CHECK(std::string(patlas_feature_set_label(raw, 1)) == "NV");
  CHECK_FALSE(patlas_feature_set_is_normalized(raw));

  patlas_feature_set* fs = nullptr;
  REQUIRE(patlas_feature_set_normalize(raw, &fs) == PATLAS_OK);
  CHECK(patlas_feature_set_is_normalized(fs));
  const double* f = patlas_feature_set_features(fs, 1);
  CHECK(std::abs(f[0] * f[0] + f[1] * f[1] - 1.0) <= 1e-12);

  patlas_kmeans_params p = patlas_kmeans_params_default();
  p.k = 2;
  p.seed = 3;
  patlas_cluster_model* model = nullptr;
  patlas_assignment* asg = nullptr;
  CHECK(patlas_kmeans_fit(raw, &p, &model, &asg) != PATLAS_OK);  // not normalized
  REQUIRE(patlas_kmeans_fit(fs, &p, &model, &asg) == PATLAS_OK);
  CHECK(patlas_model_k(model) == 2);
  CHECK(patlas_assignment_size(asg) == 4);
  CHECK(patlas_assignment_cluster(asg, 0) == patlas_assignment_cluster(asg, 1));
  CHECK(patlas_assignment_cluster(asg, 2) != patlas_assignment_cluster(asg, 0));

  double w = -1.0;
  REQUIRE(patlas_compute_w(fs, model, asg, &w) == PATLAS_OK);
  CHECK(w >= 0.0);

  patlas_probability_table* table = nullptr;
  REQUIRE(patlas_probability_table_build(fs, asg, 2, &table) == PATLAS_OK);
  const double* row = patlas_probability_table_row(table, 0);
  CHECK(row[0] + row[1] == doctest::Approx(1.0));

  patlas_predictions* preds = nullptr;
  REQUIRE(patlas_classify(fs, model, table, nullptr, 1, &preds) == PATLAS_OK);
  CHECK(patlas_predictions_size(preds) == 2);
  patlas_evaluation_summary s{};
  REQUIRE(patlas_evaluate(preds, (dir / "eval.json").c_str(), &s) == PATLAS_OK);
  CHECK(s.accuracy == 1.0);
  CHECK(s.n_scored == 2);

  const std::string mp = (dir / "m.json").string();
  REQUIRE(patlas_model_save(model, mp.c_str()) == PATLAS_OK);
  patlas_cluster_model* back = nullptr;
  REQUIRE(patlas_model_load(mp.c_str(), &back) == PATLAS_OK);
  // Stored with nine significant digits.
  CHECK(std::abs(patlas_model_centroid(back, 1)[0] - patlas_model_centroid(model, 1)[0]) <= 1e-8);

  patlas_predictions_free(preds);
  patlas_probability_table_free(table);
  patlas_model_free(back);
  patlas_assignment_free(asg);
  patlas_model_free(model);
  patlas_feature_set_free(fs);
  patlas_feature_set_free(raw);
}

TEST_CASE("selection helpers and statistics") {
  const int ks[] = {1, 2, 3, 4, 5, 6};
  const double curve[] = {100, 50, 30, 28, 27, 26.5};
  int k = -1;
  REQUIRE(patlas_select_k_elbow(ks, curve, 6, &k) == PATLAS_OK);
  CHECK(k == 3);
  const double line[] = {6, 5, 4, 3, 2, 1};
  REQUIRE(patlas_select_k_elbow(ks, line, 6, &k) == PATLAS_OK);
  CHECK(k == 0);
  const double w[] = {0.5, 0.2, 0.3, 0.2, 0.4, 0.6};
  REQUIRE(patlas_select_k_compactness(ks, w, 6, &k) == PATLAS_OK);
  CHECK(k == 2);

  const double d[] = {1, 2, 3};
  patlas_t_test t{};
  REQUIRE(patlas_one_sample_t(d, 3, &t) == PATLAS_OK);
  CHECK(t.df == 2);
  CHECK(std::abs(t.p_value - 0.0742) < 5e-5);
  const double flat[] = {2, 2, 2};
  CHECK(patlas_one_sample_t(flat, 3, &t) == PATLAS_ERR_DEGENERATE);

  const double p[] = {0.01, 0.04};
  double adj[2];
  REQUIRE(patlas_holm_correct(p, 2, adj) == PATLAS_OK);
  CHECK(adj[0] == 0.02);
  CHECK(adj[1] == 0.04);
}

TEST_CASE("catalog accessors") {
  testutil::TempDir dir;
  write_features(dir, "f.csv");
  patlas_feature_set* raw = nullptr;
  REQUIRE(patlas_feature_set_load((dir / "f.csv").c_str(), &raw) == PATLAS_OK);
  patlas_feature_set* fs = nullptr;
  REQUIRE(patlas_feature_set_normalize(raw, &fs) == PATLAS_OK);
  patlas_catalog* cat = nullptr;
  REQUIRE(patlas_catalog_create("compactness", &cat) == PATLAS_OK);
  CHECK(std::string(patlas_catalog_method(cat)) == "compactness");
  for (const char* dx : {"NV", "MEL"}) {
    patlas_feature_set* part = nullptr;
    REQUIRE(patlas_feature_set_select(fs, dx, &part) == PATLAS_OK);
    patlas_kmeans_params p = patlas_kmeans_params_default();
    p.k = 1;
    patlas_cluster_model* m = nullptr;
    patlas_assignment* a = nullptr;
    REQUIRE(patlas_kmeans_fit(part, &p, &m, &a) == PATLAS_OK);
    REQUIRE(patlas_catalog_add(cat, dx, 1, part, m, a) == PATLAS_OK);
    patlas_assignment_free(a);
    patlas_model_free(m);
    patlas_feature_set_free(part);
  }
  REQUIRE(patlas_catalog_diagnosis_count(cat) == 2);
  CHECK(std::string(patlas_catalog_diagnosis(cat, 0)) == "MEL");
  CHECK(std::string(patlas_catalog_diagnosis(cat, 1)) == "NV");
  CHECK(patlas_catalog_diagnosis(cat, 2) == nullptr);
  CHECK(patlas_catalog_cluster_count(cat, "MEL") == 1);
  CHECK(patlas_catalog_non_informative(cat, "MEL") == 1);  // two tiles only
  patlas_catalog_free(cat);
  patlas_feature_set_free(fs);
  patlas_feature_set_free(raw);
}
