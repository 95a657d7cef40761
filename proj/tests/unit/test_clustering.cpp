#include <cmath>
#include <numbers>

#include "clustering.hpp"
#include "doctest.h"
#include "error.hpp"
#include "oracles.hpp"
#include "random.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace patlas;

namespace {

FeatureSet points(const std::vector<std::vector<double>>& pts, bool norm = true) {
  std::vector<TileRecord> rs;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    TileRecord r;
    r.tile_id = "p" + std::to_string(i);
    r.image_id = "img" + std::to_string(i);
    r.diagnosis = "A";
    r.features = pts[i];
    rs.push_back(r);
  }
  FeatureSet fs(pts.at(0).size(), {"A"}, rs);
  return norm ? normalize(fs) : fs;
}

std::vector<double> v2(double a, double b) { return {a, b}; }

}  // namespace

TEST_CASE("cosine distance") {
  const std::vector<double> e1{1, 0}, e2{0, 1}, m1{-1, 0};
  CHECK(cosine_distance(e1, e1) == 0.0);
  CHECK(cosine_distance(e1, e2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_distance(e1, m1) == 2.0);
  const std::vector<double> z{0, 0};
  CHECK_THROWS_AS(cosine_distance(e1, z), Error);
  const std::vector<double> scaled{5, 0};
  CHECK(cosine_distance(e1, scaled) == 0.0);
}

TEST_CASE("k=2 on antipodal groups matches the optimal bipartition") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> pts;
    const int n = 6 + static_cast<int>(rng.below(7));  // up to 12 points
    for (int i = 0; i < n; ++i) {
      const double base = (i % 2) ? std::numbers::pi : 0.0;
      const double a = base + (rng.uniform() - 0.5) * 0.6;
      pts.push_back(v2(std::cos(a), std::sin(a)));
    }
    const auto fs = points(pts);
    std::vector<std::vector<double>> unit_pts;
    for (const auto& r : fs.records()) unit_pts.push_back(r.features);
    const auto [best, labels] = oracle::best_bipartition(unit_pts);

    KMeansParams p;
    p.k = 2;
    p.seed = static_cast<std::uint64_t>(trial);
    const auto res = fit_kmeans(fs, p);
    CHECK(oracle::adjusted_rand_index(res.assignment.cluster, labels) == 1.0);
    CHECK(res.model.inertia == doctest::Approx(best).epsilon(1e-9));
    for (std::size_t i = 0; i < pts.size(); ++i)
      CHECK(res.assignment.cluster[i] == res.assignment.cluster[i % 2]);
  }
}

TEST_CASE("k = n gives zero inertia") {
  const auto fs = points({v2(1, 0), v2(0, 1), v2(1, 1), v2(-1, 0.2), v2(0.3, -1)});
  KMeansParams p;
  p.k = 5;
  const auto res = fit_kmeans(fs, p);
  CHECK(std::abs(res.model.inertia) <= 1e-12);
  std::vector<int> seen(5, 0);
  for (int c : res.assignment.cluster) ++seen[static_cast<std::size_t>(c)];
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("k = 1 centroid is the global mean") {
  const auto fs = points({v2(1, 0), v2(0, 1), v2(1, 1)});
  KMeansParams p;
  p.k = 1;
  const auto res = fit_kmeans(fs, p);
  std::vector<long double> mean(2, 0);
  for (const auto& r : fs.records())
    for (int d = 0; d < 2; ++d) mean[d] += r.features[d];
  for (auto& m : mean) m /= 3;
  CHECK(res.model.centroids.row(0)[0] == doctest::Approx(static_cast<double>(mean[0])).epsilon(1e-12));
  CHECK(res.model.centroids.row(0)[1] == doctest::Approx(static_cast<double>(mean[1])).epsilon(1e-12));
  long double inertia = 0;
  for (const auto& r : fs.records()) inertia += oracle::cos_dst(mean, r.features);
  CHECK(res.model.inertia == doctest::Approx(static_cast<double>(inertia)).epsilon(1e-12));
}

TEST_CASE("inertia history is non-increasing") {
  synth::CorpusSpec spec;
  spec.labels = {"A"};
  spec.images_per_class = 40;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    spec.seed = seed;
    const auto fs = normalize(synth::make_corpus(spec));
    for (int k : {3, 8, 15}) {
      KMeansParams p;
      p.k = k;
      p.seed = seed;
      const auto res = fit_kmeans(fs, p);
      for (std::size_t i = 1; i < res.inertia_history.size(); ++i)
        CHECK(res.inertia_history[i] <= res.inertia_history[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("separated groups are recovered exactly") {
  for (int g : {3, 5}) {
    std::vector<int> truth;
    const auto fs = normalize(synth::make_separated_groups(g, 8, 10, 0.05, 9, truth));
    KMeansParams p;
    p.k = g;
    p.seed = 1;
    CHECK(oracle::adjusted_rand_index(fit_kmeans(fs, p).assignment.cluster, truth) == 1.0);
  }
}

TEST_CASE("reassigning the training set reproduces the fit") {
  synth::CorpusSpec spec;
  spec.labels = {"A"};
  const auto fs = normalize(synth::make_corpus(spec));
  KMeansParams p;
  p.k = 7;
  p.seed = 4;
  const auto res = fit_kmeans(fs, p);
  CHECK(assign(res.model, fs) == res.assignment);
}

TEST_CASE("assign: exact hit and tie rule") {
  ClusterModel m;
  m.centroids = Centroids(4, 2);
  const double c[4][2] = {{1, 0}, {1, 1}, {1, -1}, {0, 1}};
  for (int i = 0; i < 4; ++i)
    for (int d = 0; d < 2; ++d) m.centroids.row(i)[d] = c[i][d];
  const auto fs = points({v2(0, 1), v2(1, 0)}, false);
  const auto a = assign(m, fs);
  CHECK(a.cluster[0] == 3);
  CHECK(a.distance[0] == 0.0);
  // (1,0) is equidistant from (1,1) and (1,-1) but strictly closer to (1,0).
  CHECK(a.cluster[1] == 0);

  ClusterModel tie;
  tie.centroids = Centroids(3, 2);
  const double t[3][2] = {{-1, 0}, {1, 1}, {1, -1}};
  for (int i = 0; i < 3; ++i)
    for (int d = 0; d < 2; ++d) tie.centroids.row(i)[d] = t[i][d];
  CHECK(assign(tie, fs).cluster[1] == 1);
}

TEST_CASE("fit validates its inputs") {
  const auto raw = points({v2(1, 0), v2(0, 1)}, false);
  KMeansParams p;
  CHECK_THROWS_AS(fit_kmeans(raw, p), Error);
  const auto fs = normalize(raw);
  p.k = 3;
  CHECK_THROWS_AS(fit_kmeans(fs, p), Error);
  p.k = 0;
  CHECK_THROWS_AS(fit_kmeans(fs, p), Error);
}

TEST_CASE("duplicate points cannot fill more clusters than distinct directions") {
  const auto fs = points({v2(1, 0), v2(1, 0), v2(2, 0)});
  KMeansParams p;
  p.k = 2;
  try {
    fit_kmeans(fs, p);
    FAIL("expected degenerate error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerate);
  }
}

TEST_CASE("results are identical for 1, 2 and 8 threads") {
  synth::CorpusSpec spec;
  spec.labels = {"A", "B"};
  const auto fs = normalize(synth::make_corpus(spec));
  KMeansParams p;
  p.k = 12;
  p.seed = 99;
  p.threads = 1;
  const auto one = fit_kmeans(fs, p);
  for (unsigned t : {2u, 8u}) {
    p.threads = t;
    const auto other = fit_kmeans(fs, p);
    CHECK(other.assignment == one.assignment);
    CHECK(other.model.centroids == one.model.centroids);
    CHECK(other.model.inertia == one.model.inertia);
    CHECK(assign(one.model, fs, t) == one.assignment);
  }
}

TEST_CASE("model and assignment serialization") {
  testutil::TempDir dir;
  synth::CorpusSpec spec;
  spec.labels = {"A"};
  const auto fs = normalize(synth::make_corpus(spec));
  KMeansParams p;
  p.k = 5;
  p.seed = 2;
  const auto res = fit_kmeans(fs, p);
  save_model(res.model, dir / "m.json");
  const auto back = load_model(dir / "m.json");
  CHECK(back.k() == 5);
  CHECK(back.dim() == fs.dim());
  CHECK(back.seed == 2);
  CHECK(back.iterations_run == res.model.iterations_run);
  for (std::size_t i = 0; i < back.centroids.data().size(); ++i)
    CHECK(back.centroids.data()[i] ==
          doctest::Approx(res.model.centroids.data()[i]).epsilon(1e-8));
  CHECK(assign(back, fs).cluster == res.assignment.cluster);

  save_assignment(res.assignment, fs, dir / "a.csv");
  const auto a = load_assignment(fs, dir / "a.csv");
  CHECK(a.cluster == res.assignment.cluster);
  CHECK(testutil::read_text(dir / "a.csv").rfind("tile_id,cluster,distance\n", 0) == 0);

  testutil::write_text(dir / "bad.json", "{\"k\": 2}");
  CHECK_THROWS_AS(load_model(dir / "bad.json"), Error);
}
