#include <algorithm>
#include <cmath>

#include "catalog.hpp"
#include "doctest.h"
#include "error.hpp"
#include "preprocess.hpp"
#include "stats_oracle.hpp"
#include "test_util.hpp"

using namespace patlas;

namespace {

// One cluster per requested size, all tiles pointing near the x axis for
// cluster 0, y axis for cluster 1, and so on.
struct Built {
  FeatureSet fs;
  ClusterModel model;
  Assignment assignment;
};

Built clusters_of(const std::vector<std::size_t>& sizes, const std::string& dx = "MEL") {
  const std::size_t k = sizes.size();
  const std::size_t dim = std::max<std::size_t>(k, 2);
  std::vector<TileRecord> rs;
  Built b{FeatureSet(dim, {dx}, {}), {}, {}};
  b.model.centroids = Centroids(k, dim);
  for (std::size_t c = 0; c < k; ++c) {
    b.model.centroids.row(c)[c] = 1.0;
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      TileRecord r;
      r.tile_id = "c" + std::to_string(c) + "_t" + std::to_string(i);
      r.image_id = "img" + std::to_string(i);
      r.diagnosis = dx;
      r.features.assign(dim, 0.0);
      r.features[c] = 1.0;
      r.features[(c + 1) % dim] = 0.01 * static_cast<double>(i);
      rs.push_back(r);
      b.assignment.cluster.push_back(static_cast<int>(c));
      b.assignment.distance.push_back(0.0);
    }
  }
  b.fs = FeatureSet(dim, {dx}, rs);
  return b;
}

MethodCatalog catalog_with(const std::vector<std::size_t>& sizes, const std::string& dx = "MEL") {
  const auto b = clusters_of(sizes, dx);
  MethodCatalog cat;
  cat.method = "compactness";
  cat.by_diagnosis[dx] = build_catalog(b.fs, b.model, b.assignment, dx);
  cat.chosen_k[dx] = static_cast<int>(sizes.size());
  return cat;
}

}  // namespace

TEST_CASE("informative boundary at six tiles") {
  CHECK_FALSE(is_informative(5, std::nullopt));
  CHECK(is_informative(6, std::nullopt));
  CHECK(is_informative(5, true));
  CHECK_FALSE(is_informative(40, false));

  const auto b = clusters_of({5, 6, 40});
  const auto entries = build_catalog(b.fs, b.model, b.assignment, "MEL");
  REQUIRE(entries.size() == 3);
  CHECK_FALSE(entries[0].informative());
  CHECK(entries[0].representatives.size() == 5);
  CHECK(entries[1].informative());
  CHECK(entries[1].representatives.size() == 6);
  CHECK(entries[2].representatives.size() == 7);
}

TEST_CASE("representatives are the closest members") {
  const auto b = clusters_of({40});
  const auto e = build_catalog(b.fs, b.model, b.assignment, "MEL").at(0);
  double worst_rep = 0;
  for (const auto& r : e.representatives) worst_rep = std::max(worst_rep, r.distance);
  for (std::size_t i = 0; i < b.fs.size(); ++i) {
    const auto& id = b.fs[i].tile_id;
    const bool is_rep = std::any_of(e.representatives.begin(), e.representatives.end(),
                                    [&](const auto& r) { return r.tile_id == id; });
    if (!is_rep) CHECK(cosine_distance(b.model.centroids.row(0), b.fs[i].features) >= worst_rep);
  }
  CHECK(std::is_sorted(e.representatives.begin(), e.representatives.end(),
                       [](const auto& x, const auto& y) { return x.distance < y.distance; }));
}

TEST_CASE("summary statistics across diagnoses") {
  MethodCatalog cat;
  cat.method = "elbow";
  for (auto [dx, n] : {std::pair{"A", 10}, std::pair{"B", 14}, std::pair{"C", 18}}) {
    const auto b = clusters_of(std::vector<std::size_t>(static_cast<std::size_t>(n), 6), dx);
    cat.by_diagnosis[dx] = build_catalog(b.fs, b.model, b.assignment, dx);
    cat.chosen_k[dx] = n;
  }
  const auto s = summarize({cat});
  REQUIRE(s.methods.size() == 1);
  const auto& m = s.methods[0];
  CHECK(m.cluster_count.mean == 14.0);
  const double half = oracle::t_quantile975(2) * 4.0 / std::sqrt(3.0);
  CHECK(std::abs(m.cluster_count.lo - (14 - half)) <= 1e-9);
  CHECK(std::abs(m.cluster_count.hi - (14 + half)) <= 1e-9);
  CHECK(m.non_informative_fraction.mean == 0.0);
  CHECK(m.non_informative_fraction.lo == 0.0);
  CHECK(m.non_informative_fraction.hi == 0.0);

  const auto single = summarize({catalog_with({3, 8})});
  const auto& one = single.methods[0];
  CHECK(one.cluster_count.mean == 2.0);
  CHECK_FALSE(one.cluster_count.has_ci);
  CHECK(one.per_diagnosis.at("MEL").non_informative == 1);
  CHECK(one.non_informative_fraction.mean == 0.5);
  CHECK(summary_to_json(single).find("\"ci95\": null") != std::string::npos);
}

TEST_CASE("annotation ingestion") {
  testutil::TempDir dir;
  auto cat = catalog_with(std::vector<std::size_t>(11, 6));
  SUBCASE("two of eleven redundant") {
    testutil::write_text(dir / "a.csv",
                         "diagnosis,cluster_index,patterns,redundant_with,informative_override\n"
                         "MEL,2,dots;network,0,\n"
                         "MEL,5,streaks,1,false\n"
                         "MEL,7,,,\n");
    ingest_annotations(cat, dir / "a.csv");
    const auto& e = cat.by_diagnosis.at("MEL");
    CHECK(redundancy_fraction(e) == doctest::Approx(2.0 / 11.0));
    CHECK(e[2].annotation->patterns == std::vector<std::string>{"dots", "network"});
    CHECK(e[5].annotation->informative_override == false);
    CHECK_FALSE(e[5].informative());
    CHECK(e[7].annotation.has_value());
    CHECK(e[7].annotation->patterns.empty());
  }
  SUBCASE("empty file leaves the catalog unchanged") {
    const auto before = cat;
    testutil::write_text(dir / "a.csv", "");
    ingest_annotations(cat, dir / "a.csv");
    CHECK(cat == before);
    testutil::write_text(dir / "b.csv",
                         "diagnosis,cluster_index,patterns,redundant_with,informative_override\n");
    ingest_annotations(cat, dir / "b.csv");
    CHECK(cat == before);
  }
  SUBCASE("unknown cluster") {
    auto small = catalog_with(std::vector<std::size_t>(13, 6));
    testutil::write_text(dir / "a.csv",
                         "diagnosis,cluster_index,patterns,redundant_with,informative_override\n"
                         "MEL,99,dots,,\n");
    try {
      ingest_annotations(small, dir / "a.csv");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNotFound);
      CHECK(std::string(e.what()).find("99") != std::string::npos);
    }
  }
  SUBCASE("bad redundant_with and diagnosis") {
    testutil::write_text(dir / "a.csv",
                         "diagnosis,cluster_index,patterns,redundant_with,informative_override\n"
                         "MEL,1,dots,42,\n");
    CHECK_THROWS_AS(ingest_annotations(cat, dir / "a.csv"), Error);
    testutil::write_text(dir / "b.csv",
                         "diagnosis,cluster_index,patterns,redundant_with,informative_override\n"
                         "NV,1,dots,,\n");
    CHECK_THROWS_AS(ingest_annotations(cat, dir / "b.csv"), Error);
  }
}

TEST_CASE("catalog JSON round trip") {
  testutil::TempDir dir;
  auto cat = catalog_with({3, 9, 12});
  testutil::write_text(dir / "a.csv",
                       "diagnosis,cluster_index,patterns,redundant_with,informative_override\n"
                       "MEL,1,globules,2,true\n");
  ingest_annotations(cat, dir / "a.csv");
  const auto text = catalog_to_json(cat);
  const auto back = catalog_from_json(text);
  CHECK(back == cat);
  CHECK(catalog_to_json(back) == text);
  CHECK_THROWS_AS(catalog_from_json("{}"), Error);
}

TEST_CASE("report rendering") {
  testutil::TempDir dir;
  const auto tiles = dir / "tiles";
  std::filesystem::create_directories(tiles);

  SUBCASE("thirteen clusters, one missing tile") {
    const auto cat = catalog_with(std::vector<std::size_t>(13, 2));
    int written = 0;
    for (const auto& e : cat.by_diagnosis.at("MEL"))
      for (const auto& r : e.representatives) {
        if (written++ == 5) continue;
        write_png_rgb(RgbImage(2, 2), tiles / (r.tile_id + ".png"));
      }
    const auto res = render_report(cat, tiles, dir / "report");
    CHECK(res.warnings.size() == 1);
    const auto page = testutil::read_text(dir / "report" / "MEL.html");
    std::size_t rows = 0;
    for (auto pos = page.find("class=\"cluster\""); pos != std::string::npos;
         pos = page.find("class=\"cluster\"", pos + 1))
      ++rows;
    CHECK(rows == 13);
    CHECK(page.find("1 warnings") != std::string::npos);
    CHECK(page.find("src=\"../tiles/") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "report" / "catalog.json"));
    CHECK(std::filesystem::exists(dir / "report" / "index.html"));
  }
  SUBCASE("empty catalog") {
    MethodCatalog cat;
    cat.method = "elbow";
    const auto res = render_report(cat, tiles, dir / "report");
    CHECK(res.warnings.empty());
    CHECK(testutil::read_text(dir / "report" / "index.html").find("0 clusters") !=
          std::string::npos);
  }
  SUBCASE("diagnosis without clusters") {
    MethodCatalog cat;
    cat.method = "elbow";
    cat.by_diagnosis["NV"] = {};
    render_report(cat, tiles, dir / "report");
    CHECK(testutil::read_text(dir / "report" / "NV.html").find("0 clusters") !=
          std::string::npos);
  }
}
