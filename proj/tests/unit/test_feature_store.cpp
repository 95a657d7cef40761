#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>

#include "doctest.h"
#include "error.hpp"
#include "feature_store.hpp"
#include "random.hpp"
#include "test_util.hpp"

using namespace patlas;

namespace {

TileRecord rec(std::string id, std::string img, std::string dx, std::vector<double> f) {
  TileRecord r;
  r.tile_id = std::move(id);
  r.image_id = std::move(img);
  r.diagnosis = std::move(dx);
  r.features = std::move(f);
  return r;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::kInvalidArgument;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("load: three valid rows under dim=4") {
  testutil::TempDir dir;
  testutil::write_text(dir / "f.csv",
                       "#featureset v1 dim=4 labels=MEL|NV\n"
                       "t1,i1,MEL,0,0,1,2,3,4\n"
                       "t2,i1,MEL,96,0,0.5,0.25,-1,2e-3\n"
                       "t3,i2,NV,0,96,0,0,0,1\n");
  const auto fs = load_feature_set(dir / "f.csv");
  CHECK(fs.size() == 3);
  CHECK(fs.dim() == 4);
  CHECK_FALSE(fs.normalized());
  CHECK(fs.labels() == std::vector<std::string>{"MEL", "NV"});
  CHECK(fs[1].x == 96);
  CHECK(fs[2].y == 96);
  CHECK(fs[1].features[3] == doctest::Approx(0.002));
}

TEST_CASE("load: arity mismatch names the row") {
  testutil::TempDir dir;
  testutil::write_text(dir / "f.csv",
                       "#featureset v1 dim=4 labels=MEL\n"
                       "t1,i1,MEL,0,0,1,2,3,4\n"
                       "t2,i1,MEL,0,0,1,2,3\n");
  const auto path = dir / "f.csv";
  CHECK(code_of([&] { load_feature_set(path); }) == ErrorCode::kFormat);
  const auto msg = message_of([&] { load_feature_set(path); });
  CHECK(msg.find(":3:") != std::string::npos);
  CHECK(msg.find("fields") != std::string::npos);
}

TEST_CASE("load: distinct diagnostics per failure class") {
  testutil::TempDir dir;
  const auto path = dir / "f.csv";
  const std::string head = "#featureset v1 dim=2 labels=A|B\n";

  SUBCASE("NaN feature") {
    testutil::write_text(path, head + "t1,i,A,0,0,NaN,1\n");
    CHECK(code_of([&] { load_feature_set(path); }) == ErrorCode::kNumeric);
    CHECK(message_of([&] { load_feature_set(path); }).find("non-finite") != std::string::npos);
  }
  SUBCASE("infinite feature") {
    testutil::write_text(path, head + "t1,i,A,0,0,1,inf\n");
    CHECK(code_of([&] { load_feature_set(path); }) == ErrorCode::kNumeric);
  }
  SUBCASE("duplicate tile id") {
    testutil::write_text(path, head + "t1,i,A,0,0,1,1\nt1,i,B,0,0,1,2\n");
    const auto msg = message_of([&] { load_feature_set(path); });
    CHECK(msg.find("duplicate tile_id") != std::string::npos);
    CHECK(msg.find(":3:") != std::string::npos);
  }
  SUBCASE("unknown label") {
    testutil::write_text(path, head + "t1,i,C,0,0,1,1\n");
    CHECK(message_of([&] { load_feature_set(path); }).find("unknown label 'C'") !=
          std::string::npos);
  }
  SUBCASE("malformed header") {
    testutil::write_text(path, "featureset dim=2\n");
    CHECK(code_of([&] { load_feature_set(path); }) == ErrorCode::kFormat);
    testutil::write_text(path, "#featureset v1 labels=A\n");
    CHECK(message_of([&] { load_feature_set(path); }).find("dim") != std::string::npos);
    testutil::write_text(path, "#featureset v1 dim=0 labels=A\n");
    CHECK(code_of([&] { load_feature_set(path); }) == ErrorCode::kFormat);
  }
  SUBCASE("non-numeric feature") {
    testutil::write_text(path, head + "t1,i,A,0,0,abc,1\n");
    CHECK(message_of([&] { load_feature_set(path); }).find("not a number") !=
          std::string::npos);
  }
  SUBCASE("missing file") {
    CHECK(code_of([&] { load_feature_set(dir / "absent.csv"); }) == ErrorCode::kIo);
  }
}

TEST_CASE("normalize") {
  FeatureSet fs(2, {"A"}, {rec("a", "i", "A", {3, 4})});
  const auto n = normalize(fs);
  CHECK(n.normalized());
  CHECK(n[0].features[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n[0].features[1] == doctest::Approx(0.8).epsilon(1e-15));

  FeatureSet unit(3, {"A"}, {rec("a", "i", "A", {1, 0, 0})});
  CHECK(normalize(unit)[0].features == std::vector<double>{1, 0, 0});

  FeatureSet zero(2, {"A"}, {rec("z", "i", "A", {0, 0})});
  CHECK(code_of([&] { normalize(zero); }) == ErrorCode::kNumeric);
  CHECK(message_of([&] { normalize(zero); }).find("'z'") != std::string::npos);
}

TEST_CASE("normalize is idempotent on random sets") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TileRecord> rs;
    const std::size_t dim = 1 + rng.below(8);
    for (int i = 0; i < 15; ++i) {
      std::vector<double> f(dim);
      for (double& v : f) v = rng.uniform() * 2 - 1 + 1e-3;
      rs.push_back(rec("t" + std::to_string(i), "i", "A", f));
    }
    const auto once = normalize(FeatureSet(dim, {"A"}, rs));
    const auto twice = normalize(once);
    for (std::size_t i = 0; i < once.size(); ++i)
      for (std::size_t d = 0; d < dim; ++d)
        CHECK(std::abs(once[i].features[d] - twice[i].features[d]) <= 1e-15);
  }
}

TEST_CASE("constructor enforces invariants") {
  CHECK(code_of([] { FeatureSet(2, {"A"}, {rec("a", "i", "B", {1, 1})}); }) ==
        ErrorCode::kFormat);
  CHECK(code_of([] { FeatureSet(2, {"A"}, {rec("a", "i", "A", {1})}); }) ==
        ErrorCode::kFormat);
  CHECK(code_of([] {
          FeatureSet(1, {"A"}, {rec("a", "i", "A", {std::numeric_limits<double>::quiet_NaN()})});
        }) == ErrorCode::kNumeric);
  CHECK(code_of([] { FeatureSet(2, {"A"}, {rec("a", "i", "A", {1, 1})}, true); }) ==
        ErrorCode::kNumeric);
  CHECK(code_of([] { FeatureSet(1, {"A", "A"}, {}); }) == ErrorCode::kFormat);
}

TEST_CASE("save/load round trip") {
  testutil::TempDir dir;
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<TileRecord> rs;
    const std::size_t dim = 1 + rng.below(6);
    for (int i = 0; i < 12; ++i) {
      std::vector<double> f(dim);
      for (double& v : f) v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(12)) - 6);
      auto r = rec("t" + std::to_string(i), "img" + std::to_string(i % 3), i % 2 ? "NV" : "MEL", f);
      r.x = static_cast<int>(rng.below(1000));
      r.y = static_cast<int>(rng.below(1000));
      rs.push_back(r);
    }
    const FeatureSet fs(dim, {"MEL", "NV"}, rs);
    save_feature_set(fs, dir / "rt.csv");
    CHECK(equivalent(load_feature_set(dir / "rt.csv"), fs));

    const auto n = normalize(fs);
    save_feature_set(n, dir / "rtn.csv");
    const auto back = load_feature_set(dir / "rtn.csv");
    CHECK(back.normalized());
    CHECK(equivalent(back, n));
  }
}

TEST_CASE("empty record list writes a valid file") {
  testutil::TempDir dir;
  FeatureSet fs(3, {"A", "B"}, {});
  save_feature_set(fs, dir / "empty.csv");
  const auto back = load_feature_set(dir / "empty.csv");
  CHECK(back.empty());
  CHECK(back.dim() == 3);
  CHECK(back.labels().size() == 2);
}

TEST_CASE("save to an unwritable path is an I/O error") {
  testutil::TempDir dir;
  FeatureSet fs(1, {"A"}, {});
  CHECK(code_of([&] { save_feature_set(fs, dir / "no" / "such" / "dir" / "x.csv"); }) ==
        ErrorCode::kIo);
}

TEST_CASE("select_diagnosis keeps labels and order") {
  FeatureSet fs(1, {"A", "B"},
                {rec("1", "i", "A", {1}), rec("2", "i", "B", {2}), rec("3", "j", "A", {3})});
  const auto a = fs.select_diagnosis("A");
  REQUIRE(a.size() == 2);
  CHECK(a[0].tile_id == "1");
  CHECK(a[1].tile_id == "3");
  CHECK(a.labels() == fs.labels());
  CHECK(code_of([&] { fs.select_diagnosis("C"); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("format_real uses nine significant digits") {
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(1.0 / 3.0) == "0.333333333");
  CHECK(format_real(-2.5e-7) == "-2.5e-07");
}
