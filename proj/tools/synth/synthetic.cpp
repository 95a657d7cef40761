#include "synthetic.hpp"

#include <cmath>
#include <numbers>

#include "error.hpp"

namespace patlas::synth {
namespace {

std::vector<double> random_unit(Rng& rng, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double n = 0.0;
  do {
    n = 0.0;
    for (double& x : v) {
      x = gaussian(rng);
      n += x * x;
    }
  } while (n == 0.0);
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

void add_scaled(std::vector<double>& v, const std::vector<double>& w, double s) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += s * w[i];
}

void unit(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
}

}  // namespace

double gaussian(Rng& rng) {
  double u1 = 0.0;
  while (u1 == 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

FeatureSet make_corpus(const CorpusSpec& spec, std::optional<FeatureSet>* holdout) {
  if (spec.min_tiles < 1 || spec.max_tiles < spec.min_tiles || spec.prototypes < 1 ||
      spec.submodes < 1 || spec.dim < 2)
    fail(ErrorCode::kInvalidArgument, "invalid synthetic corpus spec");
  Rng rng(spec.seed);
  // Held-out images use their own stream so the training corpus does not
  // depend on how many are requested.
  Rng holdout_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<TileRecord> records;
  std::vector<TileRecord> holdout_records;
  for (const auto& label : spec.labels) {
    // prototypes[p][s] is submode s of prototype p.
    std::vector<std::vector<std::vector<double>>> protos(static_cast<std::size_t>(spec.prototypes));
    for (auto& p : protos) {
      const auto center = random_unit(rng, spec.dim);
      for (int s = 0; s < spec.submodes; ++s) {
        auto sub = center;
        if (spec.submodes > 1) add_scaled(sub, random_unit(rng, spec.dim), spec.submode_spread);
        unit(sub);
        p.push_back(std::move(sub));
      }
    }
    std::vector<std::vector<double>> rare;
    for (int r = 0; r < spec.rare_directions; ++r) rare.push_back(random_unit(rng, spec.dim));
    auto make_image = [&](Rng& r, const std::string& image_id, std::vector<TileRecord>& into) {
      std::vector<std::size_t> shown{static_cast<std::size_t>(r.below(protos.size()))};
      if (protos.size() > 1 && r.uniform() < spec.two_pattern_share) {
        std::size_t second;
        do {
          second = static_cast<std::size_t>(r.below(protos.size()));
        } while (second == shown[0]);
        shown.push_back(second);
      }
      const int tiles = spec.min_tiles +
                        static_cast<int>(r.below(static_cast<std::uint64_t>(
                            spec.max_tiles - spec.min_tiles + 1)));
      for (int t = 0; t < tiles; ++t) {
        std::vector<double> v;
        if (!rare.empty() && r.uniform() < spec.rare_share) {
          v = rare[static_cast<std::size_t>(r.below(rare.size()))];
        } else {
          const auto& proto = protos[shown[static_cast<std::size_t>(r.below(shown.size()))]];
          v = proto[static_cast<std::size_t>(r.below(proto.size()))];
        }
        for (double& x : v) x += spec.noise * gaussian(r) / std::sqrt(spec.dim);
        TileRecord rec;
        rec.x = 96 * (t % 4);
        rec.y = 96 * (t / 4);
        rec.tile_id = image_id + "_" + std::to_string(rec.x) + "_" + std::to_string(rec.y);
        rec.image_id = image_id;
        rec.diagnosis = label;
        rec.features = std::move(v);
        into.push_back(std::move(rec));
      }
    };
    for (int img = 0; img < spec.images_per_class; ++img)
      make_image(rng, spec.id_prefix + "_" + label + "_" + std::to_string(img), records);
    for (int img = 0; img < spec.holdout_per_class; ++img)
      make_image(holdout_rng, spec.holdout_prefix + "_" + label + "_" + std::to_string(img),
                 holdout_records);
  }
  if (holdout != nullptr)
    holdout->emplace(static_cast<std::size_t>(spec.dim), spec.labels,
                          std::move(holdout_records));
  return FeatureSet(static_cast<std::size_t>(spec.dim), spec.labels, std::move(records));
}

FeatureSet make_separated_groups(int groups, int dim, int per_group, double spread,
                                 std::uint64_t seed, std::vector<int>& truth) {
  if (groups < 2 || dim < groups || per_group < 1)
    fail(ErrorCode::kInvalidArgument, "invalid separated-group spec");
  Rng rng(seed);
  // Simplex vertices: centred basis vectors, pairwise cosine -1/(groups-1).
  std::vector<std::vector<double>> vertices;
  for (int g = 0; g < groups; ++g) {
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    for (int i = 0; i < groups; ++i) v[static_cast<std::size_t>(i)] = -1.0 / groups;
    v[static_cast<std::size_t>(g)] += 1.0;
    unit(v);
    vertices.push_back(std::move(v));
  }
  std::vector<TileRecord> records;
  truth.clear();
  for (int g = 0; g < groups; ++g) {
    for (int i = 0; i < per_group; ++i) {
      auto v = vertices[static_cast<std::size_t>(g)];
      add_scaled(v, random_unit(rng, dim), spread * rng.uniform());
      TileRecord r;
      r.tile_id = "g" + std::to_string(g) + "_t" + std::to_string(i);
      r.image_id = "g" + std::to_string(g) + "_img" + std::to_string(i / 4);
      r.diagnosis = "G";
      r.features = std::move(v);
      records.push_back(std::move(r));
      truth.push_back(g);
    }
  }
  // Interleave groups so record order carries no information.
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
  std::vector<TileRecord> shuffled;
  std::vector<int> shuffled_truth;
  for (std::size_t i : order) {
    shuffled.push_back(std::move(records[i]));
    shuffled_truth.push_back(truth[i]);
  }
  truth = std::move(shuffled_truth);
  return FeatureSet(static_cast<std::size_t>(dim), {"G"}, std::move(shuffled));
}

}  // namespace patlas::synth
