#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "feature_store.hpp"
#include "random.hpp"

namespace patlas::synth {

/// Latent-prototype corpus: every class owns `prototypes` random unit
/// directions, each split into `submodes` nearby directions. An image draws
/// one or two of its class' prototypes and each tile picks one of them, a
/// random submode and isotropic noise. A small share of tiles can instead come
/// from rare directions that no image shows consistently.
struct CorpusSpec {
  std::vector<std::string> labels{"AKIEC", "BCC", "BKL", "DF", "MEL", "NV"};
  int images_per_class = 30;
  int min_tiles = 6;
  int max_tiles = 10;
  int prototypes = 10;
  int submodes = 3;
  int dim = 24;
  double submode_spread = 0.9;
  double noise = 0.12;
  double two_pattern_share = 0.5;  // images showing two prototypes
  // Share of tiles drawn from a handful of rare per-class directions
  // (imaging artefacts) instead of the image's prototypes.
  double rare_share = 0.03;
  int rare_directions = 6;
  std::uint64_t seed = 20230601;
  std::string id_prefix = "img";
  // Extra images per class from the same prototypes, returned separately.
  int holdout_per_class = 0;
  std::string holdout_prefix = "test";
};

FeatureSet make_corpus(const CorpusSpec& spec, std::optional<FeatureSet>* holdout = nullptr);

/// `groups` tight clusters around maximally separated directions (simplex
/// vertices), `per_group` points each. Ground-truth group per record is
/// returned through `truth`.
FeatureSet make_separated_groups(int groups, int dim, int per_group, double spread,
                                 std::uint64_t seed, std::vector<int>& truth);

/// Standard normal draw from a seeded stream (Box-Muller).
double gaussian(Rng& rng);

}  // namespace patlas::synth
