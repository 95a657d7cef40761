// Writes synthetic FeatureSet fixtures.
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "error.hpp"
#include "synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic FeatureSet generator"};
  patlas::synth::CorpusSpec spec;
  std::string out;
  std::string prefix = spec.id_prefix;
  app.add_option("--out", out, "output FeatureSet CSV")->required();
  app.add_option("--seed", spec.seed);
  app.add_option("--images-per-class", spec.images_per_class);
  app.add_option("--min-tiles", spec.min_tiles);
  app.add_option("--max-tiles", spec.max_tiles);
  app.add_option("--prototypes", spec.prototypes);
  app.add_option("--submodes", spec.submodes);
  app.add_option("--dim", spec.dim);
  app.add_option("--submode-spread", spec.submode_spread);
  app.add_option("--noise", spec.noise);
  app.add_option("--two-pattern-share", spec.two_pattern_share);
  app.add_option("--id-prefix", prefix);
  std::string test_out;
  app.add_option("--holdout", spec.holdout_per_class, "extra images per class for a test set");
  app.add_option("--test-out", test_out, "output FeatureSet CSV for the held-out images");
  CLI11_PARSE(app, argc, argv);
  spec.id_prefix = prefix;
  try {
    if (spec.holdout_per_class > 0 && test_out.empty()) {
      std::cerr << "patlas-synth: --holdout needs --test-out\n";
      return EXIT_FAILURE;
    }
    std::optional<patlas::FeatureSet> test;
    patlas::save_feature_set(patlas::synth::make_corpus(spec, &test), out);
    if (!test_out.empty()) patlas::save_feature_set(*test, test_out);
  } catch (const patlas::Error& e) {
    std::cerr << "patlas-synth: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
