#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "mad/labeling.hpp"
#include "mad/predictions.hpp"
#include "mad/taxonomy.hpp"

// Reproducible synthetic competitions: a balanced taxonomy, a labeled corpus
// and classifiers with a known error rate.
namespace mad::synthetic {

// Complete tree with `branching` children per node and `levels` levels below
// the root. Leaves are the label vocabulary.
TaxonomyGraph balanced_taxonomy(unsigned branching, unsigned levels);

struct WorldSpec {
  unsigned branching = 4;
  unsigned levels = 4;
  std::size_t images = 10'000;
  // Chance that an image carries a second acceptable label.
  double second_label_rate = 0.2;
  double nonnatural_rate = 0.0;
  std::uint64_t seed = 1;
};

struct World {
  TaxonomyGraph graph;
  std::vector<std::string> images;  // sorted
  std::vector<LabelId> primary;     // parallel to images
  OracleLabels oracle;
};

World make_world(const WorldSpec& spec);

struct ModelSpec {
  std::string name;
  double error_rate = 0.0;
  std::uint64_t seed = 1;
  // Confidence ranges of correct and wrong predictions. Errors are confident.
  double correct_low = 0.6;
  double wrong_low = 0.8;
};

// Predicts the image's primary label with probability 1 - error_rate and a
// uniformly drawn wrong leaf otherwise.
ModelPredictions make_model(const World& world, const ModelSpec& spec);

// Writers for the text formats read by TaxonomyGraph::parse,
// parse_prediction_file and OracleLabels::parse.
void write_taxonomy(std::ostream& out, const TaxonomyGraph& graph);
void write_predictions(std::ostream& out, const ModelPredictions& model, const TaxonomyGraph& graph);
void write_oracle(std::ostream& out, const World& world);

}  // namespace mad::synthetic
