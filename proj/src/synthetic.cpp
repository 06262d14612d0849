#include "mad/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "mad/error.hpp"

namespace mad::synthetic {

TaxonomyGraph balanced_taxonomy(unsigned branching, unsigned levels) {
  if (branching < 2 || levels < 1) throw Error("synthetic: need branching >= 2 and levels >= 1");
  TaxonomyGraph::Source src;
  src.nodes.push_back({"n0", "syn0", "entity"});
  std::vector<std::string> frontier{"n0"};
  for (unsigned level = 1; level <= levels; ++level) {
    std::vector<std::string> next;
    for (const auto& parent : frontier) {
      for (unsigned b = 0; b < branching; ++b) {
        const std::string key = "n" + std::to_string(src.nodes.size());
        src.nodes.push_back({key, "syn" + key.substr(1), "thing " + key.substr(1)});
        src.edges.emplace_back(parent, key);
        next.push_back(key);
      }
    }
    frontier = std::move(next);
  }
  src.labels = frontier;
  return TaxonomyGraph::build(std::move(src));
}

World make_world(const WorldSpec& spec) {
  World w{balanced_taxonomy(spec.branching, spec.levels), {}, {}, {}};
  const auto labels = static_cast<std::uint32_t>(w.graph.label_count());
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, labels - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  char name[32];
  for (std::size_t i = 0; i < spec.images; ++i) {
    std::snprintf(name, sizeof name, "img%07zu", i);
    w.images.emplace_back(name);
    OracleLabels::Truth truth;
    const LabelId primary{pick(rng)};
    w.primary.push_back(primary);
    truth.labels.push_back(primary);
    if (unit(rng) < spec.second_label_rate) {
      LabelId extra{pick(rng)};
      while (extra == primary) extra = LabelId{pick(rng)};
      truth.labels.push_back(extra);
    }
    truth.natural = !(unit(rng) < spec.nonnatural_rate);
    w.oracle.set(name, std::move(truth));
  }
  return w;
}

ModelPredictions make_model(const World& world, const ModelSpec& spec) {
  validate_model_id(spec.name);
  const auto labels = static_cast<std::uint32_t>(world.graph.label_count());
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, labels - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ModelPredictions out{spec.name, {}};
  out.records.reserve(world.images.size());
  for (std::size_t i = 0; i < world.images.size(); ++i) {
    const auto& truth = world.oracle.find(world.images[i])->labels;
    if (unit(rng) < spec.error_rate) {
      LabelId wrong{pick(rng)};
      while (std::binary_search(truth.begin(), truth.end(), wrong)) wrong = LabelId{pick(rng)};
      const double c = spec.wrong_low + (1.0 - spec.wrong_low) * unit(rng);
      out.records.push_back({world.images[i], wrong, Confidence::from_double(c)});
    } else {
      const double c = spec.correct_low + (1.0 - spec.correct_low) * unit(rng);
      out.records.push_back({world.images[i], world.primary[i], Confidence::from_double(c)});
    }
  }
  return out;
}

void write_taxonomy(std::ostream& out, const TaxonomyGraph& graph) {
  for (NodeId n = 0; n < graph.node_count(); ++n) {
    const auto& node = graph.node(n);
    out << "N " << node.key << ' ' << node.synset;
    if (!node.name.empty()) out << ' ' << node.name;
    out << '\n';
  }
  for (const auto& e : graph.edges()) out << "E " << graph.node(e.parent).key << ' ' << graph.node(e.child).key << '\n';
  for (std::uint32_t l = 0; l < graph.label_count(); ++l) out << "L " << graph.label_key(LabelId{l}) << '\n';
}

void write_predictions(std::ostream& out, const ModelPredictions& model, const TaxonomyGraph& graph) {
  out << "model " << model.model << '\n';
  for (const auto& r : model.records)
    out << r.image << ',' << graph.label_key(r.label) << ',' << r.confidence.to_string() << '\n';
}

void write_oracle(std::ostream& out, const World& world) {
  for (const auto& image : world.images) {
    const auto* truth = world.oracle.find(image);
    out << image << (truth->natural ? " natural" : " nonnatural");
    for (std::size_t i = 0; i < truth->labels.size(); ++i)
      out << (i == 0 ? ' ' : ',') << world.graph.label_key(truth->labels[i]);
    out << '\n';
  }
}

}  // namespace mad::synthetic
