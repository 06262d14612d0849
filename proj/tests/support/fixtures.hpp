#pragma once

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include "mad/taxonomy.hpp"
#include "oracles.hpp"

namespace fixtures {

inline std::string node_key(std::size_t v) { return "v" + std::to_string(v); }

// Library graph for an oracle DAG. Edges are listed in shuffled order when
// `rng` is given.
inline mad::TaxonomyGraph graph_of(const oracle::Dag& d, std::mt19937_64* rng = nullptr) {
  mad::TaxonomyGraph::Source src;
  for (std::size_t v = 0; v < d.n; ++v)
    src.nodes.push_back({node_key(v), "s" + std::to_string(v), "node " + std::to_string(v)});
  auto edges = d.edges;
  if (rng != nullptr) std::shuffle(edges.begin(), edges.end(), *rng);
  for (auto [p, c] : edges) src.edges.emplace_back(node_key(p), node_key(c));
  for (auto v : d.labels) src.labels.push_back(node_key(v));
  return mad::TaxonomyGraph::build(std::move(src));
}

inline mad::TaxonomyGraph parse_graph(const std::string& text) {
  std::istringstream in(text);
  return mad::TaxonomyGraph::parse(in, "fixture");
}

// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mad-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
