#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mad/types.hpp"

namespace mad {

using NodeId = std::uint32_t;

struct TaxonomyNode {
  std::string key;     // opaque id used in files
  std::string synset;  // external synset identifier
  std::string name;    // human-readable, may contain spaces
};

struct TaxonomyEdge {
  NodeId parent = 0;
  NodeId child = 0;
  double weight = 0.0;
};

// Weight of an edge whose parent sits at `parent_depth`: 2^-depth.
double edge_weight(std::uint32_t parent_depth);

// 0-1 discrepancy between two labels.
inline int zero_one_distance(LabelId a, LabelId b) { return a == b ? 0 : 1; }

// Semantic hierarchy (a DAG rooted at a single node) with depth-decayed edge
// weights. Distances are shortest paths over the undirected view of the graph.
//
// The graph is immutable once built. Distance rows are computed on demand per
// source label and cached behind a mutex, so concurrent queries are safe.
class TaxonomyGraph {
 public:
  struct Source {
    std::vector<TaxonomyNode> nodes;
    std::vector<std::pair<std::string, std::string>> edges;  // parent key, child key
    std::vector<std::string> labels;                         // node keys
  };

  static TaxonomyGraph build(Source source);
  static TaxonomyGraph parse(std::istream& in, std::string_view origin = "<stream>");
  static TaxonomyGraph load(const std::filesystem::path& path);

  // Same topology with every edge weight set to 1.
  TaxonomyGraph with_unit_weights() const;

  std::size_t node_count() const { return nodes_.size(); }
  const TaxonomyNode& node(NodeId id) const { return nodes_.at(id); }
  std::optional<NodeId> find_node(std::string_view key) const;
  NodeId root() const { return root_; }
  std::uint32_t depth(NodeId id) const { return depth_.at(id); }
  std::span<const TaxonomyEdge> edges() const { return edges_; }

  std::size_t label_count() const { return labels_.size(); }
  NodeId label_node(LabelId label) const { return labels_.at(label.value); }
  const std::string& label_key(LabelId label) const { return nodes_[label_node(label)].key; }
  const std::string& label_name(LabelId label) const { return nodes_[label_node(label)].name; }
  std::optional<LabelId> find_label(std::string_view key) const;
  // Throws mad::Error for keys outside the label vocabulary.
  LabelId label(std::string_view key) const;

  double semantic_distance(LabelId a, LabelId b) const;
  std::uint32_t hop_distance(LabelId a, LabelId b) const;

  // Weighted distances from `source` to every label, indexed by LabelId.
  std::shared_ptr<const std::vector<double>> distance_row(LabelId source) const;

 private:
  struct Adjacent {
    NodeId node;
    double weight;
  };
  struct RowCache;

  TaxonomyGraph() = default;
  void check_label(LabelId label) const;
  std::vector<double> shortest_paths(NodeId source) const;

  std::vector<TaxonomyNode> nodes_;
  std::unordered_map<std::string, NodeId> node_index_;
  std::vector<TaxonomyEdge> edges_;
  std::vector<std::vector<Adjacent>> undirected_;
  std::vector<std::uint32_t> depth_;
  NodeId root_ = 0;
  std::vector<NodeId> labels_;
  std::unordered_map<std::string, LabelId> label_index_;
  std::shared_ptr<RowCache> weighted_cache_;
  std::shared_ptr<RowCache> hop_cache_;
  bool unit_weights_ = false;
};

// Dense label-by-label weighted distance table. Rows are only materialized for
// labels in `used`; other rows are zero and must not be queried.
class LabelDistanceTable {
 public:
  LabelDistanceTable(const TaxonomyGraph& graph, std::span<const LabelId> used);
  explicit LabelDistanceTable(const TaxonomyGraph& graph);

  std::size_t label_count() const { return label_count_; }
  double at(LabelId a, LabelId b) const { return values_[a.value * label_count_ + b.value]; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t label_count_ = 0;
  std::vector<double> values_;
};

}  // namespace mad
