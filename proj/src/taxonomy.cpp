#include "mad/taxonomy.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <mutex>
#include <queue>
#include <set>
#include <sstream>

#include "mad/error.hpp"
#include "text.hpp"

namespace mad {

struct TaxonomyGraph::RowCache {
  std::mutex mutex;
  std::unordered_map<NodeId, std::shared_ptr<const std::vector<double>>> rows;
};

double edge_weight(std::uint32_t parent_depth) { return std::ldexp(1.0, -static_cast<int>(parent_depth)); }

TaxonomyGraph TaxonomyGraph::build(Source source) {
  TaxonomyGraph g;
  g.nodes_ = std::move(source.nodes);
  if (g.nodes_.empty()) throw Error("taxonomy: no nodes declared");
  for (NodeId id = 0; id < g.nodes_.size(); ++id) {
    if (!g.node_index_.emplace(g.nodes_[id].key, id).second)
      throw Error("taxonomy: duplicate node " + g.nodes_[id].key);
  }

  const auto lookup = [&](const std::string& key) {
    auto it = g.node_index_.find(key);
    if (it == g.node_index_.end()) throw Error("taxonomy: edge references unknown node " + key);
    return it->second;
  };

  const std::size_t n = g.nodes_.size();
  std::vector<std::vector<NodeId>> children(n);
  std::vector<std::uint32_t> in_degree(n, 0);
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& [parent_key, child_key] : source.edges) {
    const NodeId parent = lookup(parent_key);
    const NodeId child = lookup(child_key);
    if (parent == child) throw Error("taxonomy: cycle detected at node " + parent_key);
    if (!seen.emplace(parent, child).second) throw Error("taxonomy: duplicate edge " + parent_key + " -> " + child_key);
    children[parent].push_back(child);
    ++in_degree[child];
    g.edges_.push_back({parent, child, 0.0});
  }

  std::vector<NodeId> roots;
  for (NodeId id = 0; id < n; ++id) {
    if (in_degree[id] != 0) continue;
    if (children[id].empty() && n > 1) throw Error("taxonomy: orphan node " + g.nodes_[id].key);
    roots.push_back(id);
  }
  if (roots.empty()) throw Error("taxonomy: cycle detected (no root node)");
  if (roots.size() > 1) {
    throw Error("taxonomy: multiple roots (" + g.nodes_[roots[0]].key + ", " + g.nodes_[roots[1]].key + ", ...)");
  }
  g.root_ = roots.front();

  // Kahn's algorithm: any node never released sits on a cycle.
  {
    std::vector<std::uint32_t> remaining = in_degree;
    std::vector<NodeId> ready{g.root_};
    std::size_t released = 0;
    while (!ready.empty()) {
      const NodeId v = ready.back();
      ready.pop_back();
      ++released;
      for (NodeId c : children[v]) {
        if (--remaining[c] == 0) ready.push_back(c);
      }
    }
    if (released != n) {
      for (NodeId id = 0; id < n; ++id) {
        if (remaining[id] != 0) throw Error("taxonomy: cycle detected at node " + g.nodes_[id].key);
      }
    }
  }

  // BFS from the root gives depth(v) = 1 + min over parents.
  constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
  g.depth_.assign(n, kUnset);
  g.depth_[g.root_] = 0;
  std::deque<NodeId> frontier{g.root_};
  while (!frontier.empty()) {
    const NodeId v = frontier.front();
    frontier.pop_front();
    for (NodeId c : children[v]) {
      if (g.depth_[c] == kUnset) {
        g.depth_[c] = g.depth_[v] + 1;
        frontier.push_back(c);
      }
    }
  }

  g.undirected_.assign(n, {});
  for (auto& e : g.edges_) {
    e.weight = edge_weight(g.depth_[e.parent]);
    g.undirected_[e.parent].push_back({e.child, e.weight});
    g.undirected_[e.child].push_back({e.parent, e.weight});
  }

  if (source.labels.empty()) throw Error("taxonomy: no labels declared");
  for (const auto& key : source.labels) {
    auto it = g.node_index_.find(key);
    if (it == g.node_index_.end()) throw Error("taxonomy: label references unknown node " + key);
    const LabelId id{static_cast<std::uint32_t>(g.labels_.size())};
    if (!g.label_index_.emplace(key, id).second) throw Error("taxonomy: duplicate label " + key);
    g.labels_.push_back(it->second);
  }

  g.weighted_cache_ = std::make_shared<RowCache>();
  g.hop_cache_ = std::make_shared<RowCache>();
  return g;
}

TaxonomyGraph TaxonomyGraph::parse(std::istream& in, std::string_view origin) {
  Source source;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    const std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;

    const auto where = [&] { return std::string(origin) + ":" + std::to_string(line_no); };
    auto fields = detail::split_ws(view, 4);
    if (fields[0] == "N") {
      if (fields.size() < 3) throw Error("taxonomy: malformed node line at " + where());
      source.nodes.push_back(
          {std::string(fields[1]), std::string(fields[2]), fields.size() > 3 ? std::string(fields[3]) : std::string()});
    } else if (fields[0] == "E") {
      if (fields.size() != 3) throw Error("taxonomy: malformed edge line at " + where());
      source.edges.emplace_back(fields[1], fields[2]);
    } else if (fields[0] == "L") {
      if (fields.size() != 2) throw Error("taxonomy: malformed label line at " + where());
      source.labels.emplace_back(fields[1]);
    } else {
      throw Error("taxonomy: unknown record type '" + std::string(fields[0]) + "' at " + where());
    }
  }
  return build(std::move(source));
}

TaxonomyGraph TaxonomyGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("taxonomy: cannot open " + path.string());
  return parse(in, path.string());
}

TaxonomyGraph TaxonomyGraph::with_unit_weights() const {
  TaxonomyGraph g = *this;
  for (auto& e : g.edges_) e.weight = 1.0;
  for (auto& adjacent : g.undirected_) {
    for (auto& a : adjacent) a.weight = 1.0;
  }
  g.unit_weights_ = true;
  g.weighted_cache_ = std::make_shared<RowCache>();
  g.hop_cache_ = std::make_shared<RowCache>();
  return g;
}

std::optional<NodeId> TaxonomyGraph::find_node(std::string_view key) const {
  auto it = node_index_.find(std::string(key));
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<LabelId> TaxonomyGraph::find_label(std::string_view key) const {
  auto it = label_index_.find(std::string(key));
  if (it == label_index_.end()) return std::nullopt;
  return it->second;
}

LabelId TaxonomyGraph::label(std::string_view key) const {
  if (auto id = find_label(key)) return *id;
  throw Error("unknown label " + std::string(key));
}

void TaxonomyGraph::check_label(LabelId label) const {
  if (label.value >= labels_.size()) throw Error("unknown label id " + std::to_string(label.value));
}

std::vector<double> TaxonomyGraph::shortest_paths(NodeId source) const {
  std::vector<double> dist(nodes_.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (const auto& a : undirected_[v]) {
      const double candidate = d + a.weight;
      if (candidate < dist[a.node]) {
        dist[a.node] = candidate;
        queue.emplace(candidate, a.node);
      }
    }
  }
  return dist;
}

std::shared_ptr<const std::vector<double>> TaxonomyGraph::distance_row(LabelId source) const {
  check_label(source);
  const NodeId node = labels_[source.value];
  {
    std::lock_guard lock(weighted_cache_->mutex);
    if (auto it = weighted_cache_->rows.find(node); it != weighted_cache_->rows.end()) return it->second;
  }
  const std::vector<double> all = shortest_paths(node);
  auto row = std::make_shared<std::vector<double>>(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) (*row)[i] = all[labels_[i]];

  std::lock_guard lock(weighted_cache_->mutex);
  return weighted_cache_->rows.emplace(node, std::move(row)).first->second;
}

double TaxonomyGraph::semantic_distance(LabelId a, LabelId b) const {
  check_label(b);
  if (a == b) return 0.0;
  return (*distance_row(a))[b.value];
}

std::uint32_t TaxonomyGraph::hop_distance(LabelId a, LabelId b) const {
  check_label(a);
  check_label(b);
  if (a == b) return 0;
  if (unit_weights_) return static_cast<std::uint32_t>(semantic_distance(a, b));

  const NodeId node = labels_[a.value];
  std::shared_ptr<const std::vector<double>> row;
  {
    std::lock_guard lock(hop_cache_->mutex);
    if (auto it = hop_cache_->rows.find(node); it != hop_cache_->rows.end()) row = it->second;
  }
  if (!row) {
    // Unweighted BFS over the undirected view.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> hops(nodes_.size(), kInf);
    std::deque<NodeId> frontier{node};
    hops[node] = 0;
    while (!frontier.empty()) {
      const NodeId v = frontier.front();
      frontier.pop_front();
      for (const auto& adj : undirected_[v]) {
        if (hops[adj.node] == kInf) {
          hops[adj.node] = hops[v] + 1;
          frontier.push_back(adj.node);
        }
      }
    }
    std::lock_guard lock(hop_cache_->mutex);
    row = hop_cache_->rows.emplace(node, std::make_shared<std::vector<double>>(std::move(hops))).first->second;
  }
  return static_cast<std::uint32_t>((*row)[labels_[b.value]]);
}

LabelDistanceTable::LabelDistanceTable(const TaxonomyGraph& graph, std::span<const LabelId> used)
    : label_count_(graph.label_count()), values_(label_count_ * label_count_, 0.0) {
  std::vector<bool> done(label_count_, false);
  for (LabelId label : used) {
    if (label.value >= label_count_) throw Error("unknown label id " + std::to_string(label.value));
    if (done[label.value]) continue;
    done[label.value] = true;
    const auto row = graph.distance_row(label);
    std::copy(row->begin(), row->end(), values_.begin() + label.value * label_count_);
    values_[label.value * label_count_ + label.value] = 0.0;
  }
}

LabelDistanceTable::LabelDistanceTable(const TaxonomyGraph& graph)
    : label_count_(graph.label_count()), values_(label_count_ * label_count_, 0.0) {
  for (std::uint32_t a = 0; a < label_count_; ++a) {
    const auto row = graph.distance_row(LabelId{a});
    std::copy(row->begin(), row->end(), values_.begin() + a * label_count_);
  }
}

}  // namespace mad
