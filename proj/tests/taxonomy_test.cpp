#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "mad/error.hpp"
#include "mad/taxonomy.hpp"
#include "oracles.hpp"

namespace {

using mad::LabelId;
using mad::TaxonomyGraph;

const char* kChain = R"(# root -> a -> b
N root s0 entity
N a s1 animal
N b s2 grey wolf
E root a
E a b
L root
L a
L b
)";

TEST(Taxonomy, ChainDepths) {
  const auto g = fixtures::parse_graph(kChain);
  EXPECT_EQ(g.depth(*g.find_node("root")), 0u);
  EXPECT_EQ(g.depth(*g.find_node("a")), 1u);
  EXPECT_EQ(g.depth(*g.find_node("b")), 2u);
  EXPECT_EQ(g.node(*g.find_node("b")).name, "grey wolf");
}

TEST(Taxonomy, DiamondTakesShallowestParent) {
  // c has parents a (depth 1) and d (depth 2).
  const auto g = fixtures::parse_graph(R"(N root r x
N a a x
N b b x
N d d x
N c c x
E root a
E root b
E b d
E d c
E a c
L c
L b
)");
  EXPECT_EQ(g.depth(*g.find_node("c")), 2u);
  EXPECT_EQ(g.depth(*g.find_node("d")), 2u);
  // Edge d->c is weighted by d's own depth, not c's.
  for (const auto& e : g.edges()) {
    if (g.node(e.parent).key == "d") {
      EXPECT_EQ(e.weight, 0.25);
    }
  }
}

TEST(Taxonomy, EdgeWeight) {
  EXPECT_EQ(mad::edge_weight(0), 1.0);
  EXPECT_EQ(mad::edge_weight(3), 0.125);
  for (std::uint32_t l = 0; l < 40; ++l) EXPECT_LT(mad::edge_weight(l + 1), mad::edge_weight(l));
}

TEST(Taxonomy, RejectsMalformedGraphs) {
  const auto fails_with = [](const std::string& text, const std::string& what) {
    try {
      fixtures::parse_graph(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const mad::Error& e) {
      EXPECT_NE(std::string(e.what()).find(what), std::string::npos) << e.what();
    }
  };
  fails_with("N r r x\nN a a x\nN c c x\nE r a\nE a c\nE c r\nL a\n", "cycle detected");
  fails_with("N r r x\nN a a x\nN b b x\nE r a\nL a\nL b\n", "orphan node");
  fails_with("N r r x\nN q q x\nN a a x\nE r a\nE q a\nL a\n", "multiple roots");
  fails_with("N r r x\nN a a x\nE r a\nE r a\nL a\n", "duplicate edge");
  fails_with("N r r x\nN a a x\nE r a\nL zz\n", "unknown node");
  fails_with("N r r x\nN a a x\nE r a\n", "no labels");
}

TEST(Taxonomy, Distances) {
  const auto g = fixtures::parse_graph(R"(N root r x
N a a x
N b b x
N a1 a1 x
N a2 a2 x
E root a
E root b
E a a1
E a a2
L a
L b
L a1
L a2
)");
  const auto a = g.label("a"), b = g.label("b"), a1 = g.label("a1"), a2 = g.label("a2");
  EXPECT_EQ(g.semantic_distance(a, a), 0.0);
  EXPECT_EQ(g.semantic_distance(a, b), 2.0);
  EXPECT_EQ(g.semantic_distance(a1, a2), 1.0);
  EXPECT_EQ(g.semantic_distance(a1, b), 2.5);
  EXPECT_EQ(g.hop_distance(a1, a2), 2u);
  EXPECT_EQ(g.hop_distance(a1, b), 3u);
  EXPECT_EQ(mad::zero_one_distance(a, a), 0);
  EXPECT_EQ(mad::zero_one_distance(a, b), 1);
  EXPECT_THROW(g.semantic_distance(a, LabelId{99}), mad::Error);
  EXPECT_THROW(g.label("nope"), mad::Error);
}

TEST(Taxonomy, MatchesFloydWarshallOnRandomDags) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const auto dag = oracle::random_dag(rng, 40);
    const auto g = fixtures::graph_of(dag, &rng);
    const auto weighted = oracle::floyd_warshall(dag);
    const auto hops = oracle::bfs_hops(dag);
    for (std::uint32_t i = 0; i < dag.labels.size(); ++i) {
      for (std::uint32_t j = 0; j < dag.labels.size(); ++j) {
        const auto u = dag.labels[i], v = dag.labels[j];
        ASSERT_EQ(g.semantic_distance(LabelId{i}, LabelId{j}), weighted[u][v]);
        ASSERT_EQ(g.hop_distance(LabelId{i}, LabelId{j}), hops[u][v]);
        ASSERT_EQ(mad::zero_one_distance(LabelId{i}, LabelId{j}), weighted[u][v] > 0 ? 1 : 0);
      }
    }
    const auto depth = oracle::root_depths(dag);
    for (std::size_t v = 0; v < dag.n; ++v) ASSERT_EQ(g.depth(*g.find_node(fixtures::node_key(v))), depth[v]);
  }
}

TEST(Taxonomy, UnitWeightsGiveHopDistance) {
  std::mt19937_64 rng(11);
  const auto dag = oracle::random_dag(rng, 50);
  const auto unit = fixtures::graph_of(dag).with_unit_weights();
  const auto n = static_cast<std::uint32_t>(dag.labels.size());
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j)
      EXPECT_EQ(unit.semantic_distance(LabelId{i}, LabelId{j}),
                static_cast<double>(unit.hop_distance(LabelId{i}, LabelId{j})));
}

TEST(Taxonomy, LabelDistanceTableMatchesQueries) {
  std::mt19937_64 rng(3);
  const auto g = fixtures::graph_of(oracle::random_dag(rng, 30));
  const mad::LabelDistanceTable full(g);
  for (std::uint32_t i = 0; i < g.label_count(); ++i)
    for (std::uint32_t j = 0; j < g.label_count(); ++j)
      EXPECT_EQ(full.at(LabelId{i}, LabelId{j}), g.semantic_distance(LabelId{i}, LabelId{j}));
}

}  // namespace
