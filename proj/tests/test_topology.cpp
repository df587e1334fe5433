#include <algorithm>
#include <string>

#include <gtest/gtest.h>

#include "strl/rng.hpp"
#include "strl/topology.hpp"

using namespace strl;

namespace {

const std::string kDataDir = STRL_DATA_DIR;

Topology triangle() {
  return load_topology_from_string("A B\nB C\nC A\n");
}

// Random connected graph over n nodes: spanning chain plus extra edges.
Topology random_graph(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::string text;
  auto name = [](int i) { return std::string("n") + char('a' + i); };
  for (int i = 1; i < n; ++i) text += name(i - 1) + " " + name(i) + "\n";
  for (int a = 0; a < n; ++a)
    for (int b = a + 2; b < n; ++b)
      if (rng.next_double() < 0.3) text += name(a) + " " + name(b) + "\n";
  return load_topology_from_string(text);
}

}  // namespace

TEST(Topology, AarnetEdgeListLoads) {
  Topology topo = load_topology(kDataDir + "/aarnet.edges");
  EXPECT_EQ(topo.node_count(), 17);
  EXPECT_EQ(topo.edge_count(), 27u);
  const auto comp = topo.components();
  EXPECT_TRUE(std::all_of(comp.begin(), comp.end(), [&](int c) { return c == comp[0]; }));
}

TEST(Topology, AarnetGraphmlMatchesEdgeList) {
  Topology a = load_topology(kDataDir + "/aarnet.edges");
  Topology b = load_topology(kDataDir + "/aarnet.graphml");
  EXPECT_TRUE(a.adjacency_equal(b));
}

TEST(Topology, TwoNodeEdgeList) {
  Topology topo = load_topology_from_string("A B\n");
  EXPECT_EQ(topo.node_count(), 2);
  const auto& adj = topo.adjacency();
  EXPECT_EQ(adj[0], 0);
  EXPECT_EQ(adj[1], 1);
  EXPECT_EQ(adj[2], 1);
  EXPECT_EQ(adj[3], 0);
}

TEST(Topology, TriangleIsSymmetricWithDegreeTwo) {
  Topology topo = triangle();
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(topo.degree(i), 2);
    for (int j = 0; j < 3; ++j)
      EXPECT_EQ(topo.has_edge(i, j), topo.has_edge(j, i));
  }
}

TEST(Topology, ParseErrors) {
  EXPECT_THROW(load_topology_from_string("A\n"), ParseError);
  EXPECT_THROW(load_topology_from_string("A B C\n"), ParseError);
  EXPECT_THROW(load_topology_from_string(""), ParseError);
  EXPECT_THROW(load_topology_from_string("A B\nA B\n"), ValidationError);   // duplicate
  EXPECT_THROW(load_topology_from_string("A B\nB A\n"), ValidationError);   // duplicate reversed
  EXPECT_THROW(load_topology_from_string("A A\n"), ValidationError);        // self-loop
}

TEST(Topology, ArmidaleIsALeafOnSydney2) {
  Topology topo = load_topology(kDataDir + "/aarnet.edges");
  const auto nbrs = topo.neighbors(topo.index_of("Armidale"));
  ASSERT_EQ(nbrs.size(), 1u);
  EXPECT_EQ(topo.name(nbrs[0]), "Sydney2");
}

TEST(Topology, NeighborsOfTriangleNodeZero) {
  Topology topo = triangle();
  EXPECT_EQ(topo.neighbors(0), (std::vector<int>{1, 2}));
  EXPECT_THROW(topo.neighbors(3), ArgumentError);
  EXPECT_THROW(topo.neighbors(-1), ArgumentError);
}

TEST(Topology, IsolatedNodeHasNoNeighbors) {
  // The edge-list format cannot express isolated nodes; build directly.
  Topology topo({"a", "b", "c"}, {{0, 1}});
  EXPECT_TRUE(topo.neighbors(2).empty());
}

TEST(Topology, NeighborsMatchAdjacencyExhaustively) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Topology topo = random_graph(3 + static_cast<int>(seed % 6), seed);
    const int n = topo.node_count();
    for (int i = 0; i < n; ++i) {
      const auto nbrs = topo.neighbors(i);
      for (int j = 0; j < n; ++j) {
        const bool expected = topo.adjacency()[static_cast<std::size_t>(i) * n + j] != 0;
        const bool listed = std::find(nbrs.begin(), nbrs.end(), j) != nbrs.end();
        EXPECT_EQ(expected, listed);
      }
      EXPECT_TRUE(std::is_sorted(nbrs.begin(), nbrs.end()));
    }
  }
}

TEST(Topology, ArmidaleMutationAddsTwoLinks) {
  Topology topo = load_topology(kDataDir + "/aarnet.edges");
  TopologyMutation mutation;
  mutation.added_edges = {{"Armidale", "Rockhampton"}, {"Armidale", "Townsville"}};
  Topology mutated = apply_mutation(topo, mutation);
  EXPECT_EQ(mutated.edge_count(), 29u);
  EXPECT_EQ(mutated.degree(mutated.index_of("Armidale")), 3);
  EXPECT_EQ(topo.edge_count(), 27u);  // original untouched
}

TEST(Topology, EmptyMutationIsIdentity) {
  Topology topo = load_topology(kDataDir + "/aarnet.edges");
  Topology same = apply_mutation(topo, {});
  EXPECT_TRUE(topo.adjacency_equal(same));
}

TEST(Topology, RemoveThenReAddRestoresAdjacency) {
  Topology topo = triangle();
  TopologyMutation remove;
  remove.removed_edges = {{"A", "B"}};
  TopologyMutation add;
  add.added_edges = {{"A", "B"}};
  Topology roundtrip = apply_mutation(apply_mutation(topo, remove), add);
  EXPECT_TRUE(topo.adjacency_equal(roundtrip));
}

TEST(Topology, MutationValidation) {
  Topology topo = triangle();
  TopologyMutation dup_add;
  dup_add.added_edges = {{"A", "B"}};
  EXPECT_THROW(apply_mutation(topo, dup_add), ValidationError);
  TopologyMutation missing_remove;
  missing_remove.removed_edges = {{"A", "Z"}};
  EXPECT_THROW(apply_mutation(topo, missing_remove), ArgumentError);
  // Removing a leaf's only link disconnects it.
  Topology line = load_topology_from_string("A B\nB C\n");
  TopologyMutation disconnect;
  disconnect.removed_edges = {{"B", "C"}};
  EXPECT_THROW(apply_mutation(line, disconnect), ValidationError);
}

TEST(Topology, MutationsPreserveSymmetryAndZeroDiagonal) {
  Topology topo = load_topology(kDataDir + "/aarnet.edges");
  TopologyMutation mutation;
  mutation.added_edges = {{"Armidale", "Cairns"}};
  mutation.removed_edges = {{"Perth1", "Perth2"}};
  Topology mutated = apply_mutation(topo, mutation);
  const int n = mutated.node_count();
  for (int i = 0; i < n; ++i) {
    EXPECT_EQ(mutated.adjacency()[static_cast<std::size_t>(i) * n + i], 0);
    for (int j = 0; j < n; ++j)
      EXPECT_EQ(mutated.adjacency()[static_cast<std::size_t>(i) * n + j],
                mutated.adjacency()[static_cast<std::size_t>(j) * n + i]);
  }
}

TEST(Topology, SerializeRoundTrip) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Topology topo = random_graph(4 + static_cast<int>(seed % 5), seed + 50);
    Topology again = load_topology_from_string(topo.to_edge_list());
    EXPECT_TRUE(topo.adjacency_equal(again));
  }
}

TEST(Topology, GraphmlLabelWithSpaceIsFlattened) {
  const std::string doc = R"(<?xml version="1.0"?>
<graphml><key attr.name="label" attr.type="string" for="node" id="d0" />
<graph edgedefault="undirected">
<node id="n0"><data key="d0">Alice Springs</data></node>
<node id="n1"><data key="d0">Darwin</data></node>
<edge source="n0" target="n1" />
</graph></graphml>)";
  Topology topo = load_topology_from_string(doc);
  EXPECT_NO_THROW(topo.index_of("Alice_Springs"));
}
