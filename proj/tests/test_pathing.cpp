#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "strl/pathing.hpp"
#include "strl/rng.hpp"
#include "strl/topology.hpp"

using namespace strl;

namespace {

const std::string kDataDir = STRL_DATA_DIR;

Topology diamond() {
  // a-b-d and a-c-d
  return load_topology_from_string("a b\nb d\na c\nc d\n");
}

Topology random_connected(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back(std::string("v") + char('a' + i));
  std::string text;
  for (int i = 1; i < n; ++i) text += names[i - 1] + " " + names[i] + "\n";
  for (int a = 0; a < n; ++a)
    for (int b = a + 2; b < n; ++b)
      if (rng.next_double() < 0.35) text += names[a] + " " + names[b] + "\n";
  return load_topology_from_string(text);
}

std::vector<double> random_action(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> action(static_cast<std::size_t>(n));
  for (auto& a : action) a = rng.uniform(-2.0, 2.0);
  return action;
}

}  // namespace

TEST(Pathing, PathScoreSumsEndpoints) {
  Topology topo = load_topology_from_string("x y\n");
  EXPECT_DOUBLE_EQ(path_score(topo, {0, 1}, std::vector<double>{2.0, 3.0}), 5.0);
}

TEST(Pathing, ZeroActionScoresZero) {
  Topology topo = diamond();
  const std::vector<double> zeros(4, 0.0);
  EXPECT_DOUBLE_EQ(path_score(topo, {0, 1, 3}, zeros), 0.0);
  EXPECT_DOUBLE_EQ(path_score(topo, {0, 2, 3}, zeros), 0.0);
}

TEST(Pathing, PathScoreMatchesIndependentRecomputation) {
  Topology topo = random_connected(5, 3);
  const auto action = random_action(5, 4);
  const std::vector<int> path{0, 1, 2, 3, 4};
  double expected = 0.0;
  for (int v : path) expected += action[static_cast<std::size_t>(v)];
  EXPECT_DOUBLE_EQ(path_score(topo, path, action), expected);
}

TEST(Pathing, PathScoreValidatesThePath) {
  Topology topo = diamond();
  const std::vector<double> action(4, 1.0);
  EXPECT_THROW(path_score(topo, {0, 3}, action), ValidationError);      // missing edge
  EXPECT_THROW(path_score(topo, {0, 1, 0}, action), ValidationError);   // revisit
  EXPECT_THROW(path_score(topo, {}, action), ValidationError);          // empty
}

TEST(Pathing, SinglePathLineRegardlessOfScores) {
  Topology topo = load_topology_from_string("a b\nb c\n");
  const auto result = top_k_paths(topo, std::vector<double>{-5.0, 100.0, 2.0}, 0, 2, 4);
  ASSERT_EQ(result.paths.size(), 1u);
  EXPECT_EQ(result.paths[0].nodes, (std::vector<int>{0, 1, 2}));
}

TEST(Pathing, DiamondPrefersHigherScoredBranch) {
  Topology topo = diamond();  // nodes sorted: a=0, b=1, c=2, d=3
  std::vector<double> action{0.0, 5.0, 1.0, 0.0};
  auto result = top_k_paths(topo, action, 0, 3, 1);
  ASSERT_EQ(result.paths.size(), 1u);
  EXPECT_EQ(result.paths[0].nodes, (std::vector<int>{0, 1, 3}));
  // And the brute-force oracle agrees.
  auto oracle = brute_force_top_k(topo, action, 0, 3, 1);
  EXPECT_EQ(result.paths[0].nodes, oracle.paths[0].nodes);
}

TEST(Pathing, LongerPathWithHigherScoreWins) {
  // Direct edge a-d exists but the detour collects more score.
  Topology topo = load_topology_from_string("a b\nb d\na c\nc d\na d\n");
  std::vector<double> action{1.0, 1.0, 1.0, 1.0};
  auto result = top_k_paths(topo, action, 0, 3, 1);
  ASSERT_EQ(result.paths.size(), 1u);
  EXPECT_EQ(result.paths[0].nodes.size(), 3u);
  EXPECT_DOUBLE_EQ(result.paths[0].score, 3.0);
}

TEST(Pathing, CompleteGraphK4EnumeratesFivePaths) {
  Topology topo = load_topology_from_string("a b\na c\na d\nb c\nb d\nc d\n");
  const auto result = brute_force_top_k(topo, std::vector<double>(4, 0.0), 0, 1, 10);
  EXPECT_EQ(result.paths.size(), 5u);
}

TEST(Pathing, DisconnectedPairReportsUnreachable) {
  Topology topo({"a", "b", "c", "d"}, {{0, 1}, {2, 3}});
  const std::vector<double> action(4, 1.0);
  const auto exact = top_k_paths(topo, action, 0, 2, 3);
  EXPECT_FALSE(exact.reachable);
  EXPECT_TRUE(exact.paths.empty());
  const auto brute = brute_force_top_k(topo, action, 0, 2, 3);
  EXPECT_FALSE(brute.reachable);
  EXPECT_TRUE(brute.paths.empty());
}

TEST(Pathing, ArgumentGuards) {
  Topology topo = diamond();
  const std::vector<double> action(4, 0.0);
  EXPECT_THROW(top_k_paths(topo, action, 0, 0, 1), ArgumentError);
  EXPECT_THROW(top_k_paths(topo, action, 0, 3, 0), ArgumentError);
  EXPECT_THROW(top_k_paths(topo, std::vector<double>(3, 0.0), 0, 3, 1), ArgumentError);
  Topology big = random_connected(13, 1);
  EXPECT_THROW(brute_force_top_k(big, std::vector<double>(13, 0.0), 0, 1, 1), ArgumentError);
}

// Oracle equivalence on seeded random graphs: same paths, same order.
TEST(Pathing, MatchesBruteForceOracleOnRandomGraphs) {
  for (std::uint64_t trial = 0; trial < 60; ++trial) {
    const int n = 3 + static_cast<int>(trial % 6);  // up to 8 nodes
    Topology topo = random_connected(n, trial + 10);
    const auto action = random_action(n, trial * 3 + 1);
    for (int src = 0; src < n; ++src)
      for (int dst = 0; dst < n; ++dst) {
        if (src == dst) continue;
        for (std::size_t k : {1u, 3u, 5u}) {
          const auto fast = top_k_paths(topo, action, src, dst, k);
          const auto slow = brute_force_top_k(topo, action, src, dst, k);
          ASSERT_EQ(fast.paths.size(), slow.paths.size());
          for (std::size_t i = 0; i < fast.paths.size(); ++i) {
            EXPECT_EQ(fast.paths[i].nodes, slow.paths[i].nodes)
                << "trial " << trial << " " << src << "->" << dst << " k=" << k << " rank " << i;
            EXPECT_DOUBLE_EQ(fast.paths[i].score, slow.paths[i].score);
          }
        }
      }
  }
}

TEST(Pathing, EveryReturnedPathIsSimpleAndEdgeValid) {
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Topology topo = random_connected(7, trial + 200);
    const auto action = random_action(7, trial);
    const auto result = top_k_paths(topo, action, 0, 6, 5);
    for (const auto& p : result.paths) {
      EXPECT_NO_THROW(path_score(topo, p.nodes, action));  // validates structure
      EXPECT_NEAR(p.score, path_score(topo, p.nodes, action), 1e-12);
    }
  }
}

TEST(Pathing, ConstantShiftKeepsTopPathAmongEqualHopCounts) {
  Topology topo = diamond();
  std::vector<double> action{0.3, 1.7, -0.4, 0.9};  // both a->d paths have 3 hops
  const auto base = top_k_paths(topo, action, 0, 3, 1);
  for (double c : {-3.0, 0.5, 10.0}) {
    auto shifted = action;
    for (auto& v : shifted) v += c;
    const auto moved = top_k_paths(topo, shifted, 0, 3, 1);
    EXPECT_EQ(base.paths[0].nodes, moved.paths[0].nodes) << "shift " << c;
  }
}

TEST(Pathing, RoutingPlanSharesAreEqualAndNormalized) {
  Topology topo = diamond();
  const std::vector<OdPair> pairs{{0, 3}};
  const auto action = random_action(4, 9);
  RoutingPlan plan = build_routing_plan(topo, action, pairs, 2);
  ASSERT_EQ(plan.routes.size(), 1u);
  ASSERT_EQ(plan.routes[0].size(), 2u);
  EXPECT_DOUBLE_EQ(plan.routes[0][0].share, 0.5);
  EXPECT_DOUBLE_EQ(plan.routes[0][1].share, 0.5);
}

TEST(Pathing, SinglePathTopologyGetsShareOne) {
  Topology topo = load_topology_from_string("a b\n");
  RoutingPlan plan = build_routing_plan(topo, std::vector<double>{1.0, 1.0},
                                        std::vector<OdPair>{{0, 1}}, 5);
  ASSERT_EQ(plan.routes[0].size(), 1u);
  EXPECT_DOUBLE_EQ(plan.routes[0][0].share, 1.0);
}

TEST(Pathing, Top1SwitchRoutesEverythingOnTheBestPath) {
  Topology topo = diamond();
  RoutingPlan plan = build_routing_plan(topo, std::vector<double>{0, 2, 1, 0},
                                        std::vector<OdPair>{{0, 3}}, 2, /*top1_only=*/true);
  ASSERT_EQ(plan.routes[0].size(), 1u);
  EXPECT_EQ(plan.routes[0][0].nodes, (std::vector<int>{0, 1, 3}));
}

TEST(Pathing, UnreachablePairRaisesRoutingErrorNamingThePair) {
  Topology topo({"a", "b", "c", "d"}, {{0, 1}, {2, 3}});
  try {
    build_routing_plan(topo, std::vector<double>(4, 0.0), std::vector<OdPair>{{0, 3}}, 2);
    FAIL() << "expected RoutingError";
  } catch (const RoutingError& e) {
    EXPECT_NE(std::string(e.what()).find("a"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("d"), std::string::npos);
  }
}

TEST(Pathing, AarnetAllPairsPlanIsStructurallySound) {
  Topology topo = load_topology(kDataDir + "/aarnet.edges");
  const auto action = random_action(topo.node_count(), 77);
  std::vector<OdPair> pairs;
  for (int i = 0; i < topo.node_count(); ++i)
    for (int j = 0; j < topo.node_count(); ++j)
      if (i != j) pairs.emplace_back(i, j);
  RoutingPlan plan = build_routing_plan(topo, action, pairs, 5);
  ASSERT_EQ(plan.routes.size(), pairs.size());
  for (const auto& routes : plan.routes) {
    EXPECT_GE(routes.size(), 1u);
    EXPECT_LE(routes.size(), 5u);
    double total = 0.0;
    for (const auto& ps : routes) total += ps.share;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}
