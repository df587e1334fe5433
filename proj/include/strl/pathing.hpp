#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "strl/errors.hpp"
#include "strl/topology.hpp"

namespace strl {

// A simple path with the sum of per-node efficiency scores along it.
struct ScoredPath {
  std::vector<int> nodes;
  double score = 0.0;
};

struct TopKResult {
  std::vector<ScoredPath> paths;  // descending (score, then shorter, then lexicographic)
  bool reachable = false;
};

using OdPair = std::pair<int, int>;

struct PathShare {
  std::vector<int> nodes;
  double share = 0.0;
};

// Per-OD-pair path sets with traffic shares summing to 1.
struct RoutingPlan {
  std::vector<OdPair> pairs;
  std::vector<std::vector<PathShare>> routes;  // aligned with pairs
};

namespace detail {

inline void check_action(const Topology& topo, std::span<const double> action) {
  if (static_cast<int>(action.size()) != topo.node_count())
    throw ArgumentError("action length " + std::to_string(action.size()) +
                        " != node count " + std::to_string(topo.node_count()));
}

inline void check_path(const Topology& topo, const std::vector<int>& path) {
  if (path.empty()) throw ValidationError("empty path");
  std::vector<bool> seen(static_cast<std::size_t>(topo.node_count()), false);
  for (int v : path) {
    if (v < 0 || v >= topo.node_count()) throw ValidationError("path node out of range");
    if (seen[static_cast<std::size_t>(v)]) throw ValidationError("path revisits node " + topo.name(v));
    seen[static_cast<std::size_t>(v)] = true;
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    if (!topo.has_edge(path[i], path[i + 1]))
      throw ValidationError("path uses missing edge " + topo.name(path[i]) + " -- " +
                            topo.name(path[i + 1]));
}

// Front-to-back accumulation; every scorer in this module sums in the same
// order so oracle comparisons are exact.
inline double score_of(const std::vector<int>& path, std::span<const double> action) {
  double acc = 0.0;
  for (int v : path) acc += action[static_cast<std::size_t>(v)];
  return acc;
}

inline bool better(const ScoredPath& a, const ScoredPath& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.nodes.size() != b.nodes.size()) return a.nodes.size() < b.nodes.size();
  return a.nodes < b.nodes;
}

}  // namespace detail

// Sum of action scores over all path nodes, endpoints included.
inline double path_score(const Topology& topo, const std::vector<int>& path,
                         std::span<const double> action) {
  detail::check_action(topo, action);
  detail::check_path(topo, path);
  return detail::score_of(path, action);
}

// Exhaustive enumeration of all simple src->dst paths; ground truth for
// top_k_paths. Guarded to small graphs.
inline TopKResult brute_force_top_k(const Topology& topo, std::span<const double> action, int src,
                                    int dst, std::size_t k) {
  detail::check_action(topo, action);
  if (topo.node_count() > 12)
    throw ArgumentError("brute_force_top_k is limited to N <= 12 nodes");
  if (src == dst) throw ArgumentError("src and dst must differ");
  if (k < 1) throw ArgumentError("k must be >= 1");

  TopKResult result;
  std::vector<int> path{src};
  std::uint64_t visited = 1ULL << src;

  std::function<void()> dfs = [&]() {
    const int u = path.back();
    if (u == dst) {
      // Fresh front-to-back sum: identical rounding to path_score.
      result.paths.push_back({path, detail::score_of(path, action)});
      return;
    }
    for (int v : topo.neighbors(u)) {
      if (visited & (1ULL << v)) continue;
      visited |= 1ULL << v;
      path.push_back(v);
      dfs();
      path.pop_back();
      visited &= ~(1ULL << v);
    }
  };
  dfs();

  result.reachable = !result.paths.empty();
  std::sort(result.paths.begin(), result.paths.end(), detail::better);
  if (result.paths.size() > k) result.paths.resize(k);
  return result;
}

// The k simple src->dst paths with the highest cumulative node scores,
// ordered like brute_force_top_k. Best-first search over path prefixes with
// an admissible bound (current score + dst score + positive scores of nodes
// still reachable without revisiting), so results are exact.
inline TopKResult top_k_paths(const Topology& topo, std::span<const double> action, int src,
                              int dst, std::size_t k) {
  detail::check_action(topo, action);
  const int n = topo.node_count();
  if (n > 64) throw ArgumentError("top_k_paths supports at most 64 nodes");
  if (src < 0 || src >= n || dst < 0 || dst >= n) throw ArgumentError("endpoint out of range");
  if (src == dst) throw ArgumentError("src and dst must differ");
  if (k < 1) throw ArgumentError("k must be >= 1");

  // Adjacency as bitmasks for the per-expansion reachability probe.
  std::vector<std::uint64_t> adj_bits(static_cast<std::size_t>(n), 0);
  for (auto [a, b] : topo.edges()) {
    adj_bits[static_cast<std::size_t>(a)] |= 1ULL << b;
    adj_bits[static_cast<std::size_t>(b)] |= 1ULL << a;
  }
  // Set of nodes reachable from u when `blocked` may not be entered.
  auto reachable_from = [&](int u, std::uint64_t blocked) {
    std::uint64_t reach = 1ULL << u;
    std::uint64_t frontier = reach;
    while (frontier != 0) {
      std::uint64_t next = 0;
      std::uint64_t f = frontier;
      while (f != 0) {
        const int v = std::countr_zero(f);
        f &= f - 1;
        next |= adj_bits[static_cast<std::size_t>(v)];
      }
      next &= ~reach & ~blocked;
      reach |= next;
      frontier = next;
    }
    return reach;
  };

  struct Entry {
    double bound;
    double score;
    std::uint64_t visited;
    std::uint64_t order;  // deterministic tie-break for equal bounds
    std::vector<int> nodes;
  };
  struct Worse {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.bound != b.bound) return a.bound < b.bound;
      return a.order > b.order;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Worse> frontier;
  std::uint64_t order = 0;
  const double dst_score = action[static_cast<std::size_t>(dst)];

  auto admissible_bound = [&](int u, std::uint64_t visited, double score) {
    const std::uint64_t reach = reachable_from(u, visited & ~(1ULL << u));
    if ((reach & (1ULL << dst)) == 0) return -std::numeric_limits<double>::infinity();
    double bound = score + dst_score;
    std::uint64_t candidates = reach & ~visited & ~(1ULL << dst);
    while (candidates != 0) {
      const int v = std::countr_zero(candidates);
      candidates &= candidates - 1;
      const double s = action[static_cast<std::size_t>(v)];
      if (s > 0.0) bound += s;
    }
    return bound;
  };

  {
    const double s0 = action[static_cast<std::size_t>(src)];
    const double b0 = admissible_bound(src, 1ULL << src, s0);
    if (b0 != -std::numeric_limits<double>::infinity())
      frontier.push({b0, s0, 1ULL << src, order++, {src}});
  }

  std::vector<ScoredPath> complete;
  std::vector<double> best_scores;  // descending
  // Pruning keeps a small slack under the k-th score: summation order makes
  // bounds and path scores disagree by a few ulps, and candidates inside the
  // slack band still have to be collected for the exact final ordering.
  auto prune_below = [&]() {
    if (best_scores.size() < k) return -std::numeric_limits<double>::infinity();
    const double kth = best_scores[k - 1];
    return kth - 1e-9 * (1.0 + std::abs(kth));
  };

  while (!frontier.empty()) {
    if (frontier.top().bound < prune_below()) break;
    Entry cur = frontier.top();
    frontier.pop();
    const int u = cur.nodes.back();
    if (u == dst) {
      complete.push_back({std::move(cur.nodes), cur.score});
      best_scores.insert(
          std::upper_bound(best_scores.begin(), best_scores.end(), cur.score, std::greater<>()),
          cur.score);
      continue;
    }
    std::uint64_t nbrs = adj_bits[static_cast<std::size_t>(u)] & ~cur.visited;
    while (nbrs != 0) {
      const int v = std::countr_zero(nbrs);
      nbrs &= nbrs - 1;
      const double score = cur.score + action[static_cast<std::size_t>(v)];
      const std::uint64_t visited = cur.visited | (1ULL << v);
      double bound;
      if (v == dst) {
        bound = score;
      } else {
        bound = admissible_bound(v, visited, score);
        if (bound == -std::numeric_limits<double>::infinity()) continue;
        if (bound < prune_below()) continue;
      }
      Entry next{bound, score, visited, order++, cur.nodes};
      next.nodes.push_back(v);
      frontier.push(std::move(next));
    }
  }

  TopKResult result;
  result.reachable = !complete.empty();
  std::sort(complete.begin(), complete.end(), detail::better);
  if (complete.size() > k) complete.resize(k);
  result.paths = std::move(complete);
  return result;
}

// Routes every OD pair over its top-k paths with equal traffic shares
// (or only the best path when top1_only is set).
inline RoutingPlan build_routing_plan(const Topology& topo, std::span<const double> action,
                                      std::span<const OdPair> od_pairs, std::size_t k,
                                      bool top1_only = false) {
  detail::check_action(topo, action);
  RoutingPlan plan;
  plan.pairs.assign(od_pairs.begin(), od_pairs.end());
  plan.routes.reserve(od_pairs.size());
  for (const auto& [src, dst] : od_pairs) {
    TopKResult top = top_k_paths(topo, action, src, dst, top1_only ? 1 : k);
    if (!top.reachable)
      throw RoutingError("no path from " + topo.name(src) + " to " + topo.name(dst));
    std::vector<PathShare> shares;
    shares.reserve(top.paths.size());
    const double share = 1.0 / static_cast<double>(top.paths.size());
    for (auto& p : top.paths) shares.push_back({std::move(p.nodes), share});
    plan.routes.push_back(std::move(shares));
  }
  return plan;
}

}  // namespace strl
