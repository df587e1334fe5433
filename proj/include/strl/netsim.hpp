#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <deque>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "strl/errors.hpp"
#include "strl/pathing.hpp"
#include "strl/rng.hpp"
#include "strl/topology.hpp"
#include "strl/traffic.hpp"

namespace strl {

namespace detail {
// Read-only view of a priority_queue's underlying container (for digests).
template <typename T, typename S, typename C>
const S& underlying_container(const std::priority_queue<T, S, C>& q) {
  struct Access : std::priority_queue<T, S, C> {
    static const S& get(const std::priority_queue<T, S, C>& queue) {
      return queue.*(&Access::c);
    }
  };
  return Access::get(q);
}
}  // namespace detail

struct NodeSpec {
  double service_rate = 0.0;        // mu_i, packets per second
  std::size_t buffer_capacity = 0;  // packets; 0 = unbounded
};

struct LinkSpec {
  double capacity_bps = 0.0;        // B
  double packet_size_bits = 0.0;    // L
  std::size_t buffer_capacity = 0;  // packets; 0 = unbounded
};

// T(t) = R(t) / B with R(t) = lambda(t) * L.
inline double link_transmit_time(double lambda, const LinkSpec& spec) {
  if (lambda < 0.0) throw ArgumentError("arrival rate must be >= 0");
  return lambda * spec.packet_size_bits / spec.capacity_bps;
}

// Observation: per node, the last T+1 per-step mean node delays plus the
// last T+1 mean delays of each outgoing link (ascending neighbor order),
// zero-padded up to the maximum out-degree. Layout [node][slot][time],
// slot 0 = node delays, time axis oldest-first.
struct StateTensor {
  std::size_t nodes = 0;
  std::size_t channels = 0;  // K + 1
  std::size_t horizon = 0;   // T + 1
  std::vector<double> values;

  double at(std::size_t node, std::size_t slot, std::size_t t) const {
    return values[(node * channels + slot) * horizon + t];
  }
  double& at(std::size_t node, std::size_t slot, std::size_t t) {
    return values[(node * channels + slot) * horizon + t];
  }
};

struct StepMetrics {
  std::int64_t injected = 0;
  std::int64_t delivered = 0;      // packets completing in this step's window
  std::int64_t dropped = 0;        // nonzero only with finite buffers
  std::int64_t in_flight = 0;      // outstanding packets after the step
  double mean_e2e_delay = 0.0;     // seconds, over packets delivered this step
  double throughput = 0.0;         // delivered/injected, clamped into [0, 1]
  double reward = 0.0;             // throughput / mean delay, 0 when nothing delivered
};

// throughput / mean end-to-end delay; 0 when nothing was delivered.
inline double compute_reward(std::int64_t delivered, std::int64_t injected,
                             double mean_e2e_delay) {
  if (injected < 0) throw ArgumentError("injected must be >= 0");
  if (delivered < 0) throw ArgumentError("delivered must be >= 0");
  if (delivered > injected)
    throw ValidationError("delivered (" + std::to_string(delivered) + ") exceeds injected (" +
                          std::to_string(injected) + ")");
  if (delivered == 0) return 0.0;
  if (mean_e2e_delay <= 0.0) throw ArgumentError("mean delay must be > 0 when packets were delivered");
  const double throughput = injected == 0 ? 0.0 : static_cast<double>(delivered) / static_cast<double>(injected);
  return throughput / mean_e2e_delay;
}

struct EnvConfig {
  std::size_t history = 40;          // T: window length; observations carry T+1 slices
  std::size_t warmup_min_steps = 20;
  double warmup_utilization = 0.9;   // busy fraction over the trailing window
  std::size_t warmup_window = 10;
  std::size_t warmup_cap = 500;
};

struct WarmupReport {
  std::size_t steps = 0;
  bool converged = false;  // false => cap hit before the criterion was met
};

// Discrete-time packet network. One step() call advances one simulated
// second: packet groups (path, count) move through per-node and per-directed-
// link FIFO servers. A node serves a group of n packets in n/mu seconds and
// a link in n*L/B seconds; groups whose delivery falls past the step boundary
// stay in flight and complete in a later step.
class Env {
 public:
  Env(Topology topology, std::vector<NodeSpec> node_specs, std::vector<LinkSpec> link_specs,
      std::vector<OdPair> od_pairs, EnvConfig config = {})
      : topo_(std::move(topology)),
        node_specs_(std::move(node_specs)),
        link_specs_(std::move(link_specs)),
        od_pairs_(std::move(od_pairs)),
        config_(config) {
    const int n = topo_.node_count();
    if (static_cast<int>(node_specs_.size()) != n)
      throw ValidationError("need one NodeSpec per node (" + std::to_string(node_specs_.size()) +
                            " given, " + std::to_string(n) + " nodes)");
    if (link_specs_.size() != topo_.edge_count())
      throw ValidationError("need one LinkSpec per undirected edge");
    for (int i = 0; i < n; ++i)
      if (node_specs_[static_cast<std::size_t>(i)].service_rate <= 0.0)
        throw ValidationError("node " + topo_.name(i) + " has non-positive service rate");
    for (const auto& spec : link_specs_)
      if (spec.capacity_bps <= 0.0 || spec.packet_size_bits <= 0.0)
        throw ValidationError("link specs require positive capacity and packet size");
    if (od_pairs_.empty()) throw ValidationError("at least one OD pair is required");
    for (const auto& [src, dst] : od_pairs_) {
      if (src == dst) throw ValidationError("OD pair with equal endpoints: " + topo_.name(src));
      if (src < 0 || src >= n || dst < 0 || dst >= n) throw ValidationError("OD pair out of range");
      if (!topo_.connected(src, dst))
        throw ValidationError("destination " + topo_.name(dst) + " unreachable from " +
                              topo_.name(src));
    }

    // Directed link ids follow node order, then ascending neighbor order;
    // this is also the slot order inside the state tensor.
    for (int i = 0; i < n; ++i) {
      for (int j : topo_.neighbors(i)) {
        link_id_[{i, j}] = static_cast<int>(link_dirs_.size());
        link_dirs_.emplace_back(i, j);
      }
    }
    // LinkSpec lookup per directed link (shared per undirected edge).
    const auto& edges = topo_.edges();
    for (const auto& [i, j] : link_dirs_) {
      const auto key = std::make_pair(std::min(i, j), std::max(i, j));
      const auto it = std::lower_bound(edges.begin(), edges.end(), key);
      link_spec_of_dir_.push_back(static_cast<std::size_t>(it - edges.begin()));
    }

    max_out_degree_ = static_cast<std::size_t>(topo_.max_degree());
    const std::size_t servers = static_cast<std::size_t>(n) + link_dirs_.size();
    avail_.assign(servers, 0.0);
    backlog_.assign(servers, {});
    cumulative_processed_.assign(servers, 0);
    last_busy_step_.assign(servers, -1);
    node_history_.assign(static_cast<std::size_t>(n),
                         std::deque<double>(config_.history + 1, 0.0));
    link_history_.assign(link_dirs_.size(), std::deque<double>(config_.history + 1, 0.0));
  }

  const Topology& topology() const { return topo_; }
  const std::vector<OdPair>& od_pairs() const { return od_pairs_; }
  std::size_t step_count() const { return step_; }
  std::size_t max_out_degree() const { return max_out_degree_; }
  std::size_t history() const { return config_.history; }
  std::int64_t in_flight() const { return in_flight_; }
  std::int64_t processed_at(std::size_t server) const { return cumulative_processed_[server]; }
  std::size_t server_count() const { return avail_.size(); }

  // Advances one simulated second under the given plan and arrival rate.
  StepMetrics step(const RoutingPlan& plan, double lambda_t) {
    return step_impl(plan, lambda_t, /*require_od_pairs=*/true);
  }

 private:
  // Warm-up traffic runs between all connected pairs, not the configured OD
  // set, so its plans skip the pair-identity check.
  StepMetrics warmup_step(const RoutingPlan& plan, double lambda_t) {
    return step_impl(plan, lambda_t, /*require_od_pairs=*/false);
  }

  StepMetrics step_impl(const RoutingPlan& plan, double lambda_t, bool require_od_pairs) {
    if (lambda_t < 0.0) throw ArgumentError("lambda must be >= 0");
    validate_plan(plan, require_od_pairs);
    const double t0 = static_cast<double>(step_);
    const double t1 = t0 + 1.0;

    StepMetrics metrics;
    metrics.injected = inject(plan, lambda_t, t0);

    // Drain all arrivals inside this step's window.
    while (!events_.empty() && events_.top().time < t1) {
      Event ev = events_.top();
      events_.pop();
      process_arrival(ev);
    }

    // Per-server delay accumulators for this step's completions.
    const std::size_t servers = avail_.size();
    std::vector<double> delay_sum(servers, 0.0);
    std::vector<std::int64_t> done_count(servers, 0);
    while (!completions_.empty() && completions_.top().time < t1) {
      const Completion c = completions_.top();
      completions_.pop();
      delay_sum[c.server] += c.delay * static_cast<double>(c.packets);
      done_count[c.server] += c.packets;
      cumulative_processed_[c.server] += c.packets;
      last_busy_step_[c.server] = static_cast<std::int64_t>(step_);
    }
    double e2e_sum = 0.0;
    while (!deliveries_.empty() && deliveries_.top().time < t1) {
      const Delivery d = deliveries_.top();
      deliveries_.pop();
      metrics.delivered += d.packets;
      e2e_sum += (d.time - d.injected_at) * static_cast<double>(d.packets);
    }

    // Shift histories one slot and append this step's mean delays.
    const int n = topo_.node_count();
    for (int i = 0; i < n; ++i) {
      auto& h = node_history_[static_cast<std::size_t>(i)];
      h.pop_front();
      const std::size_t s = static_cast<std::size_t>(i);
      h.push_back(done_count[s] > 0 ? delay_sum[s] / static_cast<double>(done_count[s]) : 0.0);
    }
    for (std::size_t l = 0; l < link_dirs_.size(); ++l) {
      auto& h = link_history_[l];
      h.pop_front();
      const std::size_t s = static_cast<std::size_t>(n) + l;
      h.push_back(done_count[s] > 0 ? delay_sum[s] / static_cast<double>(done_count[s]) : 0.0);
    }

    in_flight_ += metrics.injected - metrics.delivered - dropped_this_step_;
    metrics.dropped = dropped_this_step_;
    dropped_this_step_ = 0;
    metrics.in_flight = in_flight_;
    if (metrics.delivered > 0) {
      metrics.mean_e2e_delay = e2e_sum / static_cast<double>(metrics.delivered);
      metrics.throughput =
          metrics.injected == 0
              ? 0.0
              : std::min(1.0, static_cast<double>(metrics.delivered) /
                                  static_cast<double>(metrics.injected));
      metrics.reward = metrics.throughput / metrics.mean_e2e_delay;
    }
    ++step_;
    return metrics;
  }

 public:
  StateTensor observe_state() const {
    StateTensor state;
    state.nodes = static_cast<std::size_t>(topo_.node_count());
    state.channels = max_out_degree_ + 1;
    state.horizon = config_.history + 1;
    state.values.assign(state.nodes * state.channels * state.horizon, 0.0);
    for (std::size_t i = 0; i < state.nodes; ++i) {
      const auto& nh = node_history_[i];
      for (std::size_t t = 0; t < state.horizon; ++t) state.at(i, 0, t) = nh[t];
      const auto nbrs = topo_.neighbors(static_cast<int>(i));
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const auto& lh = link_history_[static_cast<std::size_t>(
            link_id_.at({static_cast<int>(i), nbrs[k]}))];
        for (std::size_t t = 0; t < state.horizon; ++t) state.at(i, k + 1, t) = lh[t];
      }
    }
    return state;
  }

  // Random-path traffic between all (connected) node pairs until every node
  // and link has processed at least one packet and the busy fraction over
  // the trailing window reaches the threshold (or the step cap is hit).
  WarmupReport warmup(const ArrivalSeries& arrivals, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "warmup"));
    const auto comp = topo_.components();
    std::vector<OdPair> pairs;
    for (int i = 0; i < topo_.node_count(); ++i)
      for (int j = 0; j < topo_.node_count(); ++j)
        if (i != j && comp[static_cast<std::size_t>(i)] == comp[static_cast<std::size_t>(j)])
          pairs.emplace_back(i, j);
    WarmupReport report;
    for (std::size_t w = 0; w < config_.warmup_cap; ++w) {
      RoutingPlan plan;
      plan.pairs = pairs;
      plan.routes.reserve(pairs.size());
      for (const auto& [src, dst] : pairs)
        plan.routes.push_back({PathShare{random_simple_path(src, dst, rng), 1.0}});
      warmup_step(plan, arrivals.at(w));
      ++report.steps;
      if (report.steps >= config_.warmup_min_steps && coverage_complete() &&
          busy_fraction() >= config_.warmup_utilization) {
        report.converged = true;
        return report;
      }
    }
    // Cap hit: a component that never processed anything is a setup defect.
    std::string untouched = untouched_components();
    if (!untouched.empty())
      throw SetupError("warm-up cap reached with idle components: " + untouched);
    return report;
  }

  // FNV-1a over the full dynamic state; equal digests mean equal futures.
  std::uint64_t digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_u64 = [&h](std::uint64_t v) {
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    };
    auto mix_d = [&](double d) {
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(d));
      std::memcpy(&bits, &d, sizeof(bits));
      mix_u64(bits);
    };
    mix_u64(step_);
    mix_u64(static_cast<std::uint64_t>(in_flight_));
    for (double a : avail_) mix_d(a);
    for (const auto& h2 : node_history_)
      for (double v : h2) mix_d(v);
    for (const auto& h2 : link_history_)
      for (double v : h2) mix_d(v);
    for (auto c : cumulative_processed_) mix_u64(static_cast<std::uint64_t>(c));
    for (const auto& ev : detail::underlying_container(events_)) {
      mix_d(ev.time);
      mix_d(ev.injected_at);
      mix_u64(ev.hop);
      mix_u64(static_cast<std::uint64_t>(ev.packets));
      for (int v : ev.path) mix_u64(static_cast<std::uint64_t>(v));
    }
    for (const auto& c : detail::underlying_container(completions_)) {
      mix_d(c.time);
      mix_d(c.delay);
      mix_u64(c.server);
      mix_u64(static_cast<std::uint64_t>(c.packets));
    }
    for (const auto& d : detail::underlying_container(deliveries_)) {
      mix_d(d.time);
      mix_d(d.injected_at);
      mix_u64(static_cast<std::uint64_t>(d.packets));
    }
    return h;
  }

 private:
  struct Event {
    double time = 0.0;
    std::uint64_t seq = 0;  // FIFO tie-break
    std::vector<int> path;
    std::size_t hop = 0;    // 0-based server index along the path (2 per edge)
    std::int64_t packets = 0;
    double injected_at = 0.0;
  };
  struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };
  struct Completion {
    double time = 0.0;
    std::size_t server = 0;
    double delay = 0.0;
    std::int64_t packets = 0;
    bool operator>(const Completion& o) const { return time > o.time; }
  };
  struct Delivery {
    double time = 0.0;
    std::int64_t packets = 0;
    double injected_at = 0.0;
    bool operator>(const Delivery& o) const { return time > o.time; }
  };

  void validate_plan(const RoutingPlan& plan, bool require_od_pairs) const {
    if (require_od_pairs && plan.pairs != od_pairs_)
      throw RoutingError("plan OD pairs do not match the environment");
    if (plan.routes.size() != plan.pairs.size())
      throw RoutingError("plan routes are not aligned with its pairs");
    for (std::size_t p = 0; p < plan.routes.size(); ++p) {
      double total = 0.0;
      if (plan.routes[p].empty()) throw RoutingError("plan has no path for a pair");
      for (const auto& ps : plan.routes[p]) {
        if (ps.nodes.front() != plan.pairs[p].first || ps.nodes.back() != plan.pairs[p].second)
          throw RoutingError("plan path endpoints do not match its OD pair");
        try {
          detail::check_path(topo_, ps.nodes);
        } catch (const ValidationError& e) {
          throw RoutingError(std::string("plan path invalid: ") + e.what());
        }
        if (ps.share < 0.0) throw RoutingError("negative traffic share");
        total += ps.share;
      }
      if (std::abs(total - 1.0) > 1e-9) throw RoutingError("traffic shares must sum to 1");
    }
  }

  // Largest-remainder split of `total` packets proportional to weights.
  static std::vector<std::int64_t> apportion(std::int64_t total, const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    std::vector<std::int64_t> out(n, 0);
    if (total <= 0 || n == 0) return out;
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    std::vector<std::pair<double, std::size_t>> fractional;
    fractional.reserve(n);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double exact = static_cast<double>(total) * weights[i] / wsum;
      out[i] = static_cast<std::int64_t>(std::floor(exact));
      assigned += out[i];
      fractional.emplace_back(-(exact - std::floor(exact)), i);
    }
    std::sort(fractional.begin(), fractional.end());
    for (std::int64_t r = 0; r < total - assigned; ++r) ++out[fractional[static_cast<std::size_t>(r)].second];
    return out;
  }

  std::int64_t inject(const RoutingPlan& plan, double lambda_t, double t0) {
    const std::int64_t total = static_cast<std::int64_t>(std::llround(lambda_t));
    if (total <= 0) return 0;
    const std::vector<double> pair_weights(plan.pairs.size(), 1.0);
    const auto per_pair = apportion(total, pair_weights);
    std::int64_t injected = 0;
    for (std::size_t p = 0; p < plan.routes.size(); ++p) {
      if (per_pair[p] == 0) continue;
      std::vector<double> shares;
      shares.reserve(plan.routes[p].size());
      for (const auto& ps : plan.routes[p]) shares.push_back(ps.share);
      const auto per_path = apportion(per_pair[p], shares);
      for (std::size_t q = 0; q < per_path.size(); ++q) {
        if (per_path[q] == 0) continue;
        Event ev;
        ev.time = t0;
        ev.seq = next_seq_++;
        ev.path = plan.routes[p][q].nodes;
        ev.hop = 0;
        ev.packets = per_path[q];
        ev.injected_at = t0;
        events_.push(std::move(ev));
        injected += per_path[q];
      }
    }
    return injected;
  }

  // Server id and batch service duration for hop h of a path: even hops are
  // node processing, odd hops are the following directed link.
  std::pair<std::size_t, double> server_of(const std::vector<int>& path, std::size_t hop,
                                           std::int64_t packets) const {
    const std::size_t edge_idx = hop / 2;
    if (hop % 2 == 0) {
      const int node = path[edge_idx];
      const double mu = node_specs_[static_cast<std::size_t>(node)].service_rate;
      return {static_cast<std::size_t>(node), static_cast<double>(packets) / mu};
    }
    const int from = path[edge_idx];
    const int to = path[edge_idx + 1];
    const int lid = link_id_.at({from, to});
    const LinkSpec& spec = link_specs_[link_spec_of_dir_[static_cast<std::size_t>(lid)]];
    const double dur = static_cast<double>(packets) * spec.packet_size_bits / spec.capacity_bps;
    return {static_cast<std::size_t>(topo_.node_count()) + static_cast<std::size_t>(lid), dur};
  }

  std::size_t buffer_capacity_of(std::size_t server) const {
    if (server < static_cast<std::size_t>(topo_.node_count()))
      return node_specs_[server].buffer_capacity;
    return link_specs_[link_spec_of_dir_[server - static_cast<std::size_t>(topo_.node_count())]]
        .buffer_capacity;
  }

  void process_arrival(Event& ev) {
    const auto [server, duration] = server_of(ev.path, ev.hop, ev.packets);

    // Finite buffers: count packets assigned but not finished at arrival time.
    auto& backlog = backlog_[server];
    while (!backlog.empty() && backlog.front().first <= ev.time) backlog.pop_front();
    const std::size_t cap = buffer_capacity_of(server);
    if (cap > 0) {
      std::int64_t queued = 0;
      for (const auto& [fin, cnt] : backlog) queued += cnt;
      if (queued + ev.packets > static_cast<std::int64_t>(cap)) {
        dropped_this_step_ += ev.packets;
        return;
      }
    }

    const double start = std::max(ev.time, avail_[server]);
    const double finish = start + duration;
    avail_[server] = finish;
    backlog.emplace_back(finish, ev.packets);
    completions_.push({finish, server, finish - ev.time, ev.packets});

    const std::size_t hops = 2 * (ev.path.size() - 1);
    if (ev.hop + 1 < hops) {
      Event next;
      next.time = finish;
      next.seq = next_seq_++;
      next.path = std::move(ev.path);
      next.hop = ev.hop + 1;
      next.packets = ev.packets;
      next.injected_at = ev.injected_at;
      events_.push(std::move(next));
    } else {
      deliveries_.push({finish, ev.packets, ev.injected_at});
    }
  }

  std::vector<int> random_simple_path(int src, int dst, Rng& rng) const {
    // Randomized DFS: uniform choice among unvisited neighbors, backtracking
    // out of dead ends. Always terminates on a connected pair.
    std::vector<int> path{src};
    std::vector<bool> visited(static_cast<std::size_t>(topo_.node_count()), false);
    visited[static_cast<std::size_t>(src)] = true;
    std::vector<std::vector<int>> options_stack;
    auto fresh_options = [&](int u) {
      std::vector<int> opts;
      for (int v : topo_.neighbors(u))
        if (!visited[static_cast<std::size_t>(v)]) opts.push_back(v);
      return opts;
    };
    options_stack.push_back(fresh_options(src));
    while (true) {
      auto& opts = options_stack.back();
      if (opts.empty()) {
        visited[static_cast<std::size_t>(path.back())] = false;
        path.pop_back();
        options_stack.pop_back();
        if (path.empty()) throw SetupError("no simple path during warm-up");
        continue;
      }
      const std::size_t pick = static_cast<std::size_t>(rng.next_below(opts.size()));
      const int v = opts[pick];
      opts.erase(opts.begin() + static_cast<std::ptrdiff_t>(pick));
      if (v == dst) {
        path.push_back(v);
        return path;
      }
      visited[static_cast<std::size_t>(v)] = true;
      path.push_back(v);
      options_stack.push_back(fresh_options(v));
    }
  }

  bool coverage_complete() const {
    // Nodes individually; undirected links covered by either direction.
    for (int i = 0; i < topo_.node_count(); ++i)
      if (cumulative_processed_[static_cast<std::size_t>(i)] == 0) return false;
    for (auto [a, b] : topo_.edges()) {
      const auto fwd = static_cast<std::size_t>(topo_.node_count() + link_id_.at({a, b}));
      const auto rev = static_cast<std::size_t>(topo_.node_count() + link_id_.at({b, a}));
      if (cumulative_processed_[fwd] == 0 && cumulative_processed_[rev] == 0) return false;
    }
    return true;
  }

  double busy_fraction() const {
    const std::int64_t window_start =
        static_cast<std::int64_t>(step_) - static_cast<std::int64_t>(config_.warmup_window);
    std::size_t busy = 0;
    for (auto last : last_busy_step_)
      if (last >= window_start) ++busy;
    return static_cast<double>(busy) / static_cast<double>(last_busy_step_.size());
  }

  std::string untouched_components() const {
    std::string out;
    for (int i = 0; i < topo_.node_count(); ++i)
      if (cumulative_processed_[static_cast<std::size_t>(i)] == 0)
        out += (out.empty() ? "" : ", ") + topo_.name(i);
    for (auto [a, b] : topo_.edges()) {
      const auto fwd = static_cast<std::size_t>(topo_.node_count() + link_id_.at({a, b}));
      const auto rev = static_cast<std::size_t>(topo_.node_count() + link_id_.at({b, a}));
      if (cumulative_processed_[fwd] == 0 && cumulative_processed_[rev] == 0)
        out += (out.empty() ? "" : ", ") + topo_.name(a) + "--" + topo_.name(b);
    }
    return out;
  }

  Topology topo_;
  std::vector<NodeSpec> node_specs_;
  std::vector<LinkSpec> link_specs_;
  std::vector<OdPair> od_pairs_;
  EnvConfig config_;

  std::map<std::pair<int, int>, int> link_id_;
  std::vector<std::pair<int, int>> link_dirs_;
  std::vector<std::size_t> link_spec_of_dir_;
  std::size_t max_out_degree_ = 0;

  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::priority_queue<Completion, std::vector<Completion>, std::greater<>> completions_;
  std::priority_queue<Delivery, std::vector<Delivery>, std::greater<>> deliveries_;
  std::vector<double> avail_;
  std::vector<std::deque<std::pair<double, std::int64_t>>> backlog_;  // (finish, packets)
  std::vector<std::int64_t> cumulative_processed_;
  std::vector<std::int64_t> last_busy_step_;
  std::vector<std::deque<double>> node_history_;
  std::vector<std::deque<double>> link_history_;
  std::size_t step_ = 0;
  std::uint64_t next_seq_ = 0;
  std::int64_t in_flight_ = 0;
  std::int64_t dropped_this_step_ = 0;
};

// `step,injected,delivered,throughput,mean_delay,reward` rows.
inline std::string step_metrics_csv_header() {
  return "step,injected,delivered,throughput,mean_delay,reward\n";
}

inline std::string step_metrics_csv_row(std::size_t step, const StepMetrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu,%lld,%lld,%.12g,%.12g,%.12g\n", step,
                static_cast<long long>(m.injected), static_cast<long long>(m.delivered),
                m.throughput, m.mean_e2e_delay, m.reward);
  return buf;
}

}  // namespace strl
