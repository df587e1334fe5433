#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <queue>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "strl/agent.hpp"
#include "strl/config.hpp"
#include "strl/errors.hpp"
#include "strl/netsim.hpp"
#include "strl/neural.hpp"
#include "strl/topology.hpp"
#include "strl/traffic.hpp"

namespace strl {

// Write-temp-then-rename so partially written outputs are never observable.
inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("failed while writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " -> " + path + ": " + ec.message());
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Mutation file: JSON array of {"add": ["A","B"]} / {"remove": ["A","B"]}.
inline TopologyMutation load_mutation(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("mutation file " + path + ": " + e.what());
  }
  if (!j.is_array()) throw ParseError("mutation file must be a JSON array");
  TopologyMutation mutation;
  for (const auto& entry : j) {
    const bool is_add = entry.contains("add");
    const bool is_remove = entry.contains("remove");
    if (is_add == is_remove)
      throw ParseError("mutation entries need exactly one of 'add' or 'remove'");
    const auto& pair = entry.at(is_add ? "add" : "remove");
    if (!pair.is_array() || pair.size() != 2)
      throw ParseError("mutation endpoints must be a two-element array of names");
    auto& bucket = is_add ? mutation.added_edges : mutation.removed_edges;
    bucket.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
  }
  return mutation;
}

// Uniform node service rate sized so the busiest node under all-pairs
// shortest-path routing sits at the target utilization. Keeps sensible
// routings stable while overloading hubs under poor ones.
inline double auto_service_rate(const Topology& topo, const std::vector<OdPair>& od_pairs,
                                double packets_per_second, double target_utilization) {
  const int n = topo.node_count();
  std::vector<double> demand(static_cast<std::size_t>(n), 0.0);
  const double per_pair = packets_per_second / static_cast<double>(od_pairs.size());
  for (const auto& [src, dst] : od_pairs) {
    // BFS parents with ascending neighbor order: deterministic shortest path.
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::queue<int> frontier;
    frontier.push(src);
    seen[static_cast<std::size_t>(src)] = true;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      if (u == dst) break;
      for (int v : topo.neighbors(u)) {
        if (seen[static_cast<std::size_t>(v)]) continue;
        seen[static_cast<std::size_t>(v)] = true;
        parent[static_cast<std::size_t>(v)] = u;
        frontier.push(v);
      }
    }
    // Every node on the path except the destination processes the packets.
    int v = dst;
    while (parent[static_cast<std::size_t>(v)] != -1) {
      v = parent[static_cast<std::size_t>(v)];
      demand[static_cast<std::size_t>(v)] += per_pair;
    }
  }
  const double peak = *std::max_element(demand.begin(), demand.end());
  if (peak <= 0.0) throw SetupError("auto service rate: no demand on any node");
  return peak / target_utilization;
}

inline std::vector<OdPair> all_ordered_pairs(const Topology& topo) {
  std::vector<OdPair> pairs;
  const int n = topo.node_count();
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) pairs.emplace_back(i, j);
  return pairs;
}

inline Env make_env(const ExperimentConfig& cfg, const Topology& topo) {
  const auto pairs = all_ordered_pairs(topo);
  const double mu = cfg.mu > 0.0 ? cfg.mu
                                 : auto_service_rate(topo, pairs, cfg.P, cfg.target_utilization);
  std::vector<NodeSpec> node_specs(static_cast<std::size_t>(topo.node_count()),
                                   NodeSpec{mu, cfg.node_buffer});
  std::vector<LinkSpec> link_specs(topo.edge_count(),
                                   LinkSpec{cfg.link_capacity_bps(), cfg.L, cfg.link_buffer});
  EnvConfig env_cfg;
  env_cfg.history = cfg.T;
  env_cfg.warmup_min_steps = cfg.warmup_min_steps;
  env_cfg.warmup_utilization = cfg.warmup_utilization;
  env_cfg.warmup_window = cfg.warmup_window;
  env_cfg.warmup_cap = cfg.warmup_cap;
  return Env(topo, std::move(node_specs), std::move(link_specs), pairs, env_cfg);
}

inline ArrivalSeries make_arrivals(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!cfg.trace.empty()) return ingest_trace(cfg.trace);
  return default_synthetic_arrivals(cfg.P, cfg.synth_length, derive_seed(seed, "arrivals"),
                                    cfg.synth_ar, cfg.synth_noise_frac, cfg.synth_obs_frac);
}

inline DdpgConfig ddpg_config(const ExperimentConfig& cfg) {
  DdpgConfig d;
  d.gamma = cfg.gamma;
  d.rho = cfg.rho;
  d.epsilon = cfg.epsilon;
  d.epsilon_final = cfg.epsilon_final;
  d.actor_lr = cfg.eta_mu;
  d.critic_lr = cfg.eta_Q;
  d.batch_size = cfg.M;
  d.replay_capacity = cfg.replay_capacity;
  d.top_k = cfg.k;
  d.route_top1 = cfg.route_top1;
  return d;
}

struct EpisodeMetrics {
  double mean_reward = 0.0;
  double throughput = 0.0;   // episode deliveries / episode injections, capped at 1
  double mean_delay = 0.0;   // packet-weighted over the episode
};

struct TrainingResult {
  std::vector<EpisodeMetrics> episodes;
  std::string metrics_path;
  std::string checkpoint_path;
};

inline std::string episode_csv(const std::vector<EpisodeMetrics>& episodes) {
  std::string out = "episode,mean_reward,throughput,mean_delay\n";
  char buf[160];
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g,%.12g\n", e, episodes[e].mean_reward,
                  episodes[e].throughput, episodes[e].mean_delay);
    out += buf;
  }
  return out;
}

// Full training run for one (variant, seed); reproducible per seed.
inline TrainingResult run_training(const ExperimentConfig& cfg, std::uint64_t seed,
                                   const std::string& out_dir) {
  validate_config(cfg);
  const Topology topo = load_topology(cfg.topology);
  const Variant variant = variant_from_name(cfg.variant);
  Env env = make_env(cfg, topo);
  const ArrivalSeries arrivals = make_arrivals(cfg, seed);
  env.warmup(arrivals, seed);

  const Dims dims = cfg.dims(static_cast<std::size_t>(topo.node_count()), env.max_out_degree());
  Ddpg agent(dims, variant, ddpg_config(cfg), seed);

  TrainingResult result;
  result.episodes.reserve(cfg.episodes);
  for (std::size_t episode = 0; episode < cfg.episodes; ++episode) {
    agent.decay_epsilon(episode, cfg.episodes);
    EpisodeMetrics em;
    std::int64_t injected = 0, delivered = 0;
    double delay_weighted = 0.0;
    const std::uint64_t episode_seed = derive_seed(seed, 1000003 + episode);
    const auto& adjacency = env.topology().adjacency();
    for (std::size_t step = 0; step < cfg.steps; ++step) {
      StateTensor state = env.observe_state();
      std::vector<double> action = select_action(agent.actor(), adjacency, state, agent.epsilon(),
                                                 derive_seed(episode_seed, step * 4 + 0));
      RoutingPlan plan =
          build_routing_plan(env.topology(), action, env.od_pairs(), cfg.k, cfg.route_top1);
      const StepMetrics metrics = env.step(plan, arrivals.at(env.step_count()));
      StateTensor next_state = env.observe_state();
      em.mean_reward += metrics.reward;
      injected += metrics.injected;
      delivered += metrics.delivered;
      delay_weighted += metrics.mean_e2e_delay * static_cast<double>(metrics.delivered);
      agent.buffer().store({std::move(state), std::move(action), metrics.reward,
                            std::move(next_state)});
      if (agent.buffer().size() >= cfg.M) {
        const auto batch = agent.buffer().sample(cfg.M, derive_seed(episode_seed, step * 4 + 1));
        agent.critic_update(batch, adjacency);
        agent.actor_update(batch, adjacency);
        agent.soft_update();
      }
    }
    em.mean_reward /= static_cast<double>(cfg.steps);
    em.throughput = injected > 0 ? std::min(1.0, static_cast<double>(delivered) /
                                                     static_cast<double>(injected))
                                 : 0.0;
    em.mean_delay = delivered > 0 ? delay_weighted / static_cast<double>(delivered) : 0.0;
    result.episodes.push_back(em);
  }

  const std::string tag = cfg.variant + "_seed" + std::to_string(seed);
  result.metrics_path = out_dir + "/train_" + tag + ".csv";
  atomic_write(result.metrics_path, episode_csv(result.episodes));
  Checkpoint ck = agent.to_checkpoint();
  ck.manifest["seed"] = seed;
  ck.manifest["episodes"] = cfg.episodes;
  result.checkpoint_path = out_dir + "/checkpoint_" + tag + ".json";
  atomic_write(result.checkpoint_path, ck.to_json().dump(1) + "\n");
  return result;
}

// Mean reward over the final 10% of episodes (at least one).
inline double final_window_reward(const std::vector<EpisodeMetrics>& episodes) {
  const std::size_t window = std::max<std::size_t>(1, episodes.size() / 10);
  double acc = 0.0;
  for (std::size_t e = episodes.size() - window; e < episodes.size(); ++e)
    acc += episodes[e].mean_reward;
  return acc / static_cast<double>(window);
}

inline double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct VariantComparison {
  // Keyed by position in the requested variant list (duplicates allowed).
  std::vector<std::string> variants;
  std::vector<std::vector<double>> final_rewards;  // [variant][seed]
  std::vector<double> medians;
  std::string summary_path;
  std::string pairwise_path;
};

// Trains every requested variant on every seed and reports final-window
// rewards plus pairwise percentage differences 100 * (A - B) / B of the
// per-variant medians. (variant, seed) runs execute concurrently.
inline VariantComparison compare_variants(const ExperimentConfig& cfg,
                                          const std::vector<std::string>& variants,
                                          const std::string& out_dir) {
  if (variants.size() < 2) throw ArgumentError("compare_variants needs at least two variants");
  validate_config(cfg);

  struct Job {
    std::size_t variant_idx;
    std::size_t seed_idx;
  };
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < variants.size(); ++v)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) jobs.push_back({v, s});

  VariantComparison cmp;
  cmp.variants = variants;
  cmp.final_rewards.assign(variants.size(), std::vector<double>(cfg.seeds.size(), 0.0));

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string first_error;
  auto worker = [&]() {
    while (true) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      try {
        ExperimentConfig run_cfg = cfg;
        run_cfg.variant = variants[jobs[j].variant_idx];
        const TrainingResult result =
            run_training(run_cfg, cfg.seeds[jobs[j].seed_idx], out_dir);
        cmp.final_rewards[jobs[j].variant_idx][jobs[j].seed_idx] =
            final_window_reward(result.episodes);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(jobs.size(), std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (!first_error.empty()) throw SetupError("compare_variants run failed: " + first_error);

  for (const auto& rewards : cmp.final_rewards) cmp.medians.push_back(median(rewards));

  std::string summary = "variant,seed,final_mean_reward\n";
  char buf[200];
  for (std::size_t v = 0; v < variants.size(); ++v)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
      std::snprintf(buf, sizeof(buf), "%s,%llu,%.12g\n", variants[v].c_str(),
                    static_cast<unsigned long long>(cfg.seeds[s]), cmp.final_rewards[v][s]);
      summary += buf;
    }
  cmp.summary_path = out_dir + "/summary.csv";
  atomic_write(cmp.summary_path, summary);

  std::string pairwise = "a,b,median_a,median_b,pct_diff\n";
  for (std::size_t a = 0; a < variants.size(); ++a)
    for (std::size_t b = 0; b < variants.size(); ++b) {
      if (a == b) continue;
      const double pct = 100.0 * (cmp.medians[a] - cmp.medians[b]) / cmp.medians[b];
      std::snprintf(buf, sizeof(buf), "%s,%s,%.12g,%.12g,%.2f\n", variants[a].c_str(),
                    variants[b].c_str(), cmp.medians[a], cmp.medians[b], pct);
      pairwise += buf;
    }
  cmp.pairwise_path = out_dir + "/pairwise.csv";
  atomic_write(cmp.pairwise_path, pairwise);
  return cmp;
}

struct InferenceResult {
  std::vector<StepMetrics> steps;
  double mean_reward = 0.0;
  std::string metrics_path;
};

// Greedy (epsilon = 0) inference of a trained checkpoint, optionally on a
// mutated topology. The actor keeps its trained dimensions; the GAT simply
// consumes the new adjacency.
inline InferenceResult run_inference(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                                     const TopologyMutation& mutation, std::size_t steps,
                                     std::uint64_t seed, const std::string& out_dir) {
  validate_config(cfg);
  const Topology base = load_topology(cfg.topology);
  const Topology topo = mutation.empty() ? base : apply_mutation(base, mutation);
  Env env = make_env(cfg, topo);
  const ArrivalSeries arrivals = make_arrivals(cfg, seed);
  env.warmup(arrivals, seed);

  const Dims dims = cfg.dims(static_cast<std::size_t>(topo.node_count()), env.max_out_degree());
  Ddpg agent(dims, variant_from_name(cfg.variant), ddpg_config(cfg), seed);
  agent.load_checkpoint(Checkpoint::load(checkpoint_path));

  InferenceResult result;
  result.steps.reserve(steps);
  std::string csv = step_metrics_csv_header();
  const auto& adjacency = env.topology().adjacency();
  for (std::size_t s = 0; s < steps; ++s) {
    const StateTensor state = env.observe_state();
    const std::vector<double> action =
        select_action(agent.actor(), adjacency, state, /*epsilon=*/0.0, /*seed=*/0);
    RoutingPlan plan =
        build_routing_plan(env.topology(), action, env.od_pairs(), cfg.k, cfg.route_top1);
    const StepMetrics metrics = env.step(plan, arrivals.at(env.step_count()));
    csv += step_metrics_csv_row(s, metrics);
    result.mean_reward += metrics.reward;
    result.steps.push_back(metrics);
  }
  result.mean_reward /= static_cast<double>(steps == 0 ? 1 : steps);
  result.metrics_path = out_dir + "/infer_" + cfg.variant + "_seed" + std::to_string(seed) + ".csv";
  atomic_write(result.metrics_path, csv);
  return result;
}

// GRU hidden sequence of one observed state, restricted to the first
// `units` columns and `steps` rows, as `step,unit,value` triples.
inline std::string export_hidden_heatmap(const ExperimentConfig& cfg,
                                         const std::string& checkpoint_path, std::size_t units,
                                         std::size_t steps, std::uint64_t seed,
                                         const std::string& out_path) {
  validate_config(cfg);
  const Variant variant = variant_from_name(cfg.variant);
  if (variant == Variant::SRL)
    throw ConfigError("the SRL ablation has no GRU hidden states to export");
  if (units < 1 || units > cfg.d)
    throw ArgumentError("units must be in [1, d] (d = " + std::to_string(cfg.d) + ")");
  if (steps < 1 || steps > cfg.T)
    throw ArgumentError("steps must be in [1, T] (T = " + std::to_string(cfg.T) + ")");

  const Topology topo = load_topology(cfg.topology);
  Env env = make_env(cfg, topo);
  const ArrivalSeries arrivals = make_arrivals(cfg, seed);
  env.warmup(arrivals, seed);

  const Dims dims = cfg.dims(static_cast<std::size_t>(topo.node_count()), env.max_out_degree());
  Ddpg agent(dims, variant, ddpg_config(cfg), seed);
  if (!checkpoint_path.empty()) agent.load_checkpoint(Checkpoint::load(checkpoint_path));

  const StateTensor state = env.observe_state();
  const ActorParams& actor = agent.actor();
  Tensor x_seq = matmul_nt(detail::state_slices(state), actor.input_proj);
  Tensor hidden = gru_forward(x_seq, *actor.gru);

  std::string csv = "step,unit,value\n";
  char buf[96];
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t u = 0; u < units; ++u) {
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%.12g\n", t, u, hidden.at(t, u));
      csv += buf;
    }
  atomic_write(out_path, csv);
  return csv;
}

// `lag,coefficient,ci_halfwidth` rows for the configured trace or the
// default synthetic generator.
inline std::string export_acf_plotdata(const ExperimentConfig& cfg, std::size_t max_lag,
                                       std::uint64_t seed, const std::string& out_path) {
  validate_config(cfg);
  const ArrivalSeries series = make_arrivals(cfg, seed);
  const AcfResult result = acf(series, max_lag);
  const std::string csv = acf_to_csv(result);
  atomic_write(out_path, csv);
  return csv;
}

}  // namespace strl
