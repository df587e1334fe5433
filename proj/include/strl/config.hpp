#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "strl/errors.hpp"
#include "strl/neural.hpp"

namespace strl {

// Flat key-value experiment configuration. Hyperparameter keys use the
// paper-table names; unknown keys are rejected so sweep typos fail loudly.
struct ExperimentConfig {
  // Model and training hyperparameters.
  std::size_t T = 40;          // observation window
  std::size_t F = 5;           // GRU input features
  std::size_t d = 95;          // GRU hidden dim
  std::size_t d_q = 95;
  std::size_t d_k = 95;
  std::size_t d_v = 95;
  std::size_t d_prime = 95;    // temporal attention output dim
  std::size_t K = 5;           // GAT input channels per node
  std::size_t K_prime = 5;     // GAT output channels per node
  std::size_t phi = 512;       // MLP hidden dim
  double eta_mu = 0.001;       // actor learning rate
  double eta_Q = 0.001;        // critic learning rate
  double gamma = 0.6;
  double rho = 0.2;
  double epsilon = 0.5;
  std::size_t k = 5;           // top-k paths per OD pair
  std::size_t M = 32;          // batch size
  double delta = 0.5;          // dropout rate
  double P = 233233;           // packets per second when no trace is given
  double B = 1000;             // link capacity, Mbps

  // Experiment setup.
  std::string topology;        // path to edge list or GraphML
  std::string trace;           // optional path to a timestamp,count CSV
  std::string variant = "STRL";
  std::size_t episodes = 1000;
  std::size_t steps = 100;
  std::vector<std::uint64_t> seeds{0, 1, 2};

  // Simulator knobs.
  double mu = 0;               // node service rate, pkt/s; 0 = auto-size
  double L = 10000;            // average packet size, bits
  std::size_t node_buffer = 0; // packets; 0 = unbounded
  std::size_t link_buffer = 0;
  double target_utilization = 0.7;  // for auto-sized mu
  std::size_t warmup_min_steps = 20;
  double warmup_utilization = 0.9;
  std::size_t warmup_window = 10;
  std::size_t warmup_cap = 500;
  bool route_top1 = false;
  double epsilon_final = 0.05;
  std::size_t replay_capacity = 10000;
  double leaky_slope = 0.2;

  // Synthetic traffic defaults (used when no trace is configured).
  double synth_ar = 0.97;
  double synth_noise_frac = 0.03;
  double synth_obs_frac = 0.01;
  std::size_t synth_length = 10000;

  Dims dims(std::size_t n_nodes, std::size_t max_out_degree) const {
    Dims out;
    out.nodes = n_nodes;
    out.state_channels = max_out_degree + 1;
    out.horizon = T + 1;
    out.gru_input = F;
    out.gru_hidden = d;
    out.attn_query = d_q;
    out.attn_key = d_k;
    out.attn_value = d_v;
    out.attn_out = d_prime;
    out.gat_in = K;
    out.gat_out = K_prime;
    out.mlp_hidden = phi;
    out.dropout_rate = delta;
    out.leaky_slope = leaky_slope;
    return out;
  }

  double link_capacity_bps() const { return B * 1e6; }
};

// Small profile for quick ablation sweeps: full topology, shrunken window,
// hidden width and schedule.
inline void apply_desk_profile(ExperimentConfig& cfg) {
  cfg.T = 10;
  cfg.d = 24;
  cfg.d_q = cfg.d_k = cfg.d_v = cfg.d_prime = 24;
  cfg.episodes = 50;
  cfg.steps = 20;
  cfg.k = 3;
}

namespace detail {

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

inline std::vector<std::uint64_t> parse_u64_list(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw ConfigError("config key '" + key + "': empty list item");
    out.push_back(parse_u64(key, item.substr(first, last - first + 1)));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& cfg) {
  auto require = [](bool ok, const std::string& field, const std::string& why) {
    if (!ok) throw ConfigError("config field '" + field + "' " + why);
  };
  require(cfg.T >= 1, "T", "must be >= 1");
  require(cfg.F >= 1, "F", "must be >= 1");
  require(cfg.d >= 1, "d", "must be >= 1");
  require(cfg.d_q == cfg.d_k, "d_q", "must equal d_k");
  require(cfg.d_v == cfg.d, "d_v", "must equal d");
  require(cfg.K >= 1 && cfg.K_prime >= 1, "K", "and K_prime must be >= 1");
  require(cfg.phi >= 1, "phi", "must be >= 1");
  require(cfg.gamma >= 0.0 && cfg.gamma <= 1.0, "gamma", "must be in [0, 1]");
  require(cfg.rho > 0.0 && cfg.rho < 1.0, "rho", "must be in (0, 1)");
  require(cfg.epsilon >= 0.0, "epsilon", "must be >= 0");
  require(cfg.delta >= 0.0 && cfg.delta < 1.0, "delta", "must be in [0, 1)");
  require(cfg.k >= 1, "k", "must be >= 1");
  require(cfg.M >= 1, "M", "must be >= 1");
  require(cfg.P > 0.0, "P", "must be > 0");
  require(cfg.B > 0.0, "B", "must be > 0");
  require(cfg.L > 0.0, "L", "must be > 0");
  require(cfg.mu >= 0.0, "mu", "must be >= 0 (0 = auto)");
  require(!cfg.topology.empty(), "topology", "is required");
  require(cfg.episodes >= 1, "episodes", "must be >= 1");
  require(cfg.steps >= 1, "steps", "must be >= 1");
  require(!cfg.seeds.empty(), "seeds", "must not be empty");
  require(cfg.target_utilization > 0.0 && cfg.target_utilization <= 1.0, "target_utilization",
          "must be in (0, 1]");
  require(cfg.warmup_utilization > 0.0 && cfg.warmup_utilization <= 1.0, "warmup_utilization",
          "must be in (0, 1]");
  require(cfg.warmup_cap >= 1, "warmup_cap", "must be >= 1");
  require(cfg.replay_capacity >= cfg.M, "replay_capacity", "must be >= M");
  require(cfg.epsilon_final >= 0.0 && cfg.epsilon_final <= cfg.epsilon, "epsilon_final",
          "must be in [0, epsilon]");
  require(cfg.synth_ar > -1.0 && cfg.synth_ar < 1.0, "synth_ar", "must be in (-1, 1)");
  require(cfg.synth_length >= 2, "synth_length", "must be >= 2");
  variant_from_name(cfg.variant);  // throws on bad names
}

// `key = value` lines, '#' comments. Every key must be known.
inline ExperimentConfig parse_config_from_string(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      const auto first = s.find_first_not_of(" \t\r");
      if (first == std::string::npos) return std::string();
      const auto last = s.find_last_not_of(" \t\r");
      return s.substr(first, last - first + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (value.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty value for '" + key + "'");

    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_u64;
    using detail::parse_u64_list;
    if (key == "T") cfg.T = parse_u64(key, value);
    else if (key == "F") cfg.F = parse_u64(key, value);
    else if (key == "d") cfg.d = parse_u64(key, value);
    else if (key == "d_q") cfg.d_q = parse_u64(key, value);
    else if (key == "d_k") cfg.d_k = parse_u64(key, value);
    else if (key == "d_v") cfg.d_v = parse_u64(key, value);
    else if (key == "d_prime") cfg.d_prime = parse_u64(key, value);
    else if (key == "K") cfg.K = parse_u64(key, value);
    else if (key == "K_prime") cfg.K_prime = parse_u64(key, value);
    else if (key == "phi") cfg.phi = parse_u64(key, value);
    else if (key == "eta_mu") cfg.eta_mu = parse_double(key, value);
    else if (key == "eta_Q") cfg.eta_Q = parse_double(key, value);
    else if (key == "gamma") cfg.gamma = parse_double(key, value);
    else if (key == "rho") cfg.rho = parse_double(key, value);
    else if (key == "epsilon") cfg.epsilon = parse_double(key, value);
    else if (key == "k") cfg.k = parse_u64(key, value);
    else if (key == "M") cfg.M = parse_u64(key, value);
    else if (key == "delta") cfg.delta = parse_double(key, value);
    else if (key == "P") cfg.P = parse_double(key, value);
    else if (key == "B") cfg.B = parse_double(key, value);
    else if (key == "topology") cfg.topology = value;
    else if (key == "trace") cfg.trace = value;
    else if (key == "variant") cfg.variant = value;
    else if (key == "episodes") cfg.episodes = parse_u64(key, value);
    else if (key == "steps") cfg.steps = parse_u64(key, value);
    else if (key == "seeds") cfg.seeds = parse_u64_list(key, value);
    else if (key == "mu") cfg.mu = parse_double(key, value);
    else if (key == "L") cfg.L = parse_double(key, value);
    else if (key == "node_buffer") cfg.node_buffer = parse_u64(key, value);
    else if (key == "link_buffer") cfg.link_buffer = parse_u64(key, value);
    else if (key == "target_utilization") cfg.target_utilization = parse_double(key, value);
    else if (key == "warmup_min_steps") cfg.warmup_min_steps = parse_u64(key, value);
    else if (key == "warmup_utilization") cfg.warmup_utilization = parse_double(key, value);
    else if (key == "warmup_window") cfg.warmup_window = parse_u64(key, value);
    else if (key == "warmup_cap") cfg.warmup_cap = parse_u64(key, value);
    else if (key == "route_top1") cfg.route_top1 = parse_bool(key, value);
    else if (key == "epsilon_final") cfg.epsilon_final = parse_double(key, value);
    else if (key == "replay_capacity") cfg.replay_capacity = parse_u64(key, value);
    else if (key == "leaky_slope") cfg.leaky_slope = parse_double(key, value);
    else if (key == "synth_ar") cfg.synth_ar = parse_double(key, value);
    else if (key == "synth_noise_frac") cfg.synth_noise_frac = parse_double(key, value);
    else if (key == "synth_obs_frac") cfg.synth_obs_frac = parse_double(key, value);
    else if (key == "synth_length") cfg.synth_length = parse_u64(key, value);
    else throw ConfigError("unknown config key '" + key + "' at line " + std::to_string(line_no));
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_from_string(buf.str());
}

}  // namespace strl
