#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "strl/checkpoint.hpp"
#include "strl/errors.hpp"
#include "strl/netsim.hpp"
#include "strl/neural.hpp"
#include "strl/pathing.hpp"
#include "strl/rng.hpp"
#include "strl/tensor.hpp"

namespace strl {

struct Experience {
  StateTensor state;
  std::vector<double> action;
  double reward = 0.0;
  StateTensor next_state;  // required by the Bellman target
};

// Bounded FIFO store with seeded uniform sampling (without replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ArgumentError("replay capacity must be >= 1");
  }

  void store(Experience e) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(e));
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Experience& at(std::size_t i) const { return items_[i]; }

  std::vector<const Experience*> sample(std::size_t count, std::uint64_t seed) const {
    if (count > items_.size())
      throw ArgumentError("cannot sample " + std::to_string(count) + " from buffer of " +
                          std::to_string(items_.size()));
    std::vector<std::size_t> index(items_.size());
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
    Rng rng(seed);
    std::vector<const Experience*> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t pick = i + static_cast<std::size_t>(rng.next_below(index.size() - i));
      std::swap(index[i], index[pick]);
      out.push_back(&items_[index[i]]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::deque<Experience> items_;
};

// Adam with per-parameter first/second moment state.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<std::pair<std::string, Tensor*>> params, double lr)
      : lr_(lr) {
    for (auto& [name, t] : params) {
      slots_.push_back({name, t, std::vector<double>(t->size(), 0.0),
                        std::vector<double>(t->size(), 0.0)});
    }
  }

  double learning_rate() const { return lr_; }
  std::uint64_t steps_taken() const { return t_; }

  void zero_grad() {
    for (auto& s : slots_) s.param->zero_grad();
  }

  void step() {
    ++t_;
    const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& s : slots_) {
      if (!s.param->has_grad()) continue;
      const auto& g = s.param->grad_view();
      auto& value = s.param->data();
      for (std::size_t i = 0; i < value.size(); ++i) {
        s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g[i];
        s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g[i] * g[i];
        const double mhat = s.m[i] / bias1;
        const double vhat = s.v[i] / bias2;
        value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  // Checkpoint plumbing: moments keyed by parameter name under a prefix.
  void export_state(Checkpoint& ck, const std::string& prefix) const {
    for (const auto& s : slots_) {
      ck.put(prefix + "." + s.name + ".m", Tensor::from(s.param->shape(), s.m));
      ck.put(prefix + "." + s.name + ".v", Tensor::from(s.param->shape(), s.v));
    }
    ck.manifest[prefix + ".steps"] = t_;
  }

  void import_state(const Checkpoint& ck, const std::string& prefix) {
    for (auto& s : slots_) {
      s.m = ck.get(prefix + "." + s.name + ".m").data();
      s.v = ck.get(prefix + "." + s.name + ".v").data();
      if (s.m.size() != s.param->size() || s.v.size() != s.param->size())
        throw CompatibilityError("optimizer state size mismatch for " + s.name);
    }
    t_ = ck.manifest.at(prefix + ".steps").get<std::uint64_t>();
  }

 private:
  struct Slot {
    std::string name;
    Tensor* param;
    std::vector<double> m, v;
  };
  std::vector<Slot> slots_;
  double lr_ = 1e-3;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::uint64_t t_ = 0;
};

struct DdpgConfig {
  double gamma = 0.6;           // discount
  double rho = 0.2;             // soft target update coefficient
  double epsilon = 0.5;         // initial exploration scale
  double epsilon_final = 0.05;  // linear per-episode decay target
  double actor_lr = 1e-3;       // eta_mu
  double critic_lr = 1e-3;      // eta_Q
  std::size_t batch_size = 32;  // M
  std::size_t replay_capacity = 10000;
  std::size_t top_k = 5;        // paths per OD pair
  bool route_top1 = false;
};

// y = r + gamma * Q_target(s', mu_target(s')).
inline double bellman_target(double reward, double gamma, double next_q) {
  return reward + gamma * next_q;
}

// The four networks, optimizers, replay buffer and exploration state.
class Ddpg {
 public:
  Ddpg(const Dims& dims, Variant variant, DdpgConfig config, std::uint64_t seed)
      : cfg_(config),
        actor_(make_actor(dims, variant, seed)),
        critic_(make_critic(dims, derive_seed(seed, "critic-master"))),
        target_actor_(make_actor(dims, variant, seed)),
        target_critic_(make_critic(dims, derive_seed(seed, "critic-master"))),
        buffer_(config.replay_capacity),
        epsilon_(config.epsilon),
        master_seed_(seed) {
    if (cfg_.gamma < 0.0 || cfg_.gamma > 1.0) throw ArgumentError("gamma must be in [0, 1]");
    if (cfg_.rho <= 0.0 || cfg_.rho >= 1.0) throw ArgumentError("rho must be in (0, 1)");
    if (cfg_.batch_size < 1) throw ArgumentError("batch size must be >= 1");
    // Targets start as exact copies; detach them from gradient tracking.
    for (auto& [name, t] : target_actor_.parameters()) t->set_requires_grad(false);
    for (auto& [name, t] : target_critic_.parameters()) t->set_requires_grad(false);
    actor_opt_ = Adam(actor_.parameters(), cfg_.actor_lr);
    critic_opt_ = Adam(critic_.parameters(), cfg_.critic_lr);
  }

  const DdpgConfig& config() const { return cfg_; }
  ActorParams& actor() { return actor_; }
  CriticParams& critic() { return critic_; }
  ActorParams& target_actor() { return target_actor_; }
  CriticParams& target_critic() { return target_critic_; }
  ReplayBuffer& buffer() { return buffer_; }
  double epsilon() const { return epsilon_; }
  void set_epsilon(double e) { epsilon_ = e; }
  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t updates_done() const { return updates_done_; }

  // Linear decay over the episode schedule.
  void decay_epsilon(std::size_t episode, std::size_t total_episodes) {
    if (total_episodes <= 1) return;
    const double frac = static_cast<double>(episode) / static_cast<double>(total_episodes - 1);
    epsilon_ = cfg_.epsilon + (cfg_.epsilon_final - cfg_.epsilon) * frac;
  }

  // One critic gradient step on the sampled batch; returns the pre-step loss.
  double critic_update(std::span<const Experience* const> batch,
                       const std::vector<std::uint8_t>& adjacency) {
    if (batch.empty()) throw ArgumentError("critic_update requires a non-empty batch");
    const std::size_t m = batch.size();
    std::vector<StateTensor> next_states;
    next_states.reserve(m);
    for (const auto* e : batch) next_states.push_back(e->next_state);

    // Bellman targets from the target networks, outside any tape.
    Tensor targets = Tensor::zeros({m});
    {
      Tensor next_actions = actor_forward_batch(next_states, target_actor_, adjacency);
      Tensor next_q = critic_forward_batch(next_states, next_actions, target_critic_);
      for (std::size_t i = 0; i < m; ++i)
        targets.data()[i] = bellman_target(batch[i]->reward, cfg_.gamma, next_q[i]);
    }

    std::vector<StateTensor> states;
    states.reserve(m);
    Tensor actions = Tensor::zeros({m, actor_.dims.nodes});
    for (std::size_t i = 0; i < m; ++i) {
      states.push_back(batch[i]->state);
      std::copy(batch[i]->action.begin(), batch[i]->action.end(),
                actions.data().begin() + static_cast<std::ptrdiff_t>(i * actor_.dims.nodes));
    }

    critic_opt_.zero_grad();
    double loss_value = 0.0;
    {
      Tape tape;
      Tensor q = critic_forward_batch(states, actions, critic_);
      Tensor loss = mse(q, targets);
      loss_value = loss.item();
      tape.backward(loss);
    }
    critic_opt_.step();
    return loss_value;
  }

  // One ascent step on the actor against the behavior critic; returns the
  // pre-step mean Q. Critic parameters are left untouched.
  double actor_update(std::span<const Experience* const> batch,
                      const std::vector<std::uint8_t>& adjacency) {
    if (batch.empty()) throw ArgumentError("actor_update requires a non-empty batch");
    std::vector<StateTensor> states;
    states.reserve(batch.size());
    for (const auto* e : batch) states.push_back(e->state);

    actor_opt_.zero_grad();
    critic_opt_.zero_grad();  // the critic conducts gradients; discard them after
    double mean_q = 0.0;
    {
      Tape tape;
      Tensor actions = actor_forward_batch(states, actor_, adjacency, /*train=*/true,
                                           derive_seed(master_seed_, updates_done_));
      Tensor q = critic_forward_batch(states, actions, critic_);
      Tensor objective = mean(q);
      mean_q = objective.item();
      Tensor loss = scale(objective, -1.0);  // ascend Q by descending -Q
      tape.backward(loss);
    }
    actor_opt_.step();
    critic_opt_.zero_grad();
    ++updates_done_;
    return mean_q;
  }

  // target <- rho * behavior + (1 - rho) * target, elementwise.
  void soft_update() {
    auto blend = [this](std::vector<std::pair<std::string, Tensor*>> behavior,
                        std::vector<std::pair<std::string, Tensor*>> target) {
      for (std::size_t i = 0; i < behavior.size(); ++i) {
        auto& tv = target[i].second->data();
        const auto& bv = behavior[i].second->data();
        for (std::size_t j = 0; j < tv.size(); ++j)
          tv[j] = cfg_.rho * bv[j] + (1.0 - cfg_.rho) * tv[j];
      }
    };
    blend(actor_.parameters(), target_actor_.parameters());
    blend(critic_.parameters(), target_critic_.parameters());
  }

  Checkpoint to_checkpoint() {
    Checkpoint ck;
    auto dump = [&ck](const std::string& prefix, std::vector<std::pair<std::string, Tensor*>> params) {
      for (auto& [name, t] : params) ck.put(prefix + "." + name, t->clone());
    };
    dump("actor", actor_.parameters());
    dump("critic", critic_.parameters());
    dump("target_actor", target_actor_.parameters());
    dump("target_critic", target_critic_.parameters());
    actor_opt_.export_state(ck, "opt.actor");
    critic_opt_.export_state(ck, "opt.critic");
    const Dims& d = actor_.dims;
    ck.manifest["variant"] = variant_name(actor_.variant);
    ck.manifest["epsilon"] = epsilon_;
    ck.manifest["updates_done"] = updates_done_;
    ck.manifest["dims"] = {{"nodes", d.nodes},
                           {"state_channels", d.state_channels},
                           {"horizon", d.horizon},
                           {"gru_input", d.gru_input},
                           {"gru_hidden", d.gru_hidden},
                           {"attn_query", d.attn_query},
                           {"attn_key", d.attn_key},
                           {"attn_value", d.attn_value},
                           {"attn_out", d.attn_out},
                           {"gat_in", d.gat_in},
                           {"gat_out", d.gat_out},
                           {"mlp_hidden", d.mlp_hidden},
                           {"dropout_rate", d.dropout_rate},
                           {"leaky_slope", d.leaky_slope}};
    return ck;
  }

  void load_checkpoint(const Checkpoint& ck) {
    const std::string ck_variant = ck.manifest.at("variant").get<std::string>();
    if (ck_variant != variant_name(actor_.variant))
      throw CompatibilityError("checkpoint variant " + ck_variant + " != configured " +
                               variant_name(actor_.variant));
    const auto& jd = ck.manifest.at("dims");
    const Dims& d = actor_.dims;
    auto expect = [&jd](const char* key, std::size_t have) {
      const auto want = jd.at(key).get<std::size_t>();
      if (want != have)
        throw CompatibilityError(std::string("checkpoint dimension mismatch for ") + key + ": " +
                                 std::to_string(want) + " != " + std::to_string(have));
    };
    expect("nodes", d.nodes);
    expect("state_channels", d.state_channels);
    expect("horizon", d.horizon);
    expect("gru_input", d.gru_input);
    expect("gru_hidden", d.gru_hidden);
    expect("attn_out", d.attn_out);
    expect("gat_in", d.gat_in);
    expect("gat_out", d.gat_out);
    expect("mlp_hidden", d.mlp_hidden);

    auto fill = [&ck](const std::string& prefix, std::vector<std::pair<std::string, Tensor*>> params) {
      for (auto& [name, t] : params) {
        const Tensor& stored = ck.get(prefix + "." + name);
        if (stored.shape() != t->shape())
          throw CompatibilityError("checkpoint tensor shape mismatch for " + prefix + "." + name);
        t->data() = stored.data();
      }
    };
    fill("actor", actor_.parameters());
    fill("critic", critic_.parameters());
    fill("target_actor", target_actor_.parameters());
    fill("target_critic", target_critic_.parameters());
    actor_opt_.import_state(ck, "opt.actor");
    critic_opt_.import_state(ck, "opt.critic");
    epsilon_ = ck.manifest.at("epsilon").get<double>();
    updates_done_ = ck.manifest.at("updates_done").get<std::uint64_t>();
  }

 private:
  DdpgConfig cfg_;
  ActorParams actor_;
  CriticParams critic_;
  ActorParams target_actor_;
  CriticParams target_critic_;
  Adam actor_opt_, critic_opt_;
  ReplayBuffer buffer_;
  double epsilon_;
  std::uint64_t master_seed_;
  std::uint64_t updates_done_ = 0;
};

// Deterministic policy output plus seeded elementwise Gaussian exploration.
inline std::vector<double> select_action(const ActorParams& actor,
                                         const std::vector<std::uint8_t>& adjacency,
                                         const StateTensor& state, double epsilon,
                                         std::uint64_t seed) {
  if (epsilon < 0.0) throw ArgumentError("epsilon must be >= 0");
  Tensor scores = actor_forward(state, actor, adjacency);
  std::vector<double> action = scores.data();
  if (epsilon > 0.0) {
    Rng rng(seed);
    for (auto& a : action) a += epsilon * rng.next_gaussian();
  }
  return action;
}

// One training episode: act, simulate, store, and (once the buffer holds a
// full batch) update critic, actor and targets after every step.
inline std::vector<double> train_episode(Env& env, Ddpg& agent, const ArrivalSeries& arrivals,
                                         std::size_t steps, std::uint64_t seed) {
  const auto& adjacency = env.topology().adjacency();
  std::vector<double> rewards;
  rewards.reserve(steps);
  for (std::size_t step = 0; step < steps; ++step) {
    StateTensor state = env.observe_state();
    std::vector<double> action = select_action(agent.actor(), adjacency, state, agent.epsilon(),
                                               derive_seed(seed, step * 4 + 0));
    RoutingPlan plan = build_routing_plan(env.topology(), action, env.od_pairs(),
                                          agent.config().top_k, agent.config().route_top1);
    const StepMetrics metrics = env.step(plan, arrivals.at(env.step_count()));
    StateTensor next_state = env.observe_state();
    rewards.push_back(metrics.reward);
    agent.buffer().store({std::move(state), std::move(action), metrics.reward,
                          std::move(next_state)});
    if (agent.buffer().size() >= agent.config().batch_size) {
      const auto batch =
          agent.buffer().sample(agent.config().batch_size, derive_seed(seed, step * 4 + 1));
      agent.critic_update(batch, adjacency);
      agent.actor_update(batch, adjacency);
      agent.soft_update();
    }
  }
  return rewards;
}

}  // namespace strl
