#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "strl/errors.hpp"
#include "strl/netsim.hpp"
#include "strl/tensor.hpp"

namespace strl {

enum class Variant { STRL, SRL, TRL };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::STRL: return "STRL";
    case Variant::SRL: return "SRL";
    case Variant::TRL: return "TRL";
  }
  throw ArgumentError("bad variant");
}

inline Variant variant_from_name(const std::string& name) {
  if (name == "STRL") return Variant::STRL;
  if (name == "SRL") return Variant::SRL;
  if (name == "TRL") return Variant::TRL;
  throw ArgumentError("unknown variant '" + name + "' (expected STRL, SRL or TRL)");
}

// Dimension hyperparameters shared by the actor pipeline and critic.
struct Dims {
  std::size_t nodes = 17;          // N
  std::size_t state_channels = 6;  // K+1 slots per node in the observation
  std::size_t horizon = 41;        // T+1 time slices per observation
  std::size_t gru_input = 5;       // F
  std::size_t gru_hidden = 95;     // d
  std::size_t attn_query = 95;     // d_q (= d_k)
  std::size_t attn_key = 95;       // d_k
  std::size_t attn_value = 95;     // d_v (must equal d)
  std::size_t attn_out = 95;       // d'
  std::size_t gat_in = 5;          // K channels fed to the GAT
  std::size_t gat_out = 5;         // K'
  std::size_t mlp_hidden = 512;    // phi
  double dropout_rate = 0.5;       // delta
  double leaky_slope = 0.2;

  std::size_t state_flat() const { return nodes * state_channels * horizon; }
};

struct GruParams {
  Tensor w_update, u_update;        // z gate
  Tensor w_reset, u_reset;          // r gate
  Tensor w_cand, u_cand, b_cand;    // candidate state
  std::size_t input = 0, hidden = 0;

  static GruParams init(std::size_t input, std::size_t hidden, std::uint64_t seed) {
    GruParams p;
    p.input = input;
    p.hidden = hidden;
    p.w_update = glorot_param({hidden, input}, derive_seed(seed, "w_update"));
    p.u_update = glorot_param({hidden, hidden}, derive_seed(seed, "u_update"));
    p.w_reset = glorot_param({hidden, input}, derive_seed(seed, "w_reset"));
    p.u_reset = glorot_param({hidden, hidden}, derive_seed(seed, "u_reset"));
    p.w_cand = glorot_param({hidden, input}, derive_seed(seed, "w_cand"));
    p.u_cand = glorot_param({hidden, hidden}, derive_seed(seed, "u_cand"));
    p.b_cand = Tensor::param({hidden}, std::vector<double>(hidden, 0.0));
    return p;
  }
};

struct TemporalAttentionParams {
  Tensor w_query;  // d_q x d
  Tensor w_key;    // d_k x d
  Tensor w_value;  // d_v x d
  Tensor w_out;    // d' x d

  static TemporalAttentionParams init(const Dims& dims, std::uint64_t seed) {
    if (dims.attn_query != dims.attn_key)
      throw ConfigError("temporal attention requires d_q == d_k");
    if (dims.attn_value != dims.gru_hidden)
      throw ConfigError("temporal attention requires d_v == d (Hadamard with the hidden states)");
    TemporalAttentionParams p;
    p.w_query = glorot_param({dims.attn_query, dims.gru_hidden}, derive_seed(seed, "w_query"));
    p.w_key = glorot_param({dims.attn_key, dims.gru_hidden}, derive_seed(seed, "w_key"));
    p.w_value = glorot_param({dims.attn_value, dims.gru_hidden}, derive_seed(seed, "w_value"));
    p.w_out = glorot_param({dims.attn_out, dims.gru_hidden}, derive_seed(seed, "w_out"));
    return p;
  }
};

struct GatParams {
  Tensor weight;       // K' x K shared transform
  Tensor attn;         // 2K' scoring vector
  double leaky_slope = 0.2;

  static GatParams init(std::size_t in, std::size_t out, double slope, std::uint64_t seed) {
    GatParams p;
    p.weight = glorot_param({out, in}, derive_seed(seed, "weight"));
    p.attn = glorot_param({2 * out}, derive_seed(seed, "attn"));
    p.leaky_slope = slope;
    return p;
  }
};

namespace detail {

inline Tensor zero_bias(std::size_t n) { return Tensor::param({n}, std::vector<double>(n, 0.0)); }

}  // namespace detail

// Actor: input projection -> GRU -> temporal attention -> node reshape ->
// GAT -> MLP head, with the SRL/TRL ablations dropping the temporal or
// spatial branch respectively.
struct ActorParams {
  Variant variant = Variant::STRL;
  Dims dims;

  Tensor input_proj;                             // F x (N*(K+1)); STRL/TRL
  std::optional<GruParams> gru;                  // STRL/TRL
  std::optional<TemporalAttentionParams> attn;   // STRL/TRL
  Tensor node_proj;                              // (N*K) x temporal-flat (or latest-slice flat for SRL)
  std::optional<GatParams> gat;                  // STRL/SRL
  Tensor fc1_w, fc1_b, fc2_w, fc2_b, out_w, out_b;

  std::size_t mlp_input() const {
    return dims.nodes * (variant == Variant::TRL ? dims.gat_in : dims.gat_out);
  }

  // Stable name -> tensor map; ordering defines the checkpoint layout and
  // the per-parameter init seeds (shared components get identical values
  // across variants built from the same master seed).
  std::vector<std::pair<std::string, Tensor*>> parameters() {
    std::vector<std::pair<std::string, Tensor*>> out;
    if (variant != Variant::SRL) {
      out.emplace_back("input_proj", &input_proj);
      out.emplace_back("gru.w_update", &gru->w_update);
      out.emplace_back("gru.u_update", &gru->u_update);
      out.emplace_back("gru.w_reset", &gru->w_reset);
      out.emplace_back("gru.u_reset", &gru->u_reset);
      out.emplace_back("gru.w_cand", &gru->w_cand);
      out.emplace_back("gru.u_cand", &gru->u_cand);
      out.emplace_back("gru.b_cand", &gru->b_cand);
      out.emplace_back("attn.w_query", &attn->w_query);
      out.emplace_back("attn.w_key", &attn->w_key);
      out.emplace_back("attn.w_value", &attn->w_value);
      out.emplace_back("attn.w_out", &attn->w_out);
    }
    out.emplace_back("node_proj", &node_proj);
    if (variant != Variant::TRL) {
      out.emplace_back("gat.weight", &gat->weight);
      out.emplace_back("gat.attn", &gat->attn);
    }
    out.emplace_back("mlp.fc1_w", &fc1_w);
    out.emplace_back("mlp.fc1_b", &fc1_b);
    out.emplace_back("mlp.fc2_w", &fc2_w);
    out.emplace_back("mlp.fc2_b", &fc2_b);
    out.emplace_back("mlp.out_w", &out_w);
    out.emplace_back("mlp.out_b", &out_b);
    return out;
  }
};

inline ActorParams make_actor(const Dims& dims, Variant variant, std::uint64_t seed) {
  ActorParams a;
  a.variant = variant;
  a.dims = dims;
  const std::size_t slice = dims.nodes * dims.state_channels;
  if (variant != Variant::SRL) {
    a.input_proj = glorot_param({dims.gru_input, slice}, derive_seed(seed, "actor.input_proj"));
    a.gru = GruParams::init(dims.gru_input, dims.gru_hidden, derive_seed(seed, "actor.gru"));
    a.attn = TemporalAttentionParams::init(dims, derive_seed(seed, "actor.attn"));
    a.node_proj = glorot_param({dims.nodes * dims.gat_in, dims.horizon * dims.attn_out},
                               derive_seed(seed, "actor.node_proj"));
  } else {
    a.node_proj =
        glorot_param({dims.nodes * dims.gat_in, slice}, derive_seed(seed, "actor.node_proj.srl"));
  }
  if (variant != Variant::TRL)
    a.gat = GatParams::init(dims.gat_in, dims.gat_out, dims.leaky_slope,
                            derive_seed(seed, "actor.gat"));
  const std::size_t in = a.mlp_input();
  a.fc1_w = glorot_param({dims.mlp_hidden, in}, derive_seed(seed, "actor.mlp.fc1"));
  a.fc1_b = detail::zero_bias(dims.mlp_hidden);
  a.fc2_w = glorot_param({dims.mlp_hidden, dims.mlp_hidden}, derive_seed(seed, "actor.mlp.fc2"));
  a.fc2_b = detail::zero_bias(dims.mlp_hidden);
  a.out_w = glorot_param({dims.nodes, dims.mlp_hidden}, derive_seed(seed, "actor.mlp.out"));
  a.out_b = detail::zero_bias(dims.nodes);
  return a;
}

// Critic: MLP over [flattened state || action].
struct CriticParams {
  Dims dims;
  Tensor fc1_w, fc1_b, fc2_w, fc2_b, out_w, out_b;

  std::vector<std::pair<std::string, Tensor*>> parameters() {
    return {{"fc1_w", &fc1_w}, {"fc1_b", &fc1_b}, {"fc2_w", &fc2_w},
            {"fc2_b", &fc2_b}, {"out_w", &out_w}, {"out_b", &out_b}};
  }
};

inline CriticParams make_critic(const Dims& dims, std::uint64_t seed) {
  CriticParams c;
  c.dims = dims;
  const std::size_t in = dims.state_flat() + dims.nodes;
  c.fc1_w = glorot_param({dims.mlp_hidden, in}, derive_seed(seed, "critic.fc1"));
  c.fc1_b = detail::zero_bias(dims.mlp_hidden);
  c.fc2_w = glorot_param({dims.mlp_hidden, dims.mlp_hidden}, derive_seed(seed, "critic.fc2"));
  c.fc2_b = detail::zero_bias(dims.mlp_hidden);
  c.out_w = glorot_param({1, dims.mlp_hidden}, derive_seed(seed, "critic.out"));
  c.out_b = detail::zero_bias(1);
  return c;
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

// One GRU step for a batch of rows: x {B x F}, h {B x d} -> new h {B x d}.
inline Tensor gru_cell(const Tensor& x, const Tensor& h, const GruParams& p) {
  Tensor z = sigmoid(add(matmul_nt(x, p.w_update), matmul_nt(h, p.u_update)));
  Tensor r = sigmoid(add(matmul_nt(x, p.w_reset), matmul_nt(h, p.u_reset)));
  Tensor cand = tanh(add(add(matmul_nt(x, p.w_cand), hadamard(r, matmul_nt(h, p.u_cand))), p.b_cand));
  return add(hadamard(z, h), hadamard(sub_from_scalar(1.0, z), cand));
}

// Full sequence: X {T x F} -> H {T x d}; h0 defaults to zeros.
inline Tensor gru_forward(const Tensor& x_seq, const GruParams& p, const Tensor* h0 = nullptr) {
  if (x_seq.ndim() != 2 || x_seq.shape()[1] != p.input)
    throw ShapeError("gru_forward expects [T x " + std::to_string(p.input) + "], got " +
                     shape_str(x_seq.shape()));
  const std::size_t steps = x_seq.shape()[0];
  Tensor h = h0 != nullptr ? reshape(*h0, {1, p.hidden}) : Tensor::zeros({1, p.hidden});
  std::vector<Tensor> hs;
  hs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    h = gru_cell(select_rows(x_seq, {t}), h, p);
    hs.push_back(h);
  }
  return concat_rows(hs);
}

struct TemporalAttentionResult {
  Tensor weights;  // T x T, causal: weights[i][j] == 0 for j > i
  Tensor output;   // T x d'
};

// Causal query-key attention over the hidden sequence, combined with the
// original states by a Hadamard product before the output projection.
inline TemporalAttentionResult temporal_attention_detail(const Tensor& h_seq,
                                                         const TemporalAttentionParams& p) {
  if (h_seq.ndim() != 2 || h_seq.shape()[1] != p.w_query.shape()[1])
    throw ShapeError("temporal_attention expects [T x d], got " + shape_str(h_seq.shape()));
  const std::size_t steps = h_seq.shape()[0];
  Tensor q = matmul_nt(h_seq, p.w_query);
  Tensor k = matmul_nt(h_seq, p.w_key);
  Tensor v = matmul_nt(h_seq, p.w_value);
  Tensor scores = matmul_nt(q, k);  // scores[i][j] = q_i . k_j
  std::vector<std::uint8_t> causal(steps * steps, 0);
  for (std::size_t i = 0; i < steps; ++i)
    for (std::size_t j = 0; j <= i; ++j) causal[i * steps + j] = 1;
  Tensor weights = softmax_rows(scores, &causal);
  Tensor context = matmul(weights, v);
  Tensor output = matmul_nt(hadamard(h_seq, context), p.w_out);
  return {weights, output};
}

inline Tensor temporal_attention(const Tensor& h_seq, const TemporalAttentionParams& p) {
  return temporal_attention_detail(h_seq, p).output;
}

// Flatten the attended sequence and project to per-node features N x K.
inline Tensor reshape_to_nodes(const Tensor& h_attended, const Tensor& node_proj, std::size_t nodes,
                               std::size_t channels) {
  Tensor flat = reshape(h_attended, {1, h_attended.size()});
  Tensor projected = matmul_nt(flat, node_proj);
  return reshape(projected, {nodes, channels});
}

struct GatResult {
  Tensor weights;  // N x N attention, zero off the neighborhood
  Tensor output;   // N x K'
};

// Graph attention over the (self-loop augmented) neighborhoods.
inline GatResult gat_forward_detail(const Tensor& features, const std::vector<std::uint8_t>& adjacency,
                                    const GatParams& p, bool self_loops = true) {
  if (features.ndim() != 2 || features.shape()[1] != p.weight.shape()[1])
    throw ShapeError("gat_forward expects [N x " + std::to_string(p.weight.shape()[1]) +
                     "], got " + shape_str(features.shape()));
  const std::size_t n = features.shape()[0];
  if (adjacency.size() != n * n)
    throw ShapeError("adjacency size " + std::to_string(adjacency.size()) + " != N*N");
  std::vector<std::uint8_t> mask = adjacency;
  for (std::size_t i = 0; i < n; ++i) {
    if (self_loops) mask[i * n + i] = 1;
    bool any = false;
    for (std::size_t j = 0; j < n; ++j) any = any || mask[i * n + j] != 0;
    if (!any)
      throw ValidationError("node " + std::to_string(i) +
                            " has an empty attention neighborhood (isolated, self-loops disabled)");
  }
  const std::size_t out_dim = p.weight.shape()[0];
  Tensor transformed = matmul_nt(features, p.weight);  // N x K'
  // e_ij = leaky_relu(a . [Wx_i || Wx_j]) splits into a source and a
  // destination half scored separately and combined pairwise.
  Tensor attn2 = reshape(p.attn, {2, out_dim});
  Tensor a_src = reshape(select_rows(attn2, {0}), {out_dim});
  Tensor a_dst = reshape(select_rows(attn2, {1}), {out_dim});
  Tensor score_src = matmul(transformed, a_src);  // N
  Tensor score_dst = matmul(transformed, a_dst);  // N
  Tensor logits = leaky_relu(outer_sum(score_src, score_dst), p.leaky_slope);
  Tensor weights = softmax_rows(logits, &mask);
  Tensor aggregated = matmul(weights, transformed);
  return {weights, elu(aggregated)};
}

inline Tensor gat_forward(const Tensor& features, const std::vector<std::uint8_t>& adjacency,
                          const GatParams& p, bool self_loops = true) {
  return gat_forward_detail(features, adjacency, p, self_loops).output;
}

namespace detail {

// linear -> layer_norm -> leaky_relu -> dropout, twice, then linear out.
inline Tensor mlp_head(const Tensor& x, const ActorParams& a, bool train, std::uint64_t seed) {
  Tensor h = leaky_relu(layer_norm(add(matmul_nt(x, a.fc1_w), a.fc1_b)), a.dims.leaky_slope);
  h = dropout(h, a.dims.dropout_rate, derive_seed(seed, "mlp.drop1"), train);
  h = leaky_relu(layer_norm(add(matmul_nt(h, a.fc2_w), a.fc2_b)), a.dims.leaky_slope);
  h = dropout(h, a.dims.dropout_rate, derive_seed(seed, "mlp.drop2"), train);
  return add(matmul_nt(h, a.out_w), a.out_b);
}

// Time-major slice matrix of one observation: row t = all node channels at t.
inline Tensor state_slices(const StateTensor& s) {
  Tensor out = Tensor::zeros({s.horizon, s.nodes * s.channels});
  auto& v = out.data();
  for (std::size_t t = 0; t < s.horizon; ++t)
    for (std::size_t i = 0; i < s.nodes; ++i)
      for (std::size_t c = 0; c < s.channels; ++c)
        v[t * s.nodes * s.channels + i * s.channels + c] = s.at(i, c, t);
  return out;
}

inline Tensor state_flat_rows(std::span<const StateTensor> states) {
  const std::size_t flat = states.empty() ? 0 : states[0].values.size();
  Tensor out = Tensor::zeros({states.size(), flat});
  auto& v = out.data();
  for (std::size_t b = 0; b < states.size(); ++b)
    std::copy(states[b].values.begin(), states[b].values.end(), v.begin() + static_cast<std::ptrdiff_t>(b * flat));
  return out;
}

inline void check_state_dims(const StateTensor& s, const Dims& dims) {
  if (s.nodes != dims.nodes || s.channels != dims.state_channels || s.horizon != dims.horizon)
    throw ShapeError("state tensor " + std::to_string(s.nodes) + "x" + std::to_string(s.channels) +
                     "x" + std::to_string(s.horizon) + " does not match configured " +
                     std::to_string(dims.nodes) + "x" + std::to_string(dims.state_channels) + "x" +
                     std::to_string(dims.horizon));
}

}  // namespace detail

// Batched actor pass: returns a {B x N} score matrix. The temporal branch is
// batched across time steps; attention and GAT run per item (they are small).
inline Tensor actor_forward_batch(std::span<const StateTensor> states, const ActorParams& a,
                                  const std::vector<std::uint8_t>& adjacency, bool train = false,
                                  std::uint64_t dropout_seed = 0) {
  if (states.empty()) throw ArgumentError("actor_forward_batch requires at least one state");
  for (const auto& s : states) detail::check_state_dims(s, a.dims);
  const Dims& dims = a.dims;
  const std::size_t batch = states.size();

  std::vector<Tensor> node_features;  // per item, N x K
  node_features.reserve(batch);
  if (a.variant == Variant::SRL) {
    // Latest slice only, straight through the node projection.
    Tensor latest = Tensor::zeros({batch, dims.nodes * dims.state_channels});
    auto& lv = latest.data();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < dims.nodes; ++i)
        for (std::size_t c = 0; c < dims.state_channels; ++c)
          lv[b * dims.nodes * dims.state_channels + i * dims.state_channels + c] =
              states[b].at(i, c, dims.horizon - 1);
    Tensor projected = matmul_nt(latest, a.node_proj);  // B x (N*K)
    for (std::size_t b = 0; b < batch; ++b)
      node_features.push_back(reshape(select_rows(projected, {b}), {dims.nodes, dims.gat_in}));
  } else {
    // All slices of all items through the input projection at once.
    std::vector<Tensor> slice_blocks;
    slice_blocks.reserve(batch);
    for (const auto& s : states) slice_blocks.push_back(detail::state_slices(s));
    Tensor x_all = matmul_nt(concat_rows(slice_blocks), a.input_proj);  // (B*(T+1)) x F

    Tensor h = Tensor::zeros({batch, dims.gru_hidden});
    std::vector<Tensor> h_steps;
    h_steps.reserve(dims.horizon);
    std::vector<std::size_t> rows(batch);
    for (std::size_t t = 0; t < dims.horizon; ++t) {
      for (std::size_t b = 0; b < batch; ++b) rows[b] = b * dims.horizon + t;
      h = gru_cell(select_rows(x_all, rows), h, *a.gru);
      h_steps.push_back(h);
    }
    Tensor h_all = concat_rows(h_steps);  // ((T+1)*B) x d, row t*B + b

    std::vector<Tensor> flats;
    flats.reserve(batch);
    std::vector<std::size_t> item_rows(dims.horizon);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < dims.horizon; ++t) item_rows[t] = t * batch + b;
      Tensor h_item = select_rows(h_all, item_rows);
      Tensor attended = temporal_attention(h_item, *a.attn);
      flats.push_back(reshape(attended, {1, dims.horizon * dims.attn_out}));
    }
    Tensor projected = matmul_nt(concat_rows(flats), a.node_proj);  // B x (N*K)
    for (std::size_t b = 0; b < batch; ++b)
      node_features.push_back(reshape(select_rows(projected, {b}), {dims.nodes, dims.gat_in}));
  }

  std::vector<Tensor> mlp_rows;
  mlp_rows.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    Tensor f = node_features[b];
    if (a.variant != Variant::TRL) f = gat_forward(f, adjacency, *a.gat);
    mlp_rows.push_back(reshape(f, {1, a.mlp_input()}));
  }
  return detail::mlp_head(concat_rows(mlp_rows), a, train, dropout_seed);
}

// Single-state actor pass: N efficiency scores.
inline Tensor actor_forward(const StateTensor& state, const ActorParams& a,
                            const std::vector<std::uint8_t>& adjacency, bool train = false,
                            std::uint64_t dropout_seed = 0) {
  Tensor scores = actor_forward_batch(std::span<const StateTensor>(&state, 1), a, adjacency, train,
                                      dropout_seed);
  return reshape(scores, {a.dims.nodes});
}

// Batched critic pass: Q values, one per row.
inline Tensor critic_forward_batch(std::span<const StateTensor> states, const Tensor& actions,
                                   const CriticParams& c) {
  if (states.empty()) throw ArgumentError("critic_forward_batch requires at least one state");
  for (const auto& s : states) detail::check_state_dims(s, c.dims);
  if (actions.ndim() != 2 || actions.shape()[0] != states.size() ||
      actions.shape()[1] != c.dims.nodes)
    throw ShapeError("critic actions must be [B x N], got " + shape_str(actions.shape()));
  Tensor input = concat_cols(detail::state_flat_rows(states), actions);
  Tensor h = leaky_relu(add(matmul_nt(input, c.fc1_w), c.fc1_b), c.dims.leaky_slope);
  h = leaky_relu(add(matmul_nt(h, c.fc2_w), c.fc2_b), c.dims.leaky_slope);
  Tensor out = add(matmul_nt(h, c.out_w), c.out_b);  // B x 1
  return reshape(out, {states.size()});
}

// Scalar Q(s, a); differentiable in both the action and the parameters.
inline Tensor critic_forward(const StateTensor& state, const Tensor& action,
                             const CriticParams& c) {
  Tensor actions = reshape(action, {1, c.dims.nodes});
  Tensor q = critic_forward_batch(std::span<const StateTensor>(&state, 1), actions, c);
  return reshape(q, {1});
}

}  // namespace strl
