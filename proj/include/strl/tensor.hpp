#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "strl/errors.hpp"
#include "strl/rng.hpp"

namespace strl {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

namespace detail {
struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;     // allocated lazily, same length as value
  bool requires_grad = false;   // leaf parameter: gradients are kept here
  bool tracked = false;         // produced under an active tape from tracked inputs
};
}  // namespace detail

// Dense row-major tensor of doubles with optional reverse-mode gradient.
// Copies are shallow (shared storage); use clone() for a deep copy.
class Tensor {
 public:
  Tensor() : node_(std::make_shared<detail::TensorNode>()) {}

  static Tensor zeros(Shape shape) {
    Tensor t;
    t.node_->shape = std::move(shape);
    t.node_->value.assign(shape_numel(t.node_->shape), 0.0);
    return t;
  }

  static Tensor full(Shape shape, double fill) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.node_->value.begin(), t.node_->value.end(), fill);
    return t;
  }

  static Tensor from(Shape shape, std::vector<double> data) {
    if (shape_numel(shape) != data.size())
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    Tensor t;
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(data);
    return t;
  }

  static Tensor scalar(double v) { return from({1}, {v}); }

  // Leaf parameter with gradient tracking enabled.
  static Tensor param(Shape shape, std::vector<double> data) {
    Tensor t = from(std::move(shape), std::move(data));
    t.node_->requires_grad = true;
    return t;
  }

  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t ndim() const { return node_->shape.size(); }
  std::size_t rows() const { return node_->shape.empty() ? 0 : node_->shape[0]; }
  std::size_t cols() const { return node_->shape.size() < 2 ? 1 : node_->shape[1]; }

  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }

  double operator[](std::size_t i) const { return node_->value[i]; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  double item() const {
    if (size() != 1) throw ArgumentError("item() requires a scalar tensor, got " + shape_str(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool tracked() const { return node_->tracked || node_->requires_grad; }
  void mark_tracked() { node_->tracked = true; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::vector<double>& grad() {
    if (node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
    return node_->grad;
  }
  const std::vector<double>& grad_view() const {
    static const std::vector<double> empty;
    return node_->grad.empty() ? empty : node_->grad;
  }
  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  Tensor clone() const {
    Tensor t;
    t.node_->shape = node_->shape;
    t.node_->value = node_->value;
    t.node_->requires_grad = node_->requires_grad;
    return t;
  }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// Records primitive applications while it is alive; backward() replays them
// in reverse, accumulating into .grad of every tracked tensor. Tapes nest:
// only the innermost active tape records. Repeated backward() calls without
// zeroing gradients accumulate.
class Tape {
 public:
  Tape() : prev_(current_ptr()) { current_ptr() = this; }
  ~Tape() { current_ptr() = prev_; }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* current() { return current_ptr(); }

  void record(const Tensor& output, std::function<void()> step) {
    steps_.emplace_back(output, std::move(step));
  }

  std::size_t size() const { return steps_.size(); }

  // Accumulates one full gradient pass into every tracked leaf. Gradients of
  // intermediates recorded on this tape are reset first, so calling backward
  // twice adds exactly two passes to the leaves.
  void backward(Tensor loss) {
    if (loss.size() != 1)
      throw ArgumentError("backward() requires a scalar loss, got " + shape_str(loss.shape()));
    for (auto& [out, fn] : steps_) out.zero_grad();
    loss.grad()[0] += 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) it->second();
  }

 private:
  static Tape*& current_ptr() {
    thread_local Tape* current = nullptr;
    return current;
  }
  Tape* prev_;
  std::vector<std::pair<Tensor, std::function<void()>>> steps_;
};

// ---------------------------------------------------------------------------
// Raw kernels (forward values and backward accumulation work on plain arrays).
// ---------------------------------------------------------------------------
namespace kern {

// C(r x c) += A(r x k) * B(k x c)
inline void gemm_nn(const double* a, const double* b, double* c, std::size_t r, std::size_t k,
                    std::size_t cc) {
  for (std::size_t i = 0; i < r; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * cc;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * cc;
      for (std::size_t j = 0; j < cc; ++j) ci[j] += av * bp[j];
    }
  }
}

// C(r x c) += A(r x k) * B(c x k)^T
inline void gemm_nt(const double* a, const double* b, double* c, std::size_t r, std::size_t k,
                    std::size_t cc) {
  for (std::size_t i = 0; i < r; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * cc;
    for (std::size_t j = 0; j < cc; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// C(k x c) += A(r x k)^T * B(r x c)
inline void gemm_tn(const double* a, const double* b, double* c, std::size_t r, std::size_t k,
                    std::size_t cc) {
  for (std::size_t i = 0; i < r; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * cc;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * cc;
      for (std::size_t j = 0; j < cc; ++j) cp[j] += av * bi[j];
    }
  }
}

}  // namespace kern

namespace detail {

inline bool should_track(std::initializer_list<const Tensor*> inputs) {
  if (Tape::current() == nullptr) return false;
  for (const Tensor* t : inputs)
    if (t->tracked()) return true;
  return false;
}

// Interpret a tensor as a matrix: 1-D of length n is 1 x n.
struct MatView {
  std::size_t r, c;
};

inline MatView as_row_matrix(const Tensor& t) {
  if (t.ndim() == 1) return {1, t.shape()[0]};
  if (t.ndim() == 2) return {t.shape()[0], t.shape()[1]};
  throw ShapeError("expected 1-D or 2-D tensor, got " + shape_str(t.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

// a(r x k) * b(k x c). A 1-D lhs acts as 1 x k (result 1-D of length c);
// a 1-D rhs acts as k x 1 (result 1-D of length r).
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  const bool a_vec = a.ndim() == 1;
  const bool b_vec = b.ndim() == 1;
  const auto av = detail::as_row_matrix(a);
  std::size_t br, bc;
  if (b_vec) {
    br = b.shape()[0];
    bc = 1;
  } else if (b.ndim() == 2) {
    br = b.shape()[0];
    bc = b.shape()[1];
  } else {
    throw ShapeError("matmul rhs must be 1-D or 2-D, got " + shape_str(b.shape()));
  }
  if (av.c != br)
    throw ShapeError("matmul inner dimensions differ: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  Shape out_shape;
  if (a_vec && b_vec) out_shape = {1};
  else if (a_vec) out_shape = {bc};
  else if (b_vec) out_shape = {av.r};
  else out_shape = {av.r, bc};
  Tensor out = Tensor::zeros(out_shape);
  if (b_vec) {
    // y_i = sum_k a[i][k] * b[k]
    kern::gemm_nt(a.data().data(), b.data().data(), out.data().data(), av.r, av.c, 1);
  } else {
    kern::gemm_nn(a.data().data(), b.data().data(), out.data().data(), av.r, av.c, bc);
  }
  if (detail::should_track({&a, &b})) {
    out.mark_tracked();
    Tensor ac = a, bc_t = b, oc = out;
    const std::size_t r = av.r, k = av.c, c = bc;
    Tape::current()->record(out, [ac, bc_t, oc, r, k, c]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad_view().data();
      if (ac.tracked()) kern::gemm_nt(g, bc_t.data().data(), ac.grad().data(), r, c, k);
      if (bc_t.tracked()) kern::gemm_tn(ac.data().data(), g, bc_t.grad().data(), r, k, c);
    });
  }
  return out;
}

// a(r x k) * b(c x k)^T -> (r x c). This is the natural orientation for
// linear layers stored as (out x in) weight matrices.
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const auto av = detail::as_row_matrix(a);
  const auto bv = detail::as_row_matrix(b);
  if (av.c != bv.c)
    throw ShapeError("matmul_nt reduced dimensions differ: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  const bool a_vec = a.ndim() == 1;
  Tensor out = Tensor::zeros(a_vec ? Shape{bv.r} : Shape{av.r, bv.r});
  kern::gemm_nt(a.data().data(), b.data().data(), out.data().data(), av.r, av.c, bv.r);
  if (detail::should_track({&a, &b})) {
    out.mark_tracked();
    Tensor ac = a, bc = b, oc = out;
    const std::size_t r = av.r, k = av.c, c = bv.r;
    Tape::current()->record(out, [ac, bc, oc, r, k, c]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad_view().data();
      if (ac.tracked()) kern::gemm_nn(g, bc.data().data(), ac.grad().data(), r, c, k);
      if (bc.tracked()) kern::gemm_tn(g, ac.data().data(), bc.grad().data(), r, c, k);
    });
  }
  return out;
}

namespace detail {

template <typename Fwd, typename Bwd>
Tensor elementwise_unary(const Tensor& x, Fwd fwd, Bwd bwd_factor) {
  Tensor out = Tensor::zeros(x.shape());
  const auto& xv = x.data();
  auto& ov = out.data();
  for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = fwd(xv[i]);
  if (detail::should_track({&x})) {
    out.mark_tracked();
    Tensor xc = x, oc = out;
    Tape::current()->record(out, [xc, oc, bwd_factor]() mutable {
      if (!oc.has_grad() || !xc.tracked()) return;
      const auto& g = oc.grad_view();
      auto& xg = xc.grad();
      const auto& xv = xc.data();
      const auto& ov = oc.data();
      for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += g[i] * bwd_factor(xv[i], ov[i]);
    });
  }
  return out;
}

}  // namespace detail

inline Tensor sigmoid(const Tensor& x) {
  return detail::elementwise_unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh(const Tensor& x) {
  return detail::elementwise_unary(x, [](double v) { return std::tanh(v); },
                                   [](double, double y) { return 1.0 - y * y; });
}

inline Tensor relu(const Tensor& x) {
  return detail::elementwise_unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
                                   [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

inline Tensor leaky_relu(const Tensor& x, double slope) {
  return detail::elementwise_unary(
      x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

inline Tensor elu(const Tensor& x) {
  return detail::elementwise_unary(
      x, [](double v) { return v > 0.0 ? v : std::expm1(v); },
      [](double v, double y) { return v > 0.0 ? 1.0 : y + 1.0; });
}

inline Tensor scale(const Tensor& x, double factor) {
  return detail::elementwise_unary(x, [factor](double v) { return factor * v; },
                                   [factor](double, double) { return factor; });
}

// s - x, elementwise.
inline Tensor sub_from_scalar(double s, const Tensor& x) {
  return detail::elementwise_unary(x, [s](double v) { return s - v; },
                                   [](double, double) { return -1.0; });
}

namespace detail {

enum class AddMode { Same, RowBroadcast };

inline AddMode add_mode(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return AddMode::Same;
  if (a.ndim() == 2 && b.ndim() == 1 && a.shape()[1] == b.shape()[0]) return AddMode::RowBroadcast;
  throw ShapeError("incompatible shapes for add/sub: " + shape_str(a.shape()) + " vs " +
                   shape_str(b.shape()));
}

inline Tensor add_like(const Tensor& a, const Tensor& b, double sign) {
  const AddMode mode = add_mode(a, b);
  Tensor out = Tensor::zeros(a.shape());
  const auto& avd = a.data();
  const auto& bvd = b.data();
  auto& ov = out.data();
  if (mode == AddMode::Same) {
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = avd[i] + sign * bvd[i];
  } else {
    const std::size_t r = a.shape()[0], c = a.shape()[1];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ov[i * c + j] = avd[i * c + j] + sign * bvd[j];
  }
  if (detail::should_track({&a, &b})) {
    out.mark_tracked();
    Tensor ac = a, bc = b, oc = out;
    Tape::current()->record(out, [ac, bc, oc, mode, sign]() mutable {
      if (!oc.has_grad()) return;
      const auto& g = oc.grad_view();
      if (ac.tracked()) {
        auto& ag = ac.grad();
        for (std::size_t i = 0; i < ag.size(); ++i) ag[i] += g[i];
      }
      if (bc.tracked()) {
        auto& bg = bc.grad();
        if (mode == AddMode::Same) {
          for (std::size_t i = 0; i < bg.size(); ++i) bg[i] += sign * g[i];
        } else {
          const std::size_t c = bg.size(), r = g.size() / c;
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) bg[j] += sign * g[i * c + j];
        }
      }
    });
  }
  return out;
}

}  // namespace detail

// b may be a 1-D vector broadcast across the rows of a 2-D a.
inline Tensor add(const Tensor& a, const Tensor& b) { return detail::add_like(a, b, 1.0); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return detail::add_like(a, b, -1.0); }

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError("hadamard requires equal shapes: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  Tensor out = Tensor::zeros(a.shape());
  const auto& avd = a.data();
  const auto& bvd = b.data();
  auto& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = avd[i] * bvd[i];
  if (detail::should_track({&a, &b})) {
    out.mark_tracked();
    Tensor ac = a, bc = b, oc = out;
    Tape::current()->record(out, [ac, bc, oc]() mutable {
      if (!oc.has_grad()) return;
      const auto& g = oc.grad_view();
      if (ac.tracked()) {
        auto& ag = ac.grad();
        const auto& bv = bc.data();
        for (std::size_t i = 0; i < ag.size(); ++i) ag[i] += g[i] * bv[i];
      }
      if (bc.tracked()) {
        auto& bg = bc.grad();
        const auto& av2 = ac.data();
        for (std::size_t i = 0; i < bg.size(); ++i) bg[i] += g[i] * av2[i];
      }
    });
  }
  return out;
}

// M[i][j] = u[i] + v[j]; used to assemble pairwise attention logits.
inline Tensor outer_sum(const Tensor& u, const Tensor& v) {
  if (u.ndim() != 1 || v.ndim() != 1)
    throw ShapeError("outer_sum requires 1-D operands: " + shape_str(u.shape()) + " vs " +
                     shape_str(v.shape()));
  const std::size_t n = u.shape()[0], m = v.shape()[0];
  Tensor out = Tensor::zeros({n, m});
  auto& ov = out.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) ov[i * m + j] = u[i] + v[j];
  if (detail::should_track({&u, &v})) {
    out.mark_tracked();
    Tensor uc = u, vc = v, oc = out;
    Tape::current()->record(out, [uc, vc, oc, n, m]() mutable {
      if (!oc.has_grad()) return;
      const auto& g = oc.grad_view();
      if (uc.tracked()) {
        auto& ug = uc.grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) ug[i] += g[i * m + j];
      }
      if (vc.tracked()) {
        auto& vg = vc.grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) vg[j] += g[i * m + j];
      }
    });
  }
  return out;
}

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.size())
    throw ShapeError("cannot reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
  Tensor out = Tensor::from(std::move(shape), x.data());
  if (detail::should_track({&x})) {
    out.mark_tracked();
    Tensor xc = x, oc = out;
    Tape::current()->record(out, [xc, oc]() mutable {
      if (!oc.has_grad() || !xc.tracked()) return;
      const auto& g = oc.grad_view();
      auto& xg = xc.grad();
      for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += g[i];
    });
  }
  return out;
}

// Gathers rows of a 2-D tensor; backward scatter-adds.
inline Tensor select_rows(const Tensor& x, std::vector<std::size_t> rows) {
  if (x.ndim() != 2) throw ShapeError("select_rows requires a 2-D tensor, got " + shape_str(x.shape()));
  const std::size_t c = x.shape()[1];
  for (auto r : rows)
    if (r >= x.shape()[0]) throw ArgumentError("select_rows index " + std::to_string(r) + " out of range");
  Tensor out = Tensor::zeros({rows.size(), c});
  auto& ov = out.data();
  const auto& xv = x.data();
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(rows[i] * c), c, ov.begin() + static_cast<std::ptrdiff_t>(i * c));
  if (detail::should_track({&x})) {
    out.mark_tracked();
    Tensor xc = x, oc = out;
    auto idx = std::make_shared<std::vector<std::size_t>>(std::move(rows));
    Tape::current()->record(out, [xc, oc, idx, c]() mutable {
      if (!oc.has_grad() || !xc.tracked()) return;
      const auto& g = oc.grad_view();
      auto& xg = xc.grad();
      for (std::size_t i = 0; i < idx->size(); ++i)
        for (std::size_t j = 0; j < c; ++j) xg[(*idx)[i] * c + j] += g[i * c + j];
    });
  }
  return out;
}

// Stacks 2-D (or 1-D, treated as single-row) tensors vertically.
inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ArgumentError("concat_rows requires at least one tensor");
  std::size_t cols = detail::as_row_matrix(parts[0]).c;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    const auto v = detail::as_row_matrix(p);
    if (v.c != cols)
      throw ShapeError("concat_rows column mismatch: " + shape_str(parts[0].shape()) + " vs " +
                       shape_str(p.shape()));
    rows += v.r;
  }
  Tensor out = Tensor::zeros({rows, cols});
  auto& ov = out.data();
  std::size_t at = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), ov.begin() + static_cast<std::ptrdiff_t>(at));
    at += p.size();
  }
  bool track = false;
  if (Tape::current() != nullptr)
    for (const auto& p : parts)
      if (p.tracked()) track = true;
  if (track) {
    out.mark_tracked();
    Tensor oc = out;
    auto parts_copy = std::make_shared<std::vector<Tensor>>(parts);
    Tape::current()->record(out, [oc, parts_copy]() mutable {
      if (!oc.has_grad()) return;
      const auto& g = oc.grad_view();
      std::size_t at = 0;
      for (auto& p : *parts_copy) {
        if (p.tracked()) {
          auto& pg = p.grad();
          for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += g[at + i];
        }
        at += p.size();
      }
    });
  }
  return out;
}

// Concatenates two tensors along columns (row counts must match).
inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  const auto av = detail::as_row_matrix(a);
  const auto bv = detail::as_row_matrix(b);
  if (av.r != bv.r)
    throw ShapeError("concat_cols row mismatch: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  const bool vec = a.ndim() == 1 && b.ndim() == 1;
  Tensor out = Tensor::zeros(vec ? Shape{av.c + bv.c} : Shape{av.r, av.c + bv.c});
  auto& ov = out.data();
  for (std::size_t i = 0; i < av.r; ++i) {
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(i * av.c), av.c,
                ov.begin() + static_cast<std::ptrdiff_t>(i * (av.c + bv.c)));
    std::copy_n(b.data().begin() + static_cast<std::ptrdiff_t>(i * bv.c), bv.c,
                ov.begin() + static_cast<std::ptrdiff_t>(i * (av.c + bv.c) + av.c));
  }
  if (detail::should_track({&a, &b})) {
    out.mark_tracked();
    Tensor ac = a, bc = b, oc = out;
    const std::size_t r = av.r, ca = av.c, cb = bv.c;
    Tape::current()->record(out, [ac, bc, oc, r, ca, cb]() mutable {
      if (!oc.has_grad()) return;
      const auto& g = oc.grad_view();
      if (ac.tracked()) {
        auto& ag = ac.grad();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < ca; ++j) ag[i * ca + j] += g[i * (ca + cb) + j];
      }
      if (bc.tracked()) {
        auto& bg = bc.grad();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < cb; ++j) bg[i * cb + j] += g[i * (ca + cb) + ca + j];
      }
    });
  }
  return out;
}

// Row-wise softmax with an optional 0/1 mask (row-major, same shape).
// Masked entries are exactly 0 in the output; each row must keep at least
// one unmasked entry. Row maxima are subtracted before exponentiation.
inline Tensor softmax_rows(const Tensor& x, const std::vector<std::uint8_t>* mask = nullptr) {
  const auto v = detail::as_row_matrix(x);
  if (mask != nullptr && mask->size() != x.size())
    throw ShapeError("softmax mask size " + std::to_string(mask->size()) + " != tensor size " +
                     std::to_string(x.size()));
  Tensor out = Tensor::zeros(x.shape());
  const auto& xv = x.data();
  auto& ov = out.data();
  for (std::size_t i = 0; i < v.r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < v.c; ++j) {
      if (mask != nullptr && (*mask)[i * v.c + j] == 0) continue;
      mx = std::max(mx, xv[i * v.c + j]);
    }
    if (mx == -std::numeric_limits<double>::infinity())
      throw ArgumentError("softmax_rows: row " + std::to_string(i) + " is fully masked");
    double denom = 0.0;
    for (std::size_t j = 0; j < v.c; ++j) {
      if (mask != nullptr && (*mask)[i * v.c + j] == 0) continue;
      denom += std::exp(xv[i * v.c + j] - mx);
    }
    for (std::size_t j = 0; j < v.c; ++j) {
      if (mask != nullptr && (*mask)[i * v.c + j] == 0) {
        ov[i * v.c + j] = 0.0;
      } else {
        ov[i * v.c + j] = std::exp(xv[i * v.c + j] - mx) / denom;
      }
    }
  }
  if (detail::should_track({&x})) {
    out.mark_tracked();
    Tensor xc = x, oc = out;
    const std::size_t r = v.r, c = v.c;
    Tape::current()->record(out, [xc, oc, r, c]() mutable {
      if (!oc.has_grad() || !xc.tracked()) return;
      const auto& g = oc.grad_view();
      const auto& y = oc.data();
      auto& xg = xc.grad();
      for (std::size_t i = 0; i < r; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
        for (std::size_t j = 0; j < c; ++j)
          xg[i * c + j] += y[i * c + j] * (g[i * c + j] - dot);
      }
    });
  }
  return out;
}

// Row-wise standardization (no affine terms): (x - mean) / sqrt(var + eps).
inline Tensor layer_norm(const Tensor& x, double eps = 1e-5) {
  const auto v = detail::as_row_matrix(x);
  Tensor out = Tensor::zeros(x.shape());
  const auto& xv = x.data();
  auto& ov = out.data();
  std::vector<double> inv_sd(v.r);
  for (std::size_t i = 0; i < v.r; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < v.c; ++j) mean += xv[i * v.c + j];
    mean /= static_cast<double>(v.c);
    double var = 0.0;
    for (std::size_t j = 0; j < v.c; ++j) {
      const double d = xv[i * v.c + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(v.c);
    inv_sd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < v.c; ++j) ov[i * v.c + j] = (xv[i * v.c + j] - mean) * inv_sd[i];
  }
  if (detail::should_track({&x})) {
    out.mark_tracked();
    Tensor xc = x, oc = out;
    auto isd = std::make_shared<std::vector<double>>(std::move(inv_sd));
    const std::size_t r = v.r, c = v.c;
    Tape::current()->record(out, [xc, oc, isd, r, c]() mutable {
      if (!oc.has_grad() || !xc.tracked()) return;
      const auto& g = oc.grad_view();
      const auto& y = oc.data();
      auto& xg = xc.grad();
      for (std::size_t i = 0; i < r; ++i) {
        double gmean = 0.0, gymean = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          gmean += g[i * c + j];
          gymean += g[i * c + j] * y[i * c + j];
        }
        gmean /= static_cast<double>(c);
        gymean /= static_cast<double>(c);
        for (std::size_t j = 0; j < c; ++j)
          xg[i * c + j] += (*isd)[i] * (g[i * c + j] - gmean - y[i * c + j] * gymean);
      }
    });
  }
  return out;
}

// Inverted dropout: kept entries are scaled by 1/(1-rate) so that eval mode
// (train=false) and rate=0 are exact identities. Deterministic given seed.
inline Tensor dropout(const Tensor& x, double rate, std::uint64_t seed, bool train) {
  if (rate < 0.0 || rate >= 1.0)
    throw ArgumentError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  if (!train || rate == 0.0) {
    Tensor out = Tensor::from(x.shape(), x.data());
    if (detail::should_track({&x})) {
      out.mark_tracked();
      Tensor xc = x, oc = out;
      Tape::current()->record(out, [xc, oc]() mutable {
        if (!oc.has_grad() || !xc.tracked()) return;
        const auto& g = oc.grad_view();
        auto& xg = xc.grad();
        for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += g[i];
      });
    }
    return out;
  }
  Rng rng(seed);
  const double keep = 1.0 - rate;
  const double inv_keep = 1.0 / keep;
  auto mask = std::make_shared<std::vector<double>>(x.size());
  Tensor out = Tensor::zeros(x.shape());
  const auto& xv = x.data();
  auto& ov = out.data();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    (*mask)[i] = rng.next_double() < keep ? inv_keep : 0.0;
    ov[i] = xv[i] * (*mask)[i];
  }
  if (detail::should_track({&x})) {
    out.mark_tracked();
    Tensor xc = x, oc = out;
    Tape::current()->record(out, [xc, oc, mask]() mutable {
      if (!oc.has_grad() || !xc.tracked()) return;
      const auto& g = oc.grad_view();
      auto& xg = xc.grad();
      for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += g[i] * (*mask)[i];
    });
  }
  return out;
}

namespace detail {

inline Tensor reduce(const Tensor& x, bool take_mean) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  const double denom = take_mean ? static_cast<double>(x.size()) : 1.0;
  Tensor out = Tensor::scalar(acc / denom);
  if (detail::should_track({&x})) {
    out.mark_tracked();
    Tensor xc = x, oc = out;
    Tape::current()->record(out, [xc, oc, denom]() mutable {
      if (!oc.has_grad() || !xc.tracked()) return;
      const double g = oc.grad_view()[0] / denom;
      auto& xg = xc.grad();
      for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += g;
    });
  }
  return out;
}

}  // namespace detail

inline Tensor sum(const Tensor& x) { return detail::reduce(x, false); }
inline Tensor mean(const Tensor& x) { return detail::reduce(x, true); }

// Mean squared error over all entries.
inline Tensor mse(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape())
    throw ShapeError("mse requires equal shapes: " + shape_str(pred.shape()) + " vs " +
                     shape_str(target.shape()));
  const auto& pv = pred.data();
  const auto& tv = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double d = pv[i] - tv[i];
    acc += d * d;
  }
  const double n = static_cast<double>(pv.size());
  Tensor out = Tensor::scalar(acc / n);
  if (detail::should_track({&pred, &target})) {
    out.mark_tracked();
    Tensor pc = pred, tc = target, oc = out;
    Tape::current()->record(out, [pc, tc, oc, n]() mutable {
      if (!oc.has_grad()) return;
      const double g = oc.grad_view()[0];
      const auto& pv2 = pc.data();
      const auto& tv2 = tc.data();
      if (pc.tracked()) {
        auto& pg = pc.grad();
        for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += g * 2.0 * (pv2[i] - tv2[i]) / n;
      }
      if (tc.tracked()) {
        auto& tg = tc.grad();
        for (std::size_t i = 0; i < tg.size(); ++i) tg[i] -= g * 2.0 * (pv2[i] - tv2[i]) / n;
      }
    });
  }
  return out;
}

// Glorot-uniform initialized parameter tensor; fan counts from the shape.
inline Tensor glorot_param(Shape shape, std::uint64_t seed) {
  const std::size_t fan_out = shape.empty() ? 1 : shape[0];
  const std::size_t fan_in = shape.size() < 2 ? 1 : shape[1];
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Rng rng(seed);
  std::vector<double> data(shape_numel(shape));
  for (auto& v : data) v = rng.uniform(-bound, bound);
  return Tensor::param(std::move(shape), std::move(data));
}

}  // namespace strl
