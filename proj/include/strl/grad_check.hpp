#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "strl/errors.hpp"
#include "strl/tensor.hpp"

namespace strl {

// Central finite-difference check for a scalar-valued tensor function.
//
// `f` must be pure and deterministic in the current parameter values (run
// twice up front to verify; seeded dropout is fine, unseeded is rejected).
// Returns max over parameter entries of
//   |analytic - numeric| / max(1, |analytic|).
inline double finite_difference_check(const std::function<Tensor()>& f,
                                      std::vector<Tensor> params, double h = 1e-5) {
  if (h <= 0.0) throw ArgumentError("finite_difference_check requires h > 0");
  const double probe_a = f().item();
  const double probe_b = f().item();
  if (!std::isfinite(probe_a)) throw NumericalError("finite_difference_check: non-finite output");
  if (probe_a != probe_b)
    throw NumericalError("finite_difference_check: f is not deterministic (fix all seeds)");

  // Analytic gradients.
  for (auto& p : params) {
    p.grad();
    p.zero_grad();
  }
  {
    Tape tape;
    Tensor loss = f();
    if (loss.size() != 1) throw ArgumentError("finite_difference_check: f must return a scalar");
    tape.backward(loss);
  }

  double worst = 0.0;
  for (auto& p : params) {
    const auto analytic = p.grad_view();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + h;
      const double up = f().item();
      p.data()[i] = saved - h;
      const double down = f().item();
      p.data()[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw NumericalError("finite_difference_check: non-finite output while probing");
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace strl
