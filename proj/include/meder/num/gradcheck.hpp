#pragma once

// Finite-difference verification of tape gradients (64-bit only).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>
#include <vector>

#include "meder/num/ops.hpp"
#include "meder/num/tape.hpp"
#include "meder/random.hpp"

namespace meder::num {

struct GradCheckOptions {
  double step = 1e-4;
  /// Tensors larger than this are checked on a random sample of this many scalars.
  std::size_t max_samples_per_tensor = 256;
  /// Denominator floor for the relative error, so that two near-zero
  /// gradients are compared absolutely.
  double abs_floor = 1e-6;
  std::uint64_t seed = 7;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::size_t checked = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double tolerance = 0.0;
  bool passed = true;
};

/// Compares the tape gradient of `loss_fn` against central differences
/// (f(w + h) - f(w - h)) / 2h for every parameter scalar, or a sample of
/// `max_samples_per_tensor` per tensor.
template <typename LossFn>
  requires std::invocable<LossFn&, Tape<double>&>
GradCheckReport grad_check(LossFn&& loss_fn, const std::vector<Parameter<double>*>& params, double tolerance,
                           const GradCheckOptions& opts = {}) {
  for (auto* p : params) p->zero_grad();
  {
    Tape<double> tape;
    Var<double> loss = loss_fn(tape);
    tape.backward(loss);
  }
  auto eval = [&] {
    Tape<double> tape;
    return loss_fn(tape).value().item();
  };

  GradCheckReport rep;
  rep.tolerance = tolerance;
  Rng rng(opts.seed);
  for (auto* p : params) {
    const std::size_t n = p->value.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (n > opts.max_samples_per_tensor) {
      rng.shuffle(idx);
      idx.resize(opts.max_samples_per_tensor);
      std::sort(idx.begin(), idx.end());
    }
    for (std::size_t i : idx) {
      const double saved = p->value[i];
      p->value[i] = saved + opts.step;
      const double up = eval();
      p->value[i] = saved - opts.step;
      const double down = eval();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double analytic = p->grad[i];
      const double abs_err = std::abs(analytic - numeric);
      const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), opts.abs_floor});
      rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
      if (rep.checked == 0 || rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = p->name;
        rep.worst_index = i;
      }
      ++rep.checked;
    }
  }
  rep.passed = rep.max_rel_err < tolerance;
  return rep;
}

}  // namespace meder::num
