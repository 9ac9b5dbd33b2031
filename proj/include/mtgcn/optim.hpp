#pragma once

#include <cmath>
#include <vector>

#include "mtgcn/tensor.hpp"

namespace mtgcn {

/// Global L2 norm over a gradient list, summed in fixed order.
inline double global_l2_norm(const std::vector<Tensor>& grads) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (std::size_t i = 0; i < g.numel(); ++i) sq += g[i] * g[i];
  return std::sqrt(sq);
}

/// Rescale all gradients so the global L2 norm does not exceed max_norm.
/// The tiny slack on the comparison keeps the operation bitwise idempotent:
/// a rescaled set whose recomputed norm rounds a few ulps above max_norm is
/// left alone on a second pass.
inline void clip_gradients_l2(std::vector<Tensor>& grads,
                              double max_norm = 1.0) {
  require(max_norm > 0.0, "clip_gradients_l2: max_norm must be positive");
  const double norm = global_l2_norm(grads);
  if (norm <= max_norm * (1.0 + 1e-12)) return;
  const double s = max_norm / norm;
  for (Tensor& g : grads)
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= s;
}

/// Adam moments for a fixed list of parameter tensors.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update with bias correction. Moments are allocated on first
/// use; the step counter increments exactly once per call.
inline void adam_step(const std::vector<Tensor*>& params,
                      const std::vector<Tensor>& grads, AdamState& state,
                      double lr) {
  require(lr > 0.0, "adam_step: learning rate must be positive");
  require(params.size() == grads.size(),
          "adam_step: parameter/gradient count mismatch");
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  require(state.m.size() == params.size(),
          "adam_step: state tracks a different parameter list");
  for (std::size_t k = 0; k < params.size(); ++k)
    require(params[k]->same_shape(grads[k]) &&
                params[k]->same_shape(state.m[k]),
            "adam_step: shape mismatch for parameter " + std::to_string(k));

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.numel(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace mtgcn
