#pragma once

// Brute-force reference implementations used as test oracles. These follow
// the defining sums directly with naive loops and touch none of the tape
// machinery, so they stay independent of the code paths they check.

#include <cstddef>
#include <vector>

#include "mtgcn/tensor.hpp"

namespace oracles {

using mtgcn::Rng;
using mtgcn::Shape;
using mtgcn::Tensor;

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

/// C[i,j] = sum_l A[i,l] * B[l,j], naive triple loop.
inline Tensor matmul_naive(const Tensor& a, const Tensor& b) {
  Tensor c({a.dim(0), b.dim(1)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < b.dim(1); ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < a.dim(1); ++l)
        s += a.at(i, l) * b.at(l, j);
      c.at(i, j) = s;
    }
  return c;
}

/// Global sub-joint convolution on one sample: Y[i,j] = sum_k sum_l
/// A[i,k] * V[k,l] * W[l,j].
inline Tensor gstgc_naive(const Tensor& v, const Tensor& a, const Tensor& w) {
  const std::size_t n = v.dim(0), h = v.dim(1);
  Tensor y({n, h});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < h; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < h; ++l)
          s += a.at(i, k) * v.at(k, l) * w.at(l, j);
      y.at(i, j) = s;
    }
  return y;
}

/// Joint trajectory convolution on one sample in joint-major row order:
/// output row 3i+d is Y[3i+d, j] = sum_k sum_l A[i,k] * V[3k+d, l] * W[l,j].
inline Tensor jtgc_naive(const Tensor& v, const Tensor& a, const Tensor& w,
                         std::size_t joints) {
  const std::size_t h = v.dim(1);
  Tensor y({3 * joints, h});
  for (std::size_t i = 0; i < joints; ++i)
    for (std::size_t d = 0; d < 3; ++d)
      for (std::size_t j = 0; j < h; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < joints; ++k)
          for (std::size_t l = 0; l < h; ++l)
            s += a.at(i, k) * v.at(3 * k + d, l) * w.at(l, j);
        y.at(3 * i + d, j) = s;
      }
  return y;
}

/// Local sub-joint convolution on one sample: Y[3i+d, j] = sum_e sum_l
/// A_i[d,e] * V[3i+e, l] * W[l,j].
inline Tensor lstgc_naive(const Tensor& v, const std::vector<Tensor>& adj,
                          const Tensor& w, std::size_t joints) {
  const std::size_t h = v.dim(1);
  Tensor y({3 * joints, h});
  for (std::size_t i = 0; i < joints; ++i)
    for (std::size_t d = 0; d < 3; ++d)
      for (std::size_t j = 0; j < h; ++j) {
        double s = 0.0;
        for (std::size_t e = 0; e < 3; ++e)
          for (std::size_t l = 0; l < h; ++l)
            s += adj[i].at(d, e) * v.at(3 * i + e, l) * w.at(l, j);
        y.at(3 * i + d, j) = s;
      }
  return y;
}

/// Per-feature batch norm on batch x N x H, statistics over batch and
/// hidden dims, biased variance, direct formula evaluation.
inline Tensor batch_norm_naive(const Tensor& x, const Tensor& gamma,
                               const Tensor& beta, double eps = 1e-5) {
  const std::size_t batch = x.dim(0), n = x.dim(1), h = x.dim(2);
  Tensor y(x.shape());
  for (std::size_t f = 0; f < n; ++f) {
    double mean = 0.0;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < h; ++k) mean += x.at(b, f, k);
    mean /= static_cast<double>(batch * h);
    double var = 0.0;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < h; ++k) {
        const double d = x.at(b, f, k) - mean;
        var += d * d;
      }
    var /= static_cast<double>(batch * h);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < h; ++k)
        y.at(b, f, k) =
            gamma[f] * (x.at(b, f, k) - mean) / std::sqrt(var + eps) + beta[f];
  }
  return y;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracles
