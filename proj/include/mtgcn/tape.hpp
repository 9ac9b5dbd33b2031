#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mtgcn/tensor.hpp"

namespace mtgcn {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  const Tape* owner = nullptr;
};

/// Reverse-mode gradient tape. Operations append nodes in execution order;
/// backward() replays them in exact reverse order, accumulating adjoints.
/// Covers only the op set the network needs.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// (batch, rows, cols) view of a 2-D matrix or a batched 3-D tensor.
  struct Dims {
    std::size_t batch, rows, cols;
  };
  static Dims batched_dims(const Tensor& t) {
    require(t.rank() == 2 || t.rank() == 3,
            "expected a 2-D or batched 3-D tensor, got " +
                shape_str(t.shape()));
    if (t.rank() == 2) return Dims{1, t.dim(0), t.dim(1)};
    return Dims{t.dim(0), t.dim(1), t.dim(2)};
  }

  Var leaf(Tensor value) { return push("leaf", std::move(value), nullptr); }

  /// Leaf that is known constant data (no gradient ever requested for it).
  Var constant(Tensor value) {
    return push("const", std::move(value), nullptr);
  }

  const Tensor& value(Var v) const { return node(v).value; }

  /// Gradient of the last backward() target w.r.t. v.
  const Tensor& grad(Var v) const {
    const Node& n = node(v);
    if (!has_grads_) fail_runtime("tape: backward() has not been run");
    return n.grad;
  }

  std::size_t size() const { return nodes_.size(); }
  const char* op_name(int id) const { return nodes_[static_cast<std::size_t>(id)].op; }

  /// Node ids visited by the last backward(), in visit order. Test hook for
  /// the reverse-replay invariant.
  const std::vector<int>& last_backward_order() const { return order_; }

  // ---------------------------------------------------------------- ops ---

  Var matmul(Var a, Var b) {
    const Tensor& ta = value(check(a));
    const Tensor& tb = value(check(b));
    Tensor out = mtgcn::matmul(ta, tb);  // validates shapes
    const int ia = a.id, ib = b.id;
    return push("matmul", std::move(out), [ia, ib](Tape& t, const Tensor& g) {
      const Tensor& av = t.val(ia);
      const Tensor& bv = t.val(ib);
      // dA += dC * B^T, dB += A^T * dC
      detail::gemm_nt(g.data(), bv.data(), t.grd(ia).data(), av.dim(0),
                      bv.dim(1), av.dim(1), true);
      detail::gemm_tn(av.data(), g.data(), t.grd(ib).data(), av.dim(1),
                      av.dim(0), bv.dim(1), true);
    });
  }

  /// Per-sample right product: X (batch x R x K, or R x K) times W (K x M).
  Var matmul_right(Var x, Var w) {
    const Tensor& tx = value(check(x));
    const Tensor& tw = value(check(w));
    require(tw.rank() == 2, "matmul_right: W must be 2-D, got " +
                                shape_str(tw.shape()));
    const Dims d = batched_dims(tx);
    const std::size_t batch = d.batch, rows = d.rows, cols = d.cols;
    require(cols == tw.dim(0),
            "matmul_right: inner dimensions differ: " + shape_str(tx.shape()) +
                " vs " + shape_str(tw.shape()));
    const std::size_t m = tw.dim(1);
    Tensor out(tx.rank() == 3 ? Shape{batch, rows, m} : Shape{rows, m});
    for (std::size_t b = 0; b < batch; ++b)
      detail::gemm_nn(tx.data() + b * rows * cols, tw.data(),
                      out.data() + b * rows * m, rows, cols, m, false);
    const int ix = x.id, iw = w.id;
    return push("matmul_right", std::move(out),
                [ix, iw, batch, rows, cols, m](Tape& t, const Tensor& g) {
                  const Tensor& xv = t.val(ix);
                  const Tensor& wv = t.val(iw);
                  Tensor& gx = t.grd(ix);
                  Tensor& gw = t.grd(iw);
                  for (std::size_t b = 0; b < batch; ++b) {
                    const double* gb = g.data() + b * rows * m;
                    // dX_b += dY_b * W^T
                    detail::gemm_nt(gb, wv.data(), gx.data() + b * rows * cols,
                                    rows, m, cols, true);
                    // dW += X_b^T * dY_b
                    detail::gemm_tn(xv.data() + b * rows * cols, gb, gw.data(),
                                    cols, rows, m, true);
                  }
                });
  }

  /// Per-sample left product: A (R x R) times X (batch x R x M, or R x M).
  Var matmul_left(Var a, Var x) {
    const Tensor& ta = value(check(a));
    const Tensor& tx = value(check(x));
    require(ta.rank() == 2, "matmul_left: A must be 2-D, got " +
                                shape_str(ta.shape()));
    const Dims d = batched_dims(tx);
    const std::size_t batch = d.batch, rows = d.rows, cols = d.cols;
    require(ta.dim(1) == rows,
            "matmul_left: inner dimensions differ: " + shape_str(ta.shape()) +
                " vs " + shape_str(tx.shape()));
    const std::size_t r = ta.dim(0);
    Tensor out(tx.rank() == 3 ? Shape{batch, r, cols} : Shape{r, cols});
    for (std::size_t b = 0; b < batch; ++b)
      detail::gemm_nn(ta.data(), tx.data() + b * rows * cols,
                      out.data() + b * r * cols, r, rows, cols, false);
    const int ia = a.id, ix = x.id;
    return push("matmul_left", std::move(out),
                [ia, ix, batch, rows, cols, r](Tape& t, const Tensor& g) {
                  const Tensor& av = t.val(ia);
                  const Tensor& xv = t.val(ix);
                  Tensor& ga = t.grd(ia);
                  Tensor& gx = t.grd(ix);
                  for (std::size_t b = 0; b < batch; ++b) {
                    const double* gb = g.data() + b * r * cols;
                    // dA += dY_b * X_b^T
                    detail::gemm_nt(gb, xv.data() + b * rows * cols, ga.data(),
                                    r, cols, rows, true);
                    // dX_b += A^T * dY_b
                    detail::gemm_tn(av.data(), gb, gx.data() + b * rows * cols,
                                    rows, r, cols, true);
                  }
                });
  }

  Var add(Var a, Var b) {
    const Tensor& ta = value(check(a));
    const Tensor& tb = value(check(b));
    require(ta.same_shape(tb), "add: shape mismatch " + shape_str(ta.shape()) +
                                   " vs " + shape_str(tb.shape()));
    Tensor out = ta;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += tb[i];
    const int ia = a.id, ib = b.id;
    return push("add", std::move(out), [ia, ib](Tape& t, const Tensor& g) {
      Tensor& ga = t.grd(ia);
      Tensor& gb = t.grd(ib);
      for (std::size_t i = 0; i < g.numel(); ++i) {
        ga[i] += g[i];
        gb[i] += g[i];
      }
    });
  }

  Var scale(Var x, double c) {
    Tensor out = value(check(x));
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c;
    const int ix = x.id;
    return push("scale", std::move(out), [ix, c](Tape& t, const Tensor& g) {
      Tensor& gx = t.grd(ix);
      for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += c * g[i];
    });
  }

  Var tanh(Var x) {
    Tensor out = value(check(x));
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    const int ix = x.id;
    const int iy = next_id();  // id this node will get
    return push("tanh", std::move(out), [ix, iy](Tape& t, const Tensor& g) {
      // d tanh = 1 - y^2, from the cached output
      const Tensor& y = t.val(iy);
      Tensor& gx = t.grd(ix);
      for (std::size_t i = 0; i < g.numel(); ++i)
        gx[i] += (1.0 - y[i] * y[i]) * g[i];
    });
  }

  /// Out row r = input row idx[r], per sample. Covers row slicing, axis
  /// extraction and row permutations.
  Var gather_rows(Var x, std::vector<std::size_t> idx) {
    const Tensor& tx = value(check(x));
    const Dims dd = batched_dims(tx);
    const std::size_t batch = dd.batch, rows = dd.rows, cols = dd.cols;
    require(!idx.empty(), "gather_rows: empty index list");
    for (std::size_t i : idx)
      require(i < rows, "gather_rows: row index " + std::to_string(i) +
                            " out of range for " + shape_str(tx.shape()));
    const std::size_t r = idx.size();
    Tensor out(tx.rank() == 3 ? Shape{batch, r, cols} : Shape{r, cols});
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < r; ++i)
        std::copy(tx.data() + (b * rows + idx[i]) * cols,
                  tx.data() + (b * rows + idx[i] + 1) * cols,
                  out.data() + (b * r + i) * cols);
    const int ix = x.id;
    return push("gather_rows", std::move(out),
                [ix, idx = std::move(idx), batch, rows, cols](
                    Tape& t, const Tensor& g) {
                  Tensor& gx = t.grd(ix);
                  const std::size_t r = idx.size();
                  for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t i = 0; i < r; ++i) {
                      double* dst = gx.data() + (b * rows + idx[i]) * cols;
                      const double* src = g.data() + (b * r + i) * cols;
                      for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
                    }
                });
  }

  /// Stack blocks along the row dimension, per sample, in input order.
  Var concat_rows(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat_rows: needs at least one block");
    const Tensor& first = value(check(parts[0]));
    const std::size_t rank = first.rank();
    const Dims dd = batched_dims(first);
    const std::size_t batch = dd.batch, cols = dd.cols;
    std::size_t total_rows = 0;
    std::vector<int> ids;
    std::vector<std::size_t> block_rows;
    for (Var p : parts) {
      const Tensor& tp = value(check(p));
      require(tp.rank() == rank, "concat_rows: mixed ranks");
      const Dims pd = batched_dims(tp);
      require(pd.batch == batch && pd.cols == cols,
              "concat_rows: block " + shape_str(tp.shape()) +
                  " incompatible with " + shape_str(first.shape()));
      total_rows += pd.rows;
      ids.push_back(p.id);
      block_rows.push_back(pd.rows);
    }
    Tensor out(rank == 3 ? Shape{batch, total_rows, cols}
                         : Shape{total_rows, cols});
    for (std::size_t b = 0; b < batch; ++b) {
      std::size_t row = 0;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        const Tensor& tp = val(ids[k]);
        std::copy(tp.data() + b * block_rows[k] * cols,
                  tp.data() + (b + 1) * block_rows[k] * cols,
                  out.data() + (b * total_rows + row) * cols);
        row += block_rows[k];
      }
    }
    return push("concat_rows", std::move(out),
                [ids = std::move(ids), block_rows = std::move(block_rows),
                 batch, total_rows, cols](Tape& t, const Tensor& g) {
                  for (std::size_t b = 0; b < batch; ++b) {
                    std::size_t row = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      Tensor& gp = t.grd(ids[k]);
                      const double* src =
                          g.data() + (b * total_rows + row) * cols;
                      double* dst = gp.data() + b * block_rows[k] * cols;
                      for (std::size_t i = 0; i < block_rows[k] * cols; ++i)
                        dst[i] += src[i];
                      row += block_rows[k];
                    }
                  }
                });
  }

  Var reshape(Var x, Shape shape) {
    Tensor out = value(check(x)).reshaped(std::move(shape));
    const int ix = x.id;
    return push("reshape", std::move(out), [ix](Tape& t, const Tensor& g) {
      Tensor& gx = t.grd(ix);
      for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
    });
  }

  Var sum(Var x) {
    const Tensor& tx = value(check(x));
    double s = 0.0;
    for (std::size_t i = 0; i < tx.numel(); ++i) s += tx[i];
    const int ix = x.id;
    return push("sum", Tensor({1}, {s}), [ix](Tape& t, const Tensor& g) {
      Tensor& gx = t.grd(ix);
      for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g[0];
    });
  }

  Var sum_squares(Var x) {
    const Tensor& tx = value(check(x));
    double s = 0.0;
    for (std::size_t i = 0; i < tx.numel(); ++i) s += tx[i] * tx[i];
    const int ix = x.id;
    return push("sum_squares", Tensor({1}, {s}),
                [ix](Tape& t, const Tensor& g) {
                  const Tensor& xv = t.val(ix);
                  Tensor& gx = t.grd(ix);
                  for (std::size_t i = 0; i < gx.numel(); ++i)
                    gx[i] += 2.0 * xv[i] * g[0];
                });
  }

  /// Batch normalization over a batch x N x H tensor: one mean/variance per
  /// trajectory-feature n, computed jointly over batch and hidden dims in
  /// train mode, taken from running stats in eval mode. Affine per feature.
  /// In train mode running stats are updated in place when pointers are
  /// given (momentum update, biased variance); pass nullptr to leave them
  /// untouched (pure-function forwards, e.g. finite differencing).
  Var batch_norm(Var x, Var gamma, Var beta, bool train,
                 Tensor* running_mean, Tensor* running_var,
                 double momentum = 0.1, double eps = 1e-5) {
    const Tensor& tx = value(check(x));
    const Tensor& tg = value(check(gamma));
    const Tensor& tb = value(check(beta));
    require(tx.rank() == 3, "batch_norm: expects batch x N x H input, got " +
                                shape_str(tx.shape()));
    const std::size_t batch = tx.dim(0), n = tx.dim(1), h = tx.dim(2);
    require(tg.rank() == 1 && tg.dim(0) == n && tb.rank() == 1 &&
                tb.dim(0) == n,
            "batch_norm: affine parameters must be length-" +
                std::to_string(n) + " vectors");
    if (!train)
      require(running_mean && running_var && running_mean->numel() == n &&
                  running_var->numel() == n,
              "batch_norm: eval mode requires populated running stats");

    Tensor mean({n}), var({n});
    if (train) {
      const double m = static_cast<double>(batch * h);
      for (std::size_t f = 0; f < n; ++f) {
        double s = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
          const double* row = tx.data() + (b * n + f) * h;
          for (std::size_t k = 0; k < h; ++k) s += row[k];
        }
        mean[f] = s / m;
        double sq = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
          const double* row = tx.data() + (b * n + f) * h;
          for (std::size_t k = 0; k < h; ++k) {
            const double d = row[k] - mean[f];
            sq += d * d;
          }
        }
        var[f] = sq / m;
      }
      if (running_mean && running_var) {
        for (std::size_t f = 0; f < n; ++f) {
          (*running_mean)[f] =
              (1.0 - momentum) * (*running_mean)[f] + momentum * mean[f];
          (*running_var)[f] =
              (1.0 - momentum) * (*running_var)[f] + momentum * var[f];
        }
      }
    } else {
      mean = *running_mean;
      var = *running_var;
    }

    Tensor inv_std({n});
    for (std::size_t f = 0; f < n; ++f)
      inv_std[f] = 1.0 / std::sqrt(var[f] + eps);

    Tensor xhat(tx.shape());
    Tensor out(tx.shape());
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t f = 0; f < n; ++f) {
        const double* src = tx.data() + (b * n + f) * h;
        double* xh = xhat.data() + (b * n + f) * h;
        double* dst = out.data() + (b * n + f) * h;
        for (std::size_t k = 0; k < h; ++k) {
          xh[k] = (src[k] - mean[f]) * inv_std[f];
          dst[k] = tg[f] * xh[k] + tb[f];
        }
      }

    const int ix = x.id, ig = gamma.id, ib = beta.id;
    return push(
        "batch_norm", std::move(out),
        [ix, ig, ib, train, batch, n, h, xhat = std::move(xhat),
         inv_std = std::move(inv_std)](Tape& t, const Tensor& g) {
          const Tensor& gam = t.val(ig);
          Tensor& gx = t.grd(ix);
          Tensor& gg = t.grd(ig);
          Tensor& gb = t.grd(ib);
          const double m = static_cast<double>(batch * h);
          for (std::size_t f = 0; f < n; ++f) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
              const double* dy = g.data() + (b * n + f) * h;
              const double* xh = xhat.data() + (b * n + f) * h;
              for (std::size_t k = 0; k < h; ++k) {
                sum_dy += dy[k];
                sum_dy_xhat += dy[k] * xh[k];
              }
            }
            gg[f] += sum_dy_xhat;
            gb[f] += sum_dy;
            if (train) {
              // batch statistics participate in the gradient
              const double c = gam[f] * inv_std[f] / m;
              for (std::size_t b = 0; b < batch; ++b) {
                const double* dy = g.data() + (b * n + f) * h;
                const double* xh = xhat.data() + (b * n + f) * h;
                double* dst = gx.data() + (b * n + f) * h;
                for (std::size_t k = 0; k < h; ++k)
                  dst[k] += c * (m * dy[k] - sum_dy - xh[k] * sum_dy_xhat);
              }
            } else {
              const double c = gam[f] * inv_std[f];
              for (std::size_t b = 0; b < batch; ++b) {
                const double* dy = g.data() + (b * n + f) * h;
                double* dst = gx.data() + (b * n + f) * h;
                for (std::size_t k = 0; k < h; ++k) dst[k] += c * dy[k];
              }
            }
          }
        });
  }

  /// Mean per-joint position error between a predicted batch x N x T tensor
  /// (N = 3J, joint-major rows) and a constant target of the same shape:
  /// mean over batch, joints and frames of the per-joint Euclidean error.
  Var mpjpe(Var pred, Tensor target) {
    const Tensor& tp = value(check(pred));
    require(tp.rank() == 3, "mpjpe: expects batch x N x T input, got " +
                                shape_str(tp.shape()));
    require(tp.same_shape(target), "mpjpe: prediction " +
                                       shape_str(tp.shape()) +
                                       " vs target " +
                                       shape_str(target.shape()));
    const std::size_t batch = tp.dim(0), n = tp.dim(1), tt = tp.dim(2);
    require(n % 3 == 0, "mpjpe: row count must be divisible by 3");
    const std::size_t joints = n / 3;
    const double scale = 1.0 / static_cast<double>(batch * joints * tt);
    double acc = 0.0;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < joints; ++j)
        for (std::size_t f = 0; f < tt; ++f) {
          double sq = 0.0;
          for (std::size_t d = 0; d < 3; ++d) {
            const std::size_t i = (b * n + 3 * j + d) * tt + f;
            const double e = tp[i] - target[i];
            sq += e * e;
          }
          acc += std::sqrt(sq);
        }
    const int ip = pred.id;
    return push(
        "mpjpe", Tensor({1}, {acc * scale}),
        [ip, target = std::move(target), batch, n, tt, joints, scale](
            Tape& t, const Tensor& g) {
          const Tensor& pv = t.val(ip);
          Tensor& gp = t.grd(ip);
          for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t j = 0; j < joints; ++j)
              for (std::size_t f = 0; f < tt; ++f) {
                double sq = 0.0;
                for (std::size_t d = 0; d < 3; ++d) {
                  const std::size_t i = (b * n + 3 * j + d) * tt + f;
                  const double e = pv[i] - target[i];
                  sq += e * e;
                }
                const double dist = std::sqrt(sq);
                if (dist == 0.0) continue;  // subgradient 0 at the kink
                const double c = g[0] * scale / dist;
                for (std::size_t d = 0; d < 3; ++d) {
                  const std::size_t i = (b * n + 3 * j + d) * tt + f;
                  gp[i] += c * (pv[i] - target[i]);
                }
              }
        });
  }

  /// Bone-length deviation: mean over batch, bones and frames of
  /// |l_b - lhat_{t,b}|, where lhat is recomputed from the predicted
  /// coordinates per frame and l_b comes from the constant ground-truth
  /// lengths (batch x B).
  Var bone_deviation(Var pred, Tensor gt_lengths,
                     const std::vector<std::pair<std::size_t, std::size_t>>& bones) {
    const Tensor& tp = value(check(pred));
    require(tp.rank() == 3, "bone_deviation: expects batch x N x T input");
    const std::size_t batch = tp.dim(0), n = tp.dim(1), tt = tp.dim(2);
    require(n % 3 == 0, "bone_deviation: row count must be divisible by 3");
    const std::size_t joints = n / 3;
    const std::size_t nb = bones.size();
    require(nb > 0, "bone_deviation: bone list is empty");
    for (auto [u, v] : bones)
      require(u < joints && v < joints,
              "bone_deviation: bone index out of range");
    require(gt_lengths.rank() == 2 && gt_lengths.dim(0) == batch &&
                gt_lengths.dim(1) == nb,
            "bone_deviation: ground-truth lengths must be batch x B, got " +
                shape_str(gt_lengths.shape()));
    const double scale = 1.0 / static_cast<double>(batch * nb * tt);
    double acc = 0.0;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < nb; ++k) {
        const auto [u, v] = bones[k];
        for (std::size_t f = 0; f < tt; ++f) {
          double sq = 0.0;
          for (std::size_t d = 0; d < 3; ++d) {
            const double e = tp[(b * n + 3 * u + d) * tt + f] -
                             tp[(b * n + 3 * v + d) * tt + f];
            sq += e * e;
          }
          acc += std::abs(gt_lengths.at(b, k) - std::sqrt(sq));
        }
      }
    const int ip = pred.id;
    return push(
        "bone_deviation", Tensor({1}, {acc * scale}),
        [ip, gt_lengths = std::move(gt_lengths), bones, batch, n, tt, nb,
         scale](Tape& t, const Tensor& g) {
          const Tensor& pv = t.val(ip);
          Tensor& gp = t.grd(ip);
          for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t k = 0; k < nb; ++k) {
              const auto [u, v] = bones[k];
              for (std::size_t f = 0; f < tt; ++f) {
                double delta[3];
                double sq = 0.0;
                for (std::size_t d = 0; d < 3; ++d) {
                  delta[d] = pv[(b * n + 3 * u + d) * tt + f] -
                             pv[(b * n + 3 * v + d) * tt + f];
                  sq += delta[d] * delta[d];
                }
                const double lhat = std::sqrt(sq);
                if (lhat == 0.0) continue;
                const double l = gt_lengths.at(b, k);
                const double sign = (lhat > l) ? 1.0 : (lhat < l ? -1.0 : 0.0);
                const double c = g[0] * scale * sign / lhat;
                for (std::size_t d = 0; d < 3; ++d) {
                  gp[(b * n + 3 * u + d) * tt + f] += c * delta[d];
                  gp[(b * n + 3 * v + d) * tt + f] -= c * delta[d];
                }
              }
            }
        });
  }

  /// pred[b,n,t] + obs[b,n,T-1]: adds the last observed value of each
  /// sub-joint trajectory to every predicted step of that trajectory.
  Var add_last_frame(Var pred, Var obs) {
    const Tensor& tp = value(check(pred));
    const Tensor& to = value(check(obs));
    require(tp.rank() == 3 && to.rank() == 3 && tp.dim(0) == to.dim(0) &&
                tp.dim(1) == to.dim(1),
            "add_last_frame: incompatible shapes " + shape_str(tp.shape()) +
                " vs " + shape_str(to.shape()));
    const std::size_t batch = tp.dim(0), n = tp.dim(1), tout = tp.dim(2);
    const std::size_t tin = to.dim(2);
    Tensor out = tp;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t r = 0; r < n; ++r) {
        const double last = to[(b * n + r) * tin + (tin - 1)];
        double* row = out.data() + (b * n + r) * tout;
        for (std::size_t f = 0; f < tout; ++f) row[f] += last;
      }
    const int ip = pred.id, io = obs.id;
    return push("add_last_frame", std::move(out),
                [ip, io, batch, n, tout, tin](Tape& t, const Tensor& g) {
                  Tensor& gp = t.grd(ip);
                  Tensor& go = t.grd(io);
                  for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t r = 0; r < n; ++r) {
                      const double* grow = g.data() + (b * n + r) * tout;
                      double s = 0.0;
                      for (std::size_t f = 0; f < tout; ++f) {
                        gp[(b * n + r) * tout + f] += grow[f];
                        s += grow[f];
                      }
                      go[(b * n + r) * tin + (tin - 1)] += s;
                    }
                });
  }

  // ----------------------------------------------------------- backward ---

  /// Accumulate d(loss)/d(node) for every node that fed the scalar loss.
  /// Visits recorded operations in exact reverse execution order;
  /// deterministic for identical inputs.
  void backward(Var loss) {
    const Node& ln = node(loss);
    require(ln.value.numel() == 1,
            "backward: target must be a scalar, got " +
                shape_str(ln.value.shape()));
    for (Node& nd : nodes_) {
      nd.grad = Tensor(nd.value.shape());  // zero-filled
    }
    nodes_[static_cast<std::size_t>(loss.id)].grad[0] = 1.0;
    has_grads_ = true;
    order_.clear();
    for (int i = loss.id; i >= 0; --i) {
      Node& nd = nodes_[static_cast<std::size_t>(i)];
      if (nd.back) {
        order_.push_back(i);
        nd.back(*this, nd.grad);
      }
    }
  }

 private:
  friend struct TapeTestAccess;

  using BackFn = std::function<void(Tape&, const Tensor&)>;

  struct Node {
    const char* op;
    Tensor value;
    Tensor grad;
    BackFn back;
  };

  int next_id() const { return static_cast<int>(nodes_.size()); }

  Var push(const char* op, Tensor value, BackFn back) {
    nodes_.push_back(Node{op, std::move(value), Tensor{}, std::move(back)});
    return Var{static_cast<int>(nodes_.size()) - 1, this};
  }

  Var check(Var v) const {
    require(v.owner == this && v.id >= 0 &&
                v.id < static_cast<int>(nodes_.size()),
            "tape: variable does not belong to this tape");
    return v;
  }

  const Node& node(Var v) const {
    check(v);
    return nodes_[static_cast<std::size_t>(v.id)];
  }

  const Tensor& val(int id) const {
    return nodes_[static_cast<std::size_t>(id)].value;
  }
  Tensor& grd(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }

  std::vector<Node> nodes_;
  std::vector<int> order_;
  bool has_grads_ = false;
};

}  // namespace mtgcn
