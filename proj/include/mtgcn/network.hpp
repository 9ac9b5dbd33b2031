#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtgcn/graph_conv.hpp"
#include "mtgcn/tape.hpp"
#include "mtgcn/tensor.hpp"

namespace mtgcn {

enum class Mode { train, eval };

struct ModelConfig {
  std::size_t joints = 22;
  std::size_t t_in = 10;    // observed frames
  std::size_t t_out = 10;   // predicted frames
  std::size_t hidden = 128; // H
  std::size_t layers = 4;   // stacked MTGCMs
  bool use_global_residual = false;
  double lambda = 0.1;  // bone-loss weight (training-time; not serialized)

  std::size_t subjoints() const { return 3 * joints; }

  void validate() const {
    require(joints > 0 && t_in > 0 && t_out > 0 && hidden > 0 && layers > 0,
            "model config: all dimensions must be positive");
    require(lambda >= 0.0, "model config: lambda must be non-negative");
  }

  bool same_dims(const ModelConfig& o) const {
    return joints == o.joints && t_in == o.t_in && t_out == o.t_out &&
           hidden == o.hidden && layers == o.layers &&
           use_global_residual == o.use_global_residual;
  }

  std::string dims_str() const {
    return "J=" + std::to_string(joints) + " T=" + std::to_string(t_in) +
           " T_out=" + std::to_string(t_out) + " H=" + std::to_string(hidden) +
           " L=" + std::to_string(layers) +
           " residual=" + (use_global_residual ? "1" : "0");
  }
};

struct BatchNormParams {
  Tensor gamma;         // N, learnable
  Tensor beta;          // N, learnable
  Tensor running_mean;  // N
  Tensor running_var;   // N
  double momentum = 0.1;
  double eps = 1e-5;
};

/// One multi-grained trajectory module: batch norm, a sub-joint trajectory
/// stream (two GSTGCs), a joint trajectory stream (LSTGC then JTGC) and a
/// residual connection.
struct MTGCM {
  BatchNormParams bn;
  GSTGCLayer gs1, gs2;
  LSTGCLayer ls;
  JTGCLayer jt;
};

/// End-to-end predictor: linear input map into the hidden trajectory
/// space, L stacked MTGCMs, linear output map back to pose space.
struct Model {
  ModelConfig config;
  Tensor w_in;   // T x H
  std::vector<MTGCM> blocks;
  Tensor w_out;  // H x T_out

  static Model init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    Model m;
    m.config = cfg;
    const std::size_t n = cfg.subjoints();
    m.w_in = init_matrix(cfg.t_in, cfg.hidden, cfg.t_in, rng);
    m.blocks.reserve(cfg.layers);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      MTGCM b;
      b.bn.gamma = Tensor::full({n}, 1.0);
      b.bn.beta = Tensor({n});
      b.bn.running_mean = Tensor({n});
      b.bn.running_var = Tensor::full({n}, 1.0);
      b.gs1 = init_gstgc(n, cfg.hidden, rng);
      b.gs2 = init_gstgc(n, cfg.hidden, rng);
      b.ls = init_lstgc(cfg.joints, cfg.hidden, rng);
      b.jt = init_jtgc(cfg.joints, cfg.hidden, rng);
      m.blocks.push_back(std::move(b));
    }
    m.w_out = init_matrix(cfg.hidden, cfg.t_out, cfg.hidden, rng);
    return m;
  }

  /// Visit every learnable tensor in declared construction order:
  /// w_in; per block: gamma, beta, A_gs x2, W_gs x2, A_ls[0..J), W_ls,
  /// A_jt, W_jt; w_out. Callback: f(name, tensor).
  template <typename Self, typename F>
  static void visit_params_impl(Self& self, F&& f) {
    f("w_in", self.w_in);
    for (std::size_t l = 0; l < self.blocks.size(); ++l) {
      auto& b = self.blocks[l];
      const std::string p = "block" + std::to_string(l) + ".";
      f(p + "bn.gamma", b.bn.gamma);
      f(p + "bn.beta", b.bn.beta);
      f(p + "gs1.A", b.gs1.adj);
      f(p + "gs2.A", b.gs2.adj);
      f(p + "gs1.W", b.gs1.weight);
      f(p + "gs2.W", b.gs2.weight);
      for (std::size_t i = 0; i < b.ls.adj.size(); ++i)
        f(p + "ls.A[" + std::to_string(i) + "]", b.ls.adj[i]);
      f(p + "ls.W", b.ls.weight);
      f(p + "jt.A", b.jt.adj);
      f(p + "jt.W", b.jt.weight);
    }
    f("w_out", self.w_out);
  }

  template <typename F>
  void visit_params(F&& f) {
    visit_params_impl(*this, std::forward<F>(f));
  }
  template <typename F>
  void visit_params(F&& f) const {
    visit_params_impl(*this, std::forward<F>(f));
  }

  /// Visit every stored tensor (learnable parameters and running stats) in
  /// the serialized order: w_in; per block: gamma, beta, running mean,
  /// running var, A_gs x2, W_gs x2, A_ls[0..J), W_ls, A_jt, W_jt; w_out.
  template <typename Self, typename F>
  static void visit_state_impl(Self& self, F&& f) {
    f("w_in", self.w_in);
    for (std::size_t l = 0; l < self.blocks.size(); ++l) {
      auto& b = self.blocks[l];
      const std::string p = "block" + std::to_string(l) + ".";
      f(p + "bn.gamma", b.bn.gamma);
      f(p + "bn.beta", b.bn.beta);
      f(p + "bn.running_mean", b.bn.running_mean);
      f(p + "bn.running_var", b.bn.running_var);
      f(p + "gs1.A", b.gs1.adj);
      f(p + "gs2.A", b.gs2.adj);
      f(p + "gs1.W", b.gs1.weight);
      f(p + "gs2.W", b.gs2.weight);
      for (std::size_t i = 0; i < b.ls.adj.size(); ++i)
        f(p + "ls.A[" + std::to_string(i) + "]", b.ls.adj[i]);
      f(p + "ls.W", b.ls.weight);
      f(p + "jt.A", b.jt.adj);
      f(p + "jt.W", b.jt.weight);
    }
    f("w_out", self.w_out);
  }

  template <typename F>
  void visit_state(F&& f) {
    visit_state_impl(*this, std::forward<F>(f));
  }
  template <typename F>
  void visit_state(F&& f) const {
    visit_state_impl(*this, std::forward<F>(f));
  }

  std::vector<Tensor*> param_ptrs() {
    std::vector<Tensor*> out;
    visit_params([&](const std::string&, Tensor& t) { out.push_back(&t); });
    return out;
  }

  std::vector<std::string> param_names() const {
    std::vector<std::string> out;
    visit_params(
        [&](const std::string& n, const Tensor&) { out.push_back(n); });
    return out;
  }
};

/// Closed-form learnable-entry count:
/// T*H + L*(2*(N^2+H^2) + (9J+H^2) + (J^2+H^2) + 2N) + H*T_out.
inline std::size_t count_params(const ModelConfig& cfg) {
  const std::size_t n = cfg.subjoints(), h = cfg.hidden, j = cfg.joints;
  const std::size_t per_block =
      2 * (n * n + h * h) + (9 * j + h * h) + (j * j + h * h) + 2 * n;
  return cfg.t_in * h + cfg.layers * per_block + h * cfg.t_out;
}

inline std::size_t count_params(const Model& m) {
  return count_params(m.config);
}

/// Actual number of stored learnable entries; must equal count_params.
inline std::size_t stored_param_entries(const Model& m) {
  std::size_t total = 0;
  m.visit_params(
      [&](const std::string&, const Tensor& t) { total += t.numel(); });
  return total;
}

// --------------------------------------------------------------- forward ---

struct MTGCMVars {
  Var gamma, beta;
  GSTGCVars gs1, gs2;
  LSTGCVars ls;
  JTGCVars jt;
};

/// Tape leaves for every learnable parameter, in visit_params order.
struct ModelVars {
  Var w_in;
  std::vector<MTGCMVars> blocks;
  Var w_out;
  std::vector<Var> ordered;  // flat view aligned with visit_params
};

inline ModelVars bind_model(Tape& t, const Model& m) {
  ModelVars v;
  auto bind = [&](const Tensor& p) {
    Var var = t.leaf(p);
    v.ordered.push_back(var);
    return var;
  };
  v.w_in = bind(m.w_in);
  for (const MTGCM& b : m.blocks) {
    MTGCMVars bv;
    bv.gamma = bind(b.bn.gamma);
    bv.beta = bind(b.bn.beta);
    bv.gs1.adj = bind(b.gs1.adj);
    bv.gs2.adj = bind(b.gs2.adj);
    bv.gs1.weight = bind(b.gs1.weight);
    bv.gs2.weight = bind(b.gs2.weight);
    for (const Tensor& a : b.ls.adj) bv.ls.adj.push_back(bind(a));
    bv.ls.weight = bind(b.ls.weight);
    bv.jt.adj = bind(b.jt.adj);
    bv.jt.weight = bind(b.jt.weight);
    v.blocks.push_back(std::move(bv));
  }
  v.w_out = bind(m.w_out);
  return v;
}

/// One MTGCM: Z = BN(X); S = gs2(tanh(gs1(Z))); Js = jtgc(tanh(lstgc(Z)));
/// out = tanh(S + Js) + X. Streams fuse by elementwise sum, then the
/// activation, then the residual. With all graph-conv weights zero and BN
/// affine at identity this is exactly the identity map.
inline Var mtgcm_forward(Tape& t, Var x, const MTGCMVars& vars, MTGCM& block,
                         std::size_t joints, Mode mode, bool update_running) {
  const bool train = (mode == Mode::train);
  Tensor* rm = (train && update_running) ? &block.bn.running_mean : nullptr;
  Tensor* rv = (train && update_running) ? &block.bn.running_var : nullptr;
  if (!train) {
    rm = &block.bn.running_mean;
    rv = &block.bn.running_var;
  }
  Var z = t.batch_norm(x, vars.gamma, vars.beta, train, rm, rv,
                       block.bn.momentum, block.bn.eps);
  Var s = gstgc_forward(t, t.tanh(gstgc_forward(t, z, vars.gs1)), vars.gs2);
  Var js = jtgc_forward(t, t.tanh(lstgc_forward(t, z, vars.ls, joints)),
                        vars.jt, joints);
  return t.add(t.tanh(t.add(s, js)), x);
}

/// Full model on a batch x N x T input in joint-major sub-joint row order.
/// Returns batch x N x T_out. With use_global_residual the last observed
/// value of each sub-joint trajectory is added to every predicted step.
inline Var model_forward(Tape& t, Model& m, const ModelVars& vars, Var f,
                         Mode mode, bool update_running = true) {
  const Tensor& tf = t.value(f);
  require(tf.rank() == 3, "model_forward: input must be batch x N x T");
  require(tf.dim(1) == m.config.subjoints(),
          "model_forward: input has " + std::to_string(tf.dim(1)) +
              " rows, model expects " + std::to_string(m.config.subjoints()));
  require(tf.dim(2) == m.config.t_in,
          "model_forward: input has " + std::to_string(tf.dim(2)) +
              " frames, input map expects " + std::to_string(m.config.t_in));
  Var e = t.matmul_right(f, vars.w_in);
  for (std::size_t l = 0; l < m.blocks.size(); ++l)
    e = mtgcm_forward(t, e, vars.blocks[l], m.blocks[l], m.config.joints,
                      mode, update_running);
  Var p = t.matmul_right(e, vars.w_out);
  if (m.config.use_global_residual) p = t.add_last_frame(p, f);
  return p;
}

/// Gradients for all parameters after backward(), in visit_params order.
inline std::vector<Tensor> model_grads(const Tape& t, const ModelVars& vars) {
  std::vector<Tensor> out;
  out.reserve(vars.ordered.size());
  for (Var v : vars.ordered) out.push_back(t.grad(v));
  return out;
}

}  // namespace mtgcn
