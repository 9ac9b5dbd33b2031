#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mtgcn/network.hpp"
#include "mtgcn/skeleton.hpp"
#include "mtgcn/training.hpp"

namespace mtgcn {

struct GradCheckGroup {
  std::string group;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double threshold = 1e-4;
  bool all_pass() const {
    for (const GradCheckGroup& g : groups)
      if (!g.pass) return false;
    return !groups.empty();
  }
};

namespace detail {

/// |a-b| relative to max(|a|,|b|), floored at 1e-4 so finite-difference
/// noise on near-zero gradients cannot trip the check.
inline double rel_err(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-4});
  return std::abs(a - b) / denom;
}

inline std::string group_of(const std::string& param_name) {
  const auto bracket = param_name.find('[');
  return bracket == std::string::npos ? param_name
                                      : param_name.substr(0, bracket);
}

}  // namespace detail

/// Compare backward-pass gradients of the Eq.-6 training loss against
/// central finite differences for every parameter entry, reported as the
/// max relative error per parameter group. Forwards run in train mode with
/// frozen running stats so repeated evaluations are pure. The optional
/// corrupt hook perturbs the analytic gradients before comparison (test
/// fixture for checker sensitivity).
inline GradCheckReport gradcheck_model(
    const ModelConfig& cfg, const SkeletonSpec& spec, std::uint64_t seed,
    std::size_t batch = 2, double fd_step = 1e-5, double threshold = 1e-4,
    const std::function<void(std::vector<Tensor>&)>& corrupt = {}) {
  cfg.validate();
  spec.validate();
  require(spec.joints == cfg.joints,
          "gradcheck: skeleton joints do not match the config");

  Model model = Model::init(cfg, seed);
  Rng rng(Rng::combine(seed, 0x6fd1));
  const std::size_t n = cfg.subjoints();
  Tensor inputs({batch, n, cfg.t_in});
  Tensor targets({batch, n, cfg.t_out});
  for (std::size_t i = 0; i < inputs.numel(); ++i)
    inputs[i] = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < targets.numel(); ++i)
    targets[i] = rng.uniform(-1.0, 1.0);
  Tensor lengths({batch, spec.bone_count()});
  for (std::size_t i = 0; i < lengths.numel(); ++i)
    lengths[i] = rng.uniform(0.5, 1.5);

  const double lambda = cfg.lambda;
  auto loss_value = [&]() {
    Tape tape;
    ModelVars vars = bind_model(tape, model);
    Var pred = model_forward(tape, model, vars, tape.constant(inputs),
                             Mode::train, /*update_running=*/false);
    Var loss = tape.add(tape.mpjpe(pred, targets),
                        tape.scale(tape.bone_deviation(pred, lengths,
                                                       spec.bones), lambda));
    return tape.value(loss)[0];
  };

  // analytic gradients
  std::vector<Tensor> grads;
  {
    Tape tape;
    ModelVars vars = bind_model(tape, model);
    Var pred = model_forward(tape, model, vars, tape.constant(inputs),
                             Mode::train, /*update_running=*/false);
    Var loss = tape.add(tape.mpjpe(pred, targets),
                        tape.scale(tape.bone_deviation(pred, lengths,
                                                       spec.bones), lambda));
    tape.backward(loss);
    grads = model_grads(tape, vars);
  }
  if (corrupt) corrupt(grads);

  GradCheckReport report;
  report.threshold = threshold;
  const std::vector<std::string> names = model.param_names();
  const std::vector<Tensor*> params = model.param_ptrs();
  auto slot = [&](const std::string& group) -> GradCheckGroup& {
    for (GradCheckGroup& g : report.groups)
      if (g.group == group) return g;
    report.groups.push_back(GradCheckGroup{group, 0.0, true});
    return report.groups.back();
  };
  for (std::size_t k = 0; k < params.size(); ++k) {
    GradCheckGroup& g = slot(detail::group_of(names[k]));
    Tensor& p = *params[k];
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const double saved = p[i];
      p[i] = saved + fd_step;
      const double up = loss_value();
      p[i] = saved - fd_step;
      const double down = loss_value();
      p[i] = saved;
      const double fd = (up - down) / (2.0 * fd_step);
      g.max_rel_err = std::max(g.max_rel_err, detail::rel_err(grads[k][i], fd));
    }
  }
  for (GradCheckGroup& g : report.groups) g.pass = g.max_rel_err < threshold;
  return report;
}

/// Chain skeleton (bone i-1 -> i), handy where only dimensions matter.
inline SkeletonSpec chain_skeleton(std::size_t joints, int fps = 25) {
  SkeletonSpec spec;
  spec.joints = joints;
  spec.fps = fps;
  spec.hip_index = 0;
  for (std::size_t i = 1; i < joints; ++i) spec.bones.emplace_back(i - 1, i);
  spec.validate();
  return spec;
}

}  // namespace mtgcn
