#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "mtgcn/mirror.hpp"
#include "mtgcn/motion.hpp"
#include "mtgcn/network.hpp"
#include "mtgcn/optim.hpp"
#include "mtgcn/skeleton.hpp"
#include "mtgcn/tape.hpp"

namespace mtgcn {

struct TrainConfig {
  std::size_t batch_size = 32;
  double lr0 = 0.001;
  double lr_decay = 0.98;  // per epoch
  double clip_norm = 1.0;
  double lambda = 0.1;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  bool augment_mirror = true;
  bool use_bone_loss = true;

  void validate() const {
    require(batch_size > 0 && lr0 > 0.0 && lr_decay > 0.0 && clip_norm > 0.0,
            "train config: batch size, learning rate, decay and clip norm "
            "must be positive");
    require(lambda >= 0.0, "train config: lambda must be non-negative");
  }
};

/// One training sample in joint-major sub-joint order.
struct Sample {
  Tensor input;       // N x T
  Tensor target;      // N x T_out
  Tensor gt_lengths;  // B, ground-truth bone lengths
  std::string action;
};

struct Batch {
  Tensor inputs;   // b x N x T
  Tensor targets;  // b x N x T_out
  Tensor lengths;  // b x B
};

// ---------------------------------------------------------------- losses ---

/// Eq.-style MPJPE: mean over batch, frames and joints of the per-joint
/// Euclidean error. Zero exactly when pred == gt.
inline double mpjpe_loss(const Tensor& pred, const Tensor& gt) {
  Tape t;
  return t.value(t.mpjpe(t.constant(pred), gt))[0];
}

/// Bone length constraint: mean absolute deviation of predicted bone
/// lengths (recomputed per frame) from the ground-truth lengths.
inline double bone_length_loss(const Tensor& pred, const Tensor& gt_lengths,
                               const SkeletonSpec& spec) {
  Tape t;
  return t.value(t.bone_deviation(t.constant(pred), gt_lengths, spec.bones))[0];
}

/// mpjpe + lambda * bone term.
inline double total_loss(const Tensor& pred, const Tensor& gt,
                         const Tensor& gt_lengths, const SkeletonSpec& spec,
                         double lambda = 0.1) {
  require(lambda >= 0.0, "total_loss: lambda must be non-negative");
  const double m = mpjpe_loss(pred, gt);
  if (lambda == 0.0) return m;
  return m + lambda * bone_length_loss(pred, gt_lengths, spec);
}

/// lr0 * decay^epoch.
inline double lr_at_epoch(std::size_t epoch, const TrainConfig& cfg) {
  return cfg.lr0 * std::pow(cfg.lr_decay, static_cast<double>(epoch));
}

// -------------------------------------------------------------- batching ---

/// Ground-truth bone length per sample: mean over the observed window's
/// frames (the loss treats l_b as a constant of the sample).
inline Tensor mean_bone_lengths(const MotionSequence& observed,
                                const SkeletonSpec& spec) {
  Tensor acc({spec.bone_count()});
  for (std::size_t t = 0; t < observed.frames(); ++t) {
    const Tensor l = bone_lengths(frame_of(observed, t), spec);
    for (std::size_t b = 0; b < acc.numel(); ++b) acc[b] += l[b];
  }
  const double inv = 1.0 / static_cast<double>(observed.frames());
  for (std::size_t b = 0; b < acc.numel(); ++b) acc[b] *= inv;
  return acc;
}

/// Split one window of t_in + t_out frames into a training sample.
inline Sample window_to_sample(const MotionSequence& w,
                               const SkeletonSpec& spec, std::size_t t_in,
                               std::size_t t_out) {
  require(w.frames() == t_in + t_out,
          "window has " + std::to_string(w.frames()) + " frames, expected " +
              std::to_string(t_in + t_out));
  const MotionSequence observed = window(w, 0, t_in);
  const MotionSequence future = window(w, t_in, t_out);
  return Sample{to_global_subjoint(observed), to_global_subjoint(future),
                mean_bone_lengths(observed, spec), w.action};
}

/// Training set from canonical windows. With mirror augmentation the set is
/// the union of the originals and their mirror transforms (exactly 2x).
inline std::vector<Sample> build_dataset(
    const std::vector<MotionSequence>& windows, const SkeletonSpec& spec,
    std::size_t t_in, std::size_t t_out, bool augment_mirror) {
  std::vector<Sample> out;
  out.reserve(windows.size() * (augment_mirror ? 2 : 1));
  for (const MotionSequence& w : windows)
    out.push_back(window_to_sample(w, spec, t_in, t_out));
  if (augment_mirror)
    for (const MotionSequence& w : windows)
      out.push_back(
          window_to_sample(mirror_transform(w, spec), spec, t_in, t_out));
  return out;
}

/// Deterministic per-(seed, epoch) shuffle, then batches of batch_size with
/// the last partial batch kept.
inline std::vector<Batch> make_batches(const std::vector<Sample>& dataset,
                                       const TrainConfig& cfg,
                                       std::size_t epoch) {
  require(!dataset.empty(), "make_batches: dataset is empty");
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(Rng::combine(cfg.seed, epoch));
  shuffle(order, rng);

  const std::size_t n = dataset[0].input.dim(0);
  const std::size_t t_in = dataset[0].input.dim(1);
  const std::size_t t_out = dataset[0].target.dim(1);
  const std::size_t nb = dataset[0].gt_lengths.numel();

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t b = std::min(cfg.batch_size, order.size() - start);
    Batch batch{Tensor({b, n, t_in}), Tensor({b, n, t_out}),
                Tensor({b, nb})};
    for (std::size_t k = 0; k < b; ++k) {
      const Sample& s = dataset[order[start + k]];
      require(s.input.dim(0) == n && s.input.dim(1) == t_in &&
                  s.target.dim(1) == t_out && s.gt_lengths.numel() == nb,
              "make_batches: inconsistent sample shapes");
      std::copy(s.input.data(), s.input.data() + s.input.numel(),
                batch.inputs.data() + k * n * t_in);
      std::copy(s.target.data(), s.target.data() + s.target.numel(),
                batch.targets.data() + k * n * t_out);
      std::copy(s.gt_lengths.data(), s.gt_lengths.data() + nb,
                batch.lengths.data() + k * nb);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

// ------------------------------------------------------------ train loop ---

struct EpochMetrics {
  std::size_t epoch;
  double lr;
  double total_loss;
  double mpjpe_term;
  double bone_term;
};

struct TrainLog {
  std::vector<EpochMetrics> epochs;
};

inline void write_metrics_csv(const TrainLog& log, std::ostream& out) {
  out << "epoch,lr,total_loss,mpjpe_term,bone_term\n";
  char buf[160];
  for (const EpochMetrics& e : log.epochs) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", e.epoch,
                  e.lr, e.total_loss, e.mpjpe_term, e.bone_term);
    out << buf;
  }
}

/// Train in place: per step forward -> Eq.-6 loss -> backward -> global L2
/// clip -> Adam with the per-epoch learning rate. Epoch metrics are means
/// of the step losses. Fully reproducible for a given seed; halts with a
/// diagnostic if the loss goes non-finite.
inline TrainLog train(Model& model, const std::vector<Sample>& dataset,
                      const SkeletonSpec& spec, const TrainConfig& cfg) {
  cfg.validate();
  require(!dataset.empty(), "train: dataset is empty");
  require(spec.subjoint_count() == model.config.subjoints(),
          "train: skeleton joint count does not match the model");

  AdamState adam;
  TrainLog log;
  const std::vector<Tensor*> params = model.param_ptrs();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(epoch, cfg);
    const std::vector<Batch> batches = make_batches(dataset, cfg, epoch);
    double sum_total = 0.0, sum_mpjpe = 0.0, sum_bone = 0.0;
    for (std::size_t step = 0; step < batches.size(); ++step) {
      const Batch& batch = batches[step];
      Tape tape;
      ModelVars vars = bind_model(tape, model);
      Var f = tape.constant(batch.inputs);
      Var pred = model_forward(tape, model, vars, f, Mode::train, true);
      Var mp = tape.mpjpe(pred, batch.targets);
      Var loss = mp;
      double bone_val = 0.0;
      if (cfg.use_bone_loss) {
        Var bd = tape.bone_deviation(pred, batch.lengths, spec.bones);
        bone_val = tape.value(bd)[0];
        loss = tape.add(mp, tape.scale(bd, cfg.lambda));
      }
      const double total = tape.value(loss)[0];
      if (!std::isfinite(total))
        fail_runtime("train: non-finite loss at epoch " +
                     std::to_string(epoch) + ", step " + std::to_string(step));
      tape.backward(loss);
      std::vector<Tensor> grads = model_grads(tape, vars);
      clip_gradients_l2(grads, cfg.clip_norm);
      adam_step(params, grads, adam, lr);

      sum_total += total;
      sum_mpjpe += tape.value(mp)[0];
      sum_bone += bone_val;
    }
    const double inv = 1.0 / static_cast<double>(batches.size());
    log.epochs.push_back(EpochMetrics{epoch, lr, sum_total * inv,
                                      sum_mpjpe * inv, sum_bone * inv});
  }
  return log;
}

}  // namespace mtgcn
