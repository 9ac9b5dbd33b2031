#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mtgcn/checkpoint.hpp"
#include "mtgcn/config.hpp"
#include "mtgcn/evaluation.hpp"
#include "mtgcn/gradcheck.hpp"
#include "mtgcn/mirror.hpp"
#include "mtgcn/sequence_io.hpp"
#include "mtgcn/synth.hpp"
#include "mtgcn/training.hpp"

namespace mtgcn {

namespace detail {

inline std::vector<std::filesystem::path> sequence_files(
    const std::string& dir) {
  namespace fs = std::filesystem;
  require(fs::is_directory(dir), "not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

/// Sliding windows of win frames (stride between window starts), each
/// canonicalized. Returns the shortest sequence length seen via out-param.
inline std::vector<MotionSequence> windows_from_dir(
    const std::string& dir, const SkeletonSpec& spec, std::size_t win,
    std::size_t stride, std::size_t* shortest_frames,
    std::string* shortest_name) {
  std::vector<MotionSequence> out;
  *shortest_frames = 0;
  for (const auto& path : sequence_files(dir)) {
    const MotionSequence seq = load_sequence(path.string());
    require(seq.joints() == spec.joints,
            path.string() + ": sequence has " + std::to_string(seq.joints()) +
                " joints, skeleton has " + std::to_string(spec.joints));
    if (*shortest_frames == 0 || seq.frames() < *shortest_frames) {
      *shortest_frames = seq.frames();
      *shortest_name = path.filename().string();
    }
    if (seq.frames() < win) continue;
    for (std::size_t start = 0; start + win <= seq.frames(); start += stride)
      out.push_back(canonicalize(window(seq, start, win), spec));
  }
  return out;
}

}  // namespace detail

/// Generate synthetic sequences into the output directory.
inline int cmd_synth(const RunConfig& cfg) {
  require(!cfg.skeleton.empty(), "synth: --skeleton is required");
  require(!cfg.out.empty(), "synth: --out directory is required");
  const SkeletonSpec spec = load_skeleton(cfg.skeleton);
  std::filesystem::create_directories(cfg.out);
  const std::vector<MotionSequence> seqs =
      synth_sequences(spec, cfg.count, cfg.length, cfg.seed);
  char name[64];
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    std::snprintf(name, sizeof(name), "synth_%03zu.txt", i);
    save_sequence(seqs[i], (std::filesystem::path(cfg.out) / name).string());
  }
  std::cout << "synth: wrote " << seqs.size() << " sequences to " << cfg.out
            << "\n";
  return 0;
}

/// Mirror-transform every sequence file in the data directory, writing
/// `_mt`-suffixed siblings. Unparseable files are skipped with a warning
/// and produce a nonzero exit code at the end.
inline int cmd_augment(const RunConfig& cfg) {
  require(!cfg.skeleton.empty(), "augment: --skeleton is required");
  require(!cfg.data_dir.empty(), "augment: --data is required");
  const SkeletonSpec spec = load_skeleton(cfg.skeleton);
  const auto files = detail::sequence_files(cfg.data_dir);
  std::size_t written = 0, skipped = 0;
  for (const auto& path : files) {
    try {
      const MotionSequence seq = load_sequence(path.string());
      const MotionSequence mt = mirror_transform(seq, spec);
      std::filesystem::path out = path;
      out.replace_filename(path.stem().string() + "_mt" +
                           path.extension().string());
      save_sequence(mt, out.string());
      ++written;
    } catch (const std::exception& e) {
      std::cerr << "augment: skipping " << path.string() << ": " << e.what()
                << "\n";
      ++skipped;
    }
  }
  std::cout << "augment: wrote " << written << " mirrored sequences ("
            << skipped << " skipped)\n";
  return skipped == 0 ? 0 : 1;
}

/// Train from a directory of sequences and write checkpoint + metric log.
inline int cmd_train(const RunConfig& cfg) {
  require(!cfg.skeleton.empty(), "train: --skeleton is required");
  require(!cfg.data_dir.empty(), "train: --data is required");
  require(!cfg.out.empty(), "train: --out checkpoint path is required");
  const SkeletonSpec spec = load_skeleton(cfg.skeleton);
  const std::size_t win = cfg.t_in + cfg.t_out;
  std::size_t shortest = 0;
  std::string shortest_name;
  const std::vector<MotionSequence> windows = detail::windows_from_dir(
      cfg.data_dir, spec, win, cfg.effective_stride(), &shortest, &shortest_name);
  require(!windows.empty(),
          "train: no sequence provides a " + std::to_string(win) +
              "-frame window; shortest is '" + shortest_name + "' with " +
              std::to_string(shortest) + " frames");

  const std::vector<Sample> dataset =
      build_dataset(windows, spec, cfg.t_in, cfg.t_out, cfg.augment_mirror);
  std::cout << "train: " << windows.size() << " windows, " << dataset.size()
            << " samples" << (cfg.augment_mirror ? " (mirror augmented)" : "")
            << "\n";

  Model model = Model::init(cfg.model_config(spec.joints), cfg.seed);
  const TrainLog log = train(model, dataset, spec, cfg.train_config());
  save_checkpoint(model, cfg.out);
  const std::string metrics_path =
      cfg.metrics_csv.empty() ? cfg.out + ".metrics.csv" : cfg.metrics_csv;
  std::ofstream mf(metrics_path);
  if (!mf) fail_runtime("cannot open metrics file: " + metrics_path);
  write_metrics_csv(log, mf);
  if (!log.epochs.empty()) {
    const EpochMetrics& last = log.epochs.back();
    std::printf("train: final epoch %zu loss %.6g (mpjpe %.6g, bone %.6g)\n",
                last.epoch, last.total_loss, last.mpjpe_term, last.bone_term);
  }
  std::cout << "train: checkpoint written to " << cfg.out << ", metrics to "
            << metrics_path << "\n";
  return 0;
}

/// Predict T_out frames from the last T_in frames of one sequence file.
inline int cmd_predict(const RunConfig& cfg) {
  require(!cfg.checkpoint.empty(), "predict: --checkpoint is required");
  require(!cfg.skeleton.empty(), "predict: --skeleton is required");
  require(!cfg.input.empty(), "predict: --input sequence is required");
  require(!cfg.out.empty(), "predict: --out path is required");
  const SkeletonSpec spec = load_skeleton(cfg.skeleton);
  Model model = load_checkpoint(cfg.checkpoint);
  require(model.config.joints == spec.joints,
          "predict: checkpoint was trained for " +
              std::to_string(model.config.joints) + " joints, skeleton has " +
              std::to_string(spec.joints));
  const MotionSequence seq = load_sequence(cfg.input);
  require(seq.joints() == spec.joints, "predict: input joint count mismatch");
  require(seq.frames() >= model.config.t_in,
          "predict: input has " + std::to_string(seq.frames()) +
              " frames, the model needs at least " +
              std::to_string(model.config.t_in));
  const MotionSequence obs = canonicalize(
      window(seq, seq.frames() - model.config.t_in, model.config.t_in), spec);

  Tape tape;
  ModelVars vars = bind_model(tape, model);
  Var f = tape.constant(to_global_subjoint(obs).reshaped(
      {1, model.config.subjoints(), model.config.t_in}));
  Var pred = model_forward(tape, model, vars, f, Mode::eval);
  const Tensor out = tape.value(pred).reshaped(
      {model.config.subjoints(), model.config.t_out});
  save_sequence(from_global_subjoint(out, seq.fps, seq.action), cfg.out);
  std::cout << "predict: wrote " << model.config.t_out << " frames to "
            << cfg.out << "\n";
  return 0;
}

/// MPJPE-at-horizon evaluation over a directory of sequences.
inline int cmd_eval(const RunConfig& cfg) {
  require(!cfg.checkpoint.empty(), "eval: --checkpoint is required");
  require(!cfg.skeleton.empty(), "eval: --skeleton is required");
  require(!cfg.data_dir.empty(), "eval: --data is required");
  const SkeletonSpec spec = load_skeleton(cfg.skeleton);
  Model model = load_checkpoint(cfg.checkpoint, cfg.model_config(spec.joints));
  const std::size_t win = model.config.t_in + model.config.t_out;
  std::size_t shortest = 0;
  std::string shortest_name;
  const std::vector<MotionSequence> windows = detail::windows_from_dir(
      cfg.data_dir, spec, win, cfg.effective_stride(), &shortest, &shortest_name);
  require(!windows.empty(),
          "eval: no sequence provides a " + std::to_string(win) +
              "-frame window; shortest is '" + shortest_name + "' with " +
              std::to_string(shortest) + " frames");
  const std::vector<Sample> dataset =
      build_dataset(windows, spec, model.config.t_in, model.config.t_out,
                    /*augment_mirror=*/false);
  const EvalReport report = evaluate(model, dataset, cfg.horizons_ms, spec);
  if (!cfg.report_csv.empty()) {
    std::ofstream f(cfg.report_csv);
    if (!f) fail_runtime("cannot open report file: " + cfg.report_csv);
    report.to_csv(f);
  }
  if (!cfg.report_txt.empty()) {
    std::ofstream f(cfg.report_txt);
    if (!f) fail_runtime("cannot open report file: " + cfg.report_txt);
    report.to_text(f);
  }
  report.to_text(std::cout);
  return 0;
}

/// Finite-difference check of every parameter group on a tiny config.
inline int cmd_gradcheck(const RunConfig& cfg) {
  SkeletonSpec spec;
  if (!cfg.skeleton.empty())
    spec = load_skeleton(cfg.skeleton);
  else
    spec = chain_skeleton(cfg.joints);
  require(spec.joints <= 4 && cfg.hidden <= 8 && cfg.t_in <= 5,
          "gradcheck: requires a tiny config (J <= 4, H <= 8, T <= 5); "
          "finite differences over a larger model are not worth the wait");
  const GradCheckReport report =
      gradcheck_model(cfg.model_config(spec.joints), spec, cfg.seed);
  for (const GradCheckGroup& g : report.groups)
    std::printf("%-18s max_rel_err %.3e  %s\n", g.group.c_str(), g.max_rel_err,
                g.pass ? "PASS" : "FAIL");
  std::printf("gradcheck: %s (threshold %.1e)\n",
              report.all_pass() ? "all groups pass" : "FAILURES above",
              report.threshold);
  return report.all_pass() ? 0 : 2;
}

/// Print the model's parameter count for the configured dimensions.
inline int cmd_params(const RunConfig& cfg) {
  std::size_t joints = cfg.joints;
  if (!cfg.skeleton.empty()) joints = load_skeleton(cfg.skeleton).joints;
  const ModelConfig mc = cfg.model_config(joints);
  std::printf("J=%zu N=%zu T=%zu T_out=%zu H=%zu L=%zu -> %zu parameters\n",
              mc.joints, mc.subjoints(), mc.t_in, mc.t_out, mc.hidden,
              mc.layers, count_params(mc));
  return 0;
}

}  // namespace mtgcn
