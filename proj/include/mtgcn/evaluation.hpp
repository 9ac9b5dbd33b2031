#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "mtgcn/network.hpp"
#include "mtgcn/skeleton.hpp"
#include "mtgcn/training.hpp"

namespace mtgcn {

/// Per-action, per-horizon MPJPE table plus the across-action average row
/// and the model's parameter count.
struct EvalReport {
  std::vector<std::string> actions;      // sorted
  std::vector<double> horizons_ms;       // ascending
  std::vector<std::vector<double>> mpjpe_mm;  // [action][horizon]
  std::vector<double> average;           // per horizon, mean over actions
  std::size_t param_count = 0;

  void to_csv(std::ostream& out) const {
    char buf[128];
    out << "# count_params " << param_count << "\n";
    out << "action,horizon_ms,mpjpe_mm\n";
    auto row = [&](const std::string& a, const std::vector<double>& vals) {
      for (std::size_t h = 0; h < horizons_ms.size(); ++h) {
        std::snprintf(buf, sizeof(buf), "%s,%g,%.17g\n", a.c_str(),
                      horizons_ms[h], vals[h]);
        out << buf;
      }
    };
    for (std::size_t a = 0; a < actions.size(); ++a) row(actions[a], mpjpe_mm[a]);
    row("average", average);
  }

  void to_text(std::ostream& out) const {
    char buf[64];
    out << "MPJPE (mm) per action and horizon; parameters: " << param_count
        << "\n";
    std::size_t w = 12;
    for (const std::string& a : actions) w = std::max(w, a.size() + 2);
    std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(w), "action");
    out << buf;
    for (double h : horizons_ms) {
      std::snprintf(buf, sizeof(buf), "%10gms", h);
      out << buf;
    }
    out << "\n";
    auto row = [&](const std::string& a, const std::vector<double>& vals) {
      std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(w), a.c_str());
      out << buf;
      for (double v : vals) {
        std::snprintf(buf, sizeof(buf), "%12.4f", v);
        out << buf;
      }
      out << "\n";
    };
    for (std::size_t a = 0; a < actions.size(); ++a) row(actions[a], mpjpe_mm[a]);
    row("average", average);
  }
};

/// Mean over joints of the Euclidean error at exactly one predicted frame
/// (1-based), the per-frame convention of motion-prediction tables.
inline double mpjpe_at_horizon(const Tensor& pred, const Tensor& gt,
                               std::size_t frame) {
  require(pred.rank() == 2 && pred.same_shape(gt),
          "mpjpe_at_horizon: prediction and target must be equal N x T_out "
          "matrices");
  require(pred.dim(0) % 3 == 0,
          "mpjpe_at_horizon: row count must be divisible by 3");
  require(frame >= 1 && frame <= pred.dim(1),
          "mpjpe_at_horizon: frame " + std::to_string(frame) +
              " outside 1.." + std::to_string(pred.dim(1)));
  const std::size_t joints = pred.dim(0) / 3;
  const std::size_t t = frame - 1;
  double acc = 0.0;
  for (std::size_t j = 0; j < joints; ++j) {
    double sq = 0.0;
    for (std::size_t d = 0; d < 3; ++d) {
      const double e = pred.at(3 * j + d, t) - gt.at(3 * j + d, t);
      sq += e * e;
    }
    acc += std::sqrt(sq);
  }
  return acc / static_cast<double>(joints);
}

/// Evaluate a model (eval mode, BN frozen) over a sample set: per-frame
/// MPJPE at each millisecond horizon, averaged over samples within each
/// action label; the report's average row is the mean of the per-action
/// values. Deterministic and side-effect free on the model.
inline EvalReport evaluate(Model& model, const std::vector<Sample>& dataset,
                           const std::vector<double>& horizons_ms,
                           const SkeletonSpec& spec) {
  require(!dataset.empty(), "evaluate: dataset is empty");
  std::vector<double> horizons = horizons_ms;
  std::sort(horizons.begin(), horizons.end());
  std::vector<std::size_t> frames;
  for (double h : horizons) {
    const std::size_t f = ms_to_frame(h, spec.fps);
    require(f <= model.config.t_out,
            "evaluate: horizon " + std::to_string(h) + " ms needs frame " +
                std::to_string(f) + " but the model predicts only " +
                std::to_string(model.config.t_out));
    frames.push_back(f);
  }

  // action -> (count, per-horizon error sum), keyed in sorted order
  std::map<std::string, std::pair<std::size_t, std::vector<double>>> acc;
  const std::size_t n = model.config.subjoints();
  for (const Sample& s : dataset) {
    Tape tape;
    ModelVars vars = bind_model(tape, model);
    Var f = tape.constant(s.input.reshaped({1, n, model.config.t_in}));
    Var pred_v = model_forward(tape, model, vars, f, Mode::eval);
    const Tensor pred =
        tape.value(pred_v).reshaped({n, model.config.t_out});
    const std::string action = s.action.empty() ? "unlabeled" : s.action;
    auto& slot = acc[action];
    if (slot.second.empty()) slot.second.assign(frames.size(), 0.0);
    slot.first += 1;
    for (std::size_t h = 0; h < frames.size(); ++h)
      slot.second[h] += mpjpe_at_horizon(pred, s.target, frames[h]);
  }

  EvalReport report;
  report.horizons_ms = horizons;
  report.param_count = count_params(model);
  report.average.assign(frames.size(), 0.0);
  for (const auto& [action, slot] : acc) {
    report.actions.push_back(action);
    std::vector<double> row(frames.size());
    for (std::size_t h = 0; h < frames.size(); ++h) {
      row[h] = slot.second[h] / static_cast<double>(slot.first);
      report.average[h] += row[h];
    }
    report.mpjpe_mm.push_back(std::move(row));
  }
  for (double& v : report.average) v /= static_cast<double>(acc.size());
  return report;
}

}  // namespace mtgcn
