#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mtgcn/network.hpp"
#include "mtgcn/training.hpp"

namespace mtgcn {

/// Merged, fully-resolved run configuration: model + training
/// hyperparameters + paths. Flat key=value config file, every field
/// overridable by a command-line flag.
struct RunConfig {
  // model
  std::size_t joints = 22;  // used when no skeleton file is given
  std::size_t t_in = 10;
  std::size_t t_out = 10;
  std::size_t hidden = 128;
  std::size_t layers = 4;
  bool use_global_residual = false;
  // training
  std::size_t batch_size = 32;
  double lr0 = 0.001;
  double lr_decay = 0.98;
  double clip_norm = 1.0;
  double lambda = 0.1;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  bool augment_mirror = true;
  bool use_bone_loss = true;
  std::size_t stride = 0;  // 0 -> t_out
  // evaluation / generation
  std::vector<double> horizons_ms{80, 160, 320, 400};
  std::size_t count = 20;
  std::size_t length = 20;
  // paths
  std::string skeleton;
  std::string data_dir;
  std::string checkpoint;
  std::string input;
  std::string out;
  std::string report_csv;
  std::string report_txt;
  std::string metrics_csv;

  std::size_t effective_stride() const { return stride == 0 ? t_out : stride; }

  ModelConfig model_config(std::size_t j) const {
    ModelConfig m;
    m.joints = j;
    m.t_in = t_in;
    m.t_out = t_out;
    m.hidden = hidden;
    m.layers = layers;
    m.use_global_residual = use_global_residual;
    m.lambda = lambda;
    m.validate();
    return m;
  }

  TrainConfig train_config() const {
    TrainConfig t;
    t.batch_size = batch_size;
    t.lr0 = lr0;
    t.lr_decay = lr_decay;
    t.clip_norm = clip_norm;
    t.lambda = lambda;
    t.epochs = epochs;
    t.seed = seed;
    t.augment_mirror = augment_mirror;
    t.use_bone_loss = use_bone_loss;
    t.validate();
    return t;
  }

  void apply(const std::string& key, const std::string& value) {
    auto to_size = [&](const std::string& v) {
      std::size_t pos = 0;
      unsigned long long r = 0;
      try {
        r = std::stoull(v, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      require(pos == v.size(), "config: bad integer for " + key + ": " + v);
      return static_cast<std::size_t>(r);
    };
    auto to_double = [&](const std::string& v) {
      std::size_t pos = 0;
      double r = 0;
      try {
        r = std::stod(v, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      require(pos == v.size(), "config: bad number for " + key + ": " + v);
      return r;
    };
    auto to_bool = [&](const std::string& v) {
      if (v == "1" || v == "true" || v == "on") return true;
      if (v == "0" || v == "false" || v == "off") return false;
      require(false, "config: bad boolean for " + key + ": " + v);
      return false;
    };

    if (key == "joints") joints = to_size(value);
    else if (key == "t_in") t_in = to_size(value);
    else if (key == "t_out") t_out = to_size(value);
    else if (key == "hidden") hidden = to_size(value);
    else if (key == "layers") layers = to_size(value);
    else if (key == "use_global_residual") use_global_residual = to_bool(value);
    else if (key == "batch_size") batch_size = to_size(value);
    else if (key == "lr0") lr0 = to_double(value);
    else if (key == "lr_decay") lr_decay = to_double(value);
    else if (key == "clip_norm") clip_norm = to_double(value);
    else if (key == "lambda") lambda = to_double(value);
    else if (key == "epochs") epochs = to_size(value);
    else if (key == "seed") seed = to_size(value);
    else if (key == "augment_mirror") augment_mirror = to_bool(value);
    else if (key == "use_bone_loss") use_bone_loss = to_bool(value);
    else if (key == "stride") stride = to_size(value);
    else if (key == "count") count = to_size(value);
    else if (key == "length") length = to_size(value);
    else if (key == "horizons") {
      horizons_ms.clear();
      std::istringstream hs(value);
      std::string tok;
      while (std::getline(hs, tok, ','))
        if (!tok.empty()) horizons_ms.push_back(to_double(tok));
      require(!horizons_ms.empty(), "config: empty horizon list");
    }
    else if (key == "skeleton") skeleton = value;
    else if (key == "data_dir") data_dir = value;
    else if (key == "checkpoint") checkpoint = value;
    else if (key == "input") input = value;
    else if (key == "out") out = value;
    else if (key == "report_csv") report_csv = value;
    else if (key == "report_txt") report_txt = value;
    else if (key == "metrics_csv") metrics_csv = value;
    else require(false, "config: unknown key '" + key + "'");
  }

  /// Merge `key = value` lines (# comments, blank lines allowed).
  void load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail_runtime("cannot open config file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      require(eq != std::string::npos, "config " + path + ": line " +
                                           std::to_string(lineno) +
                                           " is not key=value");
      apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  /// Every field as sorted key=value lines; emitted before commands run.
  std::string resolved() const {
    char num[64];
    std::map<std::string, std::string> kv;
    auto put_size = [&](const char* k, std::size_t v) {
      kv[k] = std::to_string(v);
    };
    auto put_double = [&](const char* k, double v) {
      std::snprintf(num, sizeof(num), "%.17g", v);
      kv[k] = num;
    };
    put_size("joints", joints);
    put_size("t_in", t_in);
    put_size("t_out", t_out);
    put_size("hidden", hidden);
    put_size("layers", layers);
    kv["use_global_residual"] = use_global_residual ? "1" : "0";
    put_size("batch_size", batch_size);
    put_double("lr0", lr0);
    put_double("lr_decay", lr_decay);
    put_double("clip_norm", clip_norm);
    put_double("lambda", lambda);
    put_size("epochs", epochs);
    put_size("seed", static_cast<std::size_t>(seed));
    kv["augment_mirror"] = augment_mirror ? "1" : "0";
    kv["use_bone_loss"] = use_bone_loss ? "1" : "0";
    put_size("stride", stride);
    put_size("count", count);
    put_size("length", length);
    {
      std::string h;
      for (std::size_t i = 0; i < horizons_ms.size(); ++i) {
        std::snprintf(num, sizeof(num), "%g", horizons_ms[i]);
        h += (i ? "," : "") + std::string(num);
      }
      kv["horizons"] = h;
    }
    kv["skeleton"] = skeleton;
    kv["data_dir"] = data_dir;
    kv["checkpoint"] = checkpoint;
    kv["input"] = input;
    kv["out"] = out;
    kv["report_csv"] = report_csv;
    kv["report_txt"] = report_txt;
    kv["metrics_csv"] = metrics_csv;

    std::string s;
    for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
    return s;
  }
};

}  // namespace mtgcn
