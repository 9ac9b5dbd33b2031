// Command-line surface for the trajectory-graph motion predictor:
// train / predict / eval / gradcheck / synth / augment / params.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "mtgcn/checkpoint.hpp"
#include "mtgcn/commands.hpp"

namespace {

using mtgcn::RunConfig;

// Every field is overridable per subcommand; values are funneled through
// RunConfig::apply so flags and config-file keys behave identically.
void add_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--config", "flat key=value config file (merged first)")
      ->check(CLI::ExistingFile);
  static const char* keys[] = {
      "joints",     "t_in",         "t_out",         "hidden",
      "layers",     "use_global_residual",           "batch_size",
      "lr0",        "lr_decay",     "clip_norm",     "lambda",
      "epochs",     "seed",         "augment_mirror","use_bone_loss",
      "stride",     "count",        "length",        "horizons",
      "skeleton",   "data_dir",     "checkpoint",    "input",
      "out",        "report_csv",   "report_txt",    "metrics_csv"};
  for (const char* key : keys) {
    cmd->add_option(std::string("--") + key)
        ->each([&cfg, key](const std::string& v) { cfg.apply(key, v); })
        ->take_last();
  }
  // --data as the documented spelling for the data directory
  cmd->add_option("--data")->each(
      [&cfg](const std::string& v) { cfg.apply("data_dir", v); });
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;

  // Config files merge before any flag override, regardless of position.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        cfg.load_file(argv[i + 1]);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
      }
    }
  }

  CLI::App app{"multi-grained trajectory graph convolutional motion prediction"};
  app.require_subcommand(1);
  CLI::App* c_train = app.add_subcommand("train", "train a model on a sequence directory");
  CLI::App* c_predict = app.add_subcommand("predict", "predict future frames for one sequence");
  CLI::App* c_eval = app.add_subcommand("eval", "MPJPE report over a sequence directory");
  CLI::App* c_gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check (tiny configs)");
  CLI::App* c_synth = app.add_subcommand("synth", "generate synthetic sequences");
  CLI::App* c_augment = app.add_subcommand("augment", "write mirror-transformed copies of a directory");
  CLI::App* c_params = app.add_subcommand("params", "print the parameter count");
  for (CLI::App* c : {c_train, c_predict, c_eval, c_gradcheck, c_synth,
                      c_augment, c_params})
    add_options(c, cfg);

  CLI11_PARSE(app, argc, argv);

  std::cout << "# resolved configuration\n" << cfg.resolved() << "#\n";
  try {
    if (c_train->parsed()) return mtgcn::cmd_train(cfg);
    if (c_predict->parsed()) return mtgcn::cmd_predict(cfg);
    if (c_eval->parsed()) return mtgcn::cmd_eval(cfg);
    if (c_gradcheck->parsed()) return mtgcn::cmd_gradcheck(cfg);
    if (c_synth->parsed()) return mtgcn::cmd_synth(cfg);
    if (c_augment->parsed()) return mtgcn::cmd_augment(cfg);
    if (c_params->parsed()) return mtgcn::cmd_params(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
