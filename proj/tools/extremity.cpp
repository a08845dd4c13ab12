#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "extremity/commands.hpp"
#include "extremity/io.hpp"

namespace {

using namespace extremity;

// Per-command option bundle; flags override config-file values.
struct CommonOpts {
  std::string config_path;
  std::optional<int> dims;
  std::optional<std::string> receiver;
  std::optional<int> trials;
  std::optional<int> minibatches;
  std::optional<uint64_t> seed;
  std::optional<std::string> baseline;
  std::optional<std::string> eval_mode;
  std::string out_dir = "out";
  int parallel = 1;
};

void add_common_options(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "configuration file (key = value lines)");
  cmd->add_option("--dims", opts.dims, "number of gradable dimensions");
  cmd->add_option("--receiver", opts.receiver, "receiver architecture: basic | attentional");
  cmd->add_option("--trials", opts.trials, "trials per grid cell");
  cmd->add_option("--minibatches", opts.minibatches, "training minibatches per trial");
  cmd->add_option("--seed", opts.seed, "master seed");
  cmd->add_option("--baseline", opts.baseline, "mean-reward baseline: on | off");
  cmd->add_option("--eval-mode", opts.eval_mode, "evaluation action choice: sample | argmax");
  cmd->add_option("--out", opts.out_dir, "output directory")->envname("EXTREMITY_OUT");
  cmd->add_option("--parallel", opts.parallel, "max trials running concurrently");
}

TrainConfig build_config(const CommonOpts& opts) {
  TrainConfig cfg;
  if (!opts.config_path.empty()) cfg = parse_config_file(opts.config_path);
  if (opts.dims) cfg.n_dims = *opts.dims;
  if (opts.receiver) cfg.receiver_kind = parse_receiver_kind(*opts.receiver);
  if (opts.trials) cfg.num_trials = *opts.trials;
  if (opts.minibatches) cfg.num_minibatches = *opts.minibatches;
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.baseline) cfg.baseline_enabled = *opts.baseline == "on" || *opts.baseline == "true";
  if (opts.eval_mode) cfg.eval_mode = parse_eval_mode(*opts.eval_mode);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extremity: signaling-game training over gradable scales, with protocol analysis"};
  app.require_subcommand(1);

  CommonOpts train_opts, repro_opts, eval_opts_common, analyze_opts;
  std::string eval_checkpoint;
  int eval_games = 5000;
  bool eval_batch_stats = false;
  std::vector<std::string> analyze_files;

  auto* train = app.add_subcommand("train", "run one training trial and write its outputs");
  add_common_options(train, train_opts);

  auto* repro = app.add_subcommand("reproduce", "run the dims x trials grid and summarize");
  add_common_options(repro, repro_opts);

  auto* eval = app.add_subcommand("eval", "evaluate a saved checkpoint on fresh games");
  eval->add_option("checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval->add_option("--games", eval_games, "number of evaluation games");
  eval->add_flag("--batch-stats", eval_batch_stats, "normalize with batch statistics at evaluation");
  add_common_options(eval, eval_opts_common);

  auto* analyze = app.add_subcommand("analyze", "metrics and bar panels from eval-record files");
  analyze->add_option("records", analyze_files, "eval_records.csv files")->required();
  add_common_options(analyze, analyze_opts);

  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference check of all architectures");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(build_config(train_opts), train_opts.out_dir);
    if (repro->parsed()) {
      ReproduceOptions r;
      r.only_dims = repro_opts.dims;
      r.parallel = repro_opts.parallel;
      TrainConfig base = build_config(repro_opts);
      return cmd_reproduce(base, r, repro_opts.out_dir);
    }
    if (eval->parsed()) {
      EvalOptions e;
      e.checkpoint = eval_checkpoint;
      e.eval_games = eval_games;
      e.seed = eval_opts_common.seed.value_or(1);
      if (eval_opts_common.eval_mode) e.eval_mode = parse_eval_mode(*eval_opts_common.eval_mode);
      e.eval_batch_stats = eval_batch_stats;
      return cmd_eval(e, eval_opts_common.out_dir);
    }
    if (analyze->parsed()) {
      std::vector<std::filesystem::path> files(analyze_files.begin(), analyze_files.end());
      return cmd_analyze(files, analyze_opts.out_dir);
    }
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
