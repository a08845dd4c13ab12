#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "extremity/trainer.hpp"

namespace extremity {

// One trial at the configured settings; writes train_log.csv, eval_records.csv,
// checkpoint.bin and manifest.json into out_dir.
int cmd_train(const TrainConfig& cfg, const std::filesystem::path& out_dir);

struct ReproduceOptions {
  std::optional<int> only_dims;  // restrict the grid to one dimension count
  int parallel = 1;
};

// Full grid (dims 1..3 x num_trials, default minibatch counts per dims unless
// overridden); per-trial outputs plus an aggregate summary JSON.
int cmd_reproduce(const TrainConfig& base, const ReproduceOptions& opts, const std::filesystem::path& out_dir);

struct EvalOptions {
  std::filesystem::path checkpoint;
  int eval_games = 5000;
  uint64_t seed = 1;
  EvalMode eval_mode = EvalMode::kSample;
  bool eval_batch_stats = false;
};

int cmd_eval(const EvalOptions& opts, const std::filesystem::path& out_dir);

// Per input record file: metrics JSON plus the four crosstab bar panels.
int cmd_analyze(const std::vector<std::filesystem::path>& record_files, const std::filesystem::path& out_dir);

// Finite-difference self-check over all three architectures; nonzero exit on
// any failure.
int cmd_gradcheck(std::ostream& out, int num_configs = 20, uint64_t seed = 20260808);

}  // namespace extremity
