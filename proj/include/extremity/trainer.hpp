#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "extremity/agents.hpp"
#include "extremity/env.hpp"

namespace extremity {

enum class EvalMode { kSample, kArgmax };

const char* to_string(EvalMode m);
EvalMode parse_eval_mode(std::string_view s);

int default_minibatches(int n_dims);  // 5000 / 20000 / 50000 for 1 / 2 / >=3

struct TrainConfig {
  int n_dims = 1;
  ReceiverKind receiver_kind = ReceiverKind::kBasic;
  int batch_size = 64;
  double learning_rate = 5e-4;
  int num_minibatches = 0;  // 0 = default for n_dims
  int num_trials = 10;
  int eval_games = 5000;
  uint64_t seed = 1;
  bool baseline_enabled = true;  // subtract the minibatch mean reward
  int rolling_window = 10;
  EvalMode eval_mode = EvalMode::kSample;
  bool eval_batch_stats = false;  // batch-norm sensitivity mode at evaluation

  int resolved_minibatches() const { return num_minibatches > 0 ? num_minibatches : default_minibatches(n_dims); }
  void validate() const;
};

struct PlayedGame {
  GameInstance game;
  ReceiverView view;
  EpisodeTrace trace;
};

// One played minibatch with the batched forward caches train_step consumes.
struct Minibatch {
  std::vector<PlayedGame> games;
  double batch_accuracy = 0.0;
  SenderNet::Forward sender_fwd;
  std::optional<BasicReceiverNet::Forward> basic_fwd;
  std::optional<AttentionalReceiverNet::Stage1Forward> attn1_fwd;
  std::optional<AttentionalReceiverNet::Stage2Forward> attn2_fwd;
};

// Plays batch_size fresh games: sender samples (m_s, m_p), the receiver sees
// an independently permuted context and samples its actions; reward is 1.0
// iff the chosen position holds the target.
Minibatch play_minibatch(SenderNet& sender, ReceiverNet& receiver, const TrainConfig& cfg, Rng& rng);

// Joint REINFORCE update of both agents from one minibatch, one Adam step per
// parameter. Advantage is reward minus the batch mean when the baseline is on.
void train_step(SenderNet& sender, ReceiverNet& receiver, const Minibatch& mb, const TrainConfig& cfg);

struct EvalRecord {
  long game = 0;
  int n_dims = 0;
  int target_index = 0;  // sender order
  std::vector<DimPol> signature;
  DimPol canonical;
  int ms = 0;
  int mp = 0;
  std::optional<int> attention_dim;
  int choice = 0;  // receiver order
  bool correct = false;
  std::vector<double> context_degrees;  // sender-order objects, flattened
  int permuted_target_index = -1;       // in-memory only, not serialized
};

// Plays eval_games fresh games with evaluation-mode forward passes and no
// parameter updates. Actions are sampled unless cfg.eval_mode is kArgmax.
std::vector<EvalRecord> evaluate(SenderNet& sender, ReceiverNet& receiver, const TrainConfig& cfg, Rng& rng);

double accuracy_of(const std::vector<EvalRecord>& records);

struct TrialResult {
  int trial_id = 0;
  std::vector<double> batch_accuracy;    // one entry per training step
  std::vector<double> rolling_accuracy;  // mean of the last rolling_window entries
  double final_accuracy = 0.0;
  std::vector<EvalRecord> records;
  std::unique_ptr<Agents> agents;
};

// Called after each training step with the 1-based step and rolling accuracy.
using ProgressFn = std::function<void(int step, double rolling_accuracy)>;

// Fresh agents, resolved_minibatches() training steps, then evaluation.
TrialResult run_trial(const TrainConfig& cfg, uint64_t seed, const ProgressFn& progress = {});

// cfg.num_trials trials with seeds trial_seed(cfg.seed, i), at most `parallel`
// running concurrently. Results are independent of the parallelism level.
std::vector<TrialResult> run_trials(const TrainConfig& cfg, int parallel);

}  // namespace extremity
