#include "extremity/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace extremity {

namespace {

constexpr uint64_t kInitStream = 1;
constexpr uint64_t kTrainStream = 2;
constexpr uint64_t kEvalStream = 3;

void set_row(Matrix& m, int row, std::span<const double> values, int offset) {
  auto r = m.row(row);
  for (size_t j = 0; j < values.size(); ++j) r[offset + j] = values[j];
}

void set_onehot(Matrix& m, int row, int offset, int index) { m.row(row)[offset + index] = 1.0; }

StochasticNode draw(std::span<const double> probs, Rng& rng, bool argmax) {
  return argmax ? categorical_argmax(probs) : categorical(probs, rng);
}

// Plays `count` games through the agents in the given mode. Used for both
// training minibatches and evaluation chunks.
Minibatch play_games(SenderNet& sender, ReceiverNet& receiver, int n_dims, int count, Mode mode, bool argmax,
                     Rng& rng) {
  const int n_objects = 2 * n_dims;
  Minibatch mb;
  mb.games.resize(count);

  Matrix sender_in(count, 2 * n_dims * n_dims);
  for (int i = 0; i < count; ++i) {
    mb.games[i].game = sample_game(n_dims, rng);
    set_row(sender_in, i, encode_sender_input(mb.games[i].game), 0);
  }

  mb.sender_fwd = sender.forward(sender_in, mode);
  for (int i = 0; i < count; ++i) mb.games[i].trace.ms = draw(mb.sender_fwd.probs_ms.row(i), rng, argmax);
  for (int i = 0; i < count; ++i) mb.games[i].trace.mp = draw(mb.sender_fwd.probs_mp.row(i), rng, argmax);

  for (int i = 0; i < count; ++i) mb.games[i].view = permute_for_receiver(mb.games[i].game, rng);

  if (auto* basic = std::get_if<BasicReceiverNet>(&receiver)) {
    Matrix rx(count, 2 * n_dims * n_dims + n_dims + 2);
    for (int i = 0; i < count; ++i) {
      auto& pg = mb.games[i];
      set_row(rx, i, pg.view.flat, 0);
      set_onehot(rx, i, 2 * n_dims * n_dims, pg.trace.ms.sampled_index);
      set_onehot(rx, i, 2 * n_dims * n_dims + n_dims, pg.trace.mp.sampled_index);
    }
    mb.basic_fwd = basic->forward(rx, mode);
    for (int i = 0; i < count; ++i) mb.games[i].trace.choice = draw(mb.basic_fwd->probs.row(i), rng, argmax);
  } else {
    auto& attn = std::get<AttentionalReceiverNet>(receiver);
    Matrix s1(count, 2 * n_dims * n_dims + n_dims);
    for (int i = 0; i < count; ++i) {
      auto& pg = mb.games[i];
      set_row(s1, i, pg.view.flat, 0);
      set_onehot(s1, i, 2 * n_dims * n_dims, pg.trace.ms.sampled_index);
    }
    mb.attn1_fwd = attn.stage1(s1, mode);
    for (int i = 0; i < count; ++i) mb.games[i].trace.attention = draw(mb.attn1_fwd->dim_probs.row(i), rng, argmax);

    Matrix s2(count, 2 * n_dims + 2);
    for (int i = 0; i < count; ++i) {
      auto& pg = mb.games[i];
      set_row(s2, i, attend(pg.view.flat, n_dims, pg.trace.attention->sampled_index), 0);
      set_onehot(s2, i, n_objects, pg.trace.mp.sampled_index);
    }
    mb.attn2_fwd = attn.stage2(s2, mode);
    for (int i = 0; i < count; ++i) mb.games[i].trace.choice = draw(mb.attn2_fwd->obj_probs.row(i), rng, argmax);
  }

  double correct = 0.0;
  for (auto& pg : mb.games) {
    pg.trace.reward = pg.trace.choice.sampled_index == pg.view.permuted_target_index ? 1.0 : 0.0;
    correct += pg.trace.reward;
  }
  mb.batch_accuracy = correct / count;
  return mb;
}

}  // namespace

const char* to_string(EvalMode m) { return m == EvalMode::kSample ? "sample" : "argmax"; }

EvalMode parse_eval_mode(std::string_view s) {
  if (s == "sample") return EvalMode::kSample;
  if (s == "argmax") return EvalMode::kArgmax;
  throw std::invalid_argument("eval mode must be 'sample' or 'argmax', got '" + std::string(s) + "'");
}

int default_minibatches(int n_dims) {
  if (n_dims <= 1) return 5000;
  if (n_dims == 2) return 20000;
  return 50000;
}

void TrainConfig::validate() const {
  if (n_dims < 1) throw std::invalid_argument("config: dims must be positive");
  if (batch_size < 2) throw std::invalid_argument("config: batch_size must be at least 2");
  if (learning_rate <= 0) throw std::invalid_argument("config: learning_rate must be positive");
  if (num_minibatches < 0) throw std::invalid_argument("config: minibatches must be non-negative");
  if (num_trials < 1) throw std::invalid_argument("config: trials must be positive");
  if (eval_games < 1) throw std::invalid_argument("config: eval_games must be positive");
  if (rolling_window < 1) throw std::invalid_argument("config: rolling_window must be positive");
}

Minibatch play_minibatch(SenderNet& sender, ReceiverNet& receiver, const TrainConfig& cfg, Rng& rng) {
  return play_games(sender, receiver, cfg.n_dims, cfg.batch_size, Mode::kTrain, false, rng);
}

void train_step(SenderNet& sender, ReceiverNet& receiver, const Minibatch& mb, const TrainConfig& cfg) {
  const int batch = static_cast<int>(mb.games.size());
  if (batch == 0) throw std::invalid_argument("train_step: empty minibatch");

  double mean_reward = 0.0;
  for (const auto& pg : mb.games) mean_reward += pg.trace.reward;
  mean_reward /= batch;

  std::vector<double> coeff(batch);
  for (int i = 0; i < batch; ++i) {
    const double advantage = mb.games[i].trace.reward - (cfg.baseline_enabled ? mean_reward : 0.0);
    coeff[i] = advantage / batch;
  }

  Matrix dms(batch, sender.n_dims());
  Matrix dmp(batch, 2);
  for (int i = 0; i < batch; ++i) {
    add_reinforce_logit_grad(dms, i, mb.games[i].trace.ms, coeff[i]);
    add_reinforce_logit_grad(dmp, i, mb.games[i].trace.mp, coeff[i]);
  }
  sender.backward(mb.sender_fwd, dms, dmp);

  if (auto* basic = std::get_if<BasicReceiverNet>(&receiver)) {
    Matrix dch(batch, 2 * cfg.n_dims);
    for (int i = 0; i < batch; ++i) add_reinforce_logit_grad(dch, i, mb.games[i].trace.choice, coeff[i]);
    basic->backward(*mb.basic_fwd, dch);
  } else {
    auto& attn = std::get<AttentionalReceiverNet>(receiver);
    Matrix ddim(batch, cfg.n_dims);
    Matrix dch(batch, 2 * cfg.n_dims);
    for (int i = 0; i < batch; ++i) {
      add_reinforce_logit_grad(ddim, i, *mb.games[i].trace.attention, coeff[i]);
      add_reinforce_logit_grad(dch, i, mb.games[i].trace.choice, coeff[i]);
    }
    attn.stage1_backward(*mb.attn1_fwd, ddim);
    attn.stage2_backward(*mb.attn2_fwd, dch);
  }

  for (auto& pr : sender.parameters()) adam_step(*pr.param, cfg.learning_rate);
  for (auto& pr : receiver_parameters(receiver)) adam_step(*pr.param, cfg.learning_rate);
}

std::vector<EvalRecord> evaluate(SenderNet& sender, ReceiverNet& receiver, const TrainConfig& cfg, Rng& rng) {
  const Mode mode = cfg.eval_batch_stats ? Mode::kEvalBatchStats : Mode::kEval;
  const bool argmax = cfg.eval_mode == EvalMode::kArgmax;
  std::vector<EvalRecord> records;
  records.reserve(cfg.eval_games);

  long serial = 0;
  int remaining = cfg.eval_games;
  while (remaining > 0) {
    const int chunk = std::min(remaining, cfg.batch_size);
    Minibatch mb = play_games(sender, receiver, cfg.n_dims, chunk, mode, argmax, rng);
    for (const auto& pg : mb.games) {
      EvalRecord rec;
      rec.game = serial++;
      rec.n_dims = cfg.n_dims;
      rec.target_index = pg.game.target_index;
      rec.signature = pg.game.signature;
      rec.canonical = pg.game.canonical;
      rec.ms = pg.trace.ms.sampled_index;
      rec.mp = pg.trace.mp.sampled_index;
      if (pg.trace.attention) rec.attention_dim = pg.trace.attention->sampled_index;
      rec.choice = pg.trace.choice.sampled_index;
      rec.permuted_target_index = pg.view.permuted_target_index;
      rec.correct = rec.choice == rec.permuted_target_index;
      for (const auto& obj : pg.game.context.objects)
        rec.context_degrees.insert(rec.context_degrees.end(), obj.begin(), obj.end());
      records.push_back(std::move(rec));
    }
    remaining -= chunk;
  }
  return records;
}

double accuracy_of(const std::vector<EvalRecord>& records) {
  if (records.empty()) return 0.0;
  double c = 0.0;
  for (const auto& r : records) c += r.correct ? 1.0 : 0.0;
  return c / static_cast<double>(records.size());
}

TrialResult run_trial(const TrainConfig& cfg, uint64_t seed, const ProgressFn& progress) {
  cfg.validate();
  Rng init_rng(derive_stream(seed, kInitStream));
  Rng train_rng(derive_stream(seed, kTrainStream));
  Rng eval_rng(derive_stream(seed, kEvalStream));

  TrialResult result;
  result.agents = std::make_unique<Agents>(init_agents(cfg.n_dims, cfg.receiver_kind, init_rng));
  auto& [sender, receiver] = *result.agents;

  const int steps = cfg.resolved_minibatches();
  result.batch_accuracy.reserve(steps);
  result.rolling_accuracy.reserve(steps);
  double window_sum = 0.0;
  for (int step = 0; step < steps; ++step) {
    Minibatch mb = play_minibatch(sender, receiver, cfg, train_rng);
    train_step(sender, receiver, mb, cfg);
    result.batch_accuracy.push_back(mb.batch_accuracy);
    window_sum += mb.batch_accuracy;
    if (step >= cfg.rolling_window) window_sum -= result.batch_accuracy[step - cfg.rolling_window];
    const int in_window = std::min(step + 1, cfg.rolling_window);
    result.rolling_accuracy.push_back(window_sum / in_window);
    if (progress) progress(step + 1, result.rolling_accuracy.back());
  }

  result.records = evaluate(sender, receiver, cfg, eval_rng);
  result.final_accuracy = accuracy_of(result.records);
  return result;
}

std::vector<TrialResult> run_trials(const TrainConfig& cfg, int parallel) {
  cfg.validate();
  const int n = cfg.num_trials;
  std::vector<std::optional<TrialResult>> slots(n);
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        TrialResult r = run_trial(cfg, trial_seed(cfg.seed, static_cast<uint64_t>(i)));
        r.trial_id = i;
        slots[i] = std::move(r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int workers = std::clamp(parallel, 1, n);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<TrialResult> results;
  results.reserve(n);
  for (auto& slot : slots) results.push_back(std::move(*slot));
  return results;
}

}  // namespace extremity
