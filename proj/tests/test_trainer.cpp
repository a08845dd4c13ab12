#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "extremity/trainer.hpp"
#include "test_util.hpp"

using namespace extremity;

namespace {

TrainConfig small_config(int n_dims, ReceiverKind kind, uint64_t seed) {
  TrainConfig cfg;
  cfg.n_dims = n_dims;
  cfg.receiver_kind = kind;
  cfg.seed = seed;
  cfg.num_minibatches = 40;
  cfg.eval_games = 200;
  return cfg;
}

std::vector<double> snapshot_values(Agents& agents) {
  std::vector<double> values;
  for (const auto& t : agents.sender.state_tensors()) values.insert(values.end(), t.data->begin(), t.data->end());
  for (const auto& t : receiver_state_tensors(agents.receiver))
    values.insert(values.end(), t.data->begin(), t.data->end());
  return values;
}

std::vector<double> snapshot_params(Agents& agents) {
  std::vector<double> values;
  for (const auto& p : agents.sender.parameters())
    values.insert(values.end(), p.param->value.v.begin(), p.param->value.v.end());
  for (const auto& p : receiver_parameters(agents.receiver))
    values.insert(values.end(), p.param->value.v.begin(), p.param->value.v.end());
  return values;
}

Context receiver_order_context(const PlayedGame& pg) {
  Context ctx;
  ctx.n_dims = pg.game.context.n_dims;
  for (int slot : pg.view.permutation) ctx.objects.push_back(pg.game.context.objects[slot]);
  return ctx;
}

}  // namespace

TEST_CASE("default minibatch counts per dimension") {
  CHECK(default_minibatches(1) == 5000);
  CHECK(default_minibatches(2) == 20000);
  CHECK(default_minibatches(3) == 50000);
  TrainConfig cfg;
  cfg.n_dims = 2;
  CHECK(cfg.resolved_minibatches() == 20000);
  cfg.num_minibatches = 123;
  CHECK(cfg.resolved_minibatches() == 123);
}

TEST_CASE("config validation rejects bad values") {
  TrainConfig cfg;
  cfg.n_dims = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("played minibatches have 0/1 rewards and the right node counts") {
  for (ReceiverKind kind : {ReceiverKind::kBasic, ReceiverKind::kAttentional}) {
    TrainConfig cfg = small_config(2, kind, 11);
    Rng init(1), play(2);
    Agents agents = init_agents(cfg.n_dims, kind, init);
    const Minibatch mb = play_minibatch(agents.sender, agents.receiver, cfg, play);
    REQUIRE(mb.games.size() == static_cast<size_t>(cfg.batch_size));
    double correct = 0.0;
    for (const auto& pg : mb.games) {
      CHECK((pg.trace.reward == 0.0 || pg.trace.reward == 1.0));
      CHECK(pg.trace.node_count() == (kind == ReceiverKind::kBasic ? 3 : 4));
      CHECK(pg.trace.reward ==
            (pg.trace.choice.sampled_index == pg.view.permuted_target_index ? 1.0 : 0.0));
      correct += pg.trace.reward;
    }
    CHECK(mb.batch_accuracy == doctest::Approx(correct / cfg.batch_size));
  }
}

TEST_CASE("reward agrees with the superlative oracle ground truth") {
  TrainConfig cfg = small_config(2, ReceiverKind::kBasic, 12);
  Rng init(3), play(4);
  Agents agents = init_agents(cfg.n_dims, cfg.receiver_kind, init);
  for (int round = 0; round < 5; ++round) {
    const Minibatch mb = play_minibatch(agents.sender, agents.receiver, cfg, play);
    for (const auto& pg : mb.games) {
      const Context rctx = receiver_order_context(pg);
      const int oracle_pos = superlative_oracle(rctx, pg.game.canonical.dim, pg.game.canonical.pol);
      CHECK(oracle_pos == pg.view.permuted_target_index);
      if (pg.trace.choice.sampled_index == oracle_pos) CHECK(pg.trace.reward == 1.0);
      if (pg.trace.reward == 1.0) CHECK(pg.trace.choice.sampled_index == oracle_pos);
    }
  }
}

TEST_CASE("untrained accuracy is near chance for one dimension") {
  TrainConfig cfg = small_config(1, ReceiverKind::kBasic, 13);
  Rng init(5), play(6);
  Agents agents = init_agents(cfg.n_dims, cfg.receiver_kind, init);
  double mean = 0.0;
  const int rounds = 10;
  for (int i = 0; i < rounds; ++i)
    mean += play_minibatch(agents.sender, agents.receiver, cfg, play).batch_accuracy;
  mean /= rounds;
  CHECK(std::abs(mean - 0.5) < 0.15);
}

TEST_CASE("hand-coded oracle agents win every game") {
  // Sender announces the canonical (dimension, polarity); receiver decodes it
  // with the superlative oracle on its own object order.
  for (int n : {1, 2, 3}) {
    Rng rng(100 + n);
    int correct = 0;
    const int games = 2000;
    for (int i = 0; i < games; ++i) {
      const GameInstance g = sample_game(n, rng);
      const ReceiverView view = permute_for_receiver(g, rng);
      Context rctx;
      rctx.n_dims = n;
      for (int slot : view.permutation) rctx.objects.push_back(g.context.objects[slot]);
      const int choice = superlative_oracle(rctx, g.canonical.dim, g.canonical.pol);
      if (choice == view.permuted_target_index) ++correct;
    }
    CHECK(correct == games);
  }
}

TEST_CASE("zero-advantage steps leave parameters unchanged") {
  TrainConfig cfg = small_config(1, ReceiverKind::kBasic, 14);
  Rng init(7), play(8);
  Agents agents = init_agents(cfg.n_dims, cfg.receiver_kind, init);

  SUBCASE("all-zero rewards with the baseline disabled") {
    cfg.baseline_enabled = false;
    Minibatch mb = play_minibatch(agents.sender, agents.receiver, cfg, play);
    for (auto& pg : mb.games) pg.trace.reward = 0.0;
    const auto before = snapshot_params(agents);
    train_step(agents.sender, agents.receiver, mb, cfg);
    CHECK(snapshot_params(agents) == before);
  }

  SUBCASE("all-equal rewards with the baseline enabled") {
    cfg.baseline_enabled = true;
    Minibatch mb = play_minibatch(agents.sender, agents.receiver, cfg, play);
    for (auto& pg : mb.games) pg.trace.reward = 1.0;
    const auto before = snapshot_params(agents);
    train_step(agents.sender, agents.receiver, mb, cfg);
    CHECK(snapshot_params(agents) == before);
  }
}

TEST_CASE("training moves parameters on mixed rewards") {
  TrainConfig cfg = small_config(1, ReceiverKind::kBasic, 15);
  Rng init(9), play(10);
  Agents agents = init_agents(cfg.n_dims, cfg.receiver_kind, init);
  const auto before = snapshot_params(agents);
  for (int i = 0; i < 3; ++i) {
    const Minibatch mb = play_minibatch(agents.sender, agents.receiver, cfg, play);
    train_step(agents.sender, agents.receiver, mb, cfg);
  }
  CHECK(snapshot_params(agents) != before);
}

TEST_CASE("rolling accuracy is the mean of the recent window") {
  TrainConfig cfg = small_config(1, ReceiverKind::kBasic, 16);
  cfg.num_minibatches = 35;
  cfg.rolling_window = 10;
  const TrialResult r = run_trial(cfg, 99);
  REQUIRE(r.batch_accuracy.size() == 35);
  REQUIRE(r.rolling_accuracy.size() == 35);
  for (size_t t = 0; t < r.batch_accuracy.size(); ++t) {
    const size_t lo = t + 1 >= 10 ? t + 1 - 10 : 0;
    double sum = 0.0;
    for (size_t k = lo; k <= t; ++k) sum += r.batch_accuracy[k];
    CHECK(r.rolling_accuracy[t] == doctest::Approx(sum / (t - lo + 1)).epsilon(1e-12));
  }
}

TEST_CASE("trials are reproducible and independent of parallelism") {
  TrainConfig cfg = small_config(1, ReceiverKind::kAttentional, 17);
  cfg.num_trials = 2;
  const TrialResult a = run_trial(cfg, 1234);
  const TrialResult b = run_trial(cfg, 1234);
  CHECK(a.batch_accuracy == b.batch_accuracy);
  CHECK(a.final_accuracy == b.final_accuracy);
  REQUIRE(a.records.size() == b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].ms == b.records[i].ms);
    CHECK(a.records[i].mp == b.records[i].mp);
    CHECK(a.records[i].choice == b.records[i].choice);
    CHECK(a.records[i].correct == b.records[i].correct);
    CHECK(a.records[i].context_degrees == b.records[i].context_degrees);
  }

  const auto serial = run_trials(cfg, 1);
  const auto threaded = run_trials(cfg, 2);
  REQUIRE(serial.size() == threaded.size());
  for (size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].trial_id == threaded[i].trial_id);
    CHECK(serial[i].batch_accuracy == threaded[i].batch_accuracy);
    CHECK(serial[i].final_accuracy == threaded[i].final_accuracy);
  }
}

TEST_CASE("evaluation returns full records and never touches the agents") {
  for (ReceiverKind kind : {ReceiverKind::kBasic, ReceiverKind::kAttentional}) {
    TrainConfig cfg = small_config(2, kind, 18);
    cfg.eval_games = 333;
    Rng init(11), eval_rng(12);
    Agents agents = init_agents(cfg.n_dims, kind, init);
    const auto before = snapshot_values(agents);
    const auto records = evaluate(agents.sender, agents.receiver, cfg, eval_rng);
    CHECK(snapshot_values(agents) == before);
    REQUIRE(records.size() == 333);
    for (size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      CHECK(r.game == static_cast<long>(i));
      CHECK(r.n_dims == 2);
      CHECK(r.attention_dim.has_value() == (kind == ReceiverKind::kAttentional));
      CHECK(r.correct == (r.choice == r.permuted_target_index));
      CHECK(r.context_degrees.size() == 8);
      CHECK_FALSE(r.signature.empty());
      CHECK(r.canonical == *std::min_element(r.signature.begin(), r.signature.end()));
    }
    const double acc = accuracy_of(records);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }
}

TEST_CASE("argmax evaluation is deterministic given the game stream") {
  TrainConfig cfg = small_config(1, ReceiverKind::kBasic, 19);
  cfg.eval_mode = EvalMode::kArgmax;
  cfg.eval_games = 64;
  Rng init(13);
  Agents agents = init_agents(cfg.n_dims, cfg.receiver_kind, init);
  Rng e1(55), e2(55);
  const auto a = evaluate(agents.sender, agents.receiver, cfg, e1);
  const auto b = evaluate(agents.sender, agents.receiver, cfg, e2);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].choice == b[i].choice);
    CHECK(a[i].ms == b[i].ms);
  }
}

TEST_CASE("one-dimensional basic runs hit 0.9 rolling accuracy on most seeds") {
  int hits = 0;
  std::vector<double> finals;
  for (uint64_t s = 0; s < 10; ++s) {
    TrainConfig cfg;
    cfg.n_dims = 1;
    cfg.receiver_kind = ReceiverKind::kBasic;
    cfg.num_minibatches = 5000;
    cfg.eval_games = 2000;
    const TrialResult r = run_trial(cfg, trial_seed(20260101, s));
    if (*std::max_element(r.rolling_accuracy.begin(), r.rolling_accuracy.end()) > 0.9) ++hits;
    finals.push_back(r.final_accuracy);
  }
  CHECK(hits >= 8);
  // and the typical end state solves the game
  CHECK(*std::max_element(finals.begin(), finals.end()) >= 0.95);
}
