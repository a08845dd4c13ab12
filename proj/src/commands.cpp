#include "extremity/commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <json.hpp>

#include "extremity/analysis.hpp"
#include "extremity/io.hpp"
#include "extremity/selfcheck.hpp"

namespace extremity {

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

void write_trial_files(const fs::path& dir, const TrialResult& result, std::vector<OutputFileEntry>& outputs,
                       const fs::path& manifest_base) {
  fs::create_directories(dir);
  write_train_log_csv(dir / "train_log.csv", result);
  write_eval_records_csv(dir / "eval_records.csv", result.records);
  save_checkpoint(dir / "checkpoint.bin", *result.agents);
  for (const char* name : {"train_log.csv", "eval_records.csv", "checkpoint.bin"}) {
    outputs.push_back(checksum_output(manifest_base, fs::relative(dir / name, manifest_base).string()));
  }
}

ProgressFn throttled_progress(int total) {
  const int every = std::max(total / 20, 1);
  return [every, total](int step, double rolling) {
    if (step % every == 0 || step == total) {
      std::fprintf(stderr, "  step %d/%d rolling_accuracy=%.3f\n", step, total, rolling);
    }
  };
}

}  // namespace

int cmd_train(const TrainConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  Manifest manifest;
  manifest.command = "train";
  manifest.created = iso8601_now();
  manifest.config = cfg;
  manifest.trial_seeds = {trial_seed(cfg.seed, 0)};

  std::fprintf(stderr, "train: dims=%d receiver=%s minibatches=%d seed=%llu\n", cfg.n_dims,
               to_string(cfg.receiver_kind), cfg.resolved_minibatches(),
               static_cast<unsigned long long>(cfg.seed));
  TrialResult result = run_trial(cfg, manifest.trial_seeds[0], throttled_progress(cfg.resolved_minibatches()));
  write_trial_files(out_dir, result, manifest.outputs, out_dir);

  manifest.finished = iso8601_now();
  write_manifest(out_dir / "manifest.json", manifest);
  std::printf("final test accuracy: %s (%d games)\n", fmt_double(result.final_accuracy).c_str(),
              static_cast<int>(result.records.size()));
  return 0;
}

int cmd_reproduce(const TrainConfig& base, const ReproduceOptions& opts, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  Manifest manifest;
  manifest.command = "reproduce";
  manifest.created = iso8601_now();
  manifest.config = base;

  json summary;
  summary["receiver"] = to_string(base.receiver_kind);
  summary["rows"] = json::array();

  for (int dims = 1; dims <= 3; ++dims) {
    if (opts.only_dims && *opts.only_dims != dims) continue;
    TrainConfig cfg = base;
    cfg.n_dims = dims;
    cfg.validate();
    for (int t = 0; t < cfg.num_trials; ++t) manifest.trial_seeds.push_back(trial_seed(cfg.seed, t));

    std::fprintf(stderr, "reproduce: dims=%d receiver=%s trials=%d minibatches=%d\n", dims,
                 to_string(cfg.receiver_kind), cfg.num_trials, cfg.resolved_minibatches());
    std::vector<TrialResult> results = run_trials(cfg, opts.parallel);

    std::vector<double> accuracies;
    for (const auto& r : results) {
      accuracies.push_back(r.final_accuracy);
      const fs::path trial_dir =
          out_dir / (std::string(to_string(cfg.receiver_kind)) + "_n" + std::to_string(dims) + "_trial" +
                     std::to_string(r.trial_id));
      write_trial_files(trial_dir, r, manifest.outputs, out_dir);
      std::fprintf(stderr, "  trial %d: accuracy %.4f\n", r.trial_id, r.final_accuracy);
    }
    const SummaryStats stats = accuracy_summary(accuracies);
    summary["rows"].push_back(
        {{"dims", dims}, {"mean", stats.mean}, {"std", stats.std}, {"trials", stats.n}, {"accuracies", accuracies}});
    std::printf("dims %d: mean %.4f std %.4f over %d trials\n", dims, stats.mean, stats.std, stats.n);
  }

  const std::string summary_name = std::string("summary_") + to_string(base.receiver_kind) + ".json";
  {
    std::ofstream out(out_dir / summary_name, std::ios::binary);
    out << summary.dump(2) << '\n';
  }
  manifest.outputs.push_back(checksum_output(out_dir, summary_name));
  manifest.finished = iso8601_now();
  write_manifest(out_dir / "manifest.json", manifest);
  return 0;
}

int cmd_eval(const EvalOptions& opts, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  Agents agents = load_checkpoint(opts.checkpoint);

  TrainConfig cfg;
  cfg.n_dims = agents.sender.n_dims();
  cfg.receiver_kind = receiver_kind(agents.receiver);
  cfg.eval_games = opts.eval_games;
  cfg.seed = opts.seed;
  cfg.eval_mode = opts.eval_mode;
  cfg.eval_batch_stats = opts.eval_batch_stats;

  Manifest manifest;
  manifest.command = "eval";
  manifest.created = iso8601_now();
  manifest.config = cfg;
  manifest.trial_seeds = {opts.seed};

  Rng eval_rng(derive_stream(opts.seed, 3));
  const std::vector<EvalRecord> records = evaluate(agents.sender, agents.receiver, cfg, eval_rng);
  write_eval_records_csv(out_dir / "eval_records.csv", records);
  manifest.outputs.push_back(checksum_output(out_dir, "eval_records.csv"));
  manifest.finished = iso8601_now();
  write_manifest(out_dir / "manifest.json", manifest);

  std::printf("accuracy: %s (%d games)\n", fmt_double(accuracy_of(records)).c_str(),
              static_cast<int>(records.size()));
  return 0;
}

namespace {

json crosstab_json(const CrossTab& tab) {
  return json{{"rows", tab.row_labels}, {"cols", tab.col_labels}, {"counts", tab.counts}};
}

}  // namespace

int cmd_analyze(const std::vector<fs::path>& record_files, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::map<std::string, int> stem_uses;
  for (const auto& file : record_files) {
    const std::vector<EvalRecord> records = read_eval_records_csv(file);
    std::string stem = file.stem().string();
    const int uses = stem_uses[stem]++;
    if (uses > 0) stem += "_" + std::to_string(uses + 1);  // distinct outputs for same-named inputs

    const CrossTab ms_dim = crosstab(records, SignalSlot::kMs, TruthAttr::kDimension);
    const CrossTab ms_pol = crosstab(records, SignalSlot::kMs, TruthAttr::kPolarity);
    const CrossTab mp_dim = crosstab(records, SignalSlot::kMp, TruthAttr::kDimension);
    const CrossTab mp_pol = crosstab(records, SignalSlot::kMp, TruthAttr::kPolarity);
    const ConsistencyScores scores = consistency_scores(records);
    const double separation = max_separation_fraction(records);
    const bool functional = functional_protocol(scores);

    json metrics;
    metrics["source"] = file.string();
    metrics["records"] = records.size();
    metrics["accuracy"] = accuracy_of(records);
    metrics["consistency"] = {{"dimension", scores.dimension_score}, {"polarity", scores.polarity_score}};
    metrics["functional"] = functional;
    metrics["max_separation_fraction"] = separation;
    metrics["crosstabs"] = {{"ms_by_dimension", crosstab_json(ms_dim)},
                            {"ms_by_polarity", crosstab_json(ms_pol)},
                            {"mp_by_dimension", crosstab_json(mp_dim)},
                            {"mp_by_polarity", crosstab_json(mp_pol)}};

    {
      std::ofstream out(out_dir / (stem + "_metrics.json"), std::ios::binary);
      if (!out) throw std::runtime_error("cannot write metrics for " + stem);
      out << metrics.dump(2) << '\n';
    }
    write_bar_svg(ms_dim, (out_dir / (stem + "_ms_by_dimension.svg")).string(), "m_s by true dimension");
    write_bar_svg(ms_pol, (out_dir / (stem + "_ms_by_polarity.svg")).string(), "m_s by true polarity");
    write_bar_svg(mp_dim, (out_dir / (stem + "_mp_by_dimension.svg")).string(), "m_p by true dimension");
    write_bar_svg(mp_pol, (out_dir / (stem + "_mp_by_polarity.svg")).string(), "m_p by true polarity");

    std::printf("%s: accuracy %.4f consistency(dim %.3f, pol %.3f) separation %.3f -> %s\n", stem.c_str(),
                accuracy_of(records), scores.dimension_score, scores.polarity_score, separation,
                functional ? "functional" : "not functional");
  }
  return 0;
}

int cmd_gradcheck(std::ostream& out, int num_configs, uint64_t seed) {
  const std::vector<ArchCheckResult> results = run_gradcheck_suite(num_configs, seed);
  int failures = 0;
  for (const auto& r : results) {
    out << (r.pass() ? "ok   " : "FAIL ") << r.name << "  worst rel err " << fmt_double(r.report.worst)
        << " (tol " << fmt_double(r.tolerance) << ")\n";
    for (const auto& e : r.report.entries) {
      out << "      " << e.param << "  max rel err " << fmt_double(e.max_rel_err) << "\n";
    }
    if (!r.pass()) ++failures;
  }
  out << (failures == 0 ? "gradcheck passed" : "gradcheck FAILED") << " (" << results.size() << " configurations)\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace extremity
