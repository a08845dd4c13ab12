#pragma once

#include <string>
#include <vector>

#include "extremity/trainer.hpp"

namespace extremity {

enum class SignalSlot { kMs, kMp };
enum class TruthAttr { kDimension, kPolarity };

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  int n = 0;
};

SummaryStats accuracy_summary(const std::vector<double>& trial_accuracies);

// Frequency table of one signal slot against one ground-truth attribute of
// the target (its canonical dimension or polarity).
struct CrossTab {
  std::vector<std::string> row_labels;  // truth values
  std::vector<std::string> col_labels;  // signal values
  std::vector<std::vector<long>> counts;
  long total() const;
};

CrossTab crosstab(const std::vector<EvalRecord>& records, SignalSlot slot, TruthAttr attr);

// Over ordered record pairs (r, r') where r is a minimum and r' a maximum on
// some shared dimension (full signatures considered): the fraction of pairs
// whose messages differ in both coordinates. Enumeration above pair_cap pairs
// falls back to uniform subsampling driven by subsample_seed.
double max_separation_fraction(const std::vector<EvalRecord>& records, uint64_t subsample_seed = 0,
                               size_t pair_cap = 1000000);

// Best-bijection agreement between signals and truth values, each in [0, 1].
// Dimension score maximizes over the n! relabelings of M_S (greedy assignment
// above 8 dimensions); polarity score over the 2 relabelings of M_P.
struct ConsistencyScores {
  double dimension_score = 0.0;
  double polarity_score = 0.0;
};

ConsistencyScores consistency_scores(const std::vector<EvalRecord>& records);

inline constexpr double kFunctionalThreshold = 0.9;

// A protocol counts as functional when both consistency scores reach 0.9:
// M_S tracks the dimension and M_P the polarity up to relabeling.
bool functional_protocol(const ConsistencyScores& scores);

// Grouped bar chart, one group per truth value and one bar per signal value,
// heights linear in the counts.
std::string render_bar_svg(const CrossTab& tab, const std::string& title = "");
void write_bar_svg(const CrossTab& tab, const std::string& path, const std::string& title = "");

}  // namespace extremity
