#include "extremity/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace extremity {

SummaryStats accuracy_summary(const std::vector<double>& trial_accuracies) {
  if (trial_accuracies.empty()) throw std::invalid_argument("accuracy_summary: empty list");
  SummaryStats s;
  s.n = static_cast<int>(trial_accuracies.size());
  s.mean = std::accumulate(trial_accuracies.begin(), trial_accuracies.end(), 0.0) / s.n;
  double var = 0.0;
  for (double a : trial_accuracies) var += (a - s.mean) * (a - s.mean);
  s.std = std::sqrt(var / s.n);
  return s;
}

long CrossTab::total() const {
  long t = 0;
  for (const auto& row : counts)
    for (long c : row) t += c;
  return t;
}

namespace {

int shared_n_dims(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("analysis: no records");
  const int n = records.front().n_dims;
  for (const auto& r : records) {
    if (r.n_dims != n) throw std::invalid_argument("analysis: records mix different n_dims");
  }
  return n;
}

}  // namespace

CrossTab crosstab(const std::vector<EvalRecord>& records, SignalSlot slot, TruthAttr attr) {
  const int n = shared_n_dims(records);

  int n_rows = attr == TruthAttr::kDimension ? n : 2;
  int n_cols = slot == SignalSlot::kMs ? n : 2;
  // Tolerate out-of-alphabet signal values in hand-built records.
  for (const auto& r : records) {
    const int s = slot == SignalSlot::kMs ? r.ms : r.mp;
    n_cols = std::max(n_cols, s + 1);
  }

  CrossTab tab;
  tab.counts.assign(n_rows, std::vector<long>(n_cols, 0));
  for (int i = 0; i < n_rows; ++i)
    tab.row_labels.push_back(attr == TruthAttr::kDimension ? "dim " + std::to_string(i)
                                                           : std::string(to_string(static_cast<Polarity>(i))));
  for (int j = 0; j < n_cols; ++j)
    tab.col_labels.push_back((slot == SignalSlot::kMs ? "ms " : "mp ") + std::to_string(j));

  for (const auto& r : records) {
    const int row = attr == TruthAttr::kDimension ? r.canonical.dim : static_cast<int>(r.canonical.pol);
    const int col = slot == SignalSlot::kMs ? r.ms : r.mp;
    if (row < 0 || row >= n_rows || col < 0) throw std::invalid_argument("crosstab: record value out of range");
    ++tab.counts[row][col];
  }
  return tab;
}

double max_separation_fraction(const std::vector<EvalRecord>& records, uint64_t subsample_seed, size_t pair_cap) {
  shared_n_dims(records);
  const size_t m = records.size();

  // Signature bitmasks: bit d set in min_mask when (d, min) is in the signature.
  std::vector<uint64_t> min_mask(m, 0), max_mask(m, 0);
  for (size_t i = 0; i < m; ++i) {
    for (const auto& dp : records[i].signature) {
      if (dp.dim >= 64) throw std::invalid_argument("max_separation_fraction: dimension exceeds mask width");
      (dp.pol == Polarity::kMin ? min_mask[i] : max_mask[i]) |= uint64_t{1} << dp.dim;
    }
  }

  auto qualifies = [&](size_t i, size_t j) { return (min_mask[i] & max_mask[j]) != 0; };
  auto differs_both = [&](size_t i, size_t j) {
    return records[i].ms != records[j].ms && records[i].mp != records[j].mp;
  };

  size_t qualifying = 0, separated = 0;
  if (m < 2) return 0.0;
  const size_t total_pairs = m * (m - 1);
  if (total_pairs <= pair_cap) {
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = 0; j < m; ++j) {
        if (i == j || !qualifies(i, j)) continue;
        ++qualifying;
        if (differs_both(i, j)) ++separated;
      }
    }
  } else {
    Rng rng(derive_stream(subsample_seed, 0x5eb));
    for (size_t k = 0; k < pair_cap; ++k) {
      const size_t i = rng.uniform_int(m);
      size_t j = rng.uniform_int(m - 1);
      if (j >= i) ++j;
      if (!qualifies(i, j)) continue;
      ++qualifying;
      if (differs_both(i, j)) ++separated;
    }
  }
  return qualifying == 0 ? 0.0 : static_cast<double>(separated) / static_cast<double>(qualifying);
}

namespace {

// Best assignment of truth rows to signal columns by match count.
long best_bijection_matches(const std::vector<std::vector<long>>& counts) {
  const size_t rows = counts.size();
  if (rows <= 8 && counts.front().size() <= 9) {
    // Maximize over injections rows -> columns: permute the columns and read
    // off the leading `rows` positions.
    std::vector<int> perm(counts.front().size());
    std::iota(perm.begin(), perm.end(), 0);
    long best = 0;
    do {
      long total = 0;
      for (size_t r = 0; r < rows; ++r) total += counts[r][perm[r]];
      best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  // Greedy fallback: repeatedly take the largest cell with unused row and column.
  std::vector<char> row_used(rows, 0), col_used(counts.front().size(), 0);
  long total = 0;
  for (size_t step = 0; step < rows; ++step) {
    long best = -1;
    size_t br = 0, bc = 0;
    for (size_t r = 0; r < rows; ++r) {
      if (row_used[r]) continue;
      for (size_t c = 0; c < counts[r].size(); ++c) {
        if (col_used[c]) continue;
        if (counts[r][c] > best) {
          best = counts[r][c];
          br = r;
          bc = c;
        }
      }
    }
    if (best < 0) break;
    row_used[br] = 1;
    col_used[bc] = 1;
    total += best;
  }
  return total;
}

}  // namespace

ConsistencyScores consistency_scores(const std::vector<EvalRecord>& records) {
  const double n_records = static_cast<double>(records.size());
  const CrossTab dim_tab = crosstab(records, SignalSlot::kMs, TruthAttr::kDimension);
  const CrossTab pol_tab = crosstab(records, SignalSlot::kMp, TruthAttr::kPolarity);
  ConsistencyScores scores;
  scores.dimension_score = static_cast<double>(best_bijection_matches(dim_tab.counts)) / n_records;
  scores.polarity_score = static_cast<double>(best_bijection_matches(pol_tab.counts)) / n_records;
  return scores;
}

bool functional_protocol(const ConsistencyScores& scores) {
  return scores.dimension_score >= kFunctionalThreshold && scores.polarity_score >= kFunctionalThreshold;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void appendf(std::string& out, const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  out += buf;
}

const char* kPalette[] = {"#2d6da4", "#d1495b", "#57a05a", "#e0a23c", "#8661a8", "#4fb3bf", "#a3685a", "#6b7280"};

}  // namespace

std::string render_bar_svg(const CrossTab& tab, const std::string& title) {
  const int n_groups = static_cast<int>(tab.row_labels.size());
  const int n_bars = static_cast<int>(tab.col_labels.size());
  const double bar_w = 26.0, bar_gap = 6.0, group_gap = 34.0;
  const double margin_left = 52.0, margin_top = 42.0, margin_bottom = 46.0, margin_right = 20.0;
  const double plot_h = 240.0;
  const double group_w = n_bars * bar_w + (n_bars - 1) * bar_gap;
  const double width = margin_left + n_groups * group_w + (n_groups - 1) * group_gap + margin_right;
  const double height = margin_top + plot_h + margin_bottom;
  const double base_y = margin_top + plot_h;

  long max_count = 0;
  for (const auto& row : tab.counts)
    for (long c : row) max_count = std::max(max_count, c);
  const double scale = max_count > 0 ? plot_h / static_cast<double>(max_count) : 0.0;

  std::string svg;
  appendf(svg,
          "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"%.0f\" height=\"%.0f\" "
          "viewBox=\"0 0 %.0f %.0f\">\n",
          width, height, width, height);
  appendf(svg, "  <rect x=\"0\" y=\"0\" width=\"%.0f\" height=\"%.0f\" fill=\"white\"/>\n", width, height);
  if (!title.empty()) {
    appendf(svg,
            "  <text x=\"%.1f\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            "font-size=\"15\">%s</text>\n",
            width / 2.0, xml_escape(title).c_str());
  }

  // Axes and the max-count tick.
  appendf(svg, "  <line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", margin_left - 6,
          base_y, width - margin_right + 6, base_y);
  appendf(svg, "  <line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", margin_left - 6,
          margin_top, margin_left - 6, base_y);
  appendf(svg,
          "  <text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">%ld</text>\n",
          margin_left - 10, margin_top + 4, max_count);
  appendf(svg,
          "  <text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">0</text>\n",
          margin_left - 10, base_y + 4);

  for (int g = 0; g < n_groups; ++g) {
    const double gx = margin_left + g * (group_w + group_gap);
    for (int b = 0; b < n_bars; ++b) {
      const double h = tab.counts[g][b] * scale;
      const double x = gx + b * (bar_w + bar_gap);
      appendf(svg,
              "  <rect class=\"bar\" x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\"><title>%s / "
              "%s: %ld</title></rect>\n",
              x, base_y - h, bar_w, h, kPalette[b % 8], xml_escape(tab.row_labels[g]).c_str(),
              xml_escape(tab.col_labels[b]).c_str(), tab.counts[g][b]);
    }
    appendf(svg,
            "  <text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            "font-size=\"12\">%s</text>\n",
            gx + group_w / 2.0, base_y + 18, xml_escape(tab.row_labels[g]).c_str());
  }

  // Legend: one swatch per signal value.
  for (int b = 0; b < n_bars; ++b) {
    const double lx = margin_left + b * 72.0;
    appendf(svg, "  <rect x=\"%.1f\" y=\"%.1f\" width=\"10\" height=\"10\" fill=\"%s\"/>\n", lx,
            height - 16.0, kPalette[b % 8]);
    appendf(svg,
            "  <text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\">%s</text>\n",
            lx + 14.0, height - 7.0, xml_escape(tab.col_labels[b]).c_str());
  }

  svg += "</svg>\n";
  return svg;
}

void write_bar_svg(const CrossTab& tab, const std::string& path, const std::string& title) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_bar_svg: cannot open " + path);
  out << render_bar_svg(tab, title);
  if (!out) throw std::runtime_error("write_bar_svg: write failed for " + path);
}

}  // namespace extremity
