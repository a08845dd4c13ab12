#include "extremity/env.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace extremity {

const char* to_string(Polarity p) { return p == Polarity::kMin ? "min" : "max"; }

Polarity parse_polarity(std::string_view s) {
  if (s == "min") return Polarity::kMin;
  if (s == "max") return Polarity::kMax;
  throw std::invalid_argument("parse_polarity: expected 'min' or 'max', got '" + std::string(s) + "'");
}

std::vector<double> degree_grid() {
  std::vector<double> grid(19);
  for (int i = 0; i < 19; ++i) grid[i] = (i - 9) / 10.0;
  return grid;
}

namespace {

void check_rectangular(const Context& ctx) {
  if (ctx.objects.empty()) throw std::invalid_argument("context has no objects");
  const size_t dims = ctx.objects.front().size();
  for (const auto& obj : ctx.objects) {
    if (obj.size() != dims) throw std::invalid_argument("malformed context: ragged degree lists");
  }
}

// Strict extremum holders per dimension; -1 where the extremum is tied.
struct DimExtrema {
  int unique_min = -1;
  int unique_max = -1;
};

DimExtrema scan_dim(const Context& ctx, int dim) {
  DimExtrema e;
  double lo = ctx.objects[0][dim];
  double hi = lo;
  int lo_at = 0, hi_at = 0;
  bool lo_tie = false, hi_tie = false;
  for (int i = 1; i < static_cast<int>(ctx.objects.size()); ++i) {
    const double v = ctx.objects[i][dim];
    if (v < lo) {
      lo = v;
      lo_at = i;
      lo_tie = false;
    } else if (v == lo) {
      lo_tie = true;
    }
    if (v > hi) {
      hi = v;
      hi_at = i;
      hi_tie = false;
    } else if (v == hi) {
      hi_tie = true;
    }
  }
  if (!lo_tie) e.unique_min = lo_at;
  if (!hi_tie) e.unique_max = hi_at;
  return e;
}

}  // namespace

bool is_valid_context(const Context& ctx) {
  check_rectangular(ctx);
  const int dims = static_cast<int>(ctx.objects.front().size());
  std::vector<char> covered(ctx.objects.size(), 0);
  for (int d = 0; d < dims; ++d) {
    const DimExtrema e = scan_dim(ctx, d);
    if (e.unique_min >= 0) covered[e.unique_min] = 1;
    if (e.unique_max >= 0) covered[e.unique_max] = 1;
  }
  return std::all_of(covered.begin(), covered.end(), [](char c) { return c != 0; });
}

std::vector<DimPol> extremal_signature(const Context& ctx, int index) {
  check_rectangular(ctx);
  if (index < 0 || index >= static_cast<int>(ctx.objects.size()))
    throw std::out_of_range("extremal_signature: object index out of range");
  const int dims = static_cast<int>(ctx.objects.front().size());
  std::vector<DimPol> sig;
  for (int d = 0; d < dims; ++d) {
    const DimExtrema e = scan_dim(ctx, d);
    if (e.unique_min == index) sig.push_back({d, Polarity::kMin});
    if (e.unique_max == index) sig.push_back({d, Polarity::kMax});
  }
  return sig;  // ascending (dim, kMin < kMax) by construction
}

Context generate_context(int n_dims, Rng& rng, int max_attempts) {
  if (n_dims < 1) throw std::invalid_argument("generate_context: n_dims must be positive");
  static const std::vector<double> grid = degree_grid();
  Context ctx;
  ctx.n_dims = n_dims;
  ctx.objects.assign(2 * static_cast<size_t>(n_dims), std::vector<double>(n_dims));
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    for (auto& obj : ctx.objects) {
      for (auto& degree : obj) degree = grid[rng.uniform_index(static_cast<int>(grid.size()))];
    }
    if (is_valid_context(ctx)) return ctx;
  }
  throw std::runtime_error("generate_context: no valid context within " + std::to_string(max_attempts) +
                           " attempts");
}

int superlative_oracle(const Context& ctx, int dim, Polarity pol) {
  check_rectangular(ctx);
  if (dim < 0 || dim >= static_cast<int>(ctx.objects.front().size()))
    throw std::out_of_range("superlative_oracle: dimension out of range");
  const DimExtrema e = scan_dim(ctx, dim);
  const int at = pol == Polarity::kMin ? e.unique_min : e.unique_max;
  if (at < 0) throw std::runtime_error("superlative_oracle: tied extremum, no unique referent");
  return at;
}

GameInstance sample_game(int n_dims, Rng& rng, int max_attempts) {
  GameInstance g;
  g.context = generate_context(n_dims, rng, max_attempts);
  g.target_index = rng.uniform_index(static_cast<int>(g.context.objects.size()));
  g.signature = extremal_signature(g.context, g.target_index);
  g.canonical = g.signature.front();
  return g;
}

std::vector<double> encode_sender_input(const GameInstance& g) {
  const auto& objects = g.context.objects;
  std::vector<double> flat;
  flat.reserve(objects.size() * g.context.n_dims);
  flat.insert(flat.end(), objects[g.target_index].begin(), objects[g.target_index].end());
  for (int i = 0; i < static_cast<int>(objects.size()); ++i) {
    if (i == g.target_index) continue;
    flat.insert(flat.end(), objects[i].begin(), objects[i].end());
  }
  return flat;
}

ReceiverView permute_for_receiver(const GameInstance& g, Rng& rng) {
  const int m = static_cast<int>(g.context.objects.size());
  ReceiverView view;
  view.permutation.resize(m);
  for (int i = 0; i < m; ++i) view.permutation[i] = i;
  for (int i = m - 1; i > 0; --i) {
    const int j = rng.uniform_index(i + 1);
    std::swap(view.permutation[i], view.permutation[j]);
  }
  view.flat.reserve(static_cast<size_t>(m) * g.context.n_dims);
  for (int slot = 0; slot < m; ++slot) {
    const auto& obj = g.context.objects[view.permutation[slot]];
    view.flat.insert(view.flat.end(), obj.begin(), obj.end());
    if (view.permutation[slot] == g.target_index) view.permuted_target_index = slot;
  }
  return view;
}

}  // namespace extremity
