#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "extremity/env.hpp"
#include "test_util.hpp"

using namespace extremity;
using namespace testutil;

namespace {

Context make_context(std::vector<std::vector<double>> objects) {
  Context ctx;
  ctx.n_dims = objects.empty() ? 0 : static_cast<int>(objects.front().size());
  ctx.objects = std::move(objects);
  return ctx;
}

// Invalid by brute force: objects 2 and 3 are extreme on no dimension.
const Context kUncoveredContext = make_context({{-0.9, -0.9}, {0.9, 0.9}, {0.0, 0.1}, {0.1, 0.0}});

}  // namespace

TEST_CASE("degree grid is the 19 shifted grid points") {
  const auto grid = degree_grid();
  REQUIRE(grid.size() == 19);
  CHECK(std::find(grid.begin(), grid.end(), -0.9) != grid.end());
  CHECK(std::find(grid.begin(), grid.end(), 0.0) != grid.end());
  CHECK(std::find(grid.begin(), grid.end(), 1.0) == grid.end());
  CHECK(grid.front() == -0.9);
  CHECK(grid.back() == 0.9);
  for (size_t i = 1; i < grid.size(); ++i) {
    CHECK(grid[i] > grid[i - 1]);
    CHECK(grid[i] - grid[i - 1] == doctest::Approx(0.1).epsilon(1e-12));
  }
}

TEST_CASE("context validity") {
  CHECK(is_valid_context(make_context({{-0.5}, {0.3}})));
  CHECK_FALSE(is_valid_context(make_context({{0.3}, {0.3}})));
  CHECK_FALSE(is_valid_context(kUncoveredContext));
  CHECK_FALSE(brute_valid(kUncoveredContext));
  CHECK_THROWS_AS(is_valid_context(make_context({{0.1, 0.2}, {0.3}})), std::invalid_argument);
}

TEST_CASE("duplicate objects are never valid") {
  CHECK_FALSE(is_valid_context(make_context({{0.1, 0.2}, {0.1, 0.2}, {-0.9, 0.9}, {0.9, -0.9}})));
}

TEST_CASE("extremal signature") {
  const Context two = make_context({{-0.5}, {0.3}});
  CHECK(extremal_signature(two, 0) == std::vector<DimPol>{{0, Polarity::kMin}});
  CHECK(extremal_signature(two, 1) == std::vector<DimPol>{{0, Polarity::kMax}});
  const auto sig = extremal_signature(kUncoveredContext, 0);
  CHECK(sig == std::vector<DimPol>{{0, Polarity::kMin}, {1, Polarity::kMin}});
  CHECK(sig == brute_signature(kUncoveredContext, 0));
  CHECK(extremal_signature(kUncoveredContext, 2).empty());
  CHECK_THROWS_AS(extremal_signature(two, 5), std::out_of_range);
}

TEST_CASE("generated contexts are always valid and on the grid") {
  const auto grid = degree_grid();
  const std::set<double> grid_set(grid.begin(), grid.end());
  for (int n : {1, 2, 3}) {
    Rng rng(1000 + n);
    for (int i = 0; i < 10000; ++i) {
      const Context ctx = generate_context(n, rng);
      REQUIRE(ctx.objects.size() == static_cast<size_t>(2 * n));
      REQUIRE(brute_valid(ctx));
      for (const auto& obj : ctx.objects) {
        for (double d : obj) REQUIRE(grid_set.count(d) == 1);
      }
    }
  }
}

TEST_CASE("generate_context signals an exhausted rejection budget") {
  Rng rng(7);
  CHECK_THROWS_AS(generate_context(2, rng, 0), std::runtime_error);
}

TEST_CASE("superlative oracle examples and tie error") {
  const Context two = make_context({{-0.5}, {0.3}});
  CHECK(superlative_oracle(two, 0, Polarity::kMax) == 1);
  CHECK(superlative_oracle(two, 0, Polarity::kMin) == 0);
  CHECK_THROWS_AS(superlative_oracle(make_context({{0.3}, {0.3}}), 0, Polarity::kMin), std::runtime_error);
  CHECK_THROWS_AS(superlative_oracle(two, 3, Polarity::kMin), std::out_of_range);
}

TEST_CASE("superlative oracle agrees with brute force everywhere") {
  for (int n : {1, 2, 3}) {
    Rng rng(2000 + n);
    for (int i = 0; i < 2000; ++i) {
      const Context ctx = generate_context(n, rng);
      for (int d = 0; d < n; ++d) {
        for (Polarity pol : {Polarity::kMin, Polarity::kMax}) {
          const int brute = brute_extremum(ctx, d, pol);
          if (brute < 0) {
            CHECK_THROWS_AS(superlative_oracle(ctx, d, pol), std::runtime_error);
          } else {
            CHECK(superlative_oracle(ctx, d, pol) == brute);
          }
        }
      }
    }
  }
}

TEST_CASE("sample_game basics") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const GameInstance g = sample_game(1, rng);
    CHECK(g.target_index >= 0);
    CHECK(g.target_index < 2);
    CHECK(g.signature.size() == 1);
  }
}

TEST_CASE("sample_game signature matches the target and contains the canonical pair") {
  for (int n : {1, 2, 3}) {
    Rng rng(4000 + n);
    for (int i = 0; i < 1500; ++i) {
      const GameInstance g = sample_game(n, rng);
      REQUIRE_FALSE(g.signature.empty());
      CHECK(g.signature == brute_signature(g.context, g.target_index));
      CHECK(std::find(g.signature.begin(), g.signature.end(), g.canonical) != g.signature.end());
      CHECK(g.canonical == *std::min_element(g.signature.begin(), g.signature.end()));
    }
  }
}

TEST_CASE("target index is uniform over positions (chi-square, n=2)") {
  Rng rng(5);
  std::vector<long> counts(4, 0);
  for (int i = 0; i < 40000; ++i) ++counts[sample_game(2, rng).target_index];
  const double x2 = chi_square(counts, std::vector<double>(4, 10000.0));
  CHECK(x2 < 11.345);  // df=3 critical value at p=0.01
}

TEST_CASE("sender encoding puts the target first") {
  GameInstance g;
  g.context = make_context({{-0.5}, {0.3}});
  g.target_index = 1;
  CHECK(encode_sender_input(g) == std::vector<double>{0.3, -0.5});
  g.target_index = 0;
  CHECK(encode_sender_input(g) == std::vector<double>{-0.5, 0.3});

  GameInstance g2;
  g2.context = make_context({{0.1, 0.2}, {0.3, 0.4}, {-0.5, -0.6}, {0.7, 0.8}});
  g2.target_index = 2;
  CHECK(encode_sender_input(g2) == std::vector<double>{-0.5, -0.6, 0.1, 0.2, 0.3, 0.4, 0.7, 0.8});
}

TEST_CASE("sender encoding preserves length and the multiset of objects") {
  for (int n : {1, 2, 3}) {
    Rng rng(6000 + n);
    for (int i = 0; i < 300; ++i) {
      const GameInstance g = sample_game(n, rng);
      const auto flat = encode_sender_input(g);
      REQUIRE(flat.size() == static_cast<size_t>(2 * n * n));
      std::vector<std::vector<double>> encoded;
      for (int o = 0; o < 2 * n; ++o) encoded.emplace_back(flat.begin() + o * n, flat.begin() + (o + 1) * n);
      auto original = g.context.objects;
      std::sort(encoded.begin(), encoded.end());
      std::sort(original.begin(), original.end());
      CHECK(encoded == original);
    }
  }
}

TEST_CASE("receiver permutation reproduces the context and tracks the target") {
  for (int n : {1, 2, 3}) {
    Rng rng(7000 + n);
    for (int i = 0; i < 300; ++i) {
      const GameInstance g = sample_game(n, rng);
      const ReceiverView view = permute_for_receiver(g, rng);
      REQUIRE(view.flat.size() == static_cast<size_t>(2 * n * n));
      for (int slot = 0; slot < 2 * n; ++slot) {
        const auto& obj = g.context.objects[view.permutation[slot]];
        for (int d = 0; d < n; ++d) REQUIRE(view.flat[slot * n + d] == obj[d]);
      }
      CHECK(view.permutation[view.permuted_target_index] == g.target_index);
    }
  }
}

TEST_CASE("identity and swap permutations move the target accordingly") {
  Rng rng(8);
  const GameInstance g = sample_game(1, rng);
  bool saw_identity = false, saw_swap = false;
  for (int i = 0; i < 100; ++i) {
    const ReceiverView view = permute_for_receiver(g, rng);
    if (view.permutation[0] == 0) {
      saw_identity = true;
      CHECK(view.permuted_target_index == g.target_index);
    } else {
      saw_swap = true;
      CHECK(view.permuted_target_index == 1 - g.target_index);
    }
  }
  CHECK(saw_identity);
  CHECK(saw_swap);
}

TEST_CASE("permutations are uniform (chi-square, n=1)") {
  Rng rng(9);
  const GameInstance g = sample_game(1, rng);
  std::vector<long> counts(2, 0);
  for (int i = 0; i < 20000; ++i) ++counts[permute_for_receiver(g, rng).permutation[0]];
  const double x2 = chi_square(counts, std::vector<double>(2, 10000.0));
  CHECK(x2 < 6.635);  // df=1 critical value at p=0.01
}
