#pragma once

#include <compare>
#include <span>
#include <string_view>
#include <vector>

#include "extremity/rng.hpp"

namespace extremity {

enum class Polarity { kMin, kMax };

const char* to_string(Polarity p);
Polarity parse_polarity(std::string_view s);

// One (dimension, polarity) slot on which an object is the strict extremum.
// Ordering is lexicographic with kMin before kMax.
struct DimPol {
  int dim = 0;
  Polarity pol = Polarity::kMin;
  auto operator<=>(const DimPol&) const = default;
};

// 2·n_dims objects, each holding one scale degree per dimension.
struct Context {
  int n_dims = 0;
  std::vector<std::vector<double>> objects;
};

struct GameInstance {
  Context context;
  int target_index = 0;
  std::vector<DimPol> signature;  // sorted; nonempty for any valid context
  DimPol canonical;               // lexicographically least signature entry
};

// Objects as the receiver sees them: a uniformly random reordering.
// permutation[slot] is the sender-order index that occupies `slot`.
struct ReceiverView {
  std::vector<double> flat;
  int permuted_target_index = 0;
  std::vector<int> permutation;
};

// The 19 generation degrees -0.9, -0.8, ..., +0.9 in ascending order.
std::vector<double> degree_grid();

// True iff every object is the strict (unique) minimum or maximum on at
// least one dimension. Throws on ragged degree lists.
bool is_valid_context(const Context& ctx);

// All (dimension, polarity) pairs on which the object is the unique extremum.
std::vector<DimPol> extremal_signature(const Context& ctx, int index);

// Rejection-samples uniform grid contexts until validity holds.
Context generate_context(int n_dims, Rng& rng, int max_attempts = 10000);

// Index of the unique extremum of the given polarity on the given dimension;
// throws when the extremum is tied (no unique referent).
int superlative_oracle(const Context& ctx, int dim, Polarity pol);

// Fresh context plus a uniformly chosen target with its extremal signature.
GameInstance sample_game(int n_dims, Rng& rng, int max_attempts = 10000);

// Flat sender input of length 2·n_dims²: the target object first, the
// remaining objects in context order.
std::vector<double> encode_sender_input(const GameInstance& g);

ReceiverView permute_for_receiver(const GameInstance& g, Rng& rng);

}  // namespace extremity
