#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "extremity/agents.hpp"

namespace extremity {

// One finite-difference check of a whole architecture with frozen samples.
struct ArchCheckResult {
  std::string name;
  double tolerance = 1e-3;
  GradCheckReport report;
  bool pass() const { return report.worst < tolerance; }
};

// Chain of plain affine layers; everything is exactly linear, so the check
// runs at a much tighter tolerance.
ArchCheckResult gradcheck_linear_chain(uint64_t seed);

ArchCheckResult gradcheck_sender(int n_dims, int batch, int hidden1, int hidden2, uint64_t seed);
ArchCheckResult gradcheck_basic_receiver(int n_dims, int batch, int w1, int w2, int w3, uint64_t seed);
ArchCheckResult gradcheck_attentional_receiver(int n_dims, int batch, int s1_hidden, int s2_hidden1,
                                               int s2_hidden2, uint64_t seed);

// Mixed suite cycling through the linear fixture and the three architectures
// at small widths with randomized shapes.
std::vector<ArchCheckResult> run_gradcheck_suite(int num_configs, uint64_t seed);

}  // namespace extremity
