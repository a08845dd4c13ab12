#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "extremity/matrix.hpp"
#include "extremity/rng.hpp"

namespace extremity {

// Forward-pass mode. kTrain normalizes with batch statistics and updates
// running statistics; kEval normalizes with running statistics; kEvalBatchStats
// normalizes with batch statistics without touching the running ones
// (sensitivity mode for evaluation).
enum class Mode { kTrain, kEval, kEvalBatchStats };

// Learnable matrix with its gradient and Adam moment state.
struct Parameter {
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  long step_count = 0;

  Parameter() = default;
  Parameter(int rows, int cols) : value(rows, cols), grad(rows, cols), adam_m(rows, cols), adam_v(rows, cols) {}
  void zero_grad() { grad.fill(0.0); }
};

struct ParamRef {
  std::string name;
  Parameter* param = nullptr;
};

// y = x·W + b (bias broadcast over rows).
struct AffineCache {
  Matrix x;
};

class Affine {
 public:
  Affine() = default;
  // W uniform in [-sqrt(1/in), +sqrt(1/in)], b zero.
  Affine(int in, int out, Rng& rng);

  Matrix forward(const Matrix& x, AffineCache* cache) const;
  // Accumulates dW = xᵀ·dy and db = column sums of dy; returns dx.
  Matrix backward(const AffineCache& cache, const Matrix& dy);

  int in() const { return w.value.rows; }
  int out() const { return w.value.cols; }

  Parameter w;
  Parameter b;  // 1×out
};

enum class Act { kElu, kRelu };

struct ActCache {
  Act kind = Act::kElu;
  Matrix x;
};

// ELU with alpha = 1, or RELU with derivative 0 at the origin.
Matrix activation(Act kind, const Matrix& x, ActCache* cache);
Matrix activation_backward(const ActCache& cache, const Matrix& dy);

struct BatchNormCache {
  Mode mode = Mode::kEval;
  Matrix x_hat;
  std::vector<double> inv_std;
};

// Batch normalization over the batch dimension with per-feature scale/shift.
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(int features);

  Matrix forward(const Matrix& x, Mode mode, BatchNormCache* cache);
  // Full gradient including the mean/variance paths. Requires a kTrain cache.
  Matrix backward(const BatchNormCache& cache, const Matrix& dy);

  int features() const { return gamma.value.cols; }

  Parameter gamma;  // 1×features
  Parameter beta;   // 1×features
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
};

// Row-wise softmax with max subtraction.
Matrix softmax(const Matrix& logits);

// One sampled categorical action together with the distribution it came from.
struct StochasticNode {
  std::vector<double> probs;
  int sampled_index = -1;
  double log_prob = 0.0;
};

// Samples an index from `probs`; throws if the vector is not a distribution
// (negative entries, or total off from 1 by more than 1e-6).
StochasticNode categorical(std::span<const double> probs, Rng& rng);
StochasticNode categorical_argmax(std::span<const double> probs);

// Surrogate-loss term -coeff·log p[sampled] for one stochastic node.
double reinforce_loss_term(std::span<const double> probs, int sampled, double coeff);

// Gradient of the surrogate loss at the softmax input:
// dlogits[row] += coeff · (probs − onehot(sampled)).
void add_reinforce_logit_grad(Matrix& dlogits, int row, const StochasticNode& node, double coeff);

// Bias-corrected Adam update. Zeroes the gradient and bumps step_count.
void adam_step(Parameter& p, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst = 0.0;
  bool pass(double tol) const { return worst < tol; }
};

// Central finite differences (step h) of `loss` against the analytic gradients
// that `accumulate_grads` writes into the parameters. The loss closure must be
// deterministic: any sampling nodes have to be frozen to fixed actions.
GradCheckReport gradcheck(const std::vector<ParamRef>& params, const std::function<double()>& loss,
                          const std::function<void()>& accumulate_grads, double h = 1e-5);

}  // namespace extremity
