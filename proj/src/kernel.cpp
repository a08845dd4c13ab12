#include "extremity/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace extremity {

Affine::Affine(int in, int out, Rng& rng) : w(in, out), b(1, out) {
  const double bound = std::sqrt(1.0 / in);
  for (auto& t : w.value.v) t = (2.0 * rng.uniform() - 1.0) * bound;
}

Matrix Affine::forward(const Matrix& x, AffineCache* cache) const {
  Matrix y = matmul(x, w.value);
  for (int i = 0; i < y.rows; ++i) {
    auto r = y.row(i);
    for (int j = 0; j < y.cols; ++j) r[j] += b.value.v[j];
  }
  if (cache) cache->x = x;
  return y;
}

Matrix Affine::backward(const AffineCache& cache, const Matrix& dy) {
  add_inplace(w.grad, matmul_tn(cache.x, dy));
  const auto db = column_sums(dy);
  for (int j = 0; j < b.grad.cols; ++j) b.grad.v[j] += db[j];
  return matmul_nt(dy, w.value);
}

Matrix activation(Act kind, const Matrix& x, ActCache* cache) {
  Matrix y = x;
  if (kind == Act::kElu) {
    for (auto& t : y.v) t = t > 0.0 ? t : std::expm1(t);
  } else {
    for (auto& t : y.v) t = t > 0.0 ? t : 0.0;
  }
  if (cache) {
    cache->kind = kind;
    cache->x = x;
  }
  return y;
}

Matrix activation_backward(const ActCache& cache, const Matrix& dy) {
  if (!cache.x.same_shape(dy)) throw std::invalid_argument("activation_backward: shape mismatch");
  Matrix dx = dy;
  if (cache.kind == Act::kElu) {
    for (size_t i = 0; i < dx.v.size(); ++i) {
      const double x = cache.x.v[i];
      dx.v[i] *= x > 0.0 ? 1.0 : std::exp(x);
    }
  } else {
    for (size_t i = 0; i < dx.v.size(); ++i) {
      if (cache.x.v[i] <= 0.0) dx.v[i] = 0.0;
    }
  }
  return dx;
}

BatchNorm::BatchNorm(int features)
    : gamma(1, features), beta(1, features), running_mean(features, 0.0), running_var(features, 1.0) {
  gamma.value.fill(1.0);
}

Matrix BatchNorm::forward(const Matrix& x, Mode mode, BatchNormCache* cache) {
  const int f = features();
  if (x.cols != f) throw std::invalid_argument("BatchNorm: feature count mismatch");
  const int n = x.rows;
  Matrix y(n, f);

  if (mode == Mode::kEval) {
    for (int j = 0; j < f; ++j) {
      const double scale = gamma.value.v[j] / std::sqrt(running_var[j] + epsilon);
      const double shift = beta.value.v[j] - scale * running_mean[j];
      for (int i = 0; i < n; ++i) y.at(i, j) = scale * x.at(i, j) + shift;
    }
    if (cache) cache->mode = Mode::kEval;
    return y;
  }

  if (mode == Mode::kTrain && n < 2) throw std::invalid_argument("BatchNorm: training mode needs batch size >= 2");

  std::vector<double> mean(f, 0.0), var(f, 0.0);
  for (int i = 0; i < n; ++i) {
    auto r = x.row(i);
    for (int j = 0; j < f; ++j) mean[j] += r[j];
  }
  for (int j = 0; j < f; ++j) mean[j] /= n;
  for (int i = 0; i < n; ++i) {
    auto r = x.row(i);
    for (int j = 0; j < f; ++j) {
      const double d = r[j] - mean[j];
      var[j] += d * d;
    }
  }
  for (int j = 0; j < f; ++j) var[j] /= n;

  std::vector<double> inv_std(f);
  for (int j = 0; j < f; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + epsilon);

  Matrix x_hat(n, f);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) {
      const double xh = (x.at(i, j) - mean[j]) * inv_std[j];
      x_hat.at(i, j) = xh;
      y.at(i, j) = gamma.value.v[j] * xh + beta.value.v[j];
    }
  }

  if (mode == Mode::kTrain) {
    // Running variance tracks the unbiased batch variance.
    const double unbias = n > 1 ? static_cast<double>(n) / (n - 1) : 1.0;
    for (int j = 0; j < f; ++j) {
      running_mean[j] = (1.0 - momentum) * running_mean[j] + momentum * mean[j];
      running_var[j] = (1.0 - momentum) * running_var[j] + momentum * var[j] * unbias;
    }
  }

  if (cache) {
    cache->mode = mode;
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix BatchNorm::backward(const BatchNormCache& cache, const Matrix& dy) {
  if (cache.mode != Mode::kTrain) throw std::logic_error("BatchNorm::backward: cache is not from a training forward");
  if (!cache.x_hat.same_shape(dy)) throw std::invalid_argument("BatchNorm::backward: shape mismatch");
  const int n = dy.rows;
  const int f = dy.cols;

  std::vector<double> sum_dy(f, 0.0), sum_dy_xhat(f, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) {
      const double d = dy.at(i, j);
      sum_dy[j] += d;
      sum_dy_xhat[j] += d * cache.x_hat.at(i, j);
    }
  }
  for (int j = 0; j < f; ++j) {
    beta.grad.v[j] += sum_dy[j];
    gamma.grad.v[j] += sum_dy_xhat[j];
  }

  Matrix dx(n, f);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) {
      const double term = dy.at(i, j) - sum_dy[j] / n - cache.x_hat.at(i, j) * sum_dy_xhat[j] / n;
      dx.at(i, j) = gamma.value.v[j] * cache.inv_std[j] * term;
    }
  }
  return dx;
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    auto z = logits.row(i);
    auto out = p.row(i);
    double mx = z[0];
    for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, z[j]);
    double sum = 0.0;
    for (int j = 0; j < logits.cols; ++j) {
      out[j] = std::exp(z[j] - mx);
      sum += out[j];
    }
    for (int j = 0; j < logits.cols; ++j) out[j] /= sum;
  }
  return p;
}

namespace {

void check_distribution(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("categorical: empty distribution");
  double sum = 0.0;
  for (double p : probs) {
    if (p < -1e-12 || !std::isfinite(p)) throw std::invalid_argument("categorical: invalid probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("categorical: probabilities do not sum to 1");
}

}  // namespace

StochasticNode categorical(std::span<const double> probs, Rng& rng) {
  check_distribution(probs);
  const double u = rng.uniform();
  double cum = 0.0;
  int pick = -1;
  int last_positive = -1;
  for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
    const double p = probs[i];
    if (p <= 0.0) continue;
    last_positive = i;
    cum += p;
    if (pick < 0 && u < cum) pick = i;
  }
  if (pick < 0) pick = last_positive;  // u landed past the rounded total
  StochasticNode node;
  node.probs.assign(probs.begin(), probs.end());
  node.sampled_index = pick;
  node.log_prob = std::log(probs[pick]);
  return node;
}

StochasticNode categorical_argmax(std::span<const double> probs) {
  check_distribution(probs);
  int pick = 0;
  for (int i = 1; i < static_cast<int>(probs.size()); ++i) {
    if (probs[i] > probs[pick]) pick = i;
  }
  StochasticNode node;
  node.probs.assign(probs.begin(), probs.end());
  node.sampled_index = pick;
  node.log_prob = std::log(probs[pick]);
  return node;
}

double reinforce_loss_term(std::span<const double> probs, int sampled, double coeff) {
  return -coeff * std::log(probs[sampled]);
}

void add_reinforce_logit_grad(Matrix& dlogits, int row, const StochasticNode& node, double coeff) {
  if (!std::isfinite(coeff)) throw std::invalid_argument("add_reinforce_logit_grad: non-finite advantage");
  auto r = dlogits.row(row);
  if (r.size() != node.probs.size()) throw std::invalid_argument("add_reinforce_logit_grad: width mismatch");
  for (size_t j = 0; j < node.probs.size(); ++j) r[j] += coeff * node.probs[j];
  r[node.sampled_index] -= coeff;
}

void adam_step(Parameter& p, double lr, double beta1, double beta2, double eps) {
  const long t = ++p.step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (size_t i = 0; i < p.value.v.size(); ++i) {
    const double g = p.grad.v[i];
    p.adam_m.v[i] = beta1 * p.adam_m.v[i] + (1.0 - beta1) * g;
    p.adam_v.v[i] = beta2 * p.adam_v.v[i] + (1.0 - beta2) * g * g;
    const double m_hat = p.adam_m.v[i] / bc1;
    const double v_hat = p.adam_v.v[i] / bc2;
    p.value.v[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
  p.zero_grad();
}

GradCheckReport gradcheck(const std::vector<ParamRef>& params, const std::function<double()>& loss,
                          const std::function<void()>& accumulate_grads, double h) {
  for (const auto& pr : params) pr.param->zero_grad();
  accumulate_grads();

  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const auto& pr : params) analytic.push_back(pr.param->grad);

  GradCheckReport report;
  for (size_t p = 0; p < params.size(); ++p) {
    Parameter& param = *params[p].param;
    double max_rel = 0.0;
    for (size_t i = 0; i < param.value.v.size(); ++i) {
      const double saved = param.value.v[i];
      param.value.v[i] = saved + h;
      const double lp = loss();
      param.value.v[i] = saved - h;
      const double lm = loss();
      param.value.v[i] = saved;
      const double numeric = (lp - lm) / (2.0 * h);
      const double a = analytic[p].v[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
    report.entries.push_back({params[p].name, max_rel});
    report.worst = std::max(report.worst, max_rel);
  }
  for (const auto& pr : params) pr.param->zero_grad();
  return report;
}

}  // namespace extremity
