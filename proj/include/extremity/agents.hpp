#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "extremity/kernel.hpp"

namespace extremity {

enum class ReceiverKind { kBasic, kAttentional };

const char* to_string(ReceiverKind k);
ReceiverKind parse_receiver_kind(std::string_view s);

struct TensorRef {
  std::string name;
  std::vector<double>* data = nullptr;
};

// Sender: two ELU hidden layers, then one batch-normalized softmax head per
// message slot (scale signal and polarity signal). Input is the flattened
// context with the target object first.
class SenderNet {
 public:
  SenderNet(int n_dims, Rng& rng, int hidden1 = 64, int hidden2 = 64);

  struct Forward {
    Matrix probs_ms;
    Matrix probs_mp;
    AffineCache a1, a2, ams, amp;
    ActCache e1, e2;
    BatchNormCache bn_ms, bn_mp;
  };

  Forward forward(const Matrix& x, Mode mode);
  // dlogits_* are gradients at the softmax inputs of each head.
  void backward(const Forward& f, const Matrix& dlogits_ms, const Matrix& dlogits_mp);

  int n_dims() const { return n_dims_; }
  int input_width() const { return h1.in(); }
  std::vector<ParamRef> parameters();
  std::vector<TensorRef> state_tensors();

  Affine h1, h2, head_ms, head_mp;
  BatchNorm norm_ms, norm_mp;

 private:
  int n_dims_ = 0;
};

// Basic receiver: one multilayer perceptron over (context, one-hot m_s,
// one-hot m_p), softmax over the 2·n object positions.
class BasicReceiverNet {
 public:
  BasicReceiverNet(int n_dims, Rng& rng, int w1 = 64, int w2 = 64, int w3 = 32);

  struct Forward {
    Matrix probs;
    AffineCache a1, a2, a3, ah;
    ActCache r1, r2, r3;
    BatchNormCache bn;
  };

  Forward forward(const Matrix& x, Mode mode);
  void backward(const Forward& f, const Matrix& dlogits);

  int n_dims() const { return n_dims_; }
  int input_width() const { return l1.in(); }
  std::vector<ParamRef> parameters();
  std::vector<TensorRef> state_tensors();

  Affine l1, l2, l3, head;
  BatchNorm norm;

 private:
  int n_dims_ = 0;
};

// Attentional receiver. Stage 1 maps (context, one-hot m_s) to a distribution
// over dimensions; a dimension is sampled and the context is filtered down to
// that single column. Stage 2 maps (attended column, one-hot m_p) to a
// distribution over object positions.
class AttentionalReceiverNet {
 public:
  AttentionalReceiverNet(int n_dims, Rng& rng, int stage1_hidden = 64, int stage2_hidden1 = 64,
                         int stage2_hidden2 = 32);

  struct Stage1Forward {
    Matrix dim_probs;
    AffineCache a1, ah;
    ActCache e1;
    BatchNormCache bn;
  };

  struct Stage2Forward {
    Matrix obj_probs;
    AffineCache a1, a2, ah;
    ActCache e1, e2;
    BatchNormCache bn;
  };

  Stage1Forward stage1(const Matrix& x, Mode mode);
  Stage2Forward stage2(const Matrix& x, Mode mode);
  void stage1_backward(const Stage1Forward& f, const Matrix& dlogits);
  void stage2_backward(const Stage2Forward& f, const Matrix& dlogits);

  int n_dims() const { return n_dims_; }
  int stage1_input_width() const { return s1_hidden.in(); }
  int stage2_input_width() const { return s2_hidden1.in(); }
  std::vector<ParamRef> parameters();
  std::vector<TensorRef> state_tensors();

  Affine s1_hidden, s1_head;
  BatchNorm s1_norm;
  Affine s2_hidden1, s2_hidden2, s2_head;
  BatchNorm s2_norm;

 private:
  int n_dims_ = 0;
};

using ReceiverNet = std::variant<BasicReceiverNet, AttentionalReceiverNet>;

struct Agents {
  SenderNet sender;
  ReceiverNet receiver;
};

Agents init_agents(int n_dims, ReceiverKind kind, Rng& rng);

ReceiverKind receiver_kind(const ReceiverNet& r);
std::vector<ParamRef> receiver_parameters(ReceiverNet& r);
std::vector<TensorRef> receiver_state_tensors(ReceiverNet& r);

// Hard attention: per-object degree on the chosen dimension only.
// `ctx_flat` is a flattened context (any object order), length 2·n_dims².
std::vector<double> attend(std::span<const double> ctx_flat, int n_dims, int dim);

// Everything sampled during one game, plus its reward.
struct EpisodeTrace {
  StochasticNode ms;
  StochasticNode mp;
  std::optional<StochasticNode> attention;
  StochasticNode choice;
  double reward = 0.0;
  int node_count() const { return attention.has_value() ? 4 : 3; }
};

}  // namespace extremity
