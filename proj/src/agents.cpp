#include "extremity/agents.hpp"

#include <stdexcept>
#include <string>

namespace extremity {

const char* to_string(ReceiverKind k) { return k == ReceiverKind::kBasic ? "basic" : "attentional"; }

ReceiverKind parse_receiver_kind(std::string_view s) {
  if (s == "basic") return ReceiverKind::kBasic;
  if (s == "attentional") return ReceiverKind::kAttentional;
  throw std::invalid_argument("receiver kind must be 'basic' or 'attentional', got '" + std::string(s) + "'");
}

SenderNet::SenderNet(int n_dims, Rng& rng, int hidden1, int hidden2)
    : h1(2 * n_dims * n_dims, hidden1, rng),
      h2(hidden1, hidden2, rng),
      head_ms(hidden2, n_dims, rng),
      head_mp(hidden2, 2, rng),
      norm_ms(n_dims),
      norm_mp(2),
      n_dims_(n_dims) {}

SenderNet::Forward SenderNet::forward(const Matrix& x, Mode mode) {
  Forward f;
  Matrix h = activation(Act::kElu, h1.forward(x, &f.a1), &f.e1);
  h = activation(Act::kElu, h2.forward(h, &f.a2), &f.e2);
  f.probs_ms = softmax(norm_ms.forward(head_ms.forward(h, &f.ams), mode, &f.bn_ms));
  f.probs_mp = softmax(norm_mp.forward(head_mp.forward(h, &f.amp), mode, &f.bn_mp));
  return f;
}

void SenderNet::backward(const Forward& f, const Matrix& dlogits_ms, const Matrix& dlogits_mp) {
  Matrix dh = head_ms.backward(f.ams, norm_ms.backward(f.bn_ms, dlogits_ms));
  add_inplace(dh, head_mp.backward(f.amp, norm_mp.backward(f.bn_mp, dlogits_mp)));
  Matrix d1 = h2.backward(f.a2, activation_backward(f.e2, dh));
  h1.backward(f.a1, activation_backward(f.e1, d1));
}

std::vector<ParamRef> SenderNet::parameters() {
  return {
      {"sender.h1.W", &h1.w},           {"sender.h1.b", &h1.b},
      {"sender.h2.W", &h2.w},           {"sender.h2.b", &h2.b},
      {"sender.ms.W", &head_ms.w},      {"sender.ms.b", &head_ms.b},
      {"sender.ms.bn.gamma", &norm_ms.gamma}, {"sender.ms.bn.beta", &norm_ms.beta},
      {"sender.mp.W", &head_mp.w},      {"sender.mp.b", &head_mp.b},
      {"sender.mp.bn.gamma", &norm_mp.gamma}, {"sender.mp.bn.beta", &norm_mp.beta},
  };
}

std::vector<TensorRef> SenderNet::state_tensors() {
  std::vector<TensorRef> out;
  for (auto& pr : parameters()) out.push_back({pr.name, &pr.param->value.v});
  out.push_back({"sender.ms.bn.running_mean", &norm_ms.running_mean});
  out.push_back({"sender.ms.bn.running_var", &norm_ms.running_var});
  out.push_back({"sender.mp.bn.running_mean", &norm_mp.running_mean});
  out.push_back({"sender.mp.bn.running_var", &norm_mp.running_var});
  return out;
}

BasicReceiverNet::BasicReceiverNet(int n_dims, Rng& rng, int w1, int w2, int w3)
    : l1(2 * n_dims * n_dims + n_dims + 2, w1, rng),
      l2(w1, w2, rng),
      l3(w2, w3, rng),
      head(w3, 2 * n_dims, rng),
      norm(2 * n_dims),
      n_dims_(n_dims) {}

BasicReceiverNet::Forward BasicReceiverNet::forward(const Matrix& x, Mode mode) {
  Forward f;
  Matrix h = activation(Act::kRelu, l1.forward(x, &f.a1), &f.r1);
  h = activation(Act::kRelu, l2.forward(h, &f.a2), &f.r2);
  h = activation(Act::kRelu, l3.forward(h, &f.a3), &f.r3);
  f.probs = softmax(norm.forward(head.forward(h, &f.ah), mode, &f.bn));
  return f;
}

void BasicReceiverNet::backward(const Forward& f, const Matrix& dlogits) {
  Matrix dh = head.backward(f.ah, norm.backward(f.bn, dlogits));
  Matrix d3 = l3.backward(f.a3, activation_backward(f.r3, dh));
  Matrix d2 = l2.backward(f.a2, activation_backward(f.r2, d3));
  l1.backward(f.a1, activation_backward(f.r1, d2));
}

std::vector<ParamRef> BasicReceiverNet::parameters() {
  return {
      {"recv.l1.W", &l1.w},   {"recv.l1.b", &l1.b},
      {"recv.l2.W", &l2.w},   {"recv.l2.b", &l2.b},
      {"recv.l3.W", &l3.w},   {"recv.l3.b", &l3.b},
      {"recv.head.W", &head.w}, {"recv.head.b", &head.b},
      {"recv.bn.gamma", &norm.gamma}, {"recv.bn.beta", &norm.beta},
  };
}

std::vector<TensorRef> BasicReceiverNet::state_tensors() {
  std::vector<TensorRef> out;
  for (auto& pr : parameters()) out.push_back({pr.name, &pr.param->value.v});
  out.push_back({"recv.bn.running_mean", &norm.running_mean});
  out.push_back({"recv.bn.running_var", &norm.running_var});
  return out;
}

AttentionalReceiverNet::AttentionalReceiverNet(int n_dims, Rng& rng, int stage1_hidden, int stage2_hidden1,
                                               int stage2_hidden2)
    : s1_hidden(2 * n_dims * n_dims + n_dims, stage1_hidden, rng),
      s1_head(stage1_hidden, n_dims, rng),
      s1_norm(n_dims),
      s2_hidden1(2 * n_dims + 2, stage2_hidden1, rng),
      s2_hidden2(stage2_hidden1, stage2_hidden2, rng),
      s2_head(stage2_hidden2, 2 * n_dims, rng),
      s2_norm(2 * n_dims),
      n_dims_(n_dims) {}

AttentionalReceiverNet::Stage1Forward AttentionalReceiverNet::stage1(const Matrix& x, Mode mode) {
  Stage1Forward f;
  Matrix h = activation(Act::kElu, s1_hidden.forward(x, &f.a1), &f.e1);
  f.dim_probs = softmax(s1_norm.forward(s1_head.forward(h, &f.ah), mode, &f.bn));
  return f;
}

AttentionalReceiverNet::Stage2Forward AttentionalReceiverNet::stage2(const Matrix& x, Mode mode) {
  Stage2Forward f;
  Matrix h = activation(Act::kElu, s2_hidden1.forward(x, &f.a1), &f.e1);
  h = activation(Act::kElu, s2_hidden2.forward(h, &f.a2), &f.e2);
  f.obj_probs = softmax(s2_norm.forward(s2_head.forward(h, &f.ah), mode, &f.bn));
  return f;
}

void AttentionalReceiverNet::stage1_backward(const Stage1Forward& f, const Matrix& dlogits) {
  Matrix dh = s1_head.backward(f.ah, s1_norm.backward(f.bn, dlogits));
  s1_hidden.backward(f.a1, activation_backward(f.e1, dh));
}

void AttentionalReceiverNet::stage2_backward(const Stage2Forward& f, const Matrix& dlogits) {
  Matrix dh = s2_head.backward(f.ah, s2_norm.backward(f.bn, dlogits));
  Matrix d1 = s2_hidden2.backward(f.a2, activation_backward(f.e2, dh));
  s2_hidden1.backward(f.a1, activation_backward(f.e1, d1));
}

std::vector<ParamRef> AttentionalReceiverNet::parameters() {
  return {
      {"recv.stage1.h.W", &s1_hidden.w},   {"recv.stage1.h.b", &s1_hidden.b},
      {"recv.stage1.out.W", &s1_head.w},   {"recv.stage1.out.b", &s1_head.b},
      {"recv.stage1.bn.gamma", &s1_norm.gamma}, {"recv.stage1.bn.beta", &s1_norm.beta},
      {"recv.stage2.h1.W", &s2_hidden1.w}, {"recv.stage2.h1.b", &s2_hidden1.b},
      {"recv.stage2.h2.W", &s2_hidden2.w}, {"recv.stage2.h2.b", &s2_hidden2.b},
      {"recv.stage2.out.W", &s2_head.w},   {"recv.stage2.out.b", &s2_head.b},
      {"recv.stage2.bn.gamma", &s2_norm.gamma}, {"recv.stage2.bn.beta", &s2_norm.beta},
  };
}

std::vector<TensorRef> AttentionalReceiverNet::state_tensors() {
  std::vector<TensorRef> out;
  for (auto& pr : parameters()) out.push_back({pr.name, &pr.param->value.v});
  out.push_back({"recv.stage1.bn.running_mean", &s1_norm.running_mean});
  out.push_back({"recv.stage1.bn.running_var", &s1_norm.running_var});
  out.push_back({"recv.stage2.bn.running_mean", &s2_norm.running_mean});
  out.push_back({"recv.stage2.bn.running_var", &s2_norm.running_var});
  return out;
}

Agents init_agents(int n_dims, ReceiverKind kind, Rng& rng) {
  if (n_dims < 1) throw std::invalid_argument("init_agents: n_dims must be positive");
  SenderNet sender(n_dims, rng);
  if (kind == ReceiverKind::kBasic) {
    return {std::move(sender), ReceiverNet{std::in_place_type<BasicReceiverNet>, n_dims, rng}};
  }
  return {std::move(sender), ReceiverNet{std::in_place_type<AttentionalReceiverNet>, n_dims, rng}};
}

ReceiverKind receiver_kind(const ReceiverNet& r) {
  return std::holds_alternative<BasicReceiverNet>(r) ? ReceiverKind::kBasic : ReceiverKind::kAttentional;
}

std::vector<ParamRef> receiver_parameters(ReceiverNet& r) {
  return std::visit([](auto& net) { return net.parameters(); }, r);
}

std::vector<TensorRef> receiver_state_tensors(ReceiverNet& r) {
  return std::visit([](auto& net) { return net.state_tensors(); }, r);
}

std::vector<double> attend(std::span<const double> ctx_flat, int n_dims, int dim) {
  if (dim < 0 || dim >= n_dims) throw std::out_of_range("attend: dimension out of range");
  if (ctx_flat.size() % n_dims != 0) throw std::invalid_argument("attend: flat context length mismatch");
  const size_t n_objects = ctx_flat.size() / n_dims;
  std::vector<double> column(n_objects);
  for (size_t i = 0; i < n_objects; ++i) column[i] = ctx_flat[i * n_dims + dim];
  return column;
}

}  // namespace extremity
