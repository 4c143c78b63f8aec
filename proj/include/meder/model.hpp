#pragma once

// Transformer encoder branches and the two classifiers built on them:
//
//   SingleModel:   logits = W . CLS(encoder(pair))
//   EnsembleModel: c = [CLS(branch1(text-first pair)), CLS(branch2(entity-first pair))]
//                  logits = W2 . gelu(W1 . c + b1) + b2
//
// Encoder blocks are pre-norm:
//   h <- h + MHA(LN1(h), mask)
//   h <- h + FFN(LN2(h)),  FFN(x) = W_out . gelu(W_in . x + b_in) + b_out
//
// Parameter count for one branch (V vocab, L max_len, d model, f ffn, N layers):
//   V*d + 2*d + L*d + N * (4*d*d + 4*d + 2*d*f + f + d + 4*d)
// Ensemble adds 2*branch + 2*d*h + h + h*C + C; single adds branch + d*C + C.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "meder/errors.hpp"
#include "meder/num/ops.hpp"
#include "meder/num/tape.hpp"
#include "meder/pairseq.hpp"
#include "meder/random.hpp"

namespace meder {

using num::Parameter;
using num::Shape;
using num::Tape;
using num::Tensor;
using num::Var;

struct ModelConfig {
  std::size_t vocab_size = 8000;
  std::size_t max_len = 484;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t d_ff = 128;
  std::size_t n_classes = 6;
  /// Width of the ensemble head's hidden layer; 0 means d_model.
  std::size_t d_hidden = 0;
  double dropout = 0.1;
  double init_std = 0.02;
  std::uint64_t seed = 42;

  std::size_t hidden_width() const { return d_hidden == 0 ? d_model : d_hidden; }

  void validate() const {
    if (vocab_size < 5) throw UsageError("model: vocab_size must exceed the 4 special tokens");
    if (max_len < 5) throw UsageError("model: max_len must be at least 5");
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0)
      throw UsageError("model: d_model must be a positive multiple of n_heads");
    if (d_ff == 0) throw UsageError("model: d_ff must be positive");
    if (n_classes < 2) throw UsageError("model: need at least two classes");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("model: dropout must lie in [0, 1)");
    if (!(init_std > 0.0)) throw UsageError("model: init_std must be positive");
  }

  bool operator==(const ModelConfig&) const = default;
};

/// Dropout switch and optional attention capture for one forward pass.
template <typename T>
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;
  /// When set, receives the attention probabilities [B, H, L, L] of every layer.
  std::vector<Tensor<T>>* attention_probs = nullptr;

  static ForwardContext eval() { return {}; }
  static ForwardContext train(double rate, Rng& rng) { return {true, rate, &rng, nullptr}; }

  Var<T> drop(Var<T> x) const {
    if (!training || dropout <= 0.0 || rng == nullptr) return x;
    return num::dropout(x, dropout, *rng);
  }
};

namespace detail {

template <typename T>
Parameter<T> normal_param(std::string name, Shape shape, double stddev, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.truncated_normal(stddev));
  return Parameter<T>(std::move(name), std::move(t));
}

template <typename T>
Parameter<T> const_param(std::string name, Shape shape, T value) {
  return Parameter<T>(std::move(name), Tensor<T>(std::move(shape), value));
}

}  // namespace detail

template <typename T>
struct EncoderLayer {
  Parameter<T> ln1_gain, ln1_bias;
  Parameter<T> wq, bq, wk, bk, wv, bv, wo, bo;
  Parameter<T> ln2_gain, ln2_bias;
  Parameter<T> w_in, b_in, w_out, b_out;

  static EncoderLayer init(const ModelConfig& c, Rng& rng, const std::string& prefix) {
    const std::size_t d = c.d_model, f = c.d_ff;
    const double s = c.init_std;
    EncoderLayer l;
    l.ln1_gain = detail::const_param<T>(prefix + ".ln1.gain", {d}, T(1));
    l.ln1_bias = detail::const_param<T>(prefix + ".ln1.bias", {d}, T(0));
    l.wq = detail::normal_param<T>(prefix + ".attn.wq", {d, d}, s, rng);
    l.bq = detail::const_param<T>(prefix + ".attn.bq", {d}, T(0));
    l.wk = detail::normal_param<T>(prefix + ".attn.wk", {d, d}, s, rng);
    l.bk = detail::const_param<T>(prefix + ".attn.bk", {d}, T(0));
    l.wv = detail::normal_param<T>(prefix + ".attn.wv", {d, d}, s, rng);
    l.bv = detail::const_param<T>(prefix + ".attn.bv", {d}, T(0));
    l.wo = detail::normal_param<T>(prefix + ".attn.wo", {d, d}, s, rng);
    l.bo = detail::const_param<T>(prefix + ".attn.bo", {d}, T(0));
    l.ln2_gain = detail::const_param<T>(prefix + ".ln2.gain", {d}, T(1));
    l.ln2_bias = detail::const_param<T>(prefix + ".ln2.bias", {d}, T(0));
    l.w_in = detail::normal_param<T>(prefix + ".ffn.w_in", {d, f}, s, rng);
    l.b_in = detail::const_param<T>(prefix + ".ffn.b_in", {f}, T(0));
    l.w_out = detail::normal_param<T>(prefix + ".ffn.w_out", {f, d}, s, rng);
    l.b_out = detail::const_param<T>(prefix + ".ffn.b_out", {d}, T(0));
    return l;
  }

  void collect(std::vector<Parameter<T>*>& out) {
    for (Parameter<T>* p : {&ln1_gain, &ln1_bias, &wq, &bq, &wk, &bk, &wv, &bv, &wo, &bo, &ln2_gain, &ln2_bias,
                            &w_in, &b_in, &w_out, &b_out})
      out.push_back(p);
  }
};

template <typename T>
struct EncoderBranch {
  Parameter<T> word_emb;  // [vocab, d]
  Parameter<T> seg_emb;   // [2, d]
  Parameter<T> pos_emb;   // [max_len, d]
  std::vector<EncoderLayer<T>> layers;

  static EncoderBranch init(const ModelConfig& c, Rng& rng, const std::string& prefix) {
    EncoderBranch b;
    b.word_emb = detail::normal_param<T>(prefix + ".word_emb", {c.vocab_size, c.d_model}, c.init_std, rng);
    b.seg_emb = detail::normal_param<T>(prefix + ".seg_emb", {2, c.d_model}, c.init_std, rng);
    b.pos_emb = detail::normal_param<T>(prefix + ".pos_emb", {c.max_len, c.d_model}, c.init_std, rng);
    for (std::size_t i = 0; i < c.n_layers; ++i)
      b.layers.push_back(EncoderLayer<T>::init(c, rng, prefix + ".layer" + std::to_string(i)));
    return b;
  }

  void collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&word_emb);
    out.push_back(&seg_emb);
    out.push_back(&pos_emb);
    for (auto& l : layers) l.collect(out);
  }

  std::size_t d_model() const { return word_emb.value.dim(1); }
};

/// hidden[b, i] = word_emb[id] + seg_emb[segment] + pos_emb[i], as [B, L, d].
template <typename T>
Var<T> embed(Tape<T>& tape, EncoderBranch<T>& br, const BranchBlock& block) {
  const std::size_t d = br.d_model();
  const std::size_t max_len = br.pos_emb.value.dim(0);
  if (block.len > max_len)
    throw DataError("embed: sequence length " + std::to_string(block.len) + " exceeds max_len " +
                    std::to_string(max_len));
  for (int s : block.segment_ids)
    if (s != 0 && s != 1) throw DataError("embed: segment id " + std::to_string(s) + " is not 0 or 1");
  std::vector<int> positions(block.batch * block.len);
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i % block.len);
  Var<T> words = num::embedding_lookup(tape.param(br.word_emb), block.input_ids);
  Var<T> segs = num::embedding_lookup(tape.param(br.seg_emb), block.segment_ids);
  Var<T> pos = num::embedding_lookup(tape.param(br.pos_emb), positions);
  return num::reshape(num::add(num::add(words, segs), pos), Shape{block.batch, block.len, d});
}

namespace detail {

template <typename T>
Var<T> linear(Tape<T>& tape, Var<T> x, Parameter<T>& w, Parameter<T>& b) {
  return num::add_bias(num::matmul(x, tape.param(w)), tape.param(b));
}

template <typename T>
Var<T> self_attention(Tape<T>& tape, EncoderLayer<T>& l, Var<T> x, const std::vector<int>& mask,
                      std::size_t heads, const ForwardContext<T>& ctx) {
  const Shape s = x.shape();
  const std::size_t b = s[0], len = s[1], d = s[2], dh = d / heads;
  auto split = [&](Var<T> v) {
    return num::permute(num::reshape(v, Shape{b, len, heads, dh}), {0, 2, 1, 3});
  };
  Var<T> q = split(linear(tape, x, l.wq, l.bq));
  Var<T> k = split(linear(tape, x, l.wk, l.bk));
  Var<T> v = split(linear(tape, x, l.wv, l.bv));
  Var<T> scores = num::scale(num::matmul(q, num::transpose(k)), static_cast<T>(1.0 / std::sqrt(double(dh))));
  Var<T> probs = num::row_softmax(num::masked_fill(scores, mask, b));
  if (ctx.attention_probs) ctx.attention_probs->push_back(probs.value());
  Var<T> mixed = num::matmul(probs, v);  // [B, H, L, dh]
  Var<T> merged = num::reshape(num::permute(mixed, {0, 2, 1, 3}), Shape{b, len, d});
  return linear(tape, merged, l.wo, l.bo);
}

}  // namespace detail

/// Runs the pre-norm blocks over hidden states [B, L, d].
template <typename T>
Var<T> encode(Tape<T>& tape, EncoderBranch<T>& br, Var<T> hidden, const std::vector<int>& mask,
              std::size_t heads, const ForwardContext<T>& ctx) {
  Var<T> h = hidden;
  for (auto& l : br.layers) {
    Var<T> a = num::layer_norm(h, tape.param(l.ln1_gain), tape.param(l.ln1_bias));
    h = num::add(h, ctx.drop(detail::self_attention(tape, l, a, mask, heads, ctx)));
    Var<T> f = num::layer_norm(h, tape.param(l.ln2_gain), tape.param(l.ln2_bias));
    f = detail::linear(tape, num::gelu(detail::linear(tape, f, l.w_in, l.b_in)), l.w_out, l.b_out);
    h = num::add(h, ctx.drop(f));
  }
  return h;
}

/// CLS-position representation [B, d] of one branch.
template <typename T>
Var<T> encode_cls(Tape<T>& tape, EncoderBranch<T>& br, const BranchBlock& block, std::size_t heads,
                  const ForwardContext<T>& ctx) {
  Var<T> h = ctx.drop(embed(tape, br, block));
  return num::take_position(encode(tape, br, h, block.attention_mask, heads, ctx), 0);
}

template <typename T>
class SingleModel {
 public:
  using value_type = T;
  static constexpr const char* kKind = "single";

  SingleModel() = default;
  SingleModel(const ModelConfig& c, Order order = Order::TextFirst) : config_(c), order_(order) {
    c.validate();
    Rng rng(c.seed);
    branch_ = EncoderBranch<T>::init(c, rng, "branch");
    head_w_ = detail::normal_param<T>("head.weight", {c.d_model, c.n_classes}, c.init_std, rng);
    head_b_ = detail::const_param<T>("head.bias", {c.n_classes}, T(0));
  }

  const ModelConfig& config() const { return config_; }
  Order order() const { return order_; }
  EncoderBranch<T>& branch() { return branch_; }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    branch_.collect(out);
    out.push_back(&head_w_);
    out.push_back(&head_b_);
    return out;
  }

  /// The batch block this model consumes.
  const BranchBlock& input_of(const Batch& batch) const {
    return order_ == Order::TextFirst ? batch.first : batch.second;
  }

  Var<T> logits(Tape<T>& tape, const Batch& batch, const ForwardContext<T>& ctx) {
    const BranchBlock& block = input_of(batch);
    if (block.order != order_) throw DataError("single model: input order does not match the model");
    return logits_from_block(tape, block, ctx);
  }

  Var<T> logits_from_block(Tape<T>& tape, const BranchBlock& block, const ForwardContext<T>& ctx) {
    Var<T> cls = ctx.drop(encode_cls(tape, branch_, block, config_.n_heads, ctx));
    return detail::linear(tape, cls, head_w_, head_b_);
  }

 private:
  ModelConfig config_;
  Order order_ = Order::TextFirst;
  EncoderBranch<T> branch_;
  Parameter<T> head_w_, head_b_;
};

template <typename T>
class EnsembleModel {
 public:
  using value_type = T;
  static constexpr const char* kKind = "ensemble";

  EnsembleModel() = default;
  explicit EnsembleModel(const ModelConfig& c) : config_(c) {
    c.validate();
    Rng rng(c.seed);
    branch1_ = EncoderBranch<T>::init(c, rng, "branch1");
    branch2_ = EncoderBranch<T>::init(c, rng, "branch2");
    const std::size_t d = c.d_model, h = c.hidden_width();
    fc1_w_ = detail::normal_param<T>("head.fc1.weight", {2 * d, h}, c.init_std, rng);
    fc1_b_ = detail::const_param<T>("head.fc1.bias", {h}, T(0));
    fc2_w_ = detail::normal_param<T>("head.fc2.weight", {h, c.n_classes}, c.init_std, rng);
    fc2_b_ = detail::const_param<T>("head.fc2.bias", {c.n_classes}, T(0));
  }

  const ModelConfig& config() const { return config_; }
  EncoderBranch<T>& branch1() { return branch1_; }
  EncoderBranch<T>& branch2() { return branch2_; }
  Parameter<T>& fc1_weight() { return fc1_w_; }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    branch1_.collect(out);
    branch2_.collect(out);
    for (Parameter<T>* p : {&fc1_w_, &fc1_b_, &fc2_w_, &fc2_b_}) out.push_back(p);
    return out;
  }

  Var<T> logits(Tape<T>& tape, const Batch& batch, const ForwardContext<T>& ctx) {
    if (batch.first.order != Order::TextFirst || batch.second.order != Order::EntityFirst)
      throw DataError("ensemble: expected (text-first, entity-first) inputs");
    return logits_from_blocks(tape, batch.first, batch.second, ctx);
  }

  /// Unchecked two-branch forward: `a` feeds branch1 and `b` feeds branch2.
  Var<T> logits_from_blocks(Tape<T>& tape, const BranchBlock& a, const BranchBlock& b,
                            const ForwardContext<T>& ctx) {
    Var<T> c1 = encode_cls(tape, branch1_, a, config_.n_heads, ctx);
    Var<T> c2 = encode_cls(tape, branch2_, b, config_.n_heads, ctx);
    Var<T> joined = ctx.drop(num::concat_last(c1, c2));
    Var<T> hidden = num::gelu(detail::linear(tape, joined, fc1_w_, fc1_b_));
    return detail::linear(tape, hidden, fc2_w_, fc2_b_);
  }

 private:
  ModelConfig config_;
  EncoderBranch<T> branch1_, branch2_;
  Parameter<T> fc1_w_, fc1_b_, fc2_w_, fc2_b_;
};

inline std::size_t branch_parameter_count(const ModelConfig& c) {
  const std::size_t d = c.d_model, f = c.d_ff;
  return c.vocab_size * d + 2 * d + c.max_len * d + c.n_layers * (4 * d * d + 4 * d + 2 * d * f + f + d + 4 * d);
}

inline std::size_t ensemble_parameter_count(const ModelConfig& c) {
  const std::size_t h = c.hidden_width();
  return 2 * branch_parameter_count(c) + 2 * c.d_model * h + h + h * c.n_classes + c.n_classes;
}

inline std::size_t single_parameter_count(const ModelConfig& c) {
  return branch_parameter_count(c) + c.d_model * c.n_classes + c.n_classes;
}

template <typename Model>
std::size_t count_parameters(Model& m) {
  std::size_t n = 0;
  for (auto* p : m.parameters()) n += p->value.size();
  return n;
}

/// Eval-mode logits for a single packed pair.
template <typename T>
std::vector<T> forward_single(SingleModel<T>& m, const EncodedPair& pair) {
  Tape<T> tape;
  BranchBlock block = make_block({&pair});
  Var<T> z = m.logits_from_block(tape, block, ForwardContext<T>::eval());
  return z.value().storage();
}

template <typename T>
std::vector<T> forward_ensemble(EnsembleModel<T>& m, const EncodedPair& p1, const EncodedPair& p2) {
  if (p1.order != Order::TextFirst || p2.order != Order::EntityFirst)
    throw DataError("forward_ensemble: expected (text-first, entity-first) pairs");
  Tape<T> tape;
  Var<T> z = m.logits_from_blocks(tape, make_block({&p1}), make_block({&p2}), ForwardContext<T>::eval());
  return z.value().storage();
}

}  // namespace meder
