#pragma once

// Model-level checks shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <vector>

#include "meder/model.hpp"
#include "meder/pairseq.hpp"
#include "meder/random.hpp"

namespace meder::checks {

/// A small random configuration; scale picks between the default init and a
/// wider one that gives non-trivial attention patterns.
inline ModelConfig random_config(Rng& rng, std::size_t max_len) {
  ModelConfig c;
  c.vocab_size = 30 + rng.below(40);
  c.max_len = max_len;
  c.n_heads = 1 + rng.below(3);
  c.d_model = c.n_heads * (2 + rng.below(4));
  c.n_layers = 1 + rng.below(2);
  c.d_ff = 4 + rng.below(16);
  c.d_hidden = rng.below(2) ? 0 : 3 + rng.below(10);
  c.init_std = rng.below(2) ? 0.02 : 0.3;
  c.seed = rng.next();
  return c;
}

inline PairSample random_sample(Rng& rng, std::size_t vocab, std::size_t max_len) {
  auto ids = [&](std::size_t n) {
    std::vector<TokenId> out(n);
    for (auto& t : out) t = static_cast<TokenId>(4 + rng.below(vocab - 4));
    return out;
  };
  const std::size_t entity = 1 + rng.below(std::min<std::size_t>(3, max_len - 4));
  const std::size_t text = 1 + rng.below(max_len);
  return build_both(ids(text), ids(entity), max_len, static_cast<int>(rng.below(6)));
}

inline EncodedPair pad_by(const EncodedPair& p, std::size_t extra) {
  EncodedPair q = p;
  q.input_ids.resize(p.input_ids.size() + extra, kPadId);
  q.segment_ids.resize(p.segment_ids.size() + extra, 0);
  q.attention_mask.resize(p.attention_mask.size() + extra, 0);
  return q;
}

template <typename T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
  double m = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

/// Largest logit change over both model kinds when every pair gains 4 PAD
/// positions, for one random model and input.
inline double pad_extension_diff(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t len = 8 + rng.below(12);
  const ModelConfig c = random_config(rng, len + 4);
  const PairSample s = random_sample(rng, c.vocab_size, len);
  EnsembleModel<float> ens(c);
  SingleModel<float> single(c, rng.below(2) ? Order::TextFirst : Order::EntityFirst);
  const EncodedPair& own = single.order() == Order::TextFirst ? s.first : s.second;
  const double a = max_abs_diff(forward_ensemble(ens, s.first, s.second),
                                forward_ensemble(ens, pad_by(s.first, 4), pad_by(s.second, 4)));
  const double b = max_abs_diff(forward_single(single, own), forward_single(single, pad_by(own, 4)));
  return std::max(a, b);
}

/// Copy of `m` with the two branches exchanged and the matching halves of the
/// first head layer's input rows swapped.
template <typename T>
EnsembleModel<T> swapped(EnsembleModel<T>& m) {
  EnsembleModel<T> s(m.config());
  auto src = m.parameters();
  auto dst = s.parameters();
  const std::size_t per_branch = (src.size() - 4) / 2;
  for (std::size_t i = 0; i < per_branch; ++i) {
    dst[i]->value = src[per_branch + i]->value;
    dst[per_branch + i]->value = src[i]->value;
  }
  for (std::size_t i = 2 * per_branch; i < src.size(); ++i) dst[i]->value = src[i]->value;
  Tensor<T>& w = s.fc1_weight().value;
  const std::size_t d = m.config().d_model, h = w.dim(1);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t j = 0; j < h; ++j) std::swap(w.at(r, j), w.at(d + r, j));
  return s;
}

/// |logits(M, p1, p2) - logits(swapped(M), p2, p1)| for one random instance.
inline double swap_symmetry_diff(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t len = 8 + rng.below(10);
  const ModelConfig c = random_config(rng, len);
  EnsembleModel<float> m(c);
  EnsembleModel<float> s = swapped(m);
  const PairSample x = random_sample(rng, c.vocab_size, len);
  const BranchBlock a = make_block({&x.first}), b = make_block({&x.second});
  Tape<float> t1, t2;
  const auto z1 = m.logits_from_blocks(t1, a, b, ForwardContext<float>::eval()).value().storage();
  const auto z2 = s.logits_from_blocks(t2, b, a, ForwardContext<float>::eval()).value().storage();
  return max_abs_diff(z1, z2);
}

}  // namespace meder::checks
