#pragma once

// Differentiable operations. Each op computes its forward value eagerly and
// records a closure that adds its vector-Jacobian product into the parents'
// gradient slots.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "meder/errors.hpp"
#include "meder/num/tape.hpp"
#include "meder/num/tensor.hpp"
#include "meder/random.hpp"

namespace meder::num {

inline constexpr double kMaskedLogit = -1e9;
inline constexpr double kLayerNormEps = 1e-5;
// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
inline constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluCubic = 0.044715;

namespace detail {

template <typename T>
Tape<T>& same_tape(Var<T> a, Var<T> b) {
  if (a.tape != b.tape || a.tape == nullptr) throw std::invalid_argument("operands live on different tapes");
  return *a.tape;
}

inline void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (a != b) throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

// C[M,N] += A[M,K] * B[K,N]
template <typename T>
void mm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T{0}) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[M,N] += A[M,K] * B[N,K]^T
template <typename T>
void mm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T s{0};
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[i * n + j] += s;
    }
  }
}

// C[M,N] += A[K,M]^T * B[K,N]
template <typename T>
void mm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = a + p * m;
    const T* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = arow[i];
      if (av == T{0}) continue;
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
T gelu_value(T x) {
  const T u = static_cast<T>(kGeluScale) * (x + static_cast<T>(kGeluCubic) * x * x * x);
  return T(0.5) * x * (T(1) + std::tanh(u));
}

template <typename T>
T gelu_derivative(T x) {
  const T u = static_cast<T>(kGeluScale) * (x + static_cast<T>(kGeluCubic) * x * x * x);
  const T t = std::tanh(u);
  const T du = static_cast<T>(kGeluScale) * (T(1) + T(3) * static_cast<T>(kGeluCubic) * x * x);
  return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * du;
}

}  // namespace detail

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Tape<T>& t = detail::same_tape(a, b);
  detail::require_same_shape("add", a.shape(), b.shape());
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    for (std::size_t id : {ia, ib}) {
      if (!tp.requires_grad(id)) continue;
      Tensor<T>& d = tp.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

/// x[..., n] + bias[n], broadcast over all leading dimensions.
template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias) {
  Tape<T>& t = detail::same_tape(x, bias);
  const Shape& xs = x.shape();
  if (xs.empty() || bias.shape() != Shape{xs.back()})
    throw ShapeError("add_bias: shape mismatch " + shape_str(xs) + " vs " + shape_str(bias.shape()));
  const std::size_t n = xs.back();
  Tensor<T> out = x.value();
  const auto& bv = bias.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % n];
  const std::size_t ix = x.id, ib = bias.id;
  return t.record(std::move(out), {ix, ib}, [ix, ib, n](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    if (tp.requires_grad(ix)) {
      Tensor<T>& d = tp.grad(ix);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor<T>& d = tp.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) d[i % n] += g[i];
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  Tape<T>& t = detail::same_tape(a, b);
  detail::require_same_shape("mul", a.shape(), b.shape());
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    const Tensor<T>& av = tp.value(ia);
    const Tensor<T>& bv2 = tp.value(ib);
    if (tp.requires_grad(ia)) {
      Tensor<T>& d = tp.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * bv2[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor<T>& d = tp.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> x, T s) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v *= s;
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [ix, s](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    Tensor<T>& d = tp.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * s;
  });
}

/// Sum of all elements, as a rank-0 tensor.
template <typename T>
Var<T> sum(Var<T> x) {
  T s{0};
  for (T v : x.value().data()) s += v;
  const std::size_t ix = x.id;
  return x.tape->record(Tensor<T>::scalar(s), {ix}, [ix](Tape<T>& tp, std::size_t self) {
    const T g = tp.grad(self)[0];
    Tensor<T>& d = tp.grad(ix);
    for (auto& v : d.data()) v += g;
  });
}

/// Matrix product over the last two dimensions.
///   a[..., m, k] x b[k, n]          -> [..., m, n]  (b shared by every leading index)
///   a[B..., m, k] x b[B..., k, n]   -> [B..., m, n] (matching batch dimensions)
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& t = detail::same_tape(a, b);
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  auto mismatch = [&] {
    return ShapeError("matmul: shape mismatch " + shape_str(as) + " vs " + shape_str(bs));
  };
  if (as.size() < 2 || bs.size() < 2) throw mismatch();
  const std::size_t m = as[as.size() - 2], k = as.back();
  if (bs[bs.size() - 2] != k) throw mismatch();
  const std::size_t n = bs.back();
  const bool shared = bs.size() == 2;
  if (!shared && (as.size() != bs.size() || !std::equal(as.begin(), as.end() - 2, bs.begin()))) throw mismatch();
  const std::size_t batches = numel(as) / (m * k);

  Shape os(as.begin(), as.end() - 1);
  os.push_back(n);
  Tensor<T> out(os);
  const T* ap = a.value().ptr();
  const T* bp = b.value().ptr();
  if (shared) {
    detail::mm_nn(ap, bp, out.ptr(), batches * m, k, n);
  } else {
    for (std::size_t bi = 0; bi < batches; ++bi)
      detail::mm_nn(ap + bi * m * k, bp + bi * k * n, out.ptr() + bi * m * n, m, k, n);
  }
  const std::size_t ia = a.id, ib = b.id;
  return t.record(std::move(out), {ia, ib}, [=](Tape<T>& tp, std::size_t self) {
    const T* g = tp.grad(self).ptr();
    const T* av = tp.value(ia).ptr();
    const T* bv = tp.value(ib).ptr();
    if (tp.requires_grad(ia)) {
      T* da = tp.grad(ia).ptr();
      if (shared) {
        detail::mm_nt(g, bv, da, batches * m, n, k);
      } else {
        for (std::size_t bi = 0; bi < batches; ++bi)
          detail::mm_nt(g + bi * m * n, bv + bi * k * n, da + bi * m * k, m, n, k);
      }
    }
    if (tp.requires_grad(ib)) {
      T* db = tp.grad(ib).ptr();
      if (shared) {
        detail::mm_tn(av, g, db, k, batches * m, n);
      } else {
        for (std::size_t bi = 0; bi < batches; ++bi)
          detail::mm_tn(av + bi * m * k, g + bi * m * n, db + bi * k * n, k, m, n);
      }
    }
  });
}

namespace detail {

template <typename T>
Tensor<T> transpose_last2(const Tensor<T>& x) {
  const Shape& s = x.shape();
  const std::size_t r = s[s.size() - 2], c = s.back();
  Shape os = s;
  std::swap(os[os.size() - 2], os[os.size() - 1]);
  Tensor<T> out(os);
  const std::size_t batches = x.size() / (r * c);
  for (std::size_t b = 0; b < batches; ++b)
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[b * r * c + j * r + i] = x[b * r * c + i * c + j];
  return out;
}

}  // namespace detail

/// Swaps the last two dimensions.
template <typename T>
Var<T> transpose(Var<T> x) {
  if (x.shape().size() < 2) throw ShapeError("transpose: rank < 2 for shape " + shape_str(x.shape()));
  const std::size_t ix = x.id;
  return x.tape->record(detail::transpose_last2(x.value()), {ix}, [ix](Tape<T>& tp, std::size_t self) {
    Tensor<T> g = detail::transpose_last2(tp.grad(self));
    Tensor<T>& d = tp.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  const std::size_t ix = x.id;
  return x.tape->record(x.value().reshaped(std::move(shape)), {ix}, [ix](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    Tensor<T>& d = tp.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
}

namespace detail {

inline std::vector<std::size_t> strides_of(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

/// out[idx] = x[perm^-1 idx]; for each output flat index, the source offset.
inline std::vector<std::size_t> permute_map(const Shape& in, const std::vector<std::size_t>& perm) {
  const std::size_t r = in.size();
  Shape os(r);
  for (std::size_t i = 0; i < r; ++i) os[i] = in[perm[i]];
  const auto in_st = strides_of(in);
  std::vector<std::size_t> src_st(r);
  for (std::size_t i = 0; i < r; ++i) src_st[i] = in_st[perm[i]];
  std::vector<std::size_t> map(numel(in));
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < map.size(); ++flat) {
    std::size_t off = 0;
    for (std::size_t d = 0; d < r; ++d) off += idx[d] * src_st[d];
    map[flat] = off;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < os[d]) break;
      idx[d] = 0;
    }
  }
  return map;
}

}  // namespace detail

/// Reorders dimensions: output dim i is input dim perm[i].
template <typename T>
Var<T> permute(Var<T> x, std::vector<std::size_t> perm) {
  const Shape& s = x.shape();
  std::vector<bool> seen(s.size(), false);
  if (perm.size() != s.size()) throw ShapeError("permute: rank mismatch for shape " + shape_str(s));
  for (std::size_t p : perm) {
    if (p >= s.size() || seen[p]) throw ShapeError("permute: invalid permutation for shape " + shape_str(s));
    seen[p] = true;
  }
  Shape os(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) os[i] = s[perm[i]];
  auto map = std::make_shared<std::vector<std::size_t>>(detail::permute_map(s, perm));
  Tensor<T> out(os);
  const auto& xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[(*map)[i]];
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [ix, map](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    Tensor<T>& d = tp.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) d[(*map)[i]] += g[i];
  });
}

/// Softmax over the last dimension, shifted by the row maximum.
template <typename T>
Var<T> row_softmax(Var<T> x) {
  const Shape& s = x.shape();
  if (s.empty()) throw ShapeError("row_softmax: scalar input");
  const std::size_t n = s.back(), rows = x.value().size() / std::max<std::size_t>(n, 1);
  Tensor<T> out(s);
  const auto& xv = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.ptr() + r * n;
    T* o = out.ptr() + r * n;
    const T mx = *std::max_element(in, in + n);
    T z{0};
    for (std::size_t j = 0; j < n; ++j) z += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
  }
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [ix, n, rows](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    const Tensor<T>& y = tp.value(self);
    Tensor<T>& d = tp.grad(ix);
    for (std::size_t r = 0; r < rows; ++r) {
      T dot{0};
      for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * y[r * n + j];
      for (std::size_t j = 0; j < n; ++j) d[r * n + j] += y[r * n + j] * (g[r * n + j] - dot);
    }
  });
}

/// Per-row normalization over the last dimension with learnable gain and bias.
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps = static_cast<T>(kLayerNormEps)) {
  Tape<T>& t = detail::same_tape(x, gain);
  detail::same_tape(x, bias);
  const Shape& s = x.shape();
  if (s.empty() || gain.shape() != Shape{s.back()} || bias.shape() != Shape{s.back()})
    throw ShapeError("layer_norm: shape mismatch " + shape_str(s) + " vs " + shape_str(gain.shape()) + "/" +
                     shape_str(bias.shape()));
  const std::size_t n = s.back(), rows = x.value().size() / n;
  auto xhat = std::make_shared<std::vector<T>>(x.value().size());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  Tensor<T> out(s);
  const auto& xv = x.value();
  const auto& gv = gain.value();
  const auto& bv = bias.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.ptr() + r * n;
    T mean{0};
    for (std::size_t j = 0; j < n; ++j) mean += in[j];
    mean /= static_cast<T>(n);
    T var{0};
    for (std::size_t j = 0; j < n; ++j) var += (in[j] - mean) * (in[j] - mean);
    var /= static_cast<T>(n);
    const T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const T h = (in[j] - mean) * is;
      (*xhat)[r * n + j] = h;
      out[r * n + j] = h * gv[j] + bv[j];
    }
  }
  const std::size_t ix = x.id, ig = gain.id, ib = bias.id;
  return t.record(std::move(out), {ix, ig, ib}, [=](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    const Tensor<T>& gv2 = tp.value(ig);
    if (tp.requires_grad(ig)) {
      Tensor<T>& dg = tp.grad(ig);
      for (std::size_t i = 0; i < g.size(); ++i) dg[i % n] += g[i] * (*xhat)[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor<T>& db = tp.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) db[i % n] += g[i];
    }
    if (tp.requires_grad(ix)) {
      Tensor<T>& dx = tp.grad(ix);
      for (std::size_t r = 0; r < rows; ++r) {
        T mean_dh{0}, mean_dh_h{0};
        for (std::size_t j = 0; j < n; ++j) {
          const T dh = g[r * n + j] * gv2[j];
          mean_dh += dh;
          mean_dh_h += dh * (*xhat)[r * n + j];
        }
        mean_dh /= static_cast<T>(n);
        mean_dh_h /= static_cast<T>(n);
        for (std::size_t j = 0; j < n; ++j) {
          const T dh = g[r * n + j] * gv2[j];
          dx[r * n + j] += (*inv_std)[r] * (dh - mean_dh - (*xhat)[r * n + j] * mean_dh_h);
        }
      }
    }
  });
}

template <typename T>
Var<T> gelu(Var<T> x) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v = detail::gelu_value(v);
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [ix](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    const Tensor<T>& xv = tp.value(ix);
    Tensor<T>& d = tp.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * detail::gelu_derivative(xv[i]);
  });
}

/// Rows of table[V, d] selected by ids -> [ids.size(), d].
template <typename T>
Var<T> embedding_lookup(Var<T> table, const std::vector<int>& ids) {
  const Shape& s = table.shape();
  if (s.size() != 2) throw ShapeError("embedding_lookup: table must be 2-D, got " + shape_str(s));
  const std::size_t v = s[0], d = s[1];
  Tensor<T> out(Shape{ids.size(), d});
  const auto& tv = table.value();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v)
      throw DataError("embedding_lookup: id " + std::to_string(ids[i]) + " outside table of " +
                      std::to_string(v) + " rows");
    std::copy_n(tv.ptr() + static_cast<std::size_t>(ids[i]) * d, d, out.ptr() + i * d);
  }
  const std::size_t it = table.id;
  return table.tape->record(std::move(out), {it}, [it, ids, d](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    Tensor<T>& dt = tp.grad(it);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      T* row = dt.ptr() + static_cast<std::size_t>(ids[i]) * d;
      for (std::size_t j = 0; j < d; ++j) row[j] += g[i * d + j];
    }
  });
}

/// scores[B, ..., Lk]: positions whose key_mask[b, k] is 0 are set to `fill`
/// (default -1e9) so a following softmax gives them no weight.
template <typename T>
Var<T> masked_fill(Var<T> scores, const std::vector<int>& key_mask, std::size_t batch,
                   T fill = static_cast<T>(kMaskedLogit)) {
  const Shape& s = scores.shape();
  if (s.size() < 2 || s.front() != batch || key_mask.size() != batch * s.back())
    throw ShapeError("masked_fill: scores " + shape_str(s) + " vs mask of " + std::to_string(key_mask.size()) +
                     " entries for batch " + std::to_string(batch));
  const std::size_t lk = s.back();
  const std::size_t per_batch = scores.value().size() / batch;
  Tensor<T> out = scores.value();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t off = 0; off < per_batch; off += lk)
      for (std::size_t k = 0; k < lk; ++k)
        if (key_mask[b * lk + k] == 0) out[b * per_batch + off + k] = fill;
  const std::size_t is = scores.id;
  return scores.tape->record(std::move(out), {is}, [=](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    Tensor<T>& d = tp.grad(is);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t off = 0; off < per_batch; off += lk)
        for (std::size_t k = 0; k < lk; ++k)
          if (key_mask[b * lk + k] != 0) d[b * per_batch + off + k] += g[b * per_batch + off + k];
  });
}

/// x[B, L, d] -> x[:, pos, :] as [B, d].
template <typename T>
Var<T> take_position(Var<T> x, std::size_t pos) {
  const Shape& s = x.shape();
  if (s.size() != 3 || pos >= s[1])
    throw ShapeError("take_position: position " + std::to_string(pos) + " invalid for " + shape_str(s));
  const std::size_t b = s[0], l = s[1], d = s[2];
  Tensor<T> out(Shape{b, d});
  for (std::size_t i = 0; i < b; ++i) std::copy_n(x.value().ptr() + (i * l + pos) * d, d, out.ptr() + i * d);
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [=](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    Tensor<T>& dx = tp.grad(ix);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < d; ++j) dx[(i * l + pos) * d + j] += g[i * d + j];
  });
}

/// [B, d1] ++ [B, d2] -> [B, d1 + d2].
template <typename T>
Var<T> concat_last(Var<T> a, Var<T> b) {
  Tape<T>& t = detail::same_tape(a, b);
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() != 2 || bs.size() != 2 || as[0] != bs[0])
    throw ShapeError("concat_last: shape mismatch " + shape_str(as) + " vs " + shape_str(bs));
  const std::size_t rows = as[0], d1 = as[1], d2 = bs[1];
  Tensor<T> out(Shape{rows, d1 + d2});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().ptr() + r * d1, d1, out.ptr() + r * (d1 + d2));
    std::copy_n(b.value().ptr() + r * d2, d2, out.ptr() + r * (d1 + d2) + d1);
  }
  const std::size_t ia = a.id, ib = b.id;
  return t.record(std::move(out), {ia, ib}, [=](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    if (tp.requires_grad(ia)) {
      Tensor<T>& da = tp.grad(ia);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < d1; ++j) da[r * d1 + j] += g[r * (d1 + d2) + j];
    }
    if (tp.requires_grad(ib)) {
      Tensor<T>& db = tp.grad(ib);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < d2; ++j) db[r * d2 + j] += g[r * (d1 + d2) + d1 + j];
    }
  });
}

/// Inverted dropout: kept values are scaled by 1 / (1 - rate).
template <typename T>
Var<T> dropout(Var<T> x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  auto keep = std::make_shared<std::vector<T>>(x.value().size());
  const T scale_kept = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*keep)[i] = rng.uniform() >= rate ? scale_kept : T{0};
    out[i] *= (*keep)[i];
  }
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [ix, keep](Tape<T>& tp, std::size_t self) {
    const Tensor<T>& g = tp.grad(self);
    Tensor<T>& d = tp.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (*keep)[i];
  });
}

namespace detail {

inline void check_labels(const std::vector<int>& labels, std::size_t rows, std::size_t classes) {
  if (labels.size() != rows)
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(rows) +
                     " rows");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw DataError("cross_entropy: label " + std::to_string(y) + " outside " + std::to_string(classes) +
                      " classes");
}

}  // namespace detail

/// Mean negative log-likelihood of softmax(logits[B, C]) at the labels.
template <typename T>
Var<T> cross_entropy(Var<T> logits, const std::vector<int>& labels) {
  const Shape& s = logits.shape();
  if (s.size() != 2) throw ShapeError("cross_entropy: logits must be 2-D, got " + shape_str(s));
  const std::size_t rows = s[0], c = s[1];
  detail::check_labels(labels, rows, c);
  auto probs = std::make_shared<std::vector<T>>(rows * c);
  const auto& z = logits.value();
  T total{0};
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = z.ptr() + r * c;
    const T mx = *std::max_element(in, in + c);
    T se{0};
    for (std::size_t j = 0; j < c; ++j) se += ((*probs)[r * c + j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < c; ++j) (*probs)[r * c + j] /= se;
    total += std::log(se) + mx - in[labels[static_cast<std::size_t>(r)]];
  }
  const T inv_rows = T(1) / static_cast<T>(rows);
  const std::size_t iz = logits.id;
  return logits.tape->record(Tensor<T>::scalar(total * inv_rows), {iz},
                             [=](Tape<T>& tp, std::size_t self) {
                               const T g = tp.grad(self)[0] * inv_rows;
                               Tensor<T>& d = tp.grad(iz);
                               for (std::size_t r = 0; r < rows; ++r)
                                 for (std::size_t j = 0; j < c; ++j) {
                                   const T onehot = static_cast<int>(j) == labels[r] ? T(1) : T(0);
                                   d[r * c + j] += g * ((*probs)[r * c + j] - onehot);
                                 }
                             });
}

/// Mean negative log-likelihood when the input rows are already probabilities.
template <typename T>
Var<T> cross_entropy_probs(Var<T> probs, const std::vector<int>& labels) {
  const Shape& s = probs.shape();
  if (s.size() != 2) throw ShapeError("cross_entropy_probs: input must be 2-D, got " + shape_str(s));
  const std::size_t rows = s[0], c = s[1];
  detail::check_labels(labels, rows, c);
  const auto& p = probs.value();
  T total{0};
  for (std::size_t r = 0; r < rows; ++r) {
    T row_sum{0};
    for (std::size_t j = 0; j < c; ++j) row_sum += p[r * c + j];
    if (std::abs(static_cast<double>(row_sum) - 1.0) > 1e-5)
      throw NumericError("cross_entropy_probs: row " + std::to_string(r) + " sums to " +
                         std::to_string(static_cast<double>(row_sum)));
    total -= std::log(p[r * c + static_cast<std::size_t>(labels[r])]);
  }
  const T inv_rows = T(1) / static_cast<T>(rows);
  const std::size_t ip = probs.id;
  return probs.tape->record(Tensor<T>::scalar(total * inv_rows), {ip}, [=](Tape<T>& tp, std::size_t self) {
    const T g = tp.grad(self)[0] * inv_rows;
    const Tensor<T>& pv = tp.value(ip);
    Tensor<T>& d = tp.grad(ip);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t k = r * c + static_cast<std::size_t>(labels[r]);
      d[k] -= g / pv[k];
    }
  });
}

/// Plain (non-differentiable) softmax of one logit row.
template <typename T>
std::vector<T> softmax_row(std::span<const T> z) {
  std::vector<T> out(z.size());
  if (z.empty()) return out;
  const T mx = *std::max_element(z.begin(), z.end());
  T se{0};
  for (std::size_t j = 0; j < z.size(); ++j) se += (out[j] = std::exp(z[j] - mx));
  for (auto& v : out) v /= se;
  return out;
}

/// Index of the largest value; ties resolve to the lowest index.
template <typename T>
std::size_t argmax(std::span<const T> z) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < z.size(); ++j)
    if (z[j] > z[best]) best = j;
  return best;
}

}  // namespace meder::num
