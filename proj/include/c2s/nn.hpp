// Neural building blocks on top of the autodiff core: multi-head
// self-attention, pre-norm transformer blocks, parameter initialization,
// a bias-corrected Adam optimizer and a finite-difference gradient checker.

#pragma once

#include <algorithm>
#include <functional>
#include <random>

#include "c2s/tensor.hpp"

namespace c2s {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Initialization

// Scaled uniform init, U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <class T>
Tensor<T> init_uniform(Shape shape, int64_t fan_in, int64_t fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / double(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  std::vector<T> v(static_cast<size_t>(numel(shape)));
  for (auto& x : v) x = T(dist(rng));
  return Tensor<T>::param(std::move(shape), std::move(v));
}

template <class T>
Tensor<T> init_const(Shape shape, T value) {
  std::vector<T> v(static_cast<size_t>(numel(shape)), value);
  return Tensor<T>::param(std::move(shape), std::move(v));
}

// ---------------------------------------------------------------------------
// Multi-head self-attention

template <class T>
struct AttentionParams {
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;

  static AttentionParams init(int64_t d_model, std::mt19937_64& rng) {
    AttentionParams p;
    p.wq = init_uniform<T>({d_model, d_model}, d_model, d_model, rng);
    p.bq = init_const<T>({d_model}, T(0));
    p.wk = init_uniform<T>({d_model, d_model}, d_model, d_model, rng);
    p.bk = init_const<T>({d_model}, T(0));
    p.wv = init_uniform<T>({d_model, d_model}, d_model, d_model, rng);
    p.bv = init_const<T>({d_model}, T(0));
    p.wo = init_uniform<T>({d_model, d_model}, d_model, d_model, rng);
    p.bo = init_const<T>({d_model}, T(0));
    return p;
  }

  template <class F>
  void visit(F&& f) {
    f("wq", wq); f("bq", bq); f("wk", wk); f("bk", bk);
    f("wv", wv); f("bv", bv); f("wo", wo); f("bo", bo);
  }
};

// Standard scaled dot-product attention over all tokens; no mask, no
// positional encoding. x is [n_tokens, d_model].
template <class T>
Tensor<T> multi_head_self_attention(const Tensor<T>& x, const AttentionParams<T>& p,
                                    int n_heads) {
  detail::require_rank2(x, "multi_head_self_attention");
  const int64_t d_model = x.dim(1);
  if (n_heads < 1 || d_model % n_heads != 0)
    throw ConfigError("multi_head_self_attention: d_model " + std::to_string(d_model) +
                      " not divisible by n_heads " + std::to_string(n_heads));
  const int64_t d_head = d_model / n_heads;
  const T inv_sqrt_dh = T(1) / std::sqrt(T(d_head));

  Tensor<T> q = linear(x, p.wq, p.bq);
  Tensor<T> k = linear(x, p.wk, p.bk);
  Tensor<T> v = linear(x, p.wv, p.bv);

  std::vector<Tensor<T>> heads;
  heads.reserve(n_heads);
  for (int h = 0; h < n_heads; ++h) {
    const int64_t c0 = h * d_head, c1 = (h + 1) * d_head;
    Tensor<T> qh = slice_cols(q, c0, c1);
    Tensor<T> kh = slice_cols(k, c0, c1);
    Tensor<T> vh = slice_cols(v, c0, c1);
    Tensor<T> scores = scale(matmul_nt(qh, kh), inv_sqrt_dh);
    Tensor<T> weights = softmax(scores, -1);
    heads.push_back(matmul(weights, vh));
  }
  Tensor<T> merged = n_heads == 1 ? heads[0] : concat_cols(heads);
  return linear(merged, p.wo, p.bo);
}

// ---------------------------------------------------------------------------
// Pre-norm transformer block: x + attn(ln(x)), then x + ffn(ln(x)).

template <class T>
struct BlockParams {
  Tensor<T> ln1_g, ln1_b;
  AttentionParams<T> attn;
  Tensor<T> ln2_g, ln2_b;
  Tensor<T> w1, b1, w2, b2;  // feed-forward

  static BlockParams init(int64_t d_model, int64_t d_ffn, std::mt19937_64& rng) {
    BlockParams p;
    p.ln1_g = init_const<T>({d_model}, T(1));
    p.ln1_b = init_const<T>({d_model}, T(0));
    p.attn = AttentionParams<T>::init(d_model, rng);
    p.ln2_g = init_const<T>({d_model}, T(1));
    p.ln2_b = init_const<T>({d_model}, T(0));
    p.w1 = init_uniform<T>({d_model, d_ffn}, d_model, d_ffn, rng);
    p.b1 = init_const<T>({d_ffn}, T(0));
    p.w2 = init_uniform<T>({d_ffn, d_model}, d_ffn, d_model, rng);
    p.b2 = init_const<T>({d_model}, T(0));
    return p;
  }

  template <class F>
  void visit(F&& f) {
    f("ln1.g", ln1_g); f("ln1.b", ln1_b);
    attn.visit([&](const char* n, Tensor<T>& t) { f((std::string("attn.") + n).c_str(), t); });
    f("ln2.g", ln2_g); f("ln2.b", ln2_b);
    f("ffn.w1", w1); f("ffn.b1", b1); f("ffn.w2", w2); f("ffn.b2", b2);
  }
};

template <class T>
Tensor<T> transformer_block(const Tensor<T>& x, const BlockParams<T>& p, int n_heads, T eps) {
  Tensor<T> h = add(x, multi_head_self_attention(layer_norm(x, p.ln1_g, p.ln1_b, eps), p.attn, n_heads));
  Tensor<T> f = linear(gelu(linear(layer_norm(h, p.ln2_g, p.ln2_b, eps), p.w1, p.b1)), p.w2, p.b2);
  return add(h, f);
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter first/second moment accumulators plus the step counter.
template <class T>
struct OptimizerState {
  std::vector<std::vector<T>> m, v;
  int64_t step = 0;
  AdamConfig cfg;
};

template <class T>
OptimizerState<T> make_adam_state(const std::vector<Tensor<T>>& params, AdamConfig cfg = {}) {
  OptimizerState<T> st;
  st.cfg = cfg;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const auto& p : params) {
    st.m.emplace_back(p.value().size(), T(0));
    st.v.emplace_back(p.value().size(), T(0));
  }
  return st;
}

// One bias-corrected Adam update; reads each parameter's grad accumulator.
template <class T>
void adam_step(std::vector<Tensor<T>>& params, OptimizerState<T>& st) {
  if (params.size() != st.m.size())
    throw ConfigError("adam_step: state tracks " + std::to_string(st.m.size()) +
                      " parameters, got " + std::to_string(params.size()));
  st.step += 1;
  const T b1 = T(st.cfg.beta1), b2 = T(st.cfg.beta2);
  const T bc1 = T(1) - std::pow(b1, T(st.step));
  const T bc2 = T(1) - std::pow(b2, T(st.step));
  const T lr = T(st.cfg.lr), eps = T(st.cfg.eps);
  for (size_t k = 0; k < params.size(); ++k) {
    auto& val = params[k].value();
    const auto& g = params[k].grad();
    auto& m = st.m[k];
    auto& v = st.v[k];
    if (m.size() != val.size())
      throw ShapeError("adam_step: moment/parameter shape mismatch at index " + std::to_string(k));
    for (size_t i = 0; i < val.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const T mhat = m[i] / bc1;
      const T vhat = v[i] / bc2;
      val[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template <class T>
void zero_grads(std::vector<Tensor<T>>& params) {
  for (auto& p : params) p.zero_grad();
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check (64-bit graphs)

struct GradCheckResult {
  double max_rel_error = 0.0;
  int64_t coords_checked = 0;
};

// Compares analytic gradients of the scalar built by `build` against central
// differences. `max_coords_per_param` samples coordinates when a parameter is
// large (0 = check all). Relative error uses a denominator floor so that
// near-zero gradient coordinates are checked absolutely at floor * rel scale.
inline GradCheckResult grad_check(const std::function<Tensor<double>()>& build,
                                  std::vector<Tensor<double>> params, double h = 1e-5,
                                  int64_t max_coords_per_param = 0, uint64_t seed = 0,
                                  double denom_floor = 1e-5) {
  for (auto& p : params) p.zero_grad();
  Tensor<double> root = build();
  root.backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.grad());

  std::mt19937_64 rng(seed);
  GradCheckResult res;
  for (size_t k = 0; k < params.size(); ++k) {
    auto& val = params[k].value();
    std::vector<int64_t> coords(val.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords_per_param > 0 && int64_t(coords.size()) > max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords_per_param);
    }
    for (int64_t i : coords) {
      const double orig = val[i];
      val[i] = orig + h;
      const double fp = build().item();
      val[i] = orig - h;
      const double fm = build().item();
      val[i] = orig;
      const double numeric = (fp - fm) / (2 * h);
      const double a = analytic[k][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), denom_floor});
      res.max_rel_error = std::max(res.max_rel_error, std::fabs(a - numeric) / denom);
      res.coords_checked += 1;
    }
  }
  return res;
}

}  // namespace c2s
