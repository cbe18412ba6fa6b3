// Dense-tensor numeric core with reverse-mode automatic differentiation.
//
// Define-by-run: every operation allocates a fresh graph node holding the
// forward value, a same-shape gradient accumulator and a backward closure.
// Graphs are rebuilt per step; parameters are leaf nodes that persist across
// steps and accumulate gradients until zero_grad().

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace c2s {

using Shape = std::vector<int64_t>;

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline uint64_t next_node_id() {
  static uint64_t counter = 0;
  return ++counter;
}
}  // namespace detail

template <class T>
class Tensor;

template <class T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  std::vector<Tensor<T>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(TensorNode<T>&)> backward_fn;
  uint64_t id = 0;
  bool needs_grad = false;
};

// Value-semantics handle to a shared graph node.
template <class T>
class Tensor {
 public:
  using Node = TensorNode<T>;

  Tensor() = default;

  // Leaf that does not require gradients (inputs, constants).
  static Tensor input(Shape shape, std::vector<T> values) {
    return make_leaf(std::move(shape), std::move(values), false);
  }
  // Leaf that requires gradients (trainable parameter).
  static Tensor param(Shape shape, std::vector<T> values) {
    return make_leaf(std::move(shape), std::move(values), true);
  }
  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<T> v(static_cast<size_t>(numel(shape)), T(0));
    return make_leaf(std::move(shape), std::move(v), requires_grad);
  }
  static Tensor scalar(T v, bool requires_grad = false) {
    return make_leaf(Shape{}, std::vector<T>{v}, requires_grad);
  }

  explicit operator bool() const { return node_ != nullptr; }
  bool same_node(const Tensor& o) const { return node_ == o.node_; }

  const Shape& shape() const { return node_->shape; }
  int64_t size() const { return static_cast<int64_t>(node_->value.size()); }
  int64_t dim(size_t i) const { return node_->shape[i]; }
  size_t rank() const { return node_->shape.size(); }

  std::vector<T>& value() { return node_->value; }
  const std::vector<T>& value() const { return node_->value; }
  std::vector<T>& grad() { return node_->grad; }
  const std::vector<T>& grad() const { return node_->grad; }
  T item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
    return node_->value[0];
  }

  uint64_t id() const { return node_->id; }
  bool needs_grad() const { return node_->needs_grad; }
  bool is_leaf() const { return node_->parents.empty(); }

  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), T(0)); }

  Node* node() const { return node_.get(); }

  // Reverse-mode sweep from a scalar root. Interior grads are recomputed
  // fresh on every call; leaf grads accumulate across calls.
  void backward() const {
    if (!node_) throw std::runtime_error("backward() on empty tensor");
    if (node_->value.size() != 1)
      throw ShapeError("backward() requires a scalar root, got " + shape_str(node_->shape));
    if (!node_->needs_grad) return;  // nothing reachable requires gradients

    std::vector<Node*> order;
    topo_order(node_.get(), order);
    for (Node* n : order)
      if (!n->parents.empty()) std::fill(n->grad.begin(), n->grad.end(), T(0));
    node_->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }

  static Tensor from_node(std::shared_ptr<Node> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }

 private:
  static Tensor make_leaf(Shape shape, std::vector<T> values, bool requires_grad) {
    if (static_cast<int64_t>(values.size()) != numel(shape))
      throw ShapeError("value count " + std::to_string(values.size()) +
                       " does not match shape " + shape_str(shape));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->grad.assign(n->value.size(), T(0));
    n->id = detail::next_node_id();
    n->needs_grad = requires_grad;
    return from_node(std::move(n));
  }

  static void topo_order(Node* root, std::vector<Node*>& out) {
    // Iterative post-order DFS restricted to grad-requiring nodes.
    std::unordered_set<const Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root);
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->parents.size()) {
        Node* p = n->parents[next++].node();
        if (p->needs_grad && !seen.count(p)) {
          seen.insert(p);
          stack.emplace_back(p, 0);
        }
      } else {
        out.push_back(n);
        stack.pop_back();
      }
    }
  }

  std::shared_ptr<Node> node_;
};

namespace detail {

template <class T>
Tensor<T> make_op(Shape shape, std::vector<T> value, std::vector<Tensor<T>> parents,
                  std::function<void(TensorNode<T>&)> backward_fn) {
  auto n = std::make_shared<TensorNode<T>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->grad.assign(n->value.size(), T(0));
  n->parents = std::move(parents);
  n->id = next_node_id();
  for (const auto& p : n->parents)
    if (p.needs_grad()) n->needs_grad = true;
  if (n->needs_grad) n->backward_fn = std::move(backward_fn);
  return Tensor<T>::from_node(std::move(n));
}

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<T> v(a.value());
  for (size_t i = 0; i < v.size(); ++i) v[i] += b.value()[i];
  return detail::make_op<T>(a.shape(), std::move(v), {a, b}, [](TensorNode<T>& n) {
    for (int k = 0; k < 2; ++k) {
      auto& p = n.parents[k];
      if (!p.needs_grad()) continue;
      auto& pg = p.grad();
      for (size_t i = 0; i < pg.size(); ++i) pg[i] += n.grad[i];
    }
  });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<T> v(a.value());
  for (size_t i = 0; i < v.size(); ++i) v[i] -= b.value()[i];
  return detail::make_op<T>(a.shape(), std::move(v), {a, b}, [](TensorNode<T>& n) {
    if (n.parents[0].needs_grad()) {
      auto& pg = n.parents[0].grad();
      for (size_t i = 0; i < pg.size(); ++i) pg[i] += n.grad[i];
    }
    if (n.parents[1].needs_grad()) {
      auto& pg = n.parents[1].grad();
      for (size_t i = 0; i < pg.size(); ++i) pg[i] -= n.grad[i];
    }
  });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<T> v(a.value());
  for (size_t i = 0; i < v.size(); ++i) v[i] *= b.value()[i];
  return detail::make_op<T>(a.shape(), std::move(v), {a, b}, [](TensorNode<T>& n) {
    const auto& av = n.parents[0].value();
    const auto& bv = n.parents[1].value();
    if (n.parents[0].needs_grad()) {
      auto& pg = n.parents[0].grad();
      for (size_t i = 0; i < pg.size(); ++i) pg[i] += n.grad[i] * bv[i];
    }
    if (n.parents[1].needs_grad()) {
      auto& pg = n.parents[1].grad();
      for (size_t i = 0; i < pg.size(); ++i) pg[i] += n.grad[i] * av[i];
    }
  });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  std::vector<T> v(a.value());
  for (auto& x : v) x *= c;
  return detail::make_op<T>(a.shape(), std::move(v), {a}, [c](TensorNode<T>& n) {
    auto& pg = n.parents[0].grad();
    for (size_t i = 0; i < pg.size(); ++i) pg[i] += c * n.grad[i];
  });
}

template <class T>
Tensor<T> gelu(const Tensor<T>& a) {
  // Exact erf form: y = x/2 (1 + erf(x/sqrt(2))).
  std::vector<T> v(a.value());
  for (auto& x : v) x = T(0.5) * x * (T(1) + std::erf(x * T(M_SQRT1_2)));
  return detail::make_op<T>(a.shape(), std::move(v), {a}, [](TensorNode<T>& n) {
    static const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * T(M_PI));
    const auto& xv = n.parents[0].value();
    auto& pg = n.parents[0].grad();
    for (size_t i = 0; i < pg.size(); ++i) {
      const T x = xv[i];
      const T cdf = T(0.5) * (T(1) + std::erf(x * T(M_SQRT1_2)));
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * x * x);
      pg[i] += n.grad[i] * (cdf + x * pdf);
    }
  });
}

// ---------------------------------------------------------------------------
// Matrix ops (2-D, row-major)

namespace detail {

template <class T>
void require_rank2(const Tensor<T>& t, const char* op) {
  if (t.rank() != 2)
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(t.shape()));
}

// y[m,n] += a[m,k] * b[k,n]
template <class T>
void mm_acc(const T* a, const T* b, T* y, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    T* yr = y + i * n;
    const T* ar = a + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const T aip = ar[p];
      const T* br = b + p * n;
      for (int64_t j = 0; j < n; ++j) yr[j] += aip * br[j];
    }
  }
}

// y[m,n] += a[m,k] * b[n,k]^T
template <class T>
void mm_nt_acc(const T* a, const T* b, T* y, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const T* ar = a + i * k;
    T* yr = y + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const T* br = b + j * k;
      T acc = 0;
      for (int64_t p = 0; p < k; ++p) acc += ar[p] * br[p];
      yr[j] += acc;
    }
  }
}

// y[k,n] += a[m,k]^T * b[m,n]
template <class T>
void mm_tn_acc(const T* a, const T* b, T* y, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const T* ar = a + i * k;
    const T* br = b + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const T aip = ar[p];
      T* yr = y + p * n;
      for (int64_t j = 0; j < n; ++j) yr[j] += aip * br[j];
    }
  }
}

}  // namespace detail

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_rank2(a, "matmul");
  detail::require_rank2(b, "matmul");
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw ShapeError("matmul: inner extents disagree, " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  std::vector<T> v(static_cast<size_t>(m * n), T(0));
  detail::mm_acc(a.value().data(), b.value().data(), v.data(), m, k, n);
  return detail::make_op<T>({m, n}, std::move(v), {a, b}, [m, k, n](TensorNode<T>& nd) {
    const auto& av = nd.parents[0].value();
    const auto& bv = nd.parents[1].value();
    if (nd.parents[0].needs_grad())  // dA += dY * B^T
      detail::mm_nt_acc(nd.grad.data(), bv.data(), nd.parents[0].grad().data(), m, n, k);
    if (nd.parents[1].needs_grad())  // dB += A^T * dY
      detail::mm_tn_acc(av.data(), nd.grad.data(), nd.parents[1].grad().data(), m, k, n);
  });
}

// a[m,k] * b[n,k]^T without materializing the transpose.
template <class T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_rank2(a, "matmul_nt");
  detail::require_rank2(b, "matmul_nt");
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k)
    throw ShapeError("matmul_nt: inner extents disagree, " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  std::vector<T> v(static_cast<size_t>(m * n), T(0));
  detail::mm_nt_acc(a.value().data(), b.value().data(), v.data(), m, k, n);
  return detail::make_op<T>({m, n}, std::move(v), {a, b}, [m, k, n](TensorNode<T>& nd) {
    const auto& av = nd.parents[0].value();
    const auto& bv = nd.parents[1].value();
    if (nd.parents[0].needs_grad())  // dA += dY * B
      detail::mm_acc(nd.grad.data(), bv.data(), nd.parents[0].grad().data(), m, n, k);
    if (nd.parents[1].needs_grad())  // dB += dY^T * A
      detail::mm_tn_acc(nd.grad.data(), av.data(), nd.parents[1].grad().data(), m, n, k);
  });
}

// y = x * w + b for x of shape [*, d_in]; leading extents are preserved.
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.rank() < 1)
    throw ShapeError("linear: input must have at least one axis");
  detail::require_rank2(w, "linear");
  const int64_t d_in = x.dim(x.rank() - 1);
  const int64_t d_out = w.dim(1);
  if (w.dim(0) != d_in)
    throw ShapeError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                     shape_str(w.shape()));
  if (b.rank() != 1 || b.dim(0) != d_out)
    throw ShapeError("linear: bias " + shape_str(b.shape()) + " incompatible with weight " +
                     shape_str(w.shape()));
  const int64_t rows = numel(x.shape()) / d_in;
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  out_shape.push_back(d_out);
  std::vector<T> v(static_cast<size_t>(rows * d_out));
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < d_out; ++j) v[i * d_out + j] = b.value()[j];
  detail::mm_acc(x.value().data(), w.value().data(), v.data(), rows, d_in, d_out);
  return detail::make_op<T>(std::move(out_shape), std::move(v), {x, w, b},
                            [rows, d_in, d_out](TensorNode<T>& nd) {
    const auto& xv = nd.parents[0].value();
    const auto& wv = nd.parents[1].value();
    if (nd.parents[0].needs_grad())  // dX += dY * W^T
      detail::mm_nt_acc(nd.grad.data(), wv.data(), nd.parents[0].grad().data(), rows, d_out, d_in);
    if (nd.parents[1].needs_grad())  // dW += X^T * dY
      detail::mm_tn_acc(xv.data(), nd.grad.data(), nd.parents[1].grad().data(), rows, d_in, d_out);
    if (nd.parents[2].needs_grad()) {
      auto& bg = nd.parents[2].grad();
      for (int64_t i = 0; i < rows; ++i) {
        const T* gr = nd.grad.data() + i * d_out;
        for (int64_t j = 0; j < d_out; ++j) bg[j] += gr[j];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Softmax / layer norm

// Numerically stabilized softmax along the given axis (negative counts from the end).
template <class T>
Tensor<T> softmax(const Tensor<T>& x, int axis = -1) {
  const int r = static_cast<int>(x.rank());
  if (r == 0) throw ShapeError("softmax: scalar input");
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r)
    throw ShapeError("softmax: axis out of range for " + shape_str(x.shape()));
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.dim(i);
  for (int i = axis + 1; i < r; ++i) inner *= x.dim(i);
  const int64_t len = x.dim(axis);

  std::vector<T> v(x.value());
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t in = 0; in < inner; ++in) {
      T* base = v.data() + o * len * inner + in;
      T mx = base[0];
      for (int64_t i = 1; i < len; ++i) mx = std::max(mx, base[i * inner]);
      T sum = 0;
      for (int64_t i = 0; i < len; ++i) {
        base[i * inner] = std::exp(base[i * inner] - mx);
        sum += base[i * inner];
      }
      for (int64_t i = 0; i < len; ++i) base[i * inner] /= sum;
    }
  return detail::make_op<T>(x.shape(), std::move(v), {x},
                            [outer, inner, len](TensorNode<T>& nd) {
    // dx = y .* (dy - sum(dy .* y)) per slice
    auto& pg = nd.parents[0].grad();
    for (int64_t o = 0; o < outer; ++o)
      for (int64_t in = 0; in < inner; ++in) {
        const int64_t off = o * len * inner + in;
        T dot = 0;
        for (int64_t i = 0; i < len; ++i) dot += nd.grad[off + i * inner] * nd.value[off + i * inner];
        for (int64_t i = 0; i < len; ++i) {
          const int64_t k = off + i * inner;
          pg[k] += nd.value[k] * (nd.grad[k] - dot);
        }
      }
  });
}

// Standardize the last axis (biased variance), then apply an affine map.
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  if (x.rank() < 1) throw ShapeError("layer_norm: scalar input");
  const int64_t d = x.dim(x.rank() - 1);
  if (d < 1) throw ShapeError("layer_norm: empty last axis");
  if (eps <= T(0)) throw std::invalid_argument("layer_norm: eps must be > 0");
  if (gain.rank() != 1 || gain.dim(0) != d || bias.rank() != 1 || bias.dim(0) != d)
    throw ShapeError("layer_norm: gain/bias must be [" + std::to_string(d) + "]");
  const int64_t rows = numel(x.shape()) / d;

  std::vector<T> v(static_cast<size_t>(rows * d));
  std::vector<T> inv_std(static_cast<size_t>(rows));
  std::vector<T> xhat(static_cast<size_t>(rows * d));
  for (int64_t i = 0; i < rows; ++i) {
    const T* xr = x.value().data() + i * d;
    T mean = 0;
    for (int64_t j = 0; j < d; ++j) mean += xr[j];
    mean /= T(d);
    T var = 0;
    for (int64_t j = 0; j < d; ++j) {
      const T c = xr[j] - mean;
      var += c * c;
    }
    var /= T(d);
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[i] = is;
    for (int64_t j = 0; j < d; ++j) {
      const T h = (xr[j] - mean) * is;
      xhat[i * d + j] = h;
      v[i * d + j] = gain.value()[j] * h + bias.value()[j];
    }
  }
  auto xhat_sh = std::make_shared<std::vector<T>>(std::move(xhat));
  auto istd_sh = std::make_shared<std::vector<T>>(std::move(inv_std));
  return detail::make_op<T>(x.shape(), std::move(v), {x, gain, bias},
                            [rows, d, xhat_sh, istd_sh](TensorNode<T>& nd) {
    const auto& gv = nd.parents[1].value();
    for (int64_t i = 0; i < rows; ++i) {
      const T* gy = nd.grad.data() + i * d;
      const T* xh = xhat_sh->data() + i * d;
      const T is = (*istd_sh)[i];
      if (nd.parents[0].needs_grad()) {
        // dxhat = dy .* gain; dx = (dxhat - mean(dxhat) - xhat .* mean(dxhat .* xhat)) * inv_std
        T s1 = 0, s2 = 0;
        for (int64_t j = 0; j < d; ++j) {
          const T dxh = gy[j] * gv[j];
          s1 += dxh;
          s2 += dxh * xh[j];
        }
        s1 /= T(d);
        s2 /= T(d);
        T* xg = nd.parents[0].grad().data() + i * d;
        for (int64_t j = 0; j < d; ++j) {
          const T dxh = gy[j] * gv[j];
          xg[j] += (dxh - s1 - xh[j] * s2) * is;
        }
      }
      if (nd.parents[1].needs_grad()) {
        T* gg = nd.parents[1].grad().data();
        for (int64_t j = 0; j < d; ++j) gg[j] += gy[j] * xh[j];
      }
      if (nd.parents[2].needs_grad()) {
        T* bg = nd.parents[2].grad().data();
        for (int64_t j = 0; j < d; ++j) bg[j] += gy[j];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Column slice / concat (used to split and rejoin attention heads)

template <class T>
Tensor<T> slice_cols(const Tensor<T>& x, int64_t c0, int64_t c1) {
  detail::require_rank2(x, "slice_cols");
  const int64_t m = x.dim(0), n = x.dim(1);
  if (c0 < 0 || c1 > n || c0 >= c1)
    throw ShapeError("slice_cols: bad range [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") for " + shape_str(x.shape()));
  const int64_t w = c1 - c0;
  std::vector<T> v(static_cast<size_t>(m * w));
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < w; ++j) v[i * w + j] = x.value()[i * n + c0 + j];
  return detail::make_op<T>({m, w}, std::move(v), {x}, [m, n, c0, w](TensorNode<T>& nd) {
    auto& pg = nd.parents[0].grad();
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < w; ++j) pg[i * n + c0 + j] += nd.grad[i * w + j];
  });
}

template <class T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int64_t m = parts[0].dim(0);
  int64_t total = 0;
  for (const auto& p : parts) {
    detail::require_rank2(p, "concat_cols");
    if (p.dim(0) != m) throw ShapeError("concat_cols: row count mismatch");
    total += p.dim(1);
  }
  std::vector<T> v(static_cast<size_t>(m * total));
  int64_t off = 0;
  for (const auto& p : parts) {
    const int64_t w = p.dim(1);
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < w; ++j) v[i * total + off + j] = p.value()[i * w + j];
    off += w;
  }
  std::vector<int64_t> widths;
  for (const auto& p : parts) widths.push_back(p.dim(1));
  return detail::make_op<T>({m, total}, std::move(v), parts,
                            [m, total, widths](TensorNode<T>& nd) {
    int64_t off = 0;
    for (size_t k = 0; k < widths.size(); ++k) {
      const int64_t w = widths[k];
      if (nd.parents[k].needs_grad()) {
        auto& pg = nd.parents[k].grad();
        for (int64_t i = 0; i < m; ++i)
          for (int64_t j = 0; j < w; ++j) pg[i * w + j] += nd.grad[i * total + off + j];
      }
      off += w;
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  T s = 0;
  for (T v : x.value()) s += v;
  return detail::make_op<T>(Shape{}, {s}, {x}, [](TensorNode<T>& nd) {
    auto& pg = nd.parents[0].grad();
    for (auto& g : pg) g += nd.grad[0];
  });
}

enum class Reduction { kMean, kSum };

// Mean (default) or sum of squared elementwise differences.
template <class T>
Tensor<T> mse(const Tensor<T>& x, const Tensor<T>& y, Reduction red = Reduction::kMean) {
  detail::check_same_shape(x, y, "mse");
  const int64_t n = numel(x.shape());
  const T inv = red == Reduction::kMean ? T(1) / T(n) : T(1);
  T s = 0;
  for (int64_t i = 0; i < n; ++i) {
    const T d = x.value()[i] - y.value()[i];
    s += d * d;
  }
  s *= inv;
  return detail::make_op<T>(Shape{}, {s}, {x, y}, [n, inv](TensorNode<T>& nd) {
    const auto& xv = nd.parents[0].value();
    const auto& yv = nd.parents[1].value();
    const T g = nd.grad[0] * T(2) * inv;
    if (nd.parents[0].needs_grad()) {
      auto& pg = nd.parents[0].grad();
      for (int64_t i = 0; i < n; ++i) pg[i] += g * (xv[i] - yv[i]);
    }
    if (nd.parents[1].needs_grad()) {
      auto& pg = nd.parents[1].grad();
      for (int64_t i = 0; i < n; ++i) pg[i] -= g * (xv[i] - yv[i]);
    }
  });
}

// Unweighted average of scalar tensors (batch loss aggregation).
template <class T>
Tensor<T> average(const std::vector<Tensor<T>>& xs) {
  if (xs.empty()) throw ShapeError("average: no inputs");
  Tensor<T> acc = xs[0];
  for (size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
  return scale(acc, T(1) / T(xs.size()));
}

}  // namespace c2s
