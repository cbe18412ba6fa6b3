#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "c2s/nn.hpp"
#include "c2s/tensor.hpp"

using c2s::Reduction;
using c2s::Shape;
using Tensor = c2s::Tensor<double>;

namespace {

std::vector<double> random_values(size_t n, std::mt19937_64& rng, double lo = -1.0,
                                  double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// Reference matmul: straightforward triple loop, no blocking or reordering.
std::vector<double> matmul_oracle(const std::vector<double>& a, const std::vector<double>& b,
                                  int64_t m, int64_t k, int64_t n) {
  std::vector<double> c(static_cast<size_t>(m * n), 0.0);
  for (int64_t i = 0; i < m; ++i)
    for (int64_t p = 0; p < k; ++p)
      for (int64_t j = 0; j < n; ++j)
        c[static_cast<size_t>(i * n + j)] +=
            a[static_cast<size_t>(i * k + p)] * b[static_cast<size_t>(p * n + j)];
  return c;
}

}  // namespace

TEST_CASE("matmul matches a triple-loop oracle") {
  std::mt19937_64 rng(7);
  const int64_t m = 5, k = 7, n = 4;
  auto av = random_values(static_cast<size_t>(m * k), rng);
  auto bv = random_values(static_cast<size_t>(k * n), rng);
  auto a = Tensor::input({m, k}, av);
  auto b = Tensor::input({k, n}, bv);
  auto c = c2s::matmul(a, b);
  REQUIRE(c.shape() == Shape{m, n});
  auto want = matmul_oracle(av, bv, m, k, n);
  for (size_t i = 0; i < want.size(); ++i) CHECK(c.value()[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("matmul_nt(a, b) equals matmul(a, b^T)") {
  std::mt19937_64 rng(8);
  const int64_t m = 4, k = 6, n = 5;
  auto av = random_values(static_cast<size_t>(m * k), rng);
  auto bv = random_values(static_cast<size_t>(n * k), rng);  // b is [n, k], used transposed
  std::vector<double> bt(static_cast<size_t>(k * n));
  for (int64_t r = 0; r < n; ++r)
    for (int64_t c = 0; c < k; ++c)
      bt[static_cast<size_t>(c * n + r)] = bv[static_cast<size_t>(r * k + c)];
  auto a = Tensor::input({m, k}, av);
  auto b = Tensor::input({n, k}, bv);
  auto out = c2s::matmul_nt(a, b);
  REQUIRE(out.shape() == Shape{m, n});
  auto want = matmul_oracle(av, bt, m, k, n);
  for (size_t i = 0; i < want.size(); ++i)
    CHECK(out.value()[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("linear equals x*w + row-broadcast bias") {
  std::mt19937_64 rng(9);
  const int64_t rows = 3, d_in = 4, d_out = 6;
  auto xv = random_values(static_cast<size_t>(rows * d_in), rng);
  auto wv = random_values(static_cast<size_t>(d_in * d_out), rng);
  auto bv = random_values(static_cast<size_t>(d_out), rng);
  auto out = c2s::linear(Tensor::input({rows, d_in}, xv), Tensor::input({d_in, d_out}, wv),
                         Tensor::input({d_out}, bv));
  auto prod = matmul_oracle(xv, wv, rows, d_in, d_out);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < d_out; ++c) {
      const size_t i = static_cast<size_t>(r * d_out + c);
      CHECK(out.value()[i] ==
            doctest::Approx(prod[i] + bv[static_cast<size_t>(c)]).epsilon(1e-12));
    }
}

TEST_CASE("softmax rows are positive and sum to one") {
  std::mt19937_64 rng(10);
  const int64_t rows = 6, cols = 9;
  auto x = Tensor::input({rows, cols}, random_values(static_cast<size_t>(rows * cols), rng, -5, 5));
  auto y = c2s::softmax(x);
  for (int64_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      const double v = y.value()[static_cast<size_t>(r * cols + c)];
      CHECK(v > 0.0);
      s += v;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax is invariant to a per-row constant shift") {
  std::mt19937_64 rng(11);
  const int64_t rows = 3, cols = 5;
  auto xv = random_values(static_cast<size_t>(rows * cols), rng, -2, 2);
  auto shifted = xv;
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cols; ++c) shifted[static_cast<size_t>(r * cols + c)] += 100.0 + r;
  auto a = c2s::softmax(Tensor::input({rows, cols}, xv));
  auto b = c2s::softmax(Tensor::input({rows, cols}, shifted));
  for (size_t i = 0; i < a.value().size(); ++i)
    CHECK(a.value()[i] == doctest::Approx(b.value()[i]).epsilon(1e-12));
}

TEST_CASE("layer_norm with unit gain and zero bias produces zero-mean unit-variance rows") {
  std::mt19937_64 rng(12);
  const int64_t rows = 4, cols = 16;
  auto x = Tensor::input({rows, cols}, random_values(static_cast<size_t>(rows * cols), rng, -3, 3));
  auto g = Tensor::input({cols}, std::vector<double>(static_cast<size_t>(cols), 1.0));
  auto b = Tensor::input({cols}, std::vector<double>(static_cast<size_t>(cols), 0.0));
  auto y = c2s::layer_norm(x, g, b, 1e-12);
  for (int64_t r = 0; r < rows; ++r) {
    double mean = 0.0, var = 0.0;
    for (int64_t c = 0; c < cols; ++c) mean += y.value()[static_cast<size_t>(r * cols + c)];
    mean /= static_cast<double>(cols);
    for (int64_t c = 0; c < cols; ++c) {
      const double d = y.value()[static_cast<size_t>(r * cols + c)] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    CHECK(std::abs(mean) < 1e-10);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("gelu hits known anchor values") {
  auto x = Tensor::input({3}, {0.0, 10.0, -10.0});
  auto y = c2s::gelu(x);
  CHECK(y.value()[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(y.value()[1] == doctest::Approx(10.0).epsilon(1e-9));   // saturates to identity
  CHECK(std::abs(y.value()[2]) < 1e-6);                         // saturates to zero
}

TEST_CASE("mse reductions match hand-computed values") {
  auto x = Tensor::input({1, 2}, {0.3, 0.4});
  auto y = Tensor::input({1, 2}, {0.0, 0.0});
  CHECK(c2s::mse(x, y, Reduction::kMean).item() == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(c2s::mse(x, y, Reduction::kSum).item() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(c2s::mse(x, x).item() == 0.0);
}

TEST_CASE("slice_cols / concat_cols round trip") {
  std::mt19937_64 rng(13);
  const int64_t rows = 3, cols = 8;
  auto xv = random_values(static_cast<size_t>(rows * cols), rng);
  auto x = Tensor::input({rows, cols}, xv);
  auto left = c2s::slice_cols(x, 0, 3);
  auto right = c2s::slice_cols(x, 3, cols);
  REQUIRE(left.shape() == Shape{rows, 3});
  REQUIRE(right.shape() == Shape{rows, cols - 3});
  auto back = c2s::concat_cols<double>({left, right});
  REQUIRE(back.shape() == x.shape());
  for (size_t i = 0; i < xv.size(); ++i) CHECK(back.value()[i] == xv[i]);
}

TEST_CASE("sum and average match direct arithmetic") {
  auto x = Tensor::input({2, 2}, {1.0, 2.0, 3.0, 4.0});
  CHECK(c2s::sum(x).item() == doctest::Approx(10.0).epsilon(1e-15));
  auto a = Tensor::scalar(1.0);
  auto b = Tensor::scalar(2.0);
  auto c = Tensor::scalar(6.0);
  CHECK(c2s::average<double>({a, b, c}).item() == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("shape mismatches and non-scalar roots are rejected") {
  auto a = Tensor::input({2, 2}, {1, 2, 3, 4});
  auto b = Tensor::input({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK_THROWS_AS((void)c2s::add(a, b), c2s::ShapeError);
  auto bad = Tensor::input({3, 2}, {1, 2, 3, 4, 5, 6});
  CHECK_THROWS_AS((void)c2s::matmul(bad, bad), c2s::ShapeError);
  CHECK_THROWS_AS(a.item(), c2s::ShapeError);
  auto p = Tensor::param({2}, {1.0, 2.0});
  auto y = c2s::scale(p, 2.0);
  CHECK_THROWS_AS(y.backward(), c2s::ShapeError);
}

TEST_CASE("finite differences validate every op's gradient") {
  std::mt19937_64 rng(42);
  const double tol = 1e-6;

  auto check = [&](const char* name, const std::function<Tensor()>& build,
                   std::vector<Tensor> params) {
    auto res = c2s::grad_check(build, params);
    INFO(name << " max_rel_error=" << res.max_rel_error);
    CHECK(res.max_rel_error < tol);
    CHECK(res.coords_checked > 0);
  };

  auto p1 = Tensor::param({2, 3}, random_values(6, rng));
  auto p2 = Tensor::param({2, 3}, random_values(6, rng));
  check("add+mul+scale+sub", [&] {
    return c2s::sum(c2s::add(c2s::mul(p1, p2), c2s::scale(c2s::sub(p1, p2), 0.7)));
  }, {p1, p2});

  auto pg = Tensor::param({2, 4}, random_values(8, rng));
  check("gelu", [&] { return c2s::sum(c2s::gelu(pg)); }, {pg});

  auto ma = Tensor::param({3, 4}, random_values(12, rng));
  auto mb = Tensor::param({4, 2}, random_values(8, rng));
  check("matmul", [&] { return c2s::sum(c2s::matmul(ma, mb)); }, {ma, mb});

  auto na = Tensor::param({3, 4}, random_values(12, rng));
  auto nb = Tensor::param({2, 4}, random_values(8, rng));
  check("matmul_nt", [&] { return c2s::sum(c2s::matmul_nt(na, nb)); }, {na, nb});

  auto lx = Tensor::param({3, 4}, random_values(12, rng));
  auto lw = Tensor::param({4, 5}, random_values(20, rng));
  auto lb = Tensor::param({5}, random_values(5, rng));
  check("linear", [&] { return c2s::sum(c2s::linear(lx, lw, lb)); }, {lx, lw, lb});

  auto sx = Tensor::param({2, 5}, random_values(10, rng));
  auto sw = Tensor::input({2, 5}, random_values(10, rng));  // weighted sum: non-uniform pullback
  check("softmax", [&] { return c2s::sum(c2s::mul(c2s::softmax(sx), sw)); }, {sx});

  auto nx = Tensor::param({3, 6}, random_values(18, rng));
  auto ng = Tensor::param({6}, random_values(6, rng, 0.5, 1.5));
  auto nbb = Tensor::param({6}, random_values(6, rng));
  auto nw = Tensor::input({3, 6}, random_values(18, rng));
  check("layer_norm", [&] {
    return c2s::sum(c2s::mul(c2s::layer_norm(nx, ng, nbb, 1e-5), nw));
  }, {nx, ng, nbb});

  auto cx = Tensor::param({2, 6}, random_values(12, rng));
  auto cw = Tensor::input({2, 6}, random_values(12, rng));
  check("slice+concat", [&] {
    auto a = c2s::slice_cols(cx, 0, 2);
    auto b = c2s::slice_cols(cx, 2, 6);
    return c2s::sum(c2s::mul(c2s::concat_cols<double>({a, b}), cw));
  }, {cx});

  auto ex = Tensor::param({2, 3}, random_values(6, rng));
  auto ey = Tensor::param({2, 3}, random_values(6, rng));
  check("mse mean", [&] { return c2s::mse(ex, ey, Reduction::kMean); }, {ex, ey});
  check("mse sum", [&] { return c2s::mse(ex, ey, Reduction::kSum); }, {ex, ey});
}

TEST_CASE("leaf gradients accumulate across backward calls; interior grads reset") {
  auto p = Tensor::param({2, 2}, {1.0, -2.0, 0.5, 3.0});
  auto q = Tensor::param({2, 2}, {0.2, 0.4, -0.6, 1.0});
  auto loss = c2s::mse(c2s::mul(p, q), Tensor::input({2, 2}, {0, 0, 0, 0}));
  loss.backward();
  auto g1p = p.grad();
  auto g1q = q.grad();
  loss.backward();
  for (size_t i = 0; i < g1p.size(); ++i) {
    CHECK(p.grad()[i] == 2.0 * g1p[i]);  // exact: doubling is a single fp add
    CHECK(q.grad()[i] == 2.0 * g1q[i]);
  }
  p.zero_grad();
  q.zero_grad();
  loss.backward();
  for (size_t i = 0; i < g1p.size(); ++i) CHECK(p.grad()[i] == g1p[i]);
}

TEST_CASE("nodes without grad-requiring parents skip backward work") {
  auto a = Tensor::input({2}, {1.0, 2.0});
  auto b = Tensor::input({2}, {3.0, 4.0});
  auto y = c2s::sum(c2s::mul(a, b));
  CHECK_FALSE(y.needs_grad());
  y.backward();  // no-op, must not throw
  CHECK(a.grad()[0] == 0.0);
}

TEST_CASE("adam converges on a quadratic bowl") {
  auto p = Tensor::param({1}, {0.0});
  std::vector<Tensor> params{p};
  c2s::AdamConfig cfg;
  cfg.lr = 0.1;
  auto st = c2s::make_adam_state(params, cfg);
  auto target = Tensor::input({1}, {3.0});
  for (int i = 0; i < 100; ++i) {
    c2s::zero_grads(params);
    auto loss = c2s::mse(p, target);
    loss.backward();
    c2s::adam_step(params, st);
  }
  CHECK(std::abs(p.value()[0] - 3.0) < 0.1);
}

TEST_CASE("adam with zero learning rate leaves parameters bitwise unchanged") {
  std::mt19937_64 rng(99);
  auto p = Tensor::param({3, 3}, random_values(9, rng));
  auto init = p.value();
  std::vector<Tensor> params{p};
  c2s::AdamConfig cfg;
  cfg.lr = 0.0;
  auto st = c2s::make_adam_state(params, cfg);
  auto target = Tensor::input({3, 3}, random_values(9, rng));
  for (int i = 0; i < 5; ++i) {
    c2s::zero_grads(params);
    c2s::mse(p, target).backward();
    c2s::adam_step(params, st);
  }
  for (size_t i = 0; i < init.size(); ++i) CHECK(p.value()[i] == init[i]);
}
