#include <catch2/catch_amalgamated.hpp>

#include "fd_oracle.hpp"
#include "neurogf/optim.hpp"

using namespace neurogf;

namespace {

TensorPtr filled(int r, int c, std::initializer_list<float> vals, bool grad = true) {
  auto t = grad ? Tensor::param(r, c) : Tensor::constant(r, c);
  REQUIRE(vals.size() == t->size());
  std::copy(vals.begin(), vals.end(), t->val.begin());
  return t;
}

}  // namespace

TEST_CASE("linear with identity weights and zero bias is the identity") {
  auto x = filled(2, 3, {1, 2, 3, 4, 5, 6}, false);
  auto W = Tensor::param(3, 3);
  for (int i = 0; i < 3; ++i) W->val[i * 3 + i] = 1.0f;
  auto b = Tensor::param(1, 3);
  auto y = ops::linear(x, W, b);
  CHECK(y->val == x->val);
}

TEST_CASE("shape mismatches name both shapes") {
  auto x = Tensor::constant(2, 3);
  auto W = Tensor::param(4, 5);
  auto b = Tensor::param(1, 4);
  CHECK_THROWS_WITH(ops::linear(x, W, b), Catch::Matchers::ContainsSubstring("2x3") &&
                                              Catch::Matchers::ContainsSubstring("4x5"));
  auto a2 = Tensor::constant(2, 2);
  CHECK_THROWS_WITH(ops::add(x, a2), Catch::Matchers::ContainsSubstring("2x3") &&
                                         Catch::Matchers::ContainsSubstring("2x2"));
}

TEST_CASE("abs backward at -2 gives gradient -1") {
  auto x = filled(1, 1, {-2.0f});
  auto loss = ops::sum_all(ops::abs_val(x));
  backward(loss);
  CHECK(x->grad[0] == -1.0f);
}

TEST_CASE("l1 loss of equal tensors is zero with zero gradients") {
  auto a = filled(2, 2, {1, -2, 3, 0.5f});
  auto b = filled(2, 2, {1, -2, 3, 0.5f}, false);
  auto loss = ops::l1_loss(a, b);
  CHECK(loss->scalar() == 0.0f);
  backward(loss);
  for (float g : a->grad) CHECK(g == 0.0f);  // tie subgradient is 0
}

TEST_CASE("x squared via x*x has gradient 2x") {
  auto x = filled(1, 1, {3.0f});
  auto loss = ops::sum_all(ops::mul(x, x));
  backward(loss);
  CHECK(x->grad[0] == 6.0f);
}

TEST_CASE("backward requires a scalar loss") {
  auto x = Tensor::param(2, 2);
  auto y = ops::relu(x);
  CHECK_THROWS_WITH(backward(y), Catch::Matchers::ContainsSubstring("scalar"));
}

TEST_CASE("repeated backward without zeroing accumulates") {
  auto x = filled(1, 1, {2.0f});
  auto loss = ops::sum_all(ops::mul(x, x));
  backward(loss);
  CHECK(x->grad[0] == 4.0f);
  backward(loss);
  CHECK(x->grad[0] == 8.0f);
}

TEST_CASE("abs difference is bitwise symmetric") {
  Rng rng = make_rng(3);
  auto a = Tensor::constant(8, 16);
  auto b = Tensor::constant(8, 16);
  for (auto& v : a->val) v = float(rng.normal());
  for (auto& v : b->val) v = float(rng.normal());
  auto ab = ops::abs_val(ops::sub(a, b));
  auto ba = ops::abs_val(ops::sub(b, a));
  for (size_t i = 0; i < ab->size(); ++i) CHECK(ab->val[i] == ba->val[i]);
}

TEST_CASE("checked mode rejects non-finite values") {
  autodiff_state::check_finite() = true;
  auto x = filled(1, 2, {1.0f, std::numeric_limits<float>::infinity()}, false);
  auto W = Tensor::param(1, 2);
  W->val = {1.0f, 1.0f};
  auto b = Tensor::param(1, 1);
  CHECK_THROWS_WITH(ops::linear(x, W, b), Catch::Matchers::ContainsSubstring("non-finite"));
  autodiff_state::check_finite() = false;
}

TEST_CASE("no-grad mode records no graph") {
  auto x = Tensor::param(2, 2);
  NoGradGuard guard;
  auto y = ops::relu(x);
  CHECK(y->parents.empty());
  CHECK(!y->grad_path);
}

// ---------------------------------------------------------------------------
// finite-difference checks for every primitive (f64 recompute, h = 1e-3)
// ---------------------------------------------------------------------------

namespace {
constexpr double kTol = 1e-4;
}

TEST_CASE("fd: linear") {
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    Rng rng = make_rng(seed);
    int B = 3, in = 5, out = 4;
    auto x = Tensor::param(B, in);
    auto W = Tensor::param(out, in);
    auto b = Tensor::param(1, out);
    fd::fill_with_margin(x, rng);
    fd::fill_with_margin(W, rng);
    fd::fill_with_margin(b, rng);
    auto loss = ops::mean_all(ops::linear(x, W, b));
    backward(loss);
    auto rep = fd::compare_gradients({x, W, b}, [&](const std::vector<fd::Mat>& v) {
      return fd::ref_mean(fd::ref_linear(v[0], v[1], v[2], B, in, out));
    });
    CHECK(rep.rel_error() < kTol);
  }
}

TEST_CASE("fd: relu, softplus, abs") {
  for (uint64_t seed : {4ull, 5ull, 6ull}) {
    Rng rng = make_rng(seed);
    auto x = Tensor::param(4, 6);
    fd::fill_with_margin(x, rng);  // margin keeps kinks out of the fd stencil

    auto lr = ops::mean_all(ops::relu(x));
    backward(lr);
    auto rep = fd::compare_gradients({x}, [&](const std::vector<fd::Mat>& v) {
      return fd::ref_mean(fd::ref_relu(v[0]));
    });
    CHECK(rep.rel_error() < kTol);

    x->zero_grad();
    auto ls = ops::mean_all(ops::softplus(x));
    backward(ls);
    rep = fd::compare_gradients({x}, [&](const std::vector<fd::Mat>& v) {
      return fd::ref_mean(fd::ref_softplus(v[0]));
    });
    CHECK(rep.rel_error() < kTol);

    x->zero_grad();
    auto la = ops::mean_all(ops::abs_val(x));
    backward(la);
    rep = fd::compare_gradients({x}, [&](const std::vector<fd::Mat>& v) {
      return fd::ref_mean(fd::ref_abs(v[0]));
    });
    CHECK(rep.rel_error() < kTol);
  }
}

TEST_CASE("fd: add, sub, mul, scale, concat, repeat_rows") {
  for (uint64_t seed : {7ull, 8ull}) {
    Rng rng = make_rng(seed);
    auto a = Tensor::param(3, 4);
    auto b = Tensor::param(3, 4);
    fd::fill_with_margin(a, rng);
    fd::fill_with_margin(b, rng);

    auto combo = ops::mean_all(
        ops::concat(ops::scale(ops::mul(a, b), 0.5f), ops::repeat_rows(ops::sub(a, b), 1)));
    backward(combo);
    auto rep = fd::compare_gradients({a, b}, [&](const std::vector<fd::Mat>& v) {
      fd::Mat joined;
      for (size_t r = 0; r < 3; ++r) {
        for (size_t c = 0; c < 4; ++c) joined.push_back(0.5 * v[0][r * 4 + c] * v[1][r * 4 + c]);
        for (size_t c = 0; c < 4; ++c) joined.push_back(v[0][r * 4 + c] - v[1][r * 4 + c]);
      }
      return fd::ref_mean(joined);
    });
    CHECK(rep.rel_error() < kTol);

    a->zero_grad();
    auto rpt = ops::mean_all(ops::mul(ops::repeat_rows(a, 3), ops::repeat_rows(a, 3)));
    backward(rpt);
    rep = fd::compare_gradients({a}, [&](const std::vector<fd::Mat>& v) {
      fd::Mat big;
      for (size_t r = 0; r < 3; ++r)
        for (int t = 0; t < 3; ++t)
          for (size_t c = 0; c < 4; ++c) big.push_back(v[0][r * 4 + c] * v[0][r * 4 + c]);
      return fd::ref_mean(big);
    });
    CHECK(rep.rel_error() < kTol);
  }
}

TEST_CASE("fd: curve_length") {
  for (uint64_t seed : {9ull, 10ull}) {
    Rng rng = make_rng(seed);
    int B = 2, M = 5;
    auto pts = Tensor::param(B * M, 3);
    fd::fill_with_margin(pts, rng, 5e-3, 0.8);
    auto loss = ops::mean_all(ops::curve_length(pts, B, M));
    backward(loss);
    auto rep = fd::compare_gradients({pts}, [&](const std::vector<fd::Mat>& v) {
      return fd::ref_mean(fd::ref_curve_length(v[0], B, M));
    });
    CHECK(rep.rel_error() < kTol);
  }
}

TEST_CASE("fd: chain of 7 linear+relu layers") {
  for (uint64_t seed : {11ull, 12ull, 13ull}) {
    Rng rng = make_rng(seed);
    const int width = 6, B = 4;
    auto x = Tensor::param(B, width);
    fd::fill_with_margin(x, rng);
    std::vector<TensorPtr> Ws, bs;
    TensorPtr h = x;
    for (int l = 0; l < 7; ++l) {
      auto W = Tensor::param(width, width);
      auto b = Tensor::param(1, width);
      fd::fill_with_margin(W, rng, 5e-3, 0.6);
      fd::fill_with_margin(b, rng, 5e-3, 0.3);
      Ws.push_back(W);
      bs.push_back(b);
      h = ops::relu(ops::linear(h, W, b));
    }
    auto loss = ops::mean_all(h);

    // keep every relu input away from the fd stencil
    bool margins_ok = true;
    {
      fd::Mat cur = fd::to_f64(x);
      for (int l = 0; l < 7; ++l) {
        cur = fd::ref_linear(cur, fd::to_f64(Ws[l]), fd::to_f64(bs[l]), B, width, width);
        for (double v : cur)
          if (std::abs(v) < 3e-3) margins_ok = false;
        cur = fd::ref_relu(cur);
      }
    }
    if (!margins_ok) continue;  // fd itself is invalid at a kink; not a gradient bug

    backward(loss);
    std::vector<TensorPtr> inputs = {x};
    inputs.insert(inputs.end(), Ws.begin(), Ws.end());
    inputs.insert(inputs.end(), bs.begin(), bs.end());
    auto rep = fd::compare_gradients(inputs, [&](const std::vector<fd::Mat>& v) {
      fd::Mat cur = v[0];
      for (int l = 0; l < 7; ++l)
        cur = fd::ref_relu(fd::ref_linear(cur, v[1 + l], v[8 + l], B, width, width));
      return fd::ref_mean(cur);
    });
    CHECK(rep.rel_error() < kTol);
  }
}

// ---------------------------------------------------------------------------
// optimizer
// ---------------------------------------------------------------------------

TEST_CASE("adamw first step matches the bias-corrected hand computation") {
  auto p = Tensor::param(1, 1);
  p->val[0] = 1.0f;
  p->ensure_grad();
  p->grad[0] = 1.0f;
  AdamW opt({p});
  opt.step(0.01);
  // 1.0 - 0.01 * (1 + 0.01 * 1.0) = 0.9899 (up to eps in the denominator)
  CHECK(p->val[0] == Catch::Approx(0.9899).margin(1e-6));
}

TEST_CASE("adamw leaves parameters unchanged for zero grad and zero decay") {
  auto p = Tensor::param(2, 2);
  for (auto& v : p->val) v = 1.5f;
  p->ensure_grad();
  AdamW::Hyper hp;
  hp.weight_decay = 0.0;
  AdamW opt({p}, hp);
  for (int i = 0; i < 5; ++i) opt.step(0.01);
  for (float v : p->val) CHECK(v == 1.5f);
}

TEST_CASE("identical parameters with identical grads stay identical") {
  auto a = Tensor::param(1, 4);
  auto b = Tensor::param(1, 4);
  for (int i = 0; i < 4; ++i) a->val[i] = b->val[i] = 0.3f * float(i + 1);
  AdamW opt({a, b});
  Rng rng = make_rng(2);
  for (int step = 0; step < 50; ++step) {
    opt.zero_grad();
    a->ensure_grad();
    b->ensure_grad();
    for (int i = 0; i < 4; ++i) a->grad[i] = b->grad[i] = float(rng.normal());
    opt.step(0.005);
  }
  CHECK(a->val == b->val);
}

TEST_CASE("cosine annealing hits the pinned schedule values") {
  CHECK(cosine_lr(0, 500, 0.01, 0.0001) == Catch::Approx(0.01));
  CHECK(cosine_lr(500, 500, 0.01, 0.0001) == Catch::Approx(0.0001));
  CHECK(cosine_lr(250, 500, 0.01, 0.0001) == Catch::Approx(0.00505));
  CHECK_THROWS(cosine_lr(501, 500, 0.01, 0.0001));
}
