#pragma once

#include <functional>
#include <memory>
#include <unordered_set>

#include "neurogf/core.hpp"

namespace neurogf {

// ---------------------------------------------------------------------------
// Reverse-mode autodiff over dense f32 matrices. Graphs are small (a few
// dozen nodes per training step); all the work is inside the kernels below.
//
// Row results of every forward kernel depend only on that row's inputs and
// never on the batch size, so batched evaluation is bitwise identical to
// one-row-at-a-time evaluation.
// ---------------------------------------------------------------------------

namespace kernels {

// dot product with a fixed 8-lane accumulation order (vectorizable without
// -ffast-math, identical result for a given length regardless of context)
inline float dot8(const float* a, const float* b, int n) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  int i = 0;
  for (; i + 8 <= n; i += 8)
    for (int l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  float tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

inline void axpy(float alpha, const float* x, float* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Y[b,:] = X[b,:] * W^T + bias, W stored row-major (out x in)
inline void linear_forward(const float* X, const float* W, const float* bias, float* Y, int B,
                           int in, int out) {
  for (int b = 0; b < B; ++b) {
    const float* x = X + size_t(b) * in;
    float* y = Y + size_t(b) * out;
    for (int j = 0; j < out; ++j) y[j] = dot8(x, W + size_t(j) * in, in) + bias[j];
  }
}

inline void linear_backward(const float* X, const float* W, const float* dY, float* dX, float* dW,
                            float* dB, int B, int in, int out) {
  for (int b = 0; b < B; ++b) {
    const float* x = X + size_t(b) * in;
    const float* dy = dY + size_t(b) * out;
    if (dX) {
      float* dx = dX + size_t(b) * in;
      for (int j = 0; j < out; ++j) axpy(dy[j], W + size_t(j) * in, dx, in);
    }
    if (dW)
      for (int j = 0; j < out; ++j) axpy(dy[j], x, dW + size_t(j) * in, in);
    if (dB)
      for (int j = 0; j < out; ++j) dB[j] += dy[j];
  }
}

}  // namespace kernels

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

namespace autodiff_state {
inline bool& grad_enabled() {
  thread_local bool enabled = true;
  return enabled;
}
inline bool& check_finite() {
  thread_local bool enabled = false;
  return enabled;
}
}  // namespace autodiff_state

// Disables graph recording in scope (inference / evaluation).
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(autodiff_state::grad_enabled()) { autodiff_state::grad_enabled() = false; }
  ~NoGradGuard() { autodiff_state::grad_enabled() = prev; }
};

struct Tensor {
  int rows = 0, cols = 0;
  std::vector<float> val;
  std::vector<float> grad;
  bool requires_grad = false;  // leaf parameter
  bool grad_path = false;      // gradients must flow through this node
  std::vector<TensorPtr> parents;
  std::function<void(Tensor&)> backward_op;

  size_t size() const { return size_t(rows) * cols; }
  float* data() { return val.data(); }
  const float* data() const { return val.data(); }
  float scalar() const {
    if (rows != 1 || cols != 1) throw std::logic_error("Tensor::scalar: not a 1x1 tensor");
    return val[0];
  }

  static TensorPtr create(int r, int c) {
    auto t = std::make_shared<Tensor>();
    t->rows = r;
    t->cols = c;
    t->val.assign(size_t(r) * c, 0.0f);
    return t;
  }

  static TensorPtr param(int r, int c) {
    auto t = create(r, c);
    t->requires_grad = true;
    t->grad_path = true;
    t->grad.assign(t->size(), 0.0f);
    return t;
  }

  static TensorPtr constant(int r, int c) { return create(r, c); }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }

  void ensure_grad() {
    if (grad.size() != size()) grad.assign(size(), 0.0f);
  }

  void assert_finite(const char* what) const {
    for (float v : val)
      if (!std::isfinite(v)) throw std::runtime_error(std::string("non-finite value after ") + what);
  }
};

namespace ops {

namespace detail {

inline void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows) +
                              "x" + std::to_string(a.cols) + " vs " + std::to_string(b.rows) +
                              "x" + std::to_string(b.cols) + ")");
}

inline TensorPtr make_node(int r, int c, std::vector<TensorPtr> parents,
                           std::function<void(Tensor&)> backward) {
  auto t = Tensor::create(r, c);
  if (autodiff_state::grad_enabled()) {
    for (const auto& p : parents)
      if (p->grad_path) t->grad_path = true;
    if (t->grad_path) {
      t->parents = std::move(parents);
      t->backward_op = std::move(backward);
    }
  }
  return t;
}

inline void finite_check(const TensorPtr& t, const char* op) {
  if (autodiff_state::check_finite()) t->assert_finite(op);
}

}  // namespace detail

// y = x W^T + b;  W: (out x in) parameter, b: (1 x out)
inline TensorPtr linear(const TensorPtr& x, const TensorPtr& W, const TensorPtr& b) {
  if (x->cols != W->cols) detail::shape_mismatch("linear(x,W)", *x, *W);
  if (b->rows != 1 || b->cols != W->rows) detail::shape_mismatch("linear(W,b)", *W, *b);
  int B = x->rows, in = x->cols, out = W->rows;
  auto y = detail::make_node(B, out, {x, W, b}, [x, W, b, B, in, out](Tensor& self) {
    if (x->grad_path) x->ensure_grad();
    if (W->grad_path) W->ensure_grad();
    if (b->grad_path) b->ensure_grad();
    kernels::linear_backward(x->data(), W->data(), self.grad.data(),
                             x->grad_path ? x->grad.data() : nullptr,
                             W->grad_path ? W->grad.data() : nullptr,
                             b->grad_path ? b->grad.data() : nullptr, B, in, out);
  });
  kernels::linear_forward(x->data(), W->data(), b->data(), y->data(), B, in, out);
  detail::finite_check(y, "linear");
  return y;
}

inline TensorPtr relu(const TensorPtr& x) {
  auto y = detail::make_node(x->rows, x->cols, {x}, [x](Tensor& self) {
    if (!x->grad_path) return;
    x->ensure_grad();
    for (size_t i = 0; i < self.size(); ++i)
      if (x->val[i] > 0) x->grad[i] += self.grad[i];
  });
  for (size_t i = 0; i < x->size(); ++i) y->val[i] = x->val[i] > 0 ? x->val[i] : 0.0f;
  detail::finite_check(y, "relu");
  return y;
}

inline float softplus_fwd(float v) {
  return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

inline TensorPtr softplus(const TensorPtr& x) {
  auto y = detail::make_node(x->rows, x->cols, {x}, [x](Tensor& self) {
    if (!x->grad_path) return;
    x->ensure_grad();
    for (size_t i = 0; i < self.size(); ++i) {
      float s = 1.0f / (1.0f + std::exp(-x->val[i]));
      x->grad[i] += self.grad[i] * s;
    }
  });
  for (size_t i = 0; i < x->size(); ++i) y->val[i] = softplus_fwd(x->val[i]);
  detail::finite_check(y, "softplus");
  return y;
}

// |x| elementwise; subgradient 0 at x = 0
inline TensorPtr abs_val(const TensorPtr& x) {
  auto y = detail::make_node(x->rows, x->cols, {x}, [x](Tensor& self) {
    if (!x->grad_path) return;
    x->ensure_grad();
    for (size_t i = 0; i < self.size(); ++i) {
      float v = x->val[i];
      x->grad[i] += v > 0 ? self.grad[i] : (v < 0 ? -self.grad[i] : 0.0f);
    }
  });
  for (size_t i = 0; i < x->size(); ++i) y->val[i] = std::fabs(x->val[i]);
  detail::finite_check(y, "abs");
  return y;
}

inline TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  if (a->rows != b->rows || a->cols != b->cols) detail::shape_mismatch("add", *a, *b);
  auto y = detail::make_node(a->rows, a->cols, {a, b}, [a, b](Tensor& self) {
    if (a->grad_path) {
      a->ensure_grad();
      for (size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i];
    }
    if (b->grad_path) {
      b->ensure_grad();
      for (size_t i = 0; i < self.size(); ++i) b->grad[i] += self.grad[i];
    }
  });
  for (size_t i = 0; i < a->size(); ++i) y->val[i] = a->val[i] + b->val[i];
  detail::finite_check(y, "add");
  return y;
}

inline TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
  if (a->rows != b->rows || a->cols != b->cols) detail::shape_mismatch("sub", *a, *b);
  auto y = detail::make_node(a->rows, a->cols, {a, b}, [a, b](Tensor& self) {
    if (a->grad_path) {
      a->ensure_grad();
      for (size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i];
    }
    if (b->grad_path) {
      b->ensure_grad();
      for (size_t i = 0; i < self.size(); ++i) b->grad[i] -= self.grad[i];
    }
  });
  for (size_t i = 0; i < a->size(); ++i) y->val[i] = a->val[i] - b->val[i];
  detail::finite_check(y, "sub");
  return y;
}

inline TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  if (a->rows != b->rows || a->cols != b->cols) detail::shape_mismatch("mul", *a, *b);
  auto y = detail::make_node(a->rows, a->cols, {a, b}, [a, b](Tensor& self) {
    if (a->grad_path) {
      a->ensure_grad();
      for (size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i] * b->val[i];
    }
    if (b->grad_path) {
      b->ensure_grad();
      for (size_t i = 0; i < self.size(); ++i) b->grad[i] += self.grad[i] * a->val[i];
    }
  });
  for (size_t i = 0; i < a->size(); ++i) y->val[i] = a->val[i] * b->val[i];
  detail::finite_check(y, "mul");
  return y;
}

inline TensorPtr scale(const TensorPtr& x, float s) {
  auto y = detail::make_node(x->rows, x->cols, {x}, [x, s](Tensor& self) {
    if (!x->grad_path) return;
    x->ensure_grad();
    for (size_t i = 0; i < self.size(); ++i) x->grad[i] += self.grad[i] * s;
  });
  for (size_t i = 0; i < x->size(); ++i) y->val[i] = x->val[i] * s;
  detail::finite_check(y, "scale");
  return y;
}

// column concat: (B x c1), (B x c2) -> (B x c1+c2)
inline TensorPtr concat(const TensorPtr& a, const TensorPtr& b) {
  if (a->rows != b->rows) detail::shape_mismatch("concat", *a, *b);
  int B = a->rows, c1 = a->cols, c2 = b->cols;
  auto y = detail::make_node(B, c1 + c2, {a, b}, [a, b, B, c1, c2](Tensor& self) {
    if (a->grad_path) a->ensure_grad();
    if (b->grad_path) b->ensure_grad();
    for (int r = 0; r < B; ++r) {
      const float* g = self.grad.data() + size_t(r) * (c1 + c2);
      if (a->grad_path) kernels::axpy(1.0f, g, a->grad.data() + size_t(r) * c1, c1);
      if (b->grad_path) kernels::axpy(1.0f, g + c1, b->grad.data() + size_t(r) * c2, c2);
    }
  });
  for (int r = 0; r < B; ++r) {
    std::memcpy(y->data() + size_t(r) * (c1 + c2), a->data() + size_t(r) * c1,
                sizeof(float) * c1);
    std::memcpy(y->data() + size_t(r) * (c1 + c2) + c1, b->data() + size_t(r) * c2,
                sizeof(float) * c2);
  }
  return y;
}

// each row repeated `times` times consecutively: (B x C) -> (B*times x C)
inline TensorPtr repeat_rows(const TensorPtr& x, int times) {
  if (times < 1) throw std::invalid_argument("repeat_rows: times must be >= 1");
  int B = x->rows, C = x->cols;
  auto y = detail::make_node(B * times, C, {x}, [x, B, C, times](Tensor& self) {
    if (!x->grad_path) return;
    x->ensure_grad();
    for (int r = 0; r < B; ++r)
      for (int t = 0; t < times; ++t)
        kernels::axpy(1.0f, self.grad.data() + (size_t(r) * times + t) * C,
                      x->grad.data() + size_t(r) * C, C);
  });
  for (int r = 0; r < B; ++r)
    for (int t = 0; t < times; ++t)
      std::memcpy(y->data() + (size_t(r) * times + t) * C, x->data() + size_t(r) * C,
                  sizeof(float) * C);
  return y;
}

inline TensorPtr sum_all(const TensorPtr& x) {
  auto y = detail::make_node(1, 1, {x}, [x](Tensor& self) {
    if (!x->grad_path) return;
    x->ensure_grad();
    for (size_t i = 0; i < x->size(); ++i) x->grad[i] += self.grad[0];
  });
  // fixed pairwise-ish order: plain sequential accumulation in f64 would change
  // values; keep f32 sequential so the result is reproducible and cheap
  float acc = 0;
  for (size_t i = 0; i < x->size(); ++i) acc += x->val[i];
  y->val[0] = acc;
  detail::finite_check(y, "sum");
  return y;
}

inline TensorPtr mean_all(const TensorPtr& x) {
  if (x->size() == 0) throw std::invalid_argument("mean_all: empty tensor");
  float inv = 1.0f / float(x->size());
  auto y = detail::make_node(1, 1, {x}, [x, inv](Tensor& self) {
    if (!x->grad_path) return;
    x->ensure_grad();
    float g = self.grad[0] * inv;
    for (size_t i = 0; i < x->size(); ++i) x->grad[i] += g;
  });
  float acc = 0;
  for (size_t i = 0; i < x->size(); ++i) acc += x->val[i];
  y->val[0] = acc * inv;
  detail::finite_check(y, "mean");
  return y;
}

// mean |a - b| over all entries
inline TensorPtr l1_loss(const TensorPtr& pred, const TensorPtr& gt) {
  return mean_all(abs_val(sub(pred, gt)));
}

// points: (B*M x 3) curve batch -> (B x 1) polyline lengths
// sum over m of ||p_m - p_{m-1}||_2 per curve; zero-length segments give
// zero gradient (subgradient convention)
inline TensorPtr curve_length(const TensorPtr& points, int B, int M) {
  if (points->rows != B * M || points->cols != 3)
    throw std::invalid_argument("curve_length: expected (B*M x 3) points");
  auto y = detail::make_node(B, 1, {points}, [points, B, M](Tensor& self) {
    if (!points->grad_path) return;
    points->ensure_grad();
    for (int b = 0; b < B; ++b) {
      const float* p = points->data() + size_t(b) * M * 3;
      float* gp = points->grad.data() + size_t(b) * M * 3;
      float g = self.grad[b];
      for (int m = 1; m < M; ++m) {
        float dx = p[m * 3 + 0] - p[(m - 1) * 3 + 0];
        float dy = p[m * 3 + 1] - p[(m - 1) * 3 + 1];
        float dz = p[m * 3 + 2] - p[(m - 1) * 3 + 2];
        float len = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (len <= 0) continue;
        float s = g / len;
        gp[m * 3 + 0] += s * dx;
        gp[m * 3 + 1] += s * dy;
        gp[m * 3 + 2] += s * dz;
        gp[(m - 1) * 3 + 0] -= s * dx;
        gp[(m - 1) * 3 + 1] -= s * dy;
        gp[(m - 1) * 3 + 2] -= s * dz;
      }
    }
  });
  for (int b = 0; b < B; ++b) {
    const float* p = points->data() + size_t(b) * M * 3;
    float acc = 0;
    for (int m = 1; m < M; ++m) {
      float dx = p[m * 3 + 0] - p[(m - 1) * 3 + 0];
      float dy = p[m * 3 + 1] - p[(m - 1) * 3 + 1];
      float dz = p[m * 3 + 2] - p[(m - 1) * 3 + 2];
      acc += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    y->val[b] = acc;
  }
  detail::finite_check(y, "curve_length");
  return y;
}

}  // namespace ops

// Accumulates d(loss)/d(t) into grad buffers of every tensor on the gradient
// path. Repeated calls without zeroing accumulate.
inline void backward(const TensorPtr& loss) {
  if (loss->rows != 1 || loss->cols != 1)
    throw std::invalid_argument("backward: loss must be a scalar (1x1) tensor");
  // topological order by DFS over parents
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> seen;
  std::vector<std::pair<Tensor*, size_t>> stack;
  stack.push_back({loss.get(), 0});
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Tensor* p = node->parents[idx++].get();
      if (p->grad_path && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss->ensure_grad();
  loss->grad[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor* t = *it;
    if (t->backward_op) {
      t->ensure_grad();
      t->backward_op(*t);
      if (autodiff_state::check_finite())
        for (float g : t->grad)
          if (!std::isfinite(g)) throw std::runtime_error("non-finite gradient in backward");
    }
  }
}

}  // namespace neurogf
