#pragma once

// Independent f64 reference implementations and a central finite-difference
// gradient oracle. Everything here recomputes forward passes with plain
// loops in double precision; none of it calls the library's kernels.

#include <functional>
#include <vector>

#include "neurogf/tensor.hpp"

namespace fd {

using Mat = std::vector<double>;  // row-major

inline Mat to_f64(const neurogf::TensorPtr& t) {
  Mat m(t->size());
  for (size_t i = 0; i < m.size(); ++i) m[i] = double(t->val[i]);
  return m;
}

// --- reference forwards -----------------------------------------------------

inline Mat ref_linear(const Mat& x, const Mat& w, const Mat& b, int B, int in, int out) {
  Mat y(size_t(B) * out, 0.0);
  for (int r = 0; r < B; ++r)
    for (int j = 0; j < out; ++j) {
      double acc = b[j];
      for (int i = 0; i < in; ++i) acc += x[size_t(r) * in + i] * w[size_t(j) * in + i];
      y[size_t(r) * out + j] = acc;
    }
  return y;
}

inline Mat ref_relu(Mat x) {
  for (auto& v : x) v = v > 0 ? v : 0.0;
  return x;
}

inline Mat ref_softplus(Mat x) {
  for (auto& v : x) v = v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  return x;
}

inline Mat ref_abs(Mat x) {
  for (auto& v : x) v = std::abs(v);
  return x;
}

inline double ref_mean(const Mat& x) {
  double acc = 0;
  for (double v : x) acc += v;
  return acc / double(x.size());
}

inline double ref_l1(const Mat& a, const Mat& b) {
  double acc = 0;
  for (size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc / double(a.size());
}

inline Mat ref_curve_length(const Mat& pts, int B, int M) {
  Mat len(B, 0.0);
  for (int b = 0; b < B; ++b) {
    for (int m = 1; m < M; ++m) {
      const double* p = &pts[(size_t(b) * M + m) * 3];
      const double* q = &pts[(size_t(b) * M + m - 1) * 3];
      double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
      len[b] += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
  }
  return len;
}

// --- finite-difference oracle -----------------------------------------------

// loss as a function of the flattened values of each differentiated input
using RefLoss = std::function<double(const std::vector<Mat>&)>;

struct FdReport {
  double max_abs_diff = 0;
  double fd_inf_norm = 0;
  double rel_error() const { return max_abs_diff / (fd_inf_norm + 1e-300); }
};

// central differences with h = 1e-3, f64 recompute
inline FdReport compare_gradients(const std::vector<neurogf::TensorPtr>& inputs,
                                  const RefLoss& ref, double h = 1e-3) {
  std::vector<Mat> vals;
  vals.reserve(inputs.size());
  for (const auto& t : inputs) vals.push_back(to_f64(t));

  FdReport rep;
  for (size_t t = 0; t < inputs.size(); ++t) {
    for (size_t i = 0; i < vals[t].size(); ++i) {
      double keep = vals[t][i];
      vals[t][i] = keep + h;
      double up = ref(vals);
      vals[t][i] = keep - h;
      double dn = ref(vals);
      vals[t][i] = keep;
      double fd = (up - dn) / (2.0 * h);
      double ad = inputs[t]->grad.size() ? double(inputs[t]->grad[i]) : 0.0;
      rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(ad - fd));
      rep.fd_inf_norm = std::max(rep.fd_inf_norm, std::abs(fd));
    }
  }
  return rep;
}

// as above, but only over a subset of (tensor, element) positions
inline FdReport compare_gradients_sampled(const std::vector<neurogf::TensorPtr>& inputs,
                                          const RefLoss& ref, neurogf::Rng& rng,
                                          size_t per_tensor, double h = 1e-3) {
  std::vector<Mat> vals;
  vals.reserve(inputs.size());
  for (const auto& t : inputs) vals.push_back(to_f64(t));

  FdReport rep;
  for (size_t t = 0; t < inputs.size(); ++t) {
    for (size_t pick = 0; pick < std::min(per_tensor, vals[t].size()); ++pick) {
      size_t i = rng.below(vals[t].size());
      double keep = vals[t][i];
      vals[t][i] = keep + h;
      double up = ref(vals);
      vals[t][i] = keep - h;
      double dn = ref(vals);
      vals[t][i] = keep;
      double fd = (up - dn) / (2.0 * h);
      double ad = inputs[t]->grad.size() ? double(inputs[t]->grad[i]) : 0.0;
      rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(ad - fd));
      rep.fd_inf_norm = std::max(rep.fd_inf_norm, std::abs(fd));
    }
  }
  return rep;
}

// random values bounded away from zero (so relu/abs kinks sit farther than h)
inline void fill_with_margin(neurogf::TensorPtr t, neurogf::Rng& rng, double margin = 5e-3,
                             double scale = 1.0) {
  for (auto& v : t->val) {
    double u = rng.uniform(margin, scale);
    v = float(rng.uniform() < 0.5 ? -u : u);
  }
}

}  // namespace fd
