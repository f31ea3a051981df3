#pragma once

#include "neurogf/tensor.hpp"

namespace neurogf {

inline double cosine_lr(int epoch, int total, double lr_max, double lr_min) {
  if (total <= 0) return lr_min;
  if (epoch < 0 || epoch > total) throw std::invalid_argument("cosine_lr: epoch out of range");
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(3.14159265358979323846 * epoch / total));
}

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

// AdamW with decoupled weight decay:
//   p -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
class AdamW {
 public:
  using Hyper = AdamWHyper;

  explicit AdamW(std::vector<TensorPtr> params, Hyper hp = Hyper())
      : params_(std::move(params)), hp_(hp) {
    slots_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      slots_[i].m.assign(params_[i]->size(), 0.0f);
      slots_[i].v.assign(params_[i]->size(), 0.0f);
    }
  }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

  void step(double lr) {
    ++t_;
    double bc1 = 1.0 - std::pow(hp_.beta1, double(t_));
    double bc2 = 1.0 - std::pow(hp_.beta2, double(t_));
    float b1 = float(hp_.beta1), b2 = float(hp_.beta2);
    for (size_t i = 0; i < params_.size(); ++i) {
      Tensor& p = *params_[i];
      if (p.grad.size() != p.size()) continue;  // never touched by backward
      auto& s = slots_[i];
      for (size_t j = 0; j < p.size(); ++j) {
        float g = p.grad[j];
        s.m[j] = b1 * s.m[j] + (1.0f - b1) * g;
        s.v[j] = b2 * s.v[j] + (1.0f - b2) * g * g;
        double mh = double(s.m[j]) / bc1;
        double vh = double(s.v[j]) / bc2;
        p.val[j] = float(double(p.val[j]) -
                         lr * (mh / (std::sqrt(vh) + hp_.eps) + hp_.weight_decay * p.val[j]));
      }
    }
  }

  int64_t step_count() const { return t_; }
  const Hyper& hyper() const { return hp_; }

 private:
  struct Slot {
    std::vector<float> m, v;
  };
  std::vector<TensorPtr> params_;
  std::vector<Slot> slots_;
  Hyper hp_;
  int64_t t_ = 0;
};

}  // namespace neurogf
