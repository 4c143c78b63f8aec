#pragma once

// AdamW with decoupled weight decay:
//   m <- b1*m + (1-b1)*g
//   v <- b2*v + (1-b2)*g^2
//   p <- p - lr*wd*p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)

#include <cmath>
#include <vector>

#include "meder/errors.hpp"
#include "meder/num/tape.hpp"

namespace meder {

struct AdamWConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

template <typename T>
class AdamW {
 public:
  AdamW(std::vector<num::Parameter<T>*> params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    if (!(cfg_.lr >= 0.0)) throw UsageError("adamw: learning rate must be non-negative");
    for (auto* p : params_) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& value = params_[i]->value;
      const auto& grad = params_[i]->grad;
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t k = 0; k < value.size(); ++k) {
        const double g = static_cast<double>(grad[k]);
        m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
        v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m[k] / bc1;
        const double vhat = v[k] / bc2;
        double p = static_cast<double>(value[k]);
        p -= cfg_.lr * cfg_.weight_decay * p;
        p -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        value[k] = static_cast<T>(p);
      }
    }
  }

  std::size_t steps() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  std::vector<num::Parameter<T>*> params_;
  AdamWConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace meder
