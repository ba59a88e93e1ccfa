#include "lvr/nn/optim.hpp"

#include <cmath>

#include "lvr/error.hpp"

namespace lvr::nn {

template <typename T>
Optimizer<T>::Optimizer(OptimizerKind kind, std::vector<Parameter<T>> params)
    : kind_(kind), params_(std::move(params)) {
  acc1_.reserve(params_.size());
  acc2_.reserve(params_.size());
  for (const auto& p : params_) {
    acc1_.emplace_back(p.var->value.size(), T{0});
    acc2_.emplace_back(p.var->value.size(), T{0});
  }
}

template <typename T>
Optimizer<T> Optimizer<T>::adadelta(std::vector<Parameter<T>> params, AdadeltaConfig config) {
  Optimizer opt(OptimizerKind::adadelta, std::move(params));
  opt.adadelta_ = config;
  return opt;
}

template <typename T>
Optimizer<T> Optimizer<T>::adam(std::vector<Parameter<T>> params, AdamConfig config) {
  Optimizer opt(OptimizerKind::adam, std::move(params));
  opt.adam_ = config;
  return opt;
}

template <typename T>
void Optimizer<T>::step() {
  for (const auto& p : params_) {
    if (!p.var->has_grad()) continue;
    for (T g : p.var->grad.data()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + p.name + "'");
    }
  }
  ++steps_;

  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& node = *params_[k].var;
    if (!node.has_grad()) continue;
    auto value = node.value.data();
    auto grad = node.grad.data();
    auto& a1 = acc1_[k];
    auto& a2 = acc2_[k];

    if (kind_ == OptimizerKind::adadelta) {
      const T rho = static_cast<T>(adadelta_.rho);
      const T eps = static_cast<T>(adadelta_.epsilon);
      const T lr = static_cast<T>(adadelta_.learning_rate);
      for (std::size_t i = 0; i < value.size(); ++i) {
        const T g = grad[i];
        a1[i] = rho * a1[i] + (T{1} - rho) * g * g;
        const T delta = -std::sqrt(a2[i] + eps) / std::sqrt(a1[i] + eps) * g;
        a2[i] = rho * a2[i] + (T{1} - rho) * delta * delta;
        if (lr != T{0}) value[i] += lr * delta;
      }
    } else {
      const T b1 = static_cast<T>(adam_.beta1);
      const T b2 = static_cast<T>(adam_.beta2);
      const T eps = static_cast<T>(adam_.epsilon);
      const T lr = static_cast<T>(adam_.learning_rate);
      const T c1 = T{1} - static_cast<T>(std::pow(adam_.beta1, static_cast<double>(steps_)));
      const T c2 = T{1} - static_cast<T>(std::pow(adam_.beta2, static_cast<double>(steps_)));
      for (std::size_t i = 0; i < value.size(); ++i) {
        const T g = grad[i];
        a1[i] = b1 * a1[i] + (T{1} - b1) * g;
        a2[i] = b2 * a2[i] + (T{1} - b2) * g * g;
        const T m_hat = a1[i] / c1;
        const T v_hat = a2[i] / c2;
        if (lr != T{0}) value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      }
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace lvr::nn
