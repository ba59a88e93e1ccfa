#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lvr/nn/autograd.hpp"

namespace lvr::nn {

template <typename T>
struct Parameter {
  std::string name;
  Var<T> var;
};

template <typename T>
void zero_grads(const std::vector<Parameter<T>>& params) {
  for (const auto& p : params) p.var->zero_grad();
}

enum class OptimizerKind : std::uint8_t { adadelta, adam };

struct AdadeltaConfig {
  double rho = 0.95;
  double epsilon = 1e-6;
  double learning_rate = 1.0;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adadelta or Adam state over a fixed parameter list. Accumulators are
/// allocated once to match the parameter shapes.
template <typename T>
class Optimizer {
 public:
  static Optimizer adadelta(std::vector<Parameter<T>> params, AdadeltaConfig config = {});
  static Optimizer adam(std::vector<Parameter<T>> params, AdamConfig config = {});

  /// Applies one update using each parameter's current grad (a missing grad
  /// counts as zero). Throws NumericError naming the first parameter with a
  /// non-finite gradient, before modifying anything.
  void step();

  OptimizerKind kind() const noexcept { return kind_; }
  std::uint64_t step_count() const noexcept { return steps_; }
  const std::vector<Parameter<T>>& params() const noexcept { return params_; }

  /// First accumulator per parameter (E[g^2] for Adadelta, m for Adam).
  const std::vector<std::vector<T>>& first_moments() const noexcept { return acc1_; }
  /// Second accumulator per parameter (E[dx^2] for Adadelta, v for Adam).
  const std::vector<std::vector<T>>& second_moments() const noexcept { return acc2_; }

 private:
  Optimizer(OptimizerKind kind, std::vector<Parameter<T>> params);

  OptimizerKind kind_;
  std::vector<Parameter<T>> params_;
  std::vector<std::vector<T>> acc1_;
  std::vector<std::vector<T>> acc2_;
  AdadeltaConfig adadelta_{};
  AdamConfig adam_{};
  std::uint64_t steps_ = 0;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace lvr::nn
