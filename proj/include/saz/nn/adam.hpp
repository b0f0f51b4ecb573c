#pragma once

#include <cstdint>
#include <vector>

#include "saz/nn/tape.hpp"

namespace saz::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // One update of every trainable parameter from its grad. Throws
  // TrainingError naming the first parameter with a non-finite gradient;
  // nothing is modified in that case.
  void step(const std::vector<Parameter<T>*>& params);

  int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

  // Moment estimates, index-aligned with the parameter list of step().
  std::vector<Matrix<T>>& first_moments() { return m_; }
  std::vector<Matrix<T>>& second_moments() { return v_; }
  const std::vector<Matrix<T>>& first_moments() const { return m_; }
  const std::vector<Matrix<T>>& second_moments() const { return v_; }
  void set_steps(int64_t steps) { steps_ = steps; }

 private:
  AdamConfig cfg_;
  int64_t steps_ = 0;
  std::vector<Matrix<T>> m_, v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace saz::nn
