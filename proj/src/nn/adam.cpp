#include "saz/nn/adam.hpp"

#include <cmath>

#include "saz/errors.hpp"

namespace saz::nn {

template <typename T>
void Adam<T>::step(const std::vector<Parameter<T>*>& params) {
  for (const auto* p : params) {
    if (p->trainable && p->grad.size() > 0 && !p->grad.allFinite())
      throw TrainingError("non-finite gradient in parameter '" + p->name + "'");
  }
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (const auto* p : params) {
      m_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
  const T step_size = static_cast<T>(cfg_.lr / bc1);
  const T inv_bc2 = static_cast<T>(1.0 / bc2);
  const T eps = static_cast<T>(cfg_.eps);
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = *params[i];
    if (!p.trainable || p.grad.size() == 0) continue;
    if (m_[i].rows() != p.value.rows() || m_[i].cols() != p.value.cols())
      throw ShapeError("optimizer state does not match parameter '" + p.name + "'");
    m_[i] = b1 * m_[i] + (T(1) - b1) * p.grad;
    v_[i] = b2 * v_[i] + (T(1) - b2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= step_size * m_[i].array() / ((v_[i].array() * inv_bc2).sqrt() + eps);
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace saz::nn
