#include "tiq/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace tiq::nn {

AdamState::AdamState(std::size_t parameter_count, AdamConfig config)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

template <typename T>
void AdamState::update(std::span<T> params, std::span<const T> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw std::invalid_argument("adam: shape mismatch");
  for (T g : grads)
    if (!std::isfinite(g)) throw std::runtime_error("adam: non-finite gradient");
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] = static_cast<T>(params[i] - config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon));
  }
}

template void AdamState::update<float>(std::span<float>, std::span<const float>);
template void AdamState::update<double>(std::span<double>, std::span<const double>);

}  // namespace tiq::nn
