#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tiq::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState(std::size_t parameter_count, AdamConfig config = {});

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t step() const noexcept { return step_; }

  /// One bias-corrected Adam update. Throws on non-finite gradients.
  template <typename T>
  void update(std::span<T> params, std::span<const T> grads);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace tiq::nn
