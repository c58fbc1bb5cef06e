#pragma once

#include <memory>

#include "tiq/nn/network.hpp"

namespace tiq::nn {

/// Loss value with its gradient w.r.t. the network output.
template <typename T>
struct LossResult {
  double value = 0.0;
  Tensor<T> grad;
};

/// (1/J) sum_j ||out_j - target_j||^2
template <typename T>
LossResult<T> mse_loss(const Tensor<T>& outputs, const Tensor<T>& targets);

/// Frozen feature map phi. An extractor with no network is the identity.
template <typename T>
class FeatureExtractor {
 public:
  static FeatureExtractor identity() { return FeatureExtractor(); }
  /// Seeded, randomly initialized two-layer Conv+ReLU stack.
  static FeatureExtractor random_conv(GridDims dims, int channels, std::uint64_t seed);

  bool is_identity() const noexcept { return !net_; }
  int channels() const noexcept { return net_ ? net_->spec().output_channels() : 1; }
  Tensor<T> apply(const Tensor<T>& images) const;
  /// Features of `images` plus the cache needed for a backward pass.
  Tensor<T> apply(const Tensor<T>& images, ForwardCache<T>& cache) const;
  Tensor<T> input_gradient(const ForwardCache<T>& cache, const Tensor<T>& feature_grad) const;

 private:
  FeatureExtractor() = default;
  std::shared_ptr<const Network<T>> net_;
  std::shared_ptr<NetworkParams<T>> params_;
};

/// (1/J) sum_j ||phi(out_j) - phi(target_j)||^2
template <typename T>
LossResult<T> perceptual_loss(const Tensor<T>& outputs, const Tensor<T>& targets, const FeatureExtractor<T>& phi);

/// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels; the
/// gradient is taken w.r.t. the logits.
template <typename T>
LossResult<T> bce_with_logits(const Tensor<T>& logits, std::span<const T> labels);

}  // namespace tiq::nn
