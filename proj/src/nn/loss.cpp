#include "tiq/nn/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "tiq/nn/architectures.hpp"

namespace tiq::nn {

template <typename T>
LossResult<T> mse_loss(const Tensor<T>& outputs, const Tensor<T>& targets) {
  if (!outputs.same_shape(targets)) throw std::invalid_argument("mse_loss: shape mismatch");
  if (outputs.batch < 1) throw std::invalid_argument("mse_loss: empty batch");
  LossResult<T> r;
  r.grad.reshape_like(outputs);
  const double inv_j = 1.0 / outputs.batch;
  double s = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double d = static_cast<double>(outputs.data[i]) - targets.data[i];
    s += d * d;
    r.grad.data[i] = static_cast<T>(2.0 * d * inv_j);
  }
  r.value = s * inv_j;
  return r;
}

template <typename T>
FeatureExtractor<T> FeatureExtractor<T>::random_conv(GridDims dims, int channels, std::uint64_t seed) {
  FeatureExtractor fx;
  auto net = std::make_shared<Network<T>>(make_feature_extractor(dims, channels));
  RandomStream rng(seed);
  fx.params_ = std::make_shared<NetworkParams<T>>(init_params<T>(net->spec(), rng));
  fx.net_ = std::move(net);
  return fx;
}

template <typename T>
Tensor<T> FeatureExtractor<T>::apply(const Tensor<T>& images) const {
  return net_ ? net_->infer(*params_, images) : images;
}

template <typename T>
Tensor<T> FeatureExtractor<T>::apply(const Tensor<T>& images, ForwardCache<T>& cache) const {
  if (!net_) return images;
  NetworkParams<T> p = *params_;
  return net_->forward(p, images, Mode::infer, &cache);
}

template <typename T>
Tensor<T> FeatureExtractor<T>::input_gradient(const ForwardCache<T>& cache, const Tensor<T>& feature_grad) const {
  if (!net_) return feature_grad;
  std::vector<T> unused;
  Tensor<T> gin;
  net_->backward(*params_, cache, net_->layer_count(), feature_grad, unused, &gin);
  return gin;
}

template <typename T>
LossResult<T> perceptual_loss(const Tensor<T>& outputs, const Tensor<T>& targets, const FeatureExtractor<T>& phi) {
  if (!outputs.same_shape(targets)) throw std::invalid_argument("perceptual_loss: shape mismatch");
  if (phi.is_identity()) return mse_loss(outputs, targets);
  ForwardCache<T> cache;
  const Tensor<T> fo = phi.apply(outputs, cache);
  const Tensor<T> ft = phi.apply(targets);
  LossResult<T> feat = mse_loss(fo, ft);
  return {feat.value, phi.input_gradient(cache, feat.grad)};
}

template <typename T>
LossResult<T> bce_with_logits(const Tensor<T>& logits, std::span<const T> labels) {
  if (logits.size() != labels.size() || logits.size() == 0) throw std::invalid_argument("bce_with_logits: size mismatch");
  LossResult<T> r;
  r.grad.reshape_like(logits);
  const double inv_n = 1.0 / static_cast<double>(labels.size());
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double z = logits.data[i];
    const double y = labels[i];
    // log(1 + exp(-|z|)) + max(z, 0) - z y
    s += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - z * y;
    const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    r.grad.data[i] = static_cast<T>((p - y) * inv_n);
  }
  r.value = s * inv_n;
  return r;
}

template LossResult<float> mse_loss<float>(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> mse_loss<double>(const Tensor<double>&, const Tensor<double>&);
template class FeatureExtractor<float>;
template class FeatureExtractor<double>;
template LossResult<float> perceptual_loss<float>(const Tensor<float>&, const Tensor<float>&, const FeatureExtractor<float>&);
template LossResult<double> perceptual_loss<double>(const Tensor<double>&, const Tensor<double>&, const FeatureExtractor<double>&);
template LossResult<float> bce_with_logits<float>(const Tensor<float>&, std::span<const float>);
template LossResult<double> bce_with_logits<double>(const Tensor<double>&, std::span<const double>);

}  // namespace tiq::nn
