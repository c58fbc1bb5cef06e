#pragma once

#include <span>
#include <string>
#include <vector>

#include "tiq/nn/tensor.hpp"

namespace tiq::nn {

enum class LayerKind { conv, relu, batchnorm, add_skip, dense, sigmoid, scale };

const char* to_string(LayerKind kind);

/// One primitive layer. Convolutions are stride-1, zero "same"-padded
/// cross-correlations with an odd square kernel.
struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 3;
  bool bias = false;
  int skip_from = -1;   // add_skip: index of the layer whose output is added
  double factor = 1.0;  // scale: fixed multiplier

  static LayerSpec conv(int in, int out, int kernel = 3, bool bias = true) {
    return {LayerKind::conv, in, out, kernel, bias, -1, 1.0};
  }
  static LayerSpec relu(int channels) { return {LayerKind::relu, channels, channels, 0, false, -1, 1.0}; }
  static LayerSpec batchnorm(int channels) { return {LayerKind::batchnorm, channels, channels, 0, false, -1, 1.0}; }
  static LayerSpec add_skip(int channels, int from) { return {LayerKind::add_skip, channels, channels, 0, false, from, 1.0}; }
  static LayerSpec dense(int in_channels) { return {LayerKind::dense, in_channels, 1, 0, true, -1, 1.0}; }
  static LayerSpec sigmoid() { return {LayerKind::sigmoid, 1, 1, 0, false, -1, 1.0}; }
  static LayerSpec scale(int channels, double f) { return {LayerKind::scale, channels, channels, 0, false, -1, f}; }

  std::string describe() const;
};

// ---- convolution -------------------------------------------------------

/// weight layout: [out][in][ky][kx]; bias may be empty.
template <typename T>
void conv2d_forward(const Tensor<T>& in, std::span<const T> weight, std::span<const T> bias, int out_channels,
                    int kernel, Tensor<T>& out);

/// Writes (not accumulates) grad_weight/grad_bias; grad_in may be null.
template <typename T>
void conv2d_backward(const Tensor<T>& in, std::span<const T> weight, int out_channels, int kernel,
                     const Tensor<T>& grad_out, Tensor<T>* grad_in, std::span<T> grad_weight, std::span<T> grad_bias);

// ---- pointwise ---------------------------------------------------------

template <typename T>
void relu_forward(const Tensor<T>& in, Tensor<T>& out);
template <typename T>
void relu_backward(const Tensor<T>& in, const Tensor<T>& grad_out, Tensor<T>& grad_in);

template <typename T>
void sigmoid_forward(const Tensor<T>& in, Tensor<T>& out);
template <typename T>
void sigmoid_backward(const Tensor<T>& out, const Tensor<T>& grad_out, Tensor<T>& grad_in);

template <typename T>
void scale_forward(const Tensor<T>& in, T factor, Tensor<T>& out);

// ---- batch normalization -----------------------------------------------

inline constexpr double kBatchNormEpsilon = 1e-3;

template <typename T>
struct BatchNormCache {
  std::vector<T> mean;
  std::vector<T> inv_std;
};

/// Normalizes each channel with its batch statistics and records them.
template <typename T>
void batchnorm_forward_train(const Tensor<T>& in, std::span<const T> gamma, std::span<const T> beta, Tensor<T>& out,
                             BatchNormCache<T>& cache);
template <typename T>
void batchnorm_forward_infer(const Tensor<T>& in, std::span<const T> gamma, std::span<const T> beta,
                             std::span<const T> running_mean, std::span<const T> running_var, Tensor<T>& out);
template <typename T>
void batchnorm_backward(const Tensor<T>& in, const BatchNormCache<T>& cache, std::span<const T> gamma,
                        const Tensor<T>& grad_out, Tensor<T>& grad_in, std::span<T> grad_gamma, std::span<T> grad_beta);

// ---- dense score head --------------------------------------------------

/// Flattens each sample's C*H*W features and maps them to one scalar.
template <typename T>
void dense_forward(const Tensor<T>& in, std::span<const T> weight, T bias, Tensor<T>& out);
template <typename T>
void dense_backward(const Tensor<T>& in, std::span<const T> weight, const Tensor<T>& grad_out, Tensor<T>& grad_in,
                    std::span<T> grad_weight, T& grad_bias);

}  // namespace tiq::nn
