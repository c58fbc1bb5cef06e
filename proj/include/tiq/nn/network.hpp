#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tiq/image.hpp"
#include "tiq/nn/layers.hpp"
#include "tiq/nn/tensor.hpp"
#include "tiq/random.hpp"

namespace tiq::nn {

enum class Architecture { identity, linear_denoiser, cnn_denoiser, resnet_denoiser, cnn_classifier, feature_extractor };

const char* to_string(Architecture arch);

struct NetworkSpec {
  Architecture arch = Architecture::identity;
  int depth = 0;
  GridDims input{};
  std::vector<LayerSpec> layers;

  bool is_denoiser() const noexcept;
  bool is_classifier() const noexcept { return arch == Architecture::cnn_classifier; }
  /// Channel count produced by the final layer.
  int output_channels() const;
  /// Throws std::invalid_argument if the channel chain or skip topology is inconsistent.
  void validate() const;
  std::string describe() const;
  std::uint64_t fingerprint() const;
};

/// Offsets of each layer's parameters inside the flat parameter vector
/// (trainable) and the flat state vector (batch-norm running statistics).
struct LayerSlots {
  std::size_t weight = 0, weight_count = 0;
  std::size_t bias = 0, bias_count = 0;
  std::size_t state = 0, state_count = 0;
};

struct ParamLayout {
  std::vector<LayerSlots> slots;
  std::size_t parameter_count = 0;
  std::size_t state_count = 0;
};

ParamLayout make_layout(const NetworkSpec& spec);

/// Trainable parameters and batch-norm running statistics. For a batch-norm
/// layer the weight slot holds gamma and the bias slot beta; its state slot
/// holds running mean followed by running variance.
template <typename T>
struct NetworkParams {
  std::vector<T> values;
  std::vector<T> state;

  template <typename U>
  NetworkParams<U> cast() const {
    return {std::vector<U>(values.begin(), values.end()), std::vector<U>(state.begin(), state.end())};
  }
};

/// He-style centered uniform initialization, U(-sqrt(6/fan_in), sqrt(6/fan_in)),
/// zero biases, unit batch-norm scale.
template <typename T>
NetworkParams<T> init_params(const NetworkSpec& spec, RandomStream& rng);

enum class Mode { train, infer };

template <typename T>
struct ForwardCache {
  std::vector<Tensor<T>> acts;  // acts[0] is the input, acts[i + 1] the output of layer i
  std::vector<BatchNormCache<T>> batchnorm;
};

inline constexpr double kBatchNormMomentum = 0.9;

template <typename T>
class Network {
 public:
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const noexcept { return spec_; }
  const ParamLayout& layout() const noexcept { return layout_; }
  std::size_t layer_count() const noexcept { return spec_.layers.size(); }

  /// Train mode normalizes with batch statistics and updates the running
  /// statistics in `params.state`; infer mode is a fixed map.
  Tensor<T> forward(NetworkParams<T>& params, const Tensor<T>& input, Mode mode, ForwardCache<T>* cache = nullptr) const;
  Tensor<T> infer(const NetworkParams<T>& params, const Tensor<T>& input) const;
  /// Output of layers [0, count) only.
  Tensor<T> infer_prefix(const NetworkParams<T>& params, const Tensor<T>& input, std::size_t count) const;

  /// Back-propagates `grad`, the loss gradient w.r.t. cache.acts[from], down
  /// to the input. `param_grads` is resized and overwritten; `input_grad` is optional.
  void backward(const NetworkParams<T>& params, const ForwardCache<T>& cache, std::size_t from, const Tensor<T>& grad,
                std::vector<T>& param_grads, Tensor<T>* input_grad = nullptr) const;

 private:
  Tensor<T> run(const NetworkParams<T>* params_const, NetworkParams<T>* params_mut, const Tensor<T>& input, Mode mode,
                ForwardCache<T>* cache, std::size_t count) const;

  NetworkSpec spec_;
  ParamLayout layout_;
};

}  // namespace tiq::nn
