#include "tiq/nn/network.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tiq/binary_io.hpp"

namespace tiq::nn {

const char* to_string(Architecture arch) {
  switch (arch) {
    case Architecture::identity: return "identity";
    case Architecture::linear_denoiser: return "linear_denoiser";
    case Architecture::cnn_denoiser: return "cnn_denoiser";
    case Architecture::resnet_denoiser: return "resnet_denoiser";
    case Architecture::cnn_classifier: return "cnn_classifier";
    case Architecture::feature_extractor: return "feature_extractor";
  }
  return "?";
}

bool NetworkSpec::is_denoiser() const noexcept {
  return arch == Architecture::identity || arch == Architecture::linear_denoiser || arch == Architecture::cnn_denoiser ||
         arch == Architecture::resnet_denoiser;
}

int NetworkSpec::output_channels() const {
  int c = 1;
  for (const auto& l : layers) c = l.out_channels;
  return c;
}

void NetworkSpec::validate() const {
  if (input.height < 1 || input.width < 1) throw std::invalid_argument("NetworkSpec: input dims must be positive");
  std::vector<int> out_ch(layers.size());
  std::vector<bool> out_flat(layers.size());
  int channels = 1;
  bool flat = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.in_channels != channels) throw std::invalid_argument("NetworkSpec: channel chain broken at layer " + std::to_string(i));
    switch (l.kind) {
      case LayerKind::conv:
        if (flat) throw std::invalid_argument("NetworkSpec: convolution after dense head");
        if (l.out_channels < 1 || l.kernel < 1 || l.kernel % 2 == 0)
          throw std::invalid_argument("NetworkSpec: invalid conv layer " + std::to_string(i));
        break;
      case LayerKind::add_skip:
        if (l.skip_from < 0 || static_cast<std::size_t>(l.skip_from) >= i)
          throw std::invalid_argument("NetworkSpec: skip source must precede its target");
        if (out_ch[l.skip_from] != channels || out_flat[l.skip_from] != flat)
          throw std::invalid_argument("NetworkSpec: skip source shape mismatch");
        break;
      case LayerKind::dense:
        if (flat) throw std::invalid_argument("NetworkSpec: repeated dense head");
        flat = true;
        break;
      case LayerKind::sigmoid:
      case LayerKind::relu:
      case LayerKind::batchnorm:
      case LayerKind::scale:
        if (l.out_channels != l.in_channels) throw std::invalid_argument("NetworkSpec: pointwise layer changes channels");
        break;
    }
    channels = l.out_channels;
    out_ch[i] = channels;
    out_flat[i] = flat;
  }
  if (is_denoiser() && (channels != 1 || flat))
    throw std::invalid_argument("NetworkSpec: denoiser output must be a single-channel image");
  if (arch == Architecture::linear_denoiser)
    for (const auto& l : layers)
      if (l.kind != LayerKind::conv && l.kind != LayerKind::scale)
        throw std::invalid_argument("NetworkSpec: linear denoiser may only contain convolutions");
  if (is_classifier() && (layers.empty() || layers.back().kind != LayerKind::sigmoid || !flat))
    throw std::invalid_argument("NetworkSpec: classifier must end in dense + sigmoid");
}

std::string NetworkSpec::describe() const {
  std::ostringstream os;
  os << to_string(arch) << " depth=" << depth << " input=" << input.height << 'x' << input.width << " [";
  for (std::size_t i = 0; i < layers.size(); ++i) os << (i ? "," : "") << layers[i].describe();
  os << ']';
  return os.str();
}

std::uint64_t NetworkSpec::fingerprint() const { return fnv1a64(describe()); }

ParamLayout make_layout(const NetworkSpec& spec) {
  ParamLayout layout;
  layout.slots.resize(spec.layers.size());
  std::size_t p = 0, s = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    LayerSlots& slot = layout.slots[i];
    slot.weight = slot.bias = p;
    slot.state = s;
    switch (l.kind) {
      case LayerKind::conv:
        slot.weight_count = static_cast<std::size_t>(l.out_channels) * l.in_channels * l.kernel * l.kernel;
        slot.bias_count = l.bias ? l.out_channels : 0;
        break;
      case LayerKind::batchnorm:
        slot.weight_count = slot.bias_count = l.in_channels;
        slot.state_count = 2 * static_cast<std::size_t>(l.in_channels);
        break;
      case LayerKind::dense:
        slot.weight_count = static_cast<std::size_t>(l.in_channels) * spec.input.pixels();
        slot.bias_count = 1;
        break;
      default: break;
    }
    slot.bias = slot.weight + slot.weight_count;
    p = slot.bias + slot.bias_count;
    s += slot.state_count;
  }
  layout.parameter_count = p;
  layout.state_count = s;
  return layout;
}

template <typename T>
NetworkParams<T> init_params(const NetworkSpec& spec, RandomStream& rng) {
  spec.validate();
  const ParamLayout layout = make_layout(spec);
  NetworkParams<T> params{std::vector<T>(layout.parameter_count, T(0)), std::vector<T>(layout.state_count, T(0))};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const LayerSlots& slot = layout.slots[i];
    double fan_in = 0.0;
    if (l.kind == LayerKind::conv) fan_in = static_cast<double>(l.in_channels) * l.kernel * l.kernel;
    if (l.kind == LayerKind::dense) fan_in = static_cast<double>(slot.weight_count);
    if (fan_in > 0.0) {
      const double bound = std::sqrt(6.0 / fan_in);
      for (std::size_t k = 0; k < slot.weight_count; ++k) params.values[slot.weight + k] = static_cast<T>(rng.uniform(-bound, bound));
    }
    if (l.kind == LayerKind::batchnorm) {
      for (std::size_t k = 0; k < slot.weight_count; ++k) params.values[slot.weight + k] = T(1);
      for (int c = 0; c < l.in_channels; ++c) params.state[slot.state + l.in_channels + c] = T(1);
    }
  }
  return params;
}

template <typename T>
Network<T>::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  layout_ = make_layout(spec_);
}

template <typename T>
Tensor<T> Network<T>::forward(NetworkParams<T>& params, const Tensor<T>& input, Mode mode, ForwardCache<T>* cache) const {
  return run(&params, &params, input, mode, cache, spec_.layers.size());
}

template <typename T>
Tensor<T> Network<T>::infer(const NetworkParams<T>& params, const Tensor<T>& input) const {
  return run(&params, nullptr, input, Mode::infer, nullptr, spec_.layers.size());
}

template <typename T>
Tensor<T> Network<T>::infer_prefix(const NetworkParams<T>& params, const Tensor<T>& input, std::size_t count) const {
  if (count > spec_.layers.size()) throw std::out_of_range("infer_prefix: layer count out of range");
  return run(&params, nullptr, input, Mode::infer, nullptr, count);
}

template <typename T>
Tensor<T> Network<T>::run(const NetworkParams<T>* pc, NetworkParams<T>* pm, const Tensor<T>& input, Mode mode,
                          ForwardCache<T>* cache, std::size_t count) const {
  if (pc->values.size() != layout_.parameter_count || pc->state.size() != layout_.state_count)
    throw std::invalid_argument("Network: parameter vector does not match the network description");
  if (input.channels != 1 || input.height != spec_.input.height || input.width != spec_.input.width)
    throw std::invalid_argument("Network: input shape does not match the network description");
  if (mode == Mode::train && pm == nullptr) throw std::logic_error("Network: train mode needs mutable parameters");

  const std::size_t n_layers = count;
  std::vector<bool> keep(n_layers, cache != nullptr);
  for (std::size_t i = 0; i < n_layers; ++i)
    if (spec_.layers[i].kind == LayerKind::add_skip) keep[spec_.layers[i].skip_from] = true;

  std::vector<Tensor<T>> saved(n_layers);
  if (cache) {
    cache->acts.assign(n_layers + 1, Tensor<T>{});
    cache->batchnorm.assign(n_layers, BatchNormCache<T>{});
    cache->acts[0] = input;
  }
  Tensor<T> cur = input;
  Tensor<T> next;
  const auto& v = pc->values;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const LayerSpec& l = spec_.layers[i];
    const LayerSlots& s = layout_.slots[i];
    const std::span<const T> w(v.data() + s.weight, s.weight_count);
    const std::span<const T> b(v.data() + s.bias, s.bias_count);
    switch (l.kind) {
      case LayerKind::conv: conv2d_forward(cur, w, b, l.out_channels, l.kernel, next); break;
      case LayerKind::relu: relu_forward(cur, next); break;
      case LayerKind::sigmoid: sigmoid_forward(cur, next); break;
      case LayerKind::scale: scale_forward(cur, static_cast<T>(l.factor), next); break;
      case LayerKind::dense: dense_forward(cur, w, b[0], next); break;
      case LayerKind::add_skip: {
        const Tensor<T>& src = cache ? cache->acts[l.skip_from + 1] : saved[l.skip_from];
        next = cur;
        for (std::size_t k = 0; k < next.size(); ++k) next.data[k] += src.data[k];
        break;
      }
      case LayerKind::batchnorm: {
        const std::span<const T> rmean(pc->state.data() + s.state, l.in_channels);
        const std::span<const T> rvar(pc->state.data() + s.state + l.in_channels, l.in_channels);
        if (mode == Mode::infer) {
          batchnorm_forward_infer(cur, w, b, rmean, rvar, next);
        } else {
          BatchNormCache<T> local;
          BatchNormCache<T>& bn = cache ? cache->batchnorm[i] : local;
          batchnorm_forward_train(cur, w, b, next, bn);
          const double m = static_cast<double>(cur.channel_size());
          for (int c = 0; c < l.in_channels; ++c) {
            const double inv = bn.inv_std[c];
            const double var = std::max(0.0, 1.0 / (inv * inv) - kBatchNormEpsilon) * (m > 1 ? m / (m - 1) : 1.0);
            T& rm = pm->state[s.state + c];
            T& rv = pm->state[s.state + l.in_channels + c];
            rm = static_cast<T>(kBatchNormMomentum * rm + (1 - kBatchNormMomentum) * bn.mean[c]);
            rv = static_cast<T>(kBatchNormMomentum * rv + (1 - kBatchNormMomentum) * var);
          }
        }
        break;
      }
    }
    if (cache) {
      cache->acts[i + 1] = next;
    } else if (keep[i]) {
      saved[i] = next;
    }
    std::swap(cur, next);
  }
  return cur;
}

namespace {

template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  if (dst.data.empty()) {
    dst = src;
    return;
  }
  for (std::size_t k = 0; k < dst.size(); ++k) dst.data[k] += src.data[k];
}

}  // namespace

template <typename T>
void Network<T>::backward(const NetworkParams<T>& params, const ForwardCache<T>& cache, std::size_t from,
                          const Tensor<T>& grad, std::vector<T>& param_grads, Tensor<T>* input_grad) const {
  if (from >= cache.acts.size()) throw std::invalid_argument("Network::backward: missing forward cache");
  if (!grad.same_shape(cache.acts[from])) throw std::invalid_argument("Network::backward: gradient shape mismatch");
  param_grads.assign(layout_.parameter_count, T(0));
  std::vector<Tensor<T>> grads(from + 1);
  grads[from] = grad;
  Tensor<T> gi;
  const auto& v = params.values;
  for (std::size_t i = from; i-- > 0;) {
    Tensor<T>& g = grads[i + 1];
    if (g.data.empty()) continue;
    const LayerSpec& l = spec_.layers[i];
    const LayerSlots& s = layout_.slots[i];
    const Tensor<T>& in = cache.acts[i];
    const std::span<const T> w(v.data() + s.weight, s.weight_count);
    const std::span<T> gw(param_grads.data() + s.weight, s.weight_count);
    const std::span<T> gb(param_grads.data() + s.bias, s.bias_count);
    const bool need_input = i > 0 || input_grad != nullptr;
    switch (l.kind) {
      case LayerKind::conv:
        conv2d_backward(in, w, l.out_channels, l.kernel, g, need_input ? &gi : nullptr, gw, gb);
        break;
      case LayerKind::relu: relu_backward(in, g, gi); break;
      case LayerKind::sigmoid: sigmoid_backward(cache.acts[i + 1], g, gi); break;
      case LayerKind::scale: scale_forward(g, static_cast<T>(l.factor), gi); break;
      case LayerKind::dense: dense_backward(in, w, g, gi, gw, gb[0]); break;
      case LayerKind::batchnorm:
        if (cache.batchnorm.size() <= i || cache.batchnorm[i].mean.empty())
          throw std::invalid_argument("Network::backward: batch-norm cache missing (forward must run in train mode)");
        batchnorm_backward(in, cache.batchnorm[i], w, g, gi, gw, gb);
        break;
      case LayerKind::add_skip:
        accumulate(grads[l.skip_from + 1], g);
        gi = g;
        break;
    }
    if (need_input) accumulate(grads[i], gi);
    g = Tensor<T>{};
  }
  if (input_grad) *input_grad = std::move(grads[0]);
}

template class Network<float>;
template class Network<double>;
template NetworkParams<float> init_params<float>(const NetworkSpec&, RandomStream&);
template NetworkParams<double> init_params<double>(const NetworkSpec&, RandomStream&);

}  // namespace tiq::nn
