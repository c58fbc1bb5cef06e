#include "tiq/nn/architectures.hpp"

#include <stdexcept>

namespace tiq::nn {

namespace {

void push_scale(NetworkSpec& spec, double factor) {
  if (factor != 1.0) spec.layers.push_back(LayerSpec::scale(1, factor));
}

NetworkSpec make_nonlinear(Architecture arch, GridDims dims, int depth, int filters, double input_scale) {
  if (depth < 2) throw std::invalid_argument("nonlinear denoiser depth must be >= 2");
  if (filters < 1) throw std::invalid_argument("filter count must be positive");
  if (!(input_scale > 0.0)) throw std::invalid_argument("input_scale must be positive");
  NetworkSpec spec{arch, depth, dims, {}};
  auto& L = spec.layers;
  push_scale(spec, input_scale);
  std::vector<int> block_out(depth + 1, -1);
  const bool resnet = arch == Architecture::resnet_denoiser;
  for (int k = 1; k <= depth; ++k) {
    if (k == 1) {
      L.push_back(LayerSpec::conv(1, filters, 3, true));
      L.push_back(LayerSpec::relu(filters));
    } else if (k == depth) {
      L.push_back(LayerSpec::conv(filters, 1, 3, true));
    } else {
      L.push_back(LayerSpec::conv(filters, filters, 3, false));
      L.push_back(LayerSpec::batchnorm(filters));
      if (resnet && k == depth - 1) L.push_back(LayerSpec::add_skip(filters, block_out[1]));
      if (resnet && k % 2 == 1 && k >= 3 && k <= depth - 2) L.push_back(LayerSpec::add_skip(filters, block_out[k - 2]));
      if (k != depth - 1) L.push_back(LayerSpec::relu(filters));
    }
    block_out[k] = static_cast<int>(L.size()) - 1;
  }
  push_scale(spec, 1.0 / input_scale);
  spec.validate();
  return spec;
}

}  // namespace

NetworkSpec make_linear_denoiser(GridDims dims, int depth, int filters, bool bias) {
  if (depth < 1) throw std::invalid_argument("linear denoiser depth must be >= 1");
  if (filters < 1) throw std::invalid_argument("filter count must be positive");
  NetworkSpec spec{Architecture::linear_denoiser, depth, dims, {}};
  for (int k = 1; k <= depth; ++k) {
    const int in = k == 1 ? 1 : filters;
    const int out = k == depth ? 1 : filters;
    spec.layers.push_back(LayerSpec::conv(in, out, 3, bias));
  }
  spec.validate();
  return spec;
}

NetworkSpec make_cnn_denoiser(GridDims dims, int depth, int filters, double input_scale) {
  return make_nonlinear(Architecture::cnn_denoiser, dims, depth, filters, input_scale);
}

NetworkSpec make_resnet_denoiser(GridDims dims, int depth, int filters, double input_scale) {
  return make_nonlinear(Architecture::resnet_denoiser, dims, depth, filters, input_scale);
}

NetworkSpec make_cnn_classifier(GridDims dims, int depth, int filters, int kernel, double input_scale) {
  if (depth < 1) throw std::invalid_argument("classifier depth must be >= 1");
  NetworkSpec spec{Architecture::cnn_classifier, depth, dims, {}};
  push_scale(spec, input_scale);
  for (int k = 1; k <= depth; ++k) {
    spec.layers.push_back(LayerSpec::conv(k == 1 ? 1 : filters, filters, kernel, true));
    spec.layers.push_back(LayerSpec::relu(filters));
  }
  spec.layers.push_back(LayerSpec::dense(filters));
  spec.layers.push_back(LayerSpec::sigmoid());
  spec.validate();
  return spec;
}

NetworkSpec make_feature_extractor(GridDims dims, int channels) {
  NetworkSpec spec{Architecture::feature_extractor, 2, dims, {}};
  spec.layers = {LayerSpec::conv(1, channels, 3, true), LayerSpec::relu(channels),
                 LayerSpec::conv(channels, channels, 3, true), LayerSpec::relu(channels)};
  spec.validate();
  return spec;
}

NetworkSpec make_identity(GridDims dims) {
  NetworkSpec spec{Architecture::identity, 0, dims, {}};
  spec.validate();
  return spec;
}

std::vector<std::size_t> block_ends(const NetworkSpec& spec) {
  std::vector<std::size_t> ends;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind != LayerKind::conv) continue;
    std::size_t j = i;
    while (j + 1 < spec.layers.size() && spec.layers[j + 1].kind != LayerKind::conv &&
           spec.layers[j + 1].kind != LayerKind::scale && spec.layers[j + 1].kind != LayerKind::dense)
      ++j;
    ends.push_back(j);
  }
  return ends;
}

}  // namespace tiq::nn
