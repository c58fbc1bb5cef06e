#pragma once

#include "tiq/nn/network.hpp"

namespace tiq::nn {

/// D bias-free (by default) convolutions: 1 -> F, (D-2) x F -> F, F -> 1.
NetworkSpec make_linear_denoiser(GridDims dims, int depth, int filters = 32, bool bias = false);

/// Conv+ReLU, (D-3) x Conv+BN+ReLU, Conv+BN, Conv. `input_scale` multiplies
/// the input and its inverse the output, so the map stays in image units.
NetworkSpec make_cnn_denoiser(GridDims dims, int depth, int filters = 64, double input_scale = 1.0);

/// The CNN denoiser plus skip connections: block k (odd, 3 <= k <= D-2)
/// adds the output of block k-2 before its ReLU, and the output of block 1
/// is added to the input of block D.
NetworkSpec make_resnet_denoiser(GridDims dims, int depth, int filters = 64, double input_scale = 1.0);

/// D x (Conv k x k + ReLU), dense head to one logit, sigmoid.
NetworkSpec make_cnn_classifier(GridDims dims, int depth, int filters = 16, int kernel = 5, double input_scale = 1.0);

/// Fixed two-layer Conv+ReLU stack used as the perceptual-loss feature map.
NetworkSpec make_feature_extractor(GridDims dims, int channels = 64);

NetworkSpec make_identity(GridDims dims);

/// Index (into spec.layers) of the last primitive layer of each depth block;
/// for a linear denoiser these are its convolutions.
std::vector<std::size_t> block_ends(const NetworkSpec& spec);

}  // namespace tiq::nn
