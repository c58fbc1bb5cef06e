#pragma once

#include <cstdint>
#include <vector>

#include "tiq/dataset.hpp"
#include "tiq/nn/adam.hpp"
#include "tiq/nn/loss.hpp"
#include "tiq/nn/network.hpp"

namespace tiq::nn {

enum class LossKind { mse, perceptual, bce };

const char* to_string(LossKind kind);

struct TrainOptions {
  LossKind loss = LossKind::mse;
  std::size_t iterations = 5000;
  std::size_t batch_per_class = 200;
  std::size_t validate_every = 50;
  double learning_rate = 1e-4;
  std::uint64_t seed = 1;
  /// Feature maps of the perceptual-loss extractor; 0 selects the identity.
  int extractor_channels = 64;
  /// Seed of the frozen extractor, shared by every network of a study.
  std::uint64_t extractor_seed = 1;
};

struct TrainLogEntry {
  std::size_t iteration = 0;
  double train_loss = 0.0;  // mean mini-batch loss since the previous entry
  double val_metric = 0.0;
};

struct TrainResult {
  NetworkParams<float> params;  // snapshot with the best validation metric
  std::vector<TrainLogEntry> log;
  std::size_t best_iteration = 0;
  double best_metric = 0.0;
};

/// Mini-batches hold `batch_per_class` signal-absent and signal-present
/// samples. Denoisers are selected by lowest validation loss, classifiers by
/// highest validation AUC.
TrainResult train_network(const NetworkSpec& spec, const Dataset& train, const Dataset& val, const TrainOptions& opt);

/// Mean per-image loss of a denoiser over a dataset with targets (infer mode).
double dataset_loss(const NetworkSpec& spec, const NetworkParams<float>& params, const Dataset& ds, LossKind loss,
                    const FeatureExtractor<float>& phi = FeatureExtractor<float>::identity());

/// Runs a denoiser over every image; labels and targets are carried over.
Dataset apply_denoiser(const NetworkSpec& spec, const NetworkParams<float>& params, const Dataset& ds,
                       std::size_t chunk = 64);

/// Sigmoid scores of a classifier for every image, in dataset order.
std::vector<double> classifier_scores(const NetworkSpec& spec, const NetworkParams<float>& params, const Dataset& ds,
                                      std::size_t chunk = 64);

FeatureExtractor<float> make_extractor(const NetworkSpec& spec, const TrainOptions& opt);

}  // namespace tiq::nn
