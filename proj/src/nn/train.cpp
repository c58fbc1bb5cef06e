#include "tiq/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tiq/metrics.hpp"

namespace tiq::nn {

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::mse: return "mse";
    case LossKind::perceptual: return "perceptual";
    case LossKind::bce: return "bce";
  }
  return "?";
}

FeatureExtractor<float> make_extractor(const NetworkSpec& spec, const TrainOptions& opt) {
  if (opt.loss != LossKind::perceptual || opt.extractor_channels <= 0) return FeatureExtractor<float>::identity();
  return FeatureExtractor<float>::random_conv(spec.input, opt.extractor_channels,
                                              derive_seed(opt.extractor_seed, {stream_tag::extractor}));
}

namespace {

std::vector<std::size_t> chunk_indices(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return idx;
}

void draw_without_replacement(std::vector<std::size_t>& pool, std::size_t k, RandomStream& rng,
                              std::vector<std::size_t>& out) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.index(pool.size() - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
}

double validation_metric(const Network<float>& net, const NetworkParams<float>& params, const Dataset& val,
                         LossKind loss, const FeatureExtractor<float>& phi) {
  if (loss == LossKind::bce) {
    const auto scores = classifier_scores(net.spec(), params, val);
    return empirical_auc(ScoreSet{scores, val.labels(), "validation"}).auc;
  }
  return dataset_loss(net.spec(), params, val, loss, phi);
}

}  // namespace

double dataset_loss(const NetworkSpec& spec, const NetworkParams<float>& params, const Dataset& ds, LossKind loss,
                    const FeatureExtractor<float>& phi) {
  if (ds.empty()) throw std::invalid_argument("dataset_loss: empty dataset");
  Network<float> net(spec);
  double total = 0.0;
  const std::size_t chunk = 64;
  for (std::size_t b = 0; b < ds.size(); b += chunk) {
    const auto idx = chunk_indices(b, std::min(ds.size(), b + chunk));
    const Tensor<float> in = gather_images<float>(ds, idx);
    const Tensor<float> tgt = gather_images<float>(ds, idx, true);
    const Tensor<float> out = net.infer(params, in);
    const double l = loss == LossKind::perceptual ? perceptual_loss(out, tgt, phi).value : mse_loss(out, tgt).value;
    total += l * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(ds.size());
}

TrainResult train_network(const NetworkSpec& spec, const Dataset& train, const Dataset& val, const TrainOptions& opt) {
  if (train.empty() || val.empty()) throw std::invalid_argument("train_network: empty dataset");
  if (spec.input != train.dims() || spec.input != val.dims())
    throw std::invalid_argument("train_network: dataset dims do not match the network input");
  const bool classifier = spec.is_classifier();
  if (classifier != (opt.loss == LossKind::bce))
    throw std::invalid_argument("train_network: classifiers train with bce, denoisers with mse/perceptual");
  if (!classifier && (!train.has_targets() || !val.has_targets()))
    throw std::invalid_argument("train_network: denoiser training needs targets");
  if (opt.batch_per_class < 1 || opt.validate_every < 1) throw std::invalid_argument("train_network: bad batch options");

  Network<float> net(spec);
  RandomStream init_rng(derive_seed(opt.seed, {stream_tag::init}));
  NetworkParams<float> params = init_params<float>(spec, init_rng);
  RandomStream batch_rng(derive_seed(opt.seed, {stream_tag::batches}));
  const FeatureExtractor<float> phi = make_extractor(spec, opt);
  AdamState adam(net.layout().parameter_count, AdamConfig{opt.learning_rate});

  std::vector<std::size_t> pool0 = train.indices_of(Hypothesis::absent);
  std::vector<std::size_t> pool1 = train.indices_of(Hypothesis::present);
  if (pool0.empty() || pool1.empty()) throw std::invalid_argument("train_network: both hypotheses must be present");

  const auto better = [classifier](double a, double b) { return classifier ? a > b : a < b; };

  TrainResult result;
  result.params = params;
  result.best_metric = validation_metric(net, params, val, opt.loss, phi);
  result.log.push_back({0, 0.0, result.best_metric});

  ForwardCache<float> cache;
  std::vector<float> grads;
  std::vector<std::size_t> batch;
  std::vector<float> labels;
  double running = 0.0;
  std::size_t running_n = 0;
  for (std::size_t it = 1; it <= opt.iterations; ++it) {
    batch.clear();
    draw_without_replacement(pool0, opt.batch_per_class, batch_rng, batch);
    draw_without_replacement(pool1, opt.batch_per_class, batch_rng, batch);
    const Tensor<float> in = gather_images<float>(train, batch);
    net.forward(params, in, Mode::train, &cache);
    const std::size_t last = net.layer_count();
    if (classifier) {
      labels.resize(batch.size());
      for (std::size_t k = 0; k < batch.size(); ++k) labels[k] = train.label(batch[k]) == Hypothesis::present ? 1.f : 0.f;
      const auto loss = bce_with_logits<float>(cache.acts[last - 1], labels);
      running += loss.value;
      net.backward(params, cache, last - 1, loss.grad, grads);
    } else {
      const Tensor<float> tgt = gather_images<float>(train, batch, true);
      const auto loss = opt.loss == LossKind::perceptual ? perceptual_loss(cache.acts[last], tgt, phi)
                                                         : mse_loss(cache.acts[last], tgt);
      running += loss.value;
      net.backward(params, cache, last, loss.grad, grads);
    }
    ++running_n;
    adam.update<float>(params.values, grads);

    if (it % opt.validate_every == 0 || it == opt.iterations) {
      const double metric = validation_metric(net, params, val, opt.loss, phi);
      result.log.push_back({it, running / static_cast<double>(running_n), metric});
      running = 0.0;
      running_n = 0;
      if (better(metric, result.best_metric)) {
        result.best_metric = metric;
        result.best_iteration = it;
        result.params = params;
      }
    }
  }
  return result;
}

Dataset apply_denoiser(const NetworkSpec& spec, const NetworkParams<float>& params, const Dataset& ds,
                       std::size_t chunk) {
  if (!spec.is_denoiser()) throw std::invalid_argument("apply_denoiser: network is not a denoiser");
  if (spec.input != ds.dims()) throw std::invalid_argument("apply_denoiser: dims mismatch");
  Network<float> net(spec);
  std::vector<float> images(ds.image_data().size());
  for (std::size_t b = 0; b < ds.size(); b += chunk) {
    const auto idx = chunk_indices(b, std::min(ds.size(), b + chunk));
    const Tensor<float> out = net.infer(params, gather_images<float>(ds, idx));
    for (std::size_t k = 0; k < idx.size(); ++k)
      scatter_image(out, static_cast<int>(k), std::span<float>(images.data() + idx[k] * ds.pixels(), ds.pixels()));
  }
  return ds.with_images(std::move(images));
}

std::vector<double> classifier_scores(const NetworkSpec& spec, const NetworkParams<float>& params, const Dataset& ds,
                                      std::size_t chunk) {
  if (!spec.is_classifier()) throw std::invalid_argument("classifier_scores: network is not a classifier");
  if (spec.input != ds.dims()) throw std::invalid_argument("classifier_scores: dims mismatch");
  Network<float> net(spec);
  std::vector<double> scores;
  scores.reserve(ds.size());
  for (std::size_t b = 0; b < ds.size(); b += chunk) {
    const auto idx = chunk_indices(b, std::min(ds.size(), b + chunk));
    // Sigmoid applied in double to the logits keeps scores strictly inside (0, 1).
    const Tensor<float> logits = net.infer_prefix(params, gather_images<float>(ds, idx), net.layer_count() - 1);
    for (float z : logits.data) scores.push_back(1.0 / (1.0 + std::exp(-static_cast<double>(z))));
  }
  return scores;
}

}  // namespace tiq::nn
