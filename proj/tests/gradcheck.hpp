// Central finite-difference checks of every layer kind, loss and assembled
// architecture, in double precision. Shared by the unit tests and the
// acceptance run.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tiq/nn/architectures.hpp"
#include "tiq/nn/layers.hpp"
#include "tiq/nn/loss.hpp"
#include "tiq/nn/network.hpp"
#include "tiq/random.hpp"

namespace gradcheck {

using tiq::RandomStream;
using tiq::nn::Tensor;
using Vec = std::vector<double>;

inline constexpr double kStep = 1e-5;

struct KindResult {
  std::string kind;
  int cases = 0;
  double worst = 0.0;  // largest relative error over all cases and gradients
};

inline double rel_err(const Vec& a, const Vec& b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(d) / scale;
}

inline Tensor<double> random_tensor(int c, int n, int h, int w, RandomStream& rng, double margin = 0.0) {
  Tensor<double> t(c, n, h, w);
  for (auto& v : t.data) {
    v = rng.uniform(-1, 1);
    if (margin > 0 && std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
  }
  return t;
}

inline Vec random_vec(std::size_t n, RandomStream& rng) {
  Vec v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Central differences of f with respect to every entry of x.
inline Vec numeric(Vec& x, const std::function<double()>& f) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + kStep;
    const double up = f();
    x[i] = keep - kStep;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2 * kStep);
  }
  return g;
}

inline void record(KindResult& r, double err) { r.worst = std::max(r.worst, err); }

inline KindResult check_conv(RandomStream& rng, int cases) {
  KindResult r{"conv"};
  for (int c = 0; c < cases; ++c, ++r.cases) {
    const int cin = 1 + static_cast<int>(rng.index(3)), cout = 1 + static_cast<int>(rng.index(3));
    const int k = 1 + 2 * static_cast<int>(rng.index(3));
    auto in = random_tensor(cin, 2, 3 + static_cast<int>(rng.index(4)), 3 + static_cast<int>(rng.index(4)), rng);
    Vec w = random_vec(static_cast<std::size_t>(cout * cin * k * k), rng), b = random_vec(cout, rng);
    Tensor<double> out;
    tiq::nn::conv2d_forward<double>(in, w, b, cout, k, out);
    const Vec proj = random_vec(out.size(), rng);
    auto loss = [&] {
      Tensor<double> o;
      tiq::nn::conv2d_forward<double>(in, w, b, cout, k, o);
      return dot(o.data, proj);
    };
    Tensor<double> go = out, gi;
    go.data = proj;
    Vec gw(w.size()), gb(b.size());
    tiq::nn::conv2d_backward<double>(in, w, cout, k, go, &gi, gw, gb);
    record(r, rel_err(gi.data, numeric(in.data, loss)));
    record(r, rel_err(gw, numeric(w, loss)));
    record(r, rel_err(gb, numeric(b, loss)));
  }
  return r;
}

inline KindResult check_relu(RandomStream& rng, int cases) {
  KindResult r{"relu"};
  for (int c = 0; c < cases; ++c, ++r.cases) {
    auto in = random_tensor(2, 2, 3, 4, rng, 1e-3);
    const Vec proj = random_vec(in.size(), rng);
    auto loss = [&] {
      Tensor<double> o;
      tiq::nn::relu_forward(in, o);
      return dot(o.data, proj);
    };
    Tensor<double> go = in, gi;
    go.data = proj;
    tiq::nn::relu_backward(in, go, gi);
    record(r, rel_err(gi.data, numeric(in.data, loss)));
  }
  return r;
}

inline KindResult check_sigmoid(RandomStream& rng, int cases) {
  KindResult r{"sigmoid"};
  for (int c = 0; c < cases; ++c, ++r.cases) {
    auto in = random_tensor(1, 5, 1, 1, rng);
    for (auto& v : in.data) v *= 4;
    const Vec proj = random_vec(in.size(), rng);
    auto loss = [&] {
      Tensor<double> o;
      tiq::nn::sigmoid_forward(in, o);
      return dot(o.data, proj);
    };
    Tensor<double> out, go, gi;
    tiq::nn::sigmoid_forward(in, out);
    go = out;
    go.data = proj;
    tiq::nn::sigmoid_backward(out, go, gi);
    record(r, rel_err(gi.data, numeric(in.data, loss)));
  }
  return r;
}

inline KindResult check_scale(RandomStream& rng, int cases) {
  KindResult r{"scale"};
  for (int c = 0; c < cases; ++c, ++r.cases) {
    // A scale layer between two convolutions, differentiated through the network.
    tiq::nn::NetworkSpec spec{tiq::nn::Architecture::cnn_denoiser, 2, {4, 5},
                              {tiq::nn::LayerSpec::scale(1, rng.uniform(0.1, 3.0)),
                               tiq::nn::LayerSpec::conv(1, 2, 3, true), tiq::nn::LayerSpec::conv(2, 1, 3, true)}};
    tiq::nn::Network<double> net(spec);
    auto params = tiq::nn::init_params<double>(spec, rng);
    auto in = random_tensor(1, 2, 4, 5, rng);
    Tensor<double> out = net.infer(params, in);
    const Vec proj = random_vec(out.size(), rng);
    auto loss = [&] { return dot(net.infer(params, in).data, proj); };
    tiq::nn::ForwardCache<double> cache;
    net.forward(params, in, tiq::nn::Mode::train, &cache);
    Tensor<double> go = out, gi;
    go.data = proj;
    Vec grads;
    net.backward(params, cache, net.layer_count(), go, grads, &gi);
    record(r, rel_err(gi.data, numeric(in.data, loss)));
    record(r, rel_err(grads, numeric(params.values, loss)));
  }
  return r;
}

inline KindResult check_batchnorm(RandomStream& rng, int cases) {
  KindResult r{"batchnorm"};
  for (int c = 0; c < cases; ++c, ++r.cases) {
    const int ch = 1 + static_cast<int>(rng.index(3));
    auto in = random_tensor(ch, 3, 3, 3, rng);
    Vec gamma = random_vec(ch, rng), beta = random_vec(ch, rng);
    for (auto& g : gamma) g += g < 0 ? -0.5 : 0.5;
    const Vec proj = random_vec(in.size(), rng);
    auto loss = [&] {
      Tensor<double> o;
      tiq::nn::BatchNormCache<double> cache;
      tiq::nn::batchnorm_forward_train<double>(in, gamma, beta, o, cache);
      return dot(o.data, proj);
    };
    Tensor<double> out, go, gi;
    tiq::nn::BatchNormCache<double> cache;
    tiq::nn::batchnorm_forward_train<double>(in, gamma, beta, out, cache);
    go = out;
    go.data = proj;
    Vec gg(ch), gb(ch);
    tiq::nn::batchnorm_backward<double>(in, cache, gamma, go, gi, gg, gb);
    record(r, rel_err(gi.data, numeric(in.data, loss)));
    record(r, rel_err(gg, numeric(gamma, loss)));
    record(r, rel_err(gb, numeric(beta, loss)));
  }
  return r;
}

inline KindResult check_dense(RandomStream& rng, int cases) {
  KindResult r{"dense"};
  for (int c = 0; c < cases; ++c, ++r.cases) {
    const int ch = 1 + static_cast<int>(rng.index(3));
    auto in = random_tensor(ch, 3, 3, 2, rng);
    Vec w = random_vec(in.features(), rng), b{rng.uniform(-1, 1)};
    const Vec proj = random_vec(3, rng);
    auto loss = [&] {
      Tensor<double> o;
      tiq::nn::dense_forward<double>(in, w, b[0], o);
      return dot(o.data, proj);
    };
    Tensor<double> out, gi;
    tiq::nn::dense_forward<double>(in, w, b[0], out);
    Tensor<double> go = out;
    go.data = proj;
    Vec gw(w.size());
    double gb = 0;
    tiq::nn::dense_backward<double>(in, w, go, gi, gw, gb);
    record(r, rel_err(gi.data, numeric(in.data, loss)));
    record(r, rel_err(gw, numeric(w, loss)));
    record(r, rel_err({gb}, numeric(b, loss)));
  }
  return r;
}

// Smallest |pre-activation| feeding a ReLU; finite differences are only
// meaningful away from the kink.
inline double relu_margin(const tiq::nn::NetworkSpec& spec, const tiq::nn::ForwardCache<double>& cache) {
  double m = INFINITY;
  for (std::size_t i = 0; i < spec.layers.size(); ++i)
    if (spec.layers[i].kind == tiq::nn::LayerKind::relu)
      for (double v : cache.acts[i].data) m = std::min(m, std::abs(v));
  return m;
}

/// Whole network in train mode: gradients w.r.t. parameters and input.
inline double check_network_once(const tiq::nn::NetworkSpec& spec, RandomStream& rng, int batch, bool& usable) {
  tiq::nn::Network<double> net(spec);
  auto params = tiq::nn::init_params<double>(spec, rng);
  for (auto& v : params.values) v += 0.05 * rng.uniform(-1, 1);  // non-trivial biases and BN affine terms
  auto in = random_tensor(1, batch, spec.input.height, spec.input.width, rng);
  tiq::nn::ForwardCache<double> cache;
  const Tensor<double> out = net.forward(params, in, tiq::nn::Mode::train, &cache);
  usable = relu_margin(spec, cache) > 50 * kStep;
  if (!usable) return 0.0;
  const Vec proj = random_vec(out.size(), rng);
  auto loss = [&] {
    auto p = params;
    return dot(net.forward(p, in, tiq::nn::Mode::train).data, proj);
  };
  Tensor<double> go = out, gi;
  go.data = proj;
  Vec grads;
  net.backward(params, cache, net.layer_count(), go, grads, &gi);
  return std::max(rel_err(gi.data, numeric(in.data, loss)), rel_err(grads, numeric(params.values, loss)));
}

inline KindResult check_network(const std::string& kind, const std::function<tiq::nn::NetworkSpec(RandomStream&)>& make,
                                RandomStream& rng, int cases, int batch = 3) {
  KindResult r{kind};
  int attempts = 0;
  while (r.cases < cases && attempts < cases * 20) {
    ++attempts;
    const auto spec = make(rng);
    bool usable = false;
    const double err = check_network_once(spec, rng, batch, usable);
    if (!usable) continue;
    record(r, err);
    ++r.cases;
  }
  if (r.cases < cases) r.worst = INFINITY;
  return r;
}

inline KindResult check_add_skip(RandomStream& rng, int cases) {
  return check_network("add_skip", [](RandomStream& g) {
    const int f = 1 + static_cast<int>(g.index(3));
    return tiq::nn::make_resnet_denoiser({4, 4}, 5 + 2 * static_cast<int>(g.index(2)), f);
  }, rng, cases);
}

inline KindResult check_mse(RandomStream& rng, int cases) {
  KindResult r{"mse_loss"};
  for (int c = 0; c < cases; ++c, ++r.cases) {
    auto out = random_tensor(1, 3, 3, 4, rng), tgt = random_tensor(1, 3, 3, 4, rng);
    auto loss = [&] { return tiq::nn::mse_loss(out, tgt).value; };
    const auto res = tiq::nn::mse_loss(out, tgt);
    record(r, rel_err(res.grad.data, numeric(out.data, loss)));
  }
  return r;
}

inline KindResult check_perceptual(RandomStream& rng, int cases) {
  KindResult r{"perceptual_loss"};
  for (int attempts = 0; r.cases < cases && attempts < cases * 20; ++attempts) {
    const auto phi = tiq::nn::FeatureExtractor<double>::random_conv({4, 4}, 3, rng.index(1u << 30));
    auto out = random_tensor(1, 2, 4, 4, rng), tgt = random_tensor(1, 2, 4, 4, rng);
    tiq::nn::ForwardCache<double> cache;
    phi.apply(out, cache);
    if (relu_margin(tiq::nn::make_feature_extractor({4, 4}, 3), cache) < 50 * kStep) continue;
    auto loss = [&] { return tiq::nn::perceptual_loss(out, tgt, phi).value; };
    const auto res = tiq::nn::perceptual_loss(out, tgt, phi);
    record(r, rel_err(res.grad.data, numeric(out.data, loss)));
    ++r.cases;
  }
  return r;
}

inline KindResult check_bce(RandomStream& rng, int cases) {
  KindResult r{"bce_loss"};
  for (int c = 0; c < cases; ++c, ++r.cases) {
    auto logits = random_tensor(1, 6, 1, 1, rng);
    for (auto& v : logits.data) v *= 3;
    std::vector<double> labels(6);
    for (auto& l : labels) l = static_cast<double>(rng.index(2));
    auto loss = [&] { return tiq::nn::bce_with_logits<double>(logits, labels).value; };
    const auto res = tiq::nn::bce_with_logits<double>(logits, labels);
    record(r, rel_err(res.grad.data, numeric(logits.data, loss)));
  }
  return r;
}

/// Every layer kind, every loss and each assembled architecture.
inline std::vector<KindResult> run_suite(std::uint64_t seed, int cases) {
  RandomStream rng(seed);
  std::vector<KindResult> out;
  out.push_back(check_conv(rng, cases));
  out.push_back(check_relu(rng, cases));
  out.push_back(check_batchnorm(rng, cases));
  out.push_back(check_add_skip(rng, cases));
  out.push_back(check_dense(rng, cases));
  out.push_back(check_sigmoid(rng, cases));
  out.push_back(check_scale(rng, cases));
  out.push_back(check_mse(rng, cases));
  out.push_back(check_perceptual(rng, cases));
  out.push_back(check_bce(rng, cases));
  out.push_back(check_network("linear_denoiser", [](RandomStream& g) {
    return tiq::nn::make_linear_denoiser({5, 4}, 2 + static_cast<int>(g.index(3)), 2);
  }, rng, cases));
  out.push_back(check_network("cnn_denoiser", [](RandomStream& g) {
    return tiq::nn::make_cnn_denoiser({4, 4}, 3 + static_cast<int>(g.index(3)), 2, g.uniform(0.2, 2.0));
  }, rng, cases));
  out.push_back(check_network("cnn_classifier", [](RandomStream& g) {
    return tiq::nn::make_cnn_classifier({5, 5}, 1 + static_cast<int>(g.index(3)), 2, 3, 0.5);
  }, rng, cases));
  return out;
}

}  // namespace gradcheck
