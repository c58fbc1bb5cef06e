#include "tiq/observers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "tiq/nn/train.hpp"
#include "tiq/random.hpp"

namespace tiq {

const char* to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::hotelling: return "HO";
    case TemplateKind::regularized_hotelling: return "RHO";
    case TemplateKind::npwmf: return "NPWMF";
  }
  return "?";
}

namespace {

void check_dims(const Eigen::MatrixXd& k, const Eigen::VectorXd& delta, const char* who) {
  if (k.rows() != k.cols() || k.rows() != delta.size())
    throw std::invalid_argument(std::string(who) + ": covariance and mean difference dimensions differ");
}

void check_finite(const Eigen::VectorXd& w, const char* who) {
  if (!w.allFinite()) throw std::runtime_error(std::string(who) + ": template is not finite");
}

}  // namespace

LinearTemplate hotelling_template(const Eigen::MatrixXd& k, const Eigen::VectorXd& delta_mean, double max_condition) {
  check_dims(k, delta_mean, "hotelling_template");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(lo > 0.0) || hi / lo > max_condition) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "hotelling_template: covariance condition number %.3g exceeds %.3g; use RHO",
                  lo > 0.0 ? hi / lo : INFINITY, max_condition);
    throw IllConditionedError(buf);
  }
  LinearTemplate t;
  t.weights = k.ldlt().solve(delta_mean);
  t.kind = TemplateKind::hotelling;
  check_finite(t.weights, "hotelling_template");
  return t;
}

LinearTemplate rho_template(const SymmetricSpectrum& k, const Eigen::VectorXd& delta_mean, double lambda) {
  if (k.eigenvalues().size() != delta_mean.size())
    throw std::invalid_argument("rho_template: covariance and mean difference dimensions differ");
  LinearTemplate t;
  t.weights = k.apply_truncated_pinv(delta_mean, lambda);
  t.kind = TemplateKind::regularized_hotelling;
  t.lambda = lambda;
  check_finite(t.weights, "rho_template");
  return t;
}

LinearTemplate rho_template(const Eigen::MatrixXd& k, const Eigen::VectorXd& delta_mean, double lambda) {
  check_dims(k, delta_mean, "rho_template");
  return rho_template(SymmetricSpectrum(k), delta_mean, lambda);
}

std::vector<double> default_lambda_grid() { return {1e-3, 1e-4, 1e-5, 1e-6, 1e-7}; }

RhoTuning rho_tune_lambda(const SymmetricSpectrum& k, const Eigen::VectorXd& delta_mean,
                          const Eigen::MatrixXd& validation, const std::vector<Hypothesis>& labels,
                          const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("rho_tune_lambda: empty lambda grid");
  RhoTuning best;
  bool have = false;
  for (double lambda : grid) {
    LinearTemplate t = rho_template(k, delta_mean, lambda);
    const double auc = empirical_auc(linear_scores(t, validation, labels, "RHO")).auc;
    best.grid_auc.emplace_back(lambda, auc);
    const bool better = !have || auc > best.validation_auc || (auc == best.validation_auc && lambda > best.lambda);
    if (better) {
      best.lambda = lambda;
      best.validation_auc = auc;
      best.tmpl = std::move(t);
      have = true;
    }
  }
  return best;
}

LinearTemplate npwmf_template(const Eigen::VectorXd& delta_mean) {
  LinearTemplate t;
  t.weights = delta_mean;
  t.kind = TemplateKind::npwmf;
  check_finite(t.weights, "npwmf_template");
  return t;
}

ScoreSet linear_scores(const LinearTemplate& t, const Eigen::MatrixXd& samples, const std::vector<Hypothesis>& labels,
                       const std::string& observer) {
  if (samples.cols() != t.weights.size()) throw std::invalid_argument("linear_scores: template dimension mismatch");
  if (static_cast<std::size_t>(samples.rows()) != labels.size())
    throw std::invalid_argument("linear_scores: label count mismatch");
  Eigen::VectorXd s = samples * t.weights;
  ScoreSet out;
  out.scores.assign(s.data(), s.data() + s.size());
  out.labels = labels;
  out.observer = observer;
  return out;
}

ScoreSet linear_scores(const LinearTemplate& t, const Dataset& ds, const std::string& observer) {
  if (ds.pixels() != static_cast<std::size_t>(t.weights.size()))
    throw std::invalid_argument("linear_scores: template dimension mismatch");
  ScoreSet out;
  out.scores.resize(ds.size());
  out.labels = ds.labels();
  out.observer = observer;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto img = ds.image(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < img.size(); ++j) acc += t.weights(static_cast<Eigen::Index>(j)) * img[j];
    out.scores[i] = acc;
  }
  return out;
}

Eigen::VectorXd signal_delta(const StudyConfig& cfg) {
  ImageBuffer s = render_signal_image(cfg.signal, cfg.system);
  return Eigen::Map<const Eigen::VectorXd>(s.values().data(), static_cast<Eigen::Index>(s.values().size()));
}

ChannelSet dog_channels(const DogParams& params, GridDims dims, Point2 center, double internal_noise) {
  if (!(params.sigma0 > 0 && params.alpha > 0 && params.q > 0) || params.count <= 0)
    throw std::invalid_argument("dog_channels: parameters must be positive");
  if (internal_noise < 0) throw std::invalid_argument("dog_channels: internal noise must be non-negative");
  const int h = static_cast<int>(dims.height), w = static_cast<int>(dims.width);
  if (center.x < 0 || center.x > w - 1 || center.y < 0 || center.y > h - 1)
    throw std::invalid_argument("dog_channels: center outside grid");

  // Frequency index k runs over -n/2 .. n/2 - 1 (cycles/pixel k/n).
  auto freq = [](int idx, int n) { return static_cast<double>(idx - n / 2) / n; };
  auto basis = [&](int n, double c, bool sine) {
    Eigen::MatrixXd m(n, n);  // [pixel][frequency]
    for (int p = 0; p < n; ++p)
      for (int f = 0; f < n; ++f) {
        const double a = 2.0 * std::numbers::pi * freq(f, n) * (p - c);
        m(p, f) = sine ? std::sin(a) : std::cos(a);
      }
    return m;
  };
  const Eigen::MatrixXd cy = basis(h, center.y, false), sy = basis(h, center.y, true);
  const Eigen::MatrixXd cx = basis(w, center.x, false), sx = basis(w, center.x, true);

  ChannelSet out;
  out.params = params;
  out.internal_noise = internal_noise;
  out.t.resize(params.count, static_cast<Eigen::Index>(dims.pixels()));
  for (int j = 1; j <= params.count; ++j) {
    const double s = params.sigma0 * std::pow(params.alpha, j);
    Eigen::MatrixXd prof(h, w);
    for (int fy = 0; fy < h; ++fy)
      for (int fx = 0; fx < w; ++fx) {
        const double rho = std::hypot(freq(fy, h), freq(fx, w));
        const double a = rho / (params.q * s), b = rho / s;
        prof(fy, fx) = std::exp(-0.5 * a * a) - std::exp(-0.5 * b * b);
      }
    // Real part of the inverse DFT with the phase origin at the center.
    Eigen::MatrixXd spatial = cy * prof * cx.transpose() - sy * prof * sx.transpose();
    const double norm = spatial.norm();
    if (!(norm > 0)) throw std::runtime_error("dog_channels: channel vanished on this grid");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.t(j - 1, y * w + x) = spatial(y, x) / norm;
  }
  return out;
}

ChoModel train_cho(const ChannelSet& channels, const Dataset& training) {
  if (static_cast<std::size_t>(channels.t.cols()) != training.pixels())
    throw std::invalid_argument("train_cho: channel and image dimensions differ");
  const Eigen::MatrixXd g = sample_matrix(training);
  const Eigen::MatrixXd v = g * channels.t.transpose();
  std::vector<Eigen::Index> idx[2];
  for (std::size_t i = 0; i < training.size(); ++i)
    idx[training.label(i) == Hypothesis::present ? 1 : 0].push_back(static_cast<Eigen::Index>(i));
  if (idx[0].size() < 2 || idx[1].size() < 2) throw std::invalid_argument("train_cho: need two images per class");
  CovarianceModel kc[2];
  for (int c = 0; c < 2; ++c) kc[c] = empirical_covariance(Eigen::MatrixXd(v(idx[c], Eigen::all)));
  const CovarianceModel kv = average_covariance(kc[0], kc[1]);
  const Eigen::VectorXd dv = kc[1].mean - kc[0].mean;

  ChoModel m;
  m.channels = channels;
  const Eigen::VectorXd k_int = channels.internal_noise * kv.matrix.diagonal();
  m.internal_sigma = k_int.cwiseSqrt();
  Eigen::MatrixXd total = kv.matrix;
  total.diagonal() += k_int;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(total);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0)
    throw std::runtime_error("train_cho: channelized covariance is singular");
  m.weights = ldlt.solve(dv);
  check_finite(m.weights, "train_cho");
  return m;
}

ScoreSet cho_scores(const ChoModel& model, const Dataset& images, std::uint64_t noise_seed, const std::string& observer) {
  const Eigen::MatrixXd& t = model.channels.t;
  if (static_cast<std::size_t>(t.cols()) != images.pixels())
    throw std::invalid_argument("cho_scores: channel and image dimensions differ");
  RandomStream rng(derive_seed(noise_seed, {stream_tag::internal_noise}));
  const bool noisy = model.channels.internal_noise > 0.0;
  ScoreSet out;
  out.scores.resize(images.size());
  out.labels = images.labels();
  out.observer = observer;
  Eigen::VectorXd g(t.cols());
  for (std::size_t i = 0; i < images.size(); ++i) {
    auto img = images.image(i);
    for (Eigen::Index j = 0; j < g.size(); ++j) g(j) = img[static_cast<std::size_t>(j)];
    Eigen::VectorXd v = t * g;
    if (noisy)
      for (Eigen::Index c = 0; c < v.size(); ++c) v(c) += rng.normal(0.0, model.internal_sigma(c));
    out.scores[i] = model.weights.dot(v);
  }
  return out;
}

ScoreSet cnn_observer_scores(const nn::NetworkSpec& spec, const nn::NetworkParams<float>& params, const Dataset& images,
                             const std::string& observer) {
  if (!spec.is_classifier()) throw std::invalid_argument("cnn_observer_scores: network is not a classifier");
  if (!(spec.input == images.dims())) throw std::invalid_argument("cnn_observer_scores: image dimensions differ");
  ScoreSet out;
  out.scores = nn::classifier_scores(spec, params, images);
  out.labels = images.labels();
  out.observer = observer;
  return out;
}

std::string scores_csv(const ScoreSet& s, std::uint64_t fingerprint, bool header) {
  std::ostringstream os;
  if (header) os << "fingerprint,image_index,label,observer,score\n";
  char fp[32], buf[64];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(fingerprint));
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", s.scores[i]);
    os << fp << ',' << i << ',' << static_cast<int>(s.labels[i]) << ',' << s.observer << ',' << buf << '\n';
  }
  return os.str();
}

}  // namespace tiq
