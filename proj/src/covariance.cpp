#include "tiq/covariance.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace tiq {

const char* to_string(CovarianceSource source) {
  switch (source) {
    case CovarianceSource::empirical: return "empirical";
    case CovarianceSource::decomposition: return "decomposition";
    case CovarianceSource::propagated: return "propagated";
    case CovarianceSource::averaged: return "averaged";
  }
  return "?";
}

Eigen::MatrixXd sample_matrix(const Dataset& ds, std::span<const std::size_t> indices) {
  const auto n = static_cast<Eigen::Index>(ds.pixels());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(indices.size()), n);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    auto img = ds.image(indices[r]);
    for (Eigen::Index j = 0; j < n; ++j) m(static_cast<Eigen::Index>(r), j) = img[static_cast<std::size_t>(j)];
  }
  return m;
}

Eigen::MatrixXd sample_matrix(const Dataset& ds) {
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return sample_matrix(ds, all);
}

CovarianceModel empirical_covariance(const Eigen::MatrixXd& samples) {
  const auto n = samples.rows();
  if (n < 2) throw std::invalid_argument("empirical_covariance: need at least 2 samples");
  CovarianceModel out;
  out.mean = samples.colwise().mean().transpose();
  Eigen::MatrixXd centered = samples.rowwise() - out.mean.transpose();
  out.matrix = (centered.transpose() * centered) / static_cast<double>(n - 1);
  out.sample_count = static_cast<std::size_t>(n);
  out.source = CovarianceSource::empirical;
  return out;
}

CovarianceModel empirical_covariance(const Dataset& ds, std::span<const std::size_t> indices) {
  const std::size_t n = indices.size();
  if (n < 2) throw std::invalid_argument("empirical_covariance: need at least 2 samples");
  const auto dim = static_cast<Eigen::Index>(ds.pixels());
  // Shift by the first sample so the raw second moments stay well conditioned.
  Eigen::VectorXd shift(dim);
  {
    auto first = ds.image(indices[0]);
    for (Eigen::Index j = 0; j < dim; ++j) shift(j) = first[static_cast<std::size_t>(j)];
  }
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  constexpr std::size_t kChunk = 512;
  Eigen::MatrixXd block;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t rows = std::min(kChunk, n - start);
    block.resize(dim, static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
      auto img = ds.image(indices[start + r]);
      for (Eigen::Index j = 0; j < dim; ++j)
        block(j, static_cast<Eigen::Index>(r)) = img[static_cast<std::size_t>(j)] - shift(j);
    }
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(block);
    sum += block.rowwise().sum();
  }
  scatter = scatter.selfadjointView<Eigen::Lower>();
  const double nd = static_cast<double>(n);
  Eigen::VectorXd m = sum / nd;
  CovarianceModel out;
  out.matrix = (scatter - nd * m * m.transpose()) / (nd - 1.0);
  out.mean = m + shift;
  out.sample_count = n;
  out.source = CovarianceSource::empirical;
  return out;
}

CovarianceModel average_covariance(const CovarianceModel& k0, const CovarianceModel& k1) {
  if (k0.dimension() != k1.dimension()) throw std::invalid_argument("average_covariance: dimension mismatch");
  CovarianceModel out;
  out.matrix = 0.5 * (k0.matrix + k1.matrix);
  out.mean = 0.5 * (k0.mean + k1.mean);
  out.sample_count = k0.sample_count + k1.sample_count;
  out.source = k0.source == k1.source ? k0.source : CovarianceSource::averaged;
  out.layer = k0.layer;
  return out;
}

CovarianceModel class_averaged_covariance(const Dataset& ds) {
  auto i0 = ds.indices_of(Hypothesis::absent);
  auto i1 = ds.indices_of(Hypothesis::present);
  return average_covariance(empirical_covariance(ds, i0), empirical_covariance(ds, i1));
}

Eigen::VectorXd class_mean_difference(const Dataset& ds) {
  const std::size_t n = ds.pixels();
  Eigen::VectorXd m0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd m1 = m0;
  std::size_t c0 = 0, c1 = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto img = ds.image(i);
    Eigen::VectorXd& m = ds.label(i) == Hypothesis::present ? m1 : m0;
    (ds.label(i) == Hypothesis::present ? c1 : c0)++;
    for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(j)) += img[j];
  }
  if (c0 == 0 || c1 == 0) throw std::invalid_argument("class_mean_difference: both classes required");
  return m1 / static_cast<double>(c1) - m0 / static_cast<double>(c0);
}

CovarianceModel decomposition_covariance(const Dataset& noiseless, std::span<const std::size_t> indices,
                                         const NoiseParams& noise) {
  CovarianceModel out = empirical_covariance(noiseless, indices);
  if (noise.poisson_enabled)
    out.matrix.diagonal() += out.mean.cwiseMax(0.0);
  out.matrix.diagonal().array() += noise.gaussian_sigma * noise.gaussian_sigma;
  out.source = CovarianceSource::decomposition;
  return out;
}

CovarianceModel decomposition_covariance(const Dataset& noiseless, const NoiseParams& noise) {
  auto i0 = noiseless.indices_of(Hypothesis::absent);
  auto i1 = noiseless.indices_of(Hypothesis::present);
  CovarianceModel out =
      average_covariance(decomposition_covariance(noiseless, i0, noise), decomposition_covariance(noiseless, i1, noise));
  out.source = CovarianceSource::decomposition;
  return out;
}

SparseMatrix conv_layer_matrix(const nn::LayerSpec& layer, std::span<const double> weights, GridDims dims) {
  const auto h = static_cast<int>(dims.height), w = static_cast<int>(dims.width);
  const auto plane = static_cast<Eigen::Index>(dims.pixels());
  if (layer.kind == nn::LayerKind::scale) {
    SparseMatrix m(plane * layer.in_channels, plane * layer.in_channels);
    m.setIdentity();
    m *= layer.factor;
    return m;
  }
  if (layer.kind != nn::LayerKind::conv) throw std::invalid_argument("conv_layer_matrix: layer is not linear");
  if (layer.bias) throw std::invalid_argument("conv_layer_matrix: convolution has a bias (affine, not linear)");
  const int k = layer.kernel, pad = k / 2;
  const int cin = layer.in_channels, cout = layer.out_channels;
  if (weights.size() != static_cast<std::size_t>(cout) * cin * k * k)
    throw std::invalid_argument("conv_layer_matrix: weight count does not match layer");
  SparseMatrix m(plane * cout, plane * cin);
  m.reserve(Eigen::VectorXi::Constant(plane * cout, cin * k * k));
  for (int co = 0; co < cout; ++co)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Eigen::Index row = co * plane + y * w + x;
        for (int ci = 0; ci < cin; ++ci)
          for (int ky = 0; ky < k; ++ky) {
            const int sy = y + ky - pad;
            if (sy < 0 || sy >= h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int sx = x + kx - pad;
              if (sx < 0 || sx >= w) continue;
              const double v = weights[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx];
              m.insert(row, ci * plane + sy * w + sx) = v;
            }
          }
      }
  m.makeCompressed();
  return m;
}

namespace {

std::span<const double> layer_weights(const nn::ParamLayout& layout, std::size_t i, std::span<const double> params) {
  const auto& s = layout.slots[i];
  return params.subspan(s.weight, s.weight_count);
}

void check_linear_prefix(const nn::NetworkSpec& spec, std::size_t layer_count) {
  if (layer_count > spec.layers.size()) throw std::invalid_argument("propagate: layer_count exceeds network depth");
  for (std::size_t i = 0; i < layer_count; ++i) {
    const auto& l = spec.layers[i];
    if (l.kind != nn::LayerKind::conv && l.kind != nn::LayerKind::scale)
      throw std::invalid_argument("propagate: layer " + std::to_string(i) + " (" + l.describe() + ") is not linear");
  }
}

}  // namespace

std::vector<CovarianceModel> propagate_covariance(const CovarianceModel& input, const nn::NetworkSpec& spec,
                                                  std::span<const double> params, std::size_t layer_count,
                                                  const PropagationOptions& opt) {
  check_linear_prefix(spec, layer_count);
  const auto layout = nn::make_layout(spec);
  if (params.size() != layout.parameter_count) throw std::invalid_argument("propagate: parameter count mismatch");
  if (input.dimension() != static_cast<Eigen::Index>(spec.input.pixels() * spec.layers.front().in_channels))
    throw std::invalid_argument("propagate: covariance dimension does not match network input");
  std::vector<CovarianceModel> out;
  const CovarianceModel* cur = &input;
  for (std::size_t i = 0; i < layer_count; ++i) {
    const auto& l = spec.layers[i];
    const std::size_t dim = spec.input.pixels() * static_cast<std::size_t>(l.out_channels);
    if (!opt.allow_large && dim * dim * sizeof(double) > opt.max_bytes)
      throw std::runtime_error("propagate: covariance after layer " + std::to_string(i) + " needs " +
                               std::to_string(dim * dim * sizeof(double) >> 20) + " MiB; pass allow_large to proceed");
    SparseMatrix w = conv_layer_matrix(l, layer_weights(layout, i, params), spec.input);
    CovarianceModel next;
    Eigen::MatrixXd wk = w * cur->matrix;
    next.matrix = wk * w.transpose();
    next.matrix = 0.5 * (next.matrix + next.matrix.transpose()).eval();
    if (cur->mean.size() == cur->matrix.rows()) next.mean = w * cur->mean;
    next.source = CovarianceSource::propagated;
    next.sample_count = input.sample_count;
    next.layer = static_cast<int>(i);
    out.push_back(std::move(next));
    cur = &out.back();
  }
  return out;
}

Eigen::VectorXd propagate_vector(const Eigen::VectorXd& v, const nn::NetworkSpec& spec, std::span<const double> params,
                                 std::size_t layer_count) {
  check_linear_prefix(spec, layer_count);
  const auto layout = nn::make_layout(spec);
  Eigen::VectorXd cur = v;
  for (std::size_t i = 0; i < layer_count; ++i) {
    SparseMatrix w = conv_layer_matrix(spec.layers[i], layer_weights(layout, i, params), spec.input);
    cur = w * cur;
  }
  return cur;
}

std::size_t SpectrumResult::count_above(double lambda) const {
  if (singular_values.size() == 0) return 0;
  const double cut = lambda * singular_values(0);
  return static_cast<std::size_t>((singular_values.array() > cut).count());
}

SymmetricSpectrum::SymmetricSpectrum(const Eigen::MatrixXd& k) {
  if (k.rows() != k.cols()) throw std::invalid_argument("SymmetricSpectrum: matrix is not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k);
  if (solver.info() != Eigen::Success) throw std::runtime_error("SymmetricSpectrum: eigendecomposition failed");
  values_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
  sigma_max_ = values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0;
}

std::size_t SymmetricSpectrum::count_above(double lambda) const {
  return static_cast<std::size_t>((values_.array().abs() > lambda * sigma_max_).count());
}

Eigen::MatrixXd SymmetricSpectrum::truncated_pinv(double lambda) const {
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(values_.size());
  for (Eigen::Index i = 0; i < values_.size(); ++i)
    if (std::abs(values_(i)) > lambda * sigma_max_) inv(i) = 1.0 / values_(i);
  return vectors_ * inv.asDiagonal() * vectors_.transpose();
}

Eigen::VectorXd SymmetricSpectrum::apply_truncated_pinv(const Eigen::VectorXd& v, double lambda) const {
  Eigen::VectorXd c = vectors_.transpose() * v;
  for (Eigen::Index i = 0; i < values_.size(); ++i)
    c(i) = std::abs(values_(i)) > lambda * sigma_max_ ? c(i) / values_(i) : 0.0;
  return vectors_ * c;
}

Eigen::MatrixXd SymmetricSpectrum::truncated(double lambda) const {
  Eigen::VectorXd kept = Eigen::VectorXd::Zero(values_.size());
  for (Eigen::Index i = 0; i < values_.size(); ++i)
    if (std::abs(values_(i)) > lambda * sigma_max_) kept(i) = values_(i);
  return vectors_ * kept.asDiagonal() * vectors_.transpose();
}

SpectrumResult SymmetricSpectrum::spectrum(bool keep_vectors) const {
  const auto n = values_.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(values_(a)) > std::abs(values_(b)); });
  SpectrumResult out;
  out.singular_values.resize(n);
  if (keep_vectors) out.vectors.resize(vectors_.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto j = order[static_cast<std::size_t>(i)];
    out.singular_values(i) = std::abs(values_(j));
    if (keep_vectors) out.vectors.col(i) = vectors_.col(j);
  }
  return out;
}

SpectrumResult svd_spectrum(const Eigen::MatrixXd& k, bool keep_vectors) {
  return SymmetricSpectrum(k).spectrum(keep_vectors);
}

Eigen::MatrixXd truncated_pinv(const Eigen::MatrixXd& k, double lambda) { return SymmetricSpectrum(k).truncated_pinv(lambda); }

std::string spectrum_csv(const SpectrumResult& s, const std::string& label, std::uint64_t fingerprint, bool header) {
  std::ostringstream os;
  if (header) os << "fingerprint,label,index,singular_value\n";
  char fp[32];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(fingerprint));
  char buf[64];
  for (Eigen::Index i = 0; i < s.singular_values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g", s.singular_values(i));
    os << fp << ',' << label << ',' << i << ',' << buf << '\n';
  }
  return os.str();
}

}  // namespace tiq
