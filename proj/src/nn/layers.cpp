#include "tiq/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tiq::nn {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::add_skip: return "add_skip";
    case LayerKind::dense: return "dense";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::scale: return "scale";
  }
  return "?";
}

std::string LayerSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case LayerKind::conv:
      os << '(' << in_channels << "->" << out_channels << ",k" << kernel << (bias ? ",b" : "") << ')';
      break;
    case LayerKind::add_skip: os << "(from " << skip_from << ')'; break;
    case LayerKind::scale: os.precision(17); os << '(' << factor << ')'; break;
    default: os << '(' << in_channels << ')'; break;
  }
  return os.str();
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::size_t kMaxColumnBuffer = std::size_t{1} << 24;

template <typename T>
int samples_per_chunk(const Tensor<T>& in, int kernel) {
  const std::size_t per_sample = static_cast<std::size_t>(in.channels) * kernel * kernel * in.plane();
  return static_cast<int>(std::max<std::size_t>(1, kMaxColumnBuffer / std::max<std::size_t>(per_sample, 1)));
}

// Valid destination-x range for kernel tap kx: source column x + kx - pad in [0, W).
inline void tap_range(int k_off, int pad, int extent, int& lo, int& hi) {
  lo = std::max(0, pad - k_off);
  hi = std::min(extent, extent + pad - k_off);
}

template <typename T>
void im2col(const Tensor<T>& in, int n0, int n1, int k, std::vector<T>& cols) {
  const int h = in.height, w = in.width, pad = k / 2;
  const std::size_t hw = in.plane();
  const std::size_t ncols = static_cast<std::size_t>(n1 - n0) * hw;
  cols.assign(static_cast<std::size_t>(in.channels) * k * k * ncols, T(0));
  for (int ci = 0; ci < in.channels; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * ncols;
        int xlo, xhi, ylo, yhi;
        tap_range(kx, pad, w, xlo, xhi);
        tap_range(ky, pad, h, ylo, yhi);
        for (int n = n0; n < n1; ++n) {
          const T* src = in.channel(ci) + static_cast<std::size_t>(n) * hw;
          T* dst = row + static_cast<std::size_t>(n - n0) * hw;
          for (int y = ylo; y < yhi; ++y) {
            const T* s = src + static_cast<std::size_t>(y + ky - pad) * w + (kx - pad);
            T* d = dst + static_cast<std::size_t>(y) * w;
            std::copy(s + xlo, s + xhi, d + xlo);
          }
        }
      }
}

template <typename T>
void col2im_add(const std::vector<T>& cols, int n0, int n1, int k, Tensor<T>& out) {
  const int h = out.height, w = out.width, pad = k / 2;
  const std::size_t hw = out.plane();
  const std::size_t ncols = static_cast<std::size_t>(n1 - n0) * hw;
  for (int ci = 0; ci < out.channels; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const T* row = cols.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * ncols;
        int xlo, xhi, ylo, yhi;
        tap_range(kx, pad, w, xlo, xhi);
        tap_range(ky, pad, h, ylo, yhi);
        for (int n = n0; n < n1; ++n) {
          T* dst = out.channel(ci) + static_cast<std::size_t>(n) * hw;
          const T* src = row + static_cast<std::size_t>(n - n0) * hw;
          for (int y = ylo; y < yhi; ++y) {
            T* d = dst + static_cast<std::size_t>(y + ky - pad) * w + (kx - pad);
            const T* s = src + static_cast<std::size_t>(y) * w;
            for (int x = xlo; x < xhi; ++x) d[x] += s[x];
          }
        }
      }
}

template <typename T>
void check_conv_shapes(const Tensor<T>& in, std::size_t weight_size, int out_channels, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("conv2d: kernel must be odd and positive");
  if (weight_size != static_cast<std::size_t>(out_channels) * in.channels * kernel * kernel)
    throw std::invalid_argument("conv2d: weight size does not match channels and kernel");
}

}  // namespace

template <typename T>
void conv2d_forward(const Tensor<T>& in, std::span<const T> weight, std::span<const T> bias, int out_channels,
                    int kernel, Tensor<T>& out) {
  check_conv_shapes(in, weight.size(), out_channels, kernel);
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(out_channels))
    throw std::invalid_argument("conv2d: bias size mismatch");
  out = Tensor<T>(out_channels, in.batch, in.height, in.width);
  const std::size_t hw = in.plane();
  const std::size_t kdim = static_cast<std::size_t>(in.channels) * kernel * kernel;
  Eigen::Map<const RowMat<T>> wmat(weight.data(), out_channels, kdim);
  std::vector<T> cols;
  const int step = samples_per_chunk(in, kernel);
  for (int n0 = 0; n0 < in.batch; n0 += step) {
    const int n1 = std::min(in.batch, n0 + step);
    im2col(in, n0, n1, kernel, cols);
    const std::size_t ncols = static_cast<std::size_t>(n1 - n0) * hw;
    Eigen::Map<const RowMat<T>> cmat(cols.data(), kdim, ncols);
    Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>> omat(out.data.data() + n0 * hw, out_channels, ncols,
                                                         Eigen::OuterStride<>(out.channel_size()));
    omat.noalias() = wmat * cmat;
  }
  if (!bias.empty())
    for (int c = 0; c < out_channels; ++c) {
      T* p = out.channel(c);
      const T b = bias[c];
      for (std::size_t i = 0; i < out.channel_size(); ++i) p[i] += b;
    }
}

template <typename T>
void conv2d_backward(const Tensor<T>& in, std::span<const T> weight, int out_channels, int kernel,
                     const Tensor<T>& grad_out, Tensor<T>* grad_in, std::span<T> grad_weight, std::span<T> grad_bias) {
  check_conv_shapes(in, weight.size(), out_channels, kernel);
  if (grad_out.channels != out_channels || grad_out.batch != in.batch || grad_out.plane() != in.plane())
    throw std::invalid_argument("conv2d_backward: upstream gradient shape mismatch");
  const std::size_t hw = in.plane();
  const std::size_t kdim = static_cast<std::size_t>(in.channels) * kernel * kernel;
  Eigen::Map<const RowMat<T>> wmat(weight.data(), out_channels, kdim);
  Eigen::Map<RowMat<T>> gw(grad_weight.data(), out_channels, kdim);
  gw.setZero();
  if (grad_in) *grad_in = Tensor<T>(in.channels, in.batch, in.height, in.width);
  std::vector<T> cols;
  std::vector<T> dcols;
  const int step = samples_per_chunk(in, kernel);
  for (int n0 = 0; n0 < in.batch; n0 += step) {
    const int n1 = std::min(in.batch, n0 + step);
    const std::size_t ncols = static_cast<std::size_t>(n1 - n0) * hw;
    Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>> dy(grad_out.data.data() + n0 * hw, out_channels, ncols,
                                                            Eigen::OuterStride<>(grad_out.channel_size()));
    im2col(in, n0, n1, kernel, cols);
    Eigen::Map<const RowMat<T>> cmat(cols.data(), kdim, ncols);
    gw.noalias() += dy * cmat.transpose();
    if (grad_in) {
      dcols.resize(kdim * ncols);
      Eigen::Map<RowMat<T>> dc(dcols.data(), kdim, ncols);
      dc.noalias() = wmat.transpose() * dy;
      col2im_add(dcols, n0, n1, kernel, *grad_in);
    }
  }
  if (!grad_bias.empty()) {
    for (int c = 0; c < out_channels; ++c) {
      const T* p = grad_out.channel(c);
      double s = 0.0;
      for (std::size_t i = 0; i < grad_out.channel_size(); ++i) s += p[i];
      grad_bias[c] = static_cast<T>(s);
    }
  }
}

template <typename T>
void relu_forward(const Tensor<T>& in, Tensor<T>& out) {
  out.reshape_like(in);
  for (std::size_t i = 0; i < in.size(); ++i) out.data[i] = in.data[i] > T(0) ? in.data[i] : T(0);
}

template <typename T>
void relu_backward(const Tensor<T>& in, const Tensor<T>& grad_out, Tensor<T>& grad_in) {
  grad_in.reshape_like(in);
  for (std::size_t i = 0; i < in.size(); ++i) grad_in.data[i] = in.data[i] > T(0) ? grad_out.data[i] : T(0);
}

template <typename T>
void sigmoid_forward(const Tensor<T>& in, Tensor<T>& out) {
  out.reshape_like(in);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const T x = in.data[i];
    out.data[i] = x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
  }
}

template <typename T>
void sigmoid_backward(const Tensor<T>& out, const Tensor<T>& grad_out, Tensor<T>& grad_in) {
  grad_in.reshape_like(out);
  for (std::size_t i = 0; i < out.size(); ++i) grad_in.data[i] = grad_out.data[i] * out.data[i] * (T(1) - out.data[i]);
}

template <typename T>
void scale_forward(const Tensor<T>& in, T factor, Tensor<T>& out) {
  out.reshape_like(in);
  for (std::size_t i = 0; i < in.size(); ++i) out.data[i] = in.data[i] * factor;
}

template <typename T>
void batchnorm_forward_train(const Tensor<T>& in, std::span<const T> gamma, std::span<const T> beta, Tensor<T>& out,
                             BatchNormCache<T>& cache) {
  out.reshape_like(in);
  const std::size_t m = in.channel_size();
  cache.mean.assign(in.channels, T(0));
  cache.inv_std.assign(in.channels, T(0));
  for (int c = 0; c < in.channels; ++c) {
    const T* x = in.channel(c);
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += x[i];
    const double mean = s / static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) ss += (x[i] - mean) * (x[i] - mean);
    const double var = ss / static_cast<double>(m);
    const double inv_std = 1.0 / std::sqrt(var + kBatchNormEpsilon);
    cache.mean[c] = static_cast<T>(mean);
    cache.inv_std[c] = static_cast<T>(inv_std);
    T* y = out.channel(c);
    const T g = gamma[c], b = beta[c];
    for (std::size_t i = 0; i < m; ++i) y[i] = g * static_cast<T>((x[i] - mean) * inv_std) + b;
  }
}

template <typename T>
void batchnorm_forward_infer(const Tensor<T>& in, std::span<const T> gamma, std::span<const T> beta,
                             std::span<const T> running_mean, std::span<const T> running_var, Tensor<T>& out) {
  out.reshape_like(in);
  const std::size_t m = in.channel_size();
  for (int c = 0; c < in.channels; ++c) {
    const T a = gamma[c] / std::sqrt(running_var[c] + static_cast<T>(kBatchNormEpsilon));
    const T b = beta[c] - a * running_mean[c];
    const T* x = in.channel(c);
    T* y = out.channel(c);
    for (std::size_t i = 0; i < m; ++i) y[i] = a * x[i] + b;
  }
}

template <typename T>
void batchnorm_backward(const Tensor<T>& in, const BatchNormCache<T>& cache, std::span<const T> gamma,
                        const Tensor<T>& grad_out, Tensor<T>& grad_in, std::span<T> grad_gamma, std::span<T> grad_beta) {
  grad_in.reshape_like(in);
  const std::size_t m = in.channel_size();
  for (int c = 0; c < in.channels; ++c) {
    const T* x = in.channel(c);
    const T* dy = grad_out.channel(c);
    const double mean = cache.mean[c], inv_std = cache.inv_std[c];
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      sum_dy += dy[i];
      sum_dy_xhat += dy[i] * (x[i] - mean) * inv_std;
    }
    grad_gamma[c] = static_cast<T>(sum_dy_xhat);
    grad_beta[c] = static_cast<T>(sum_dy);
    const double k = gamma[c] * inv_std / static_cast<double>(m);
    T* dx = grad_in.channel(c);
    for (std::size_t i = 0; i < m; ++i) {
      const double xhat = (x[i] - mean) * inv_std;
      dx[i] = static_cast<T>(k * (static_cast<double>(m) * dy[i] - sum_dy - xhat * sum_dy_xhat));
    }
  }
}

template <typename T>
void dense_forward(const Tensor<T>& in, std::span<const T> weight, T bias, Tensor<T>& out) {
  if (weight.size() != in.features()) throw std::invalid_argument("dense: weight size mismatch");
  out = Tensor<T>(1, in.batch, 1, 1);
  const std::size_t hw = in.plane();
  for (int n = 0; n < in.batch; ++n) {
    double s = bias;
    for (int c = 0; c < in.channels; ++c) {
      const T* x = in.channel(c) + n * hw;
      const T* w = weight.data() + c * hw;
      for (std::size_t p = 0; p < hw; ++p) s += static_cast<double>(w[p]) * x[p];
    }
    out.data[n] = static_cast<T>(s);
  }
}

template <typename T>
void dense_backward(const Tensor<T>& in, std::span<const T> weight, const Tensor<T>& grad_out, Tensor<T>& grad_in,
                    std::span<T> grad_weight, T& grad_bias) {
  grad_in.reshape_like(in);
  std::fill(grad_weight.begin(), grad_weight.end(), T(0));
  const std::size_t hw = in.plane();
  double gb = 0.0;
  for (int n = 0; n < in.batch; ++n) {
    const T g = grad_out.data[n];
    gb += g;
    for (int c = 0; c < in.channels; ++c) {
      const T* x = in.channel(c) + n * hw;
      const T* w = weight.data() + c * hw;
      T* gx = grad_in.channel(c) + n * hw;
      T* gw = grad_weight.data() + c * hw;
      for (std::size_t p = 0; p < hw; ++p) {
        gw[p] += g * x[p];
        gx[p] = g * w[p];
      }
    }
  }
  grad_bias = static_cast<T>(gb);
}

#define TIQ_INSTANTIATE_LAYERS(T)                                                                                    \
  template void conv2d_forward<T>(const Tensor<T>&, std::span<const T>, std::span<const T>, int, int, Tensor<T>&);  \
  template void conv2d_backward<T>(const Tensor<T>&, std::span<const T>, int, int, const Tensor<T>&, Tensor<T>*,    \
                                   std::span<T>, std::span<T>);                                                      \
  template void relu_forward<T>(const Tensor<T>&, Tensor<T>&);                                                       \
  template void relu_backward<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&);                                    \
  template void sigmoid_forward<T>(const Tensor<T>&, Tensor<T>&);                                                    \
  template void sigmoid_backward<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&);                                 \
  template void scale_forward<T>(const Tensor<T>&, T, Tensor<T>&);                                                   \
  template void batchnorm_forward_train<T>(const Tensor<T>&, std::span<const T>, std::span<const T>, Tensor<T>&,     \
                                           BatchNormCache<T>&);                                                      \
  template void batchnorm_forward_infer<T>(const Tensor<T>&, std::span<const T>, std::span<const T>,                 \
                                           std::span<const T>, std::span<const T>, Tensor<T>&);                      \
  template void batchnorm_backward<T>(const Tensor<T>&, const BatchNormCache<T>&, std::span<const T>,                \
                                      const Tensor<T>&, Tensor<T>&, std::span<T>, std::span<T>);                     \
  template void dense_forward<T>(const Tensor<T>&, std::span<const T>, T, Tensor<T>&);                               \
  template void dense_backward<T>(const Tensor<T>&, std::span<const T>, const Tensor<T>&, Tensor<T>&, std::span<T>,  \
                                  T&);

TIQ_INSTANTIATE_LAYERS(float)
TIQ_INSTANTIATE_LAYERS(double)

}  // namespace tiq::nn
