#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tiq/dataset.hpp"
#include "tiq/imaging.hpp"
#include "tiq/nn/network.hpp"

namespace tiq {

enum class CovarianceSource { empirical, decomposition, propagated, averaged };

const char* to_string(CovarianceSource source);

struct CovarianceModel {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd mean;
  CovarianceSource source = CovarianceSource::empirical;
  std::size_t sample_count = 0;
  int layer = -1;  // propagated: index of the last layer applied

  Eigen::Index dimension() const noexcept { return matrix.rows(); }
};

/// Dataset rows (images) as a dense sample matrix, one observation per row.
Eigen::MatrixXd sample_matrix(const Dataset& ds, std::span<const std::size_t> indices);
Eigen::MatrixXd sample_matrix(const Dataset& ds);

/// Unbiased (n - 1) sample covariance and sample mean of the rows of `samples`.
CovarianceModel empirical_covariance(const Eigen::MatrixXd& samples);
/// Same, streamed over dataset rows so memory stays O(N^2).
CovarianceModel empirical_covariance(const Dataset& ds, std::span<const std::size_t> indices);

/// K_g = (K_0 + K_1) / 2, mean = (mean_0 + mean_1) / 2.
CovarianceModel average_covariance(const CovarianceModel& k0, const CovarianceModel& k1);

/// K_g from the per-class empirical covariances of a labeled dataset.
CovarianceModel class_averaged_covariance(const Dataset& ds);

/// mean(H1) - mean(H0) over the dataset images.
Eigen::VectorXd class_mean_difference(const Dataset& ds);

/// Noisy-image covariance of one class from its noise-free objects:
/// K_object + diag(mean object) [Poisson] + sigma^2 I.
CovarianceModel decomposition_covariance(const Dataset& noiseless, std::span<const std::size_t> indices,
                                         const NoiseParams& noise);
/// Class-averaged K_g for a labeled noise-free dataset.
CovarianceModel decomposition_covariance(const Dataset& noiseless, const NoiseParams& noise);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// W with W vec(x) = vec(layer(x)) for a bias-free convolution or a fixed
/// scale layer. Vectorization is channel-major, then row-major pixels.
SparseMatrix conv_layer_matrix(const nn::LayerSpec& layer, std::span<const double> weights, GridDims dims);

struct PropagationOptions {
  bool allow_large = false;
  /// Largest propagated matrix allowed without allow_large.
  std::size_t max_bytes = std::size_t{2} << 30;
};

/// Covariances after each of the first `layer_count` layers of a linear
/// network: K_d = W_d K_{d-1} W_d^T, the mean propagating as W_d mean.
std::vector<CovarianceModel> propagate_covariance(const CovarianceModel& input, const nn::NetworkSpec& spec,
                                                  std::span<const double> params, std::size_t layer_count,
                                                  const PropagationOptions& opt = {});

/// W_d ... W_1 v for the first `layer_count` layers.
Eigen::VectorXd propagate_vector(const Eigen::VectorXd& v, const nn::NetworkSpec& spec, std::span<const double> params,
                                 std::size_t layer_count);

struct SpectrumResult {
  Eigen::VectorXd singular_values;  // descending
  Eigen::MatrixXd vectors;          // columns match singular_values; empty unless requested

  std::size_t count_above(double lambda) const;
};

/// Eigendecomposition of a symmetric matrix, cached for repeated
/// pseudoinverse applications over a lambda sweep.
class SymmetricSpectrum {
 public:
  explicit SymmetricSpectrum(const Eigen::MatrixXd& k);

  double sigma_max() const noexcept { return sigma_max_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return values_; }
  const Eigen::MatrixXd& eigenvectors() const noexcept { return vectors_; }

  /// Moore-Penrose inverse of K_lambda, the approximation keeping components
  /// with |eigenvalue| > lambda * sigma_max.
  Eigen::MatrixXd truncated_pinv(double lambda) const;
  Eigen::VectorXd apply_truncated_pinv(const Eigen::VectorXd& v, double lambda) const;
  /// K_lambda itself.
  Eigen::MatrixXd truncated(double lambda) const;
  std::size_t count_above(double lambda) const;
  SpectrumResult spectrum(bool keep_vectors = false) const;

 private:
  Eigen::VectorXd values_;
  Eigen::MatrixXd vectors_;
  double sigma_max_ = 0.0;
};

SpectrumResult svd_spectrum(const Eigen::MatrixXd& k, bool keep_vectors = false);
Eigen::MatrixXd truncated_pinv(const Eigen::MatrixXd& k, double lambda);

/// CSV columns: fingerprint,label,index,singular_value
std::string spectrum_csv(const SpectrumResult& s, const std::string& label, std::uint64_t fingerprint,
                         bool header = true);

}  // namespace tiq
