#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiq/covariance.hpp"
#include "tiq/dataset.hpp"
#include "tiq/metrics.hpp"
#include "tiq/nn/network.hpp"
#include "tiq/phantom.hpp"

namespace tiq {

enum class TemplateKind { hotelling, regularized_hotelling, npwmf };

const char* to_string(TemplateKind kind);

struct LinearTemplate {
  Eigen::VectorXd weights;
  TemplateKind kind = TemplateKind::npwmf;
  double lambda = 0.0;  // RHO only
  std::uint64_t fingerprint = 0;

  double score(const Eigen::VectorXd& g) const { return weights.dot(g); }
};

/// Raised when K_g is too close to singular for a direct Hotelling solve;
/// the regularized observer is the intended fallback.
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultConditionCap = 1e12;

/// w = K^{-1} delta via a symmetric factorization.
LinearTemplate hotelling_template(const Eigen::MatrixXd& k, const Eigen::VectorXd& delta_mean,
                                  double max_condition = kDefaultConditionCap);

/// w = K_lambda^+ delta.
LinearTemplate rho_template(const SymmetricSpectrum& k, const Eigen::VectorXd& delta_mean, double lambda);
LinearTemplate rho_template(const Eigen::MatrixXd& k, const Eigen::VectorXd& delta_mean, double lambda);

/// 1e-3, 1e-4, ..., 1e-7
std::vector<double> default_lambda_grid();

struct RhoTuning {
  double lambda = 0.0;
  double validation_auc = 0.0;
  std::vector<std::pair<double, double>> grid_auc;  // (lambda, validation AUC)
  LinearTemplate tmpl;
};

/// Picks the grid lambda with the highest validation AUC; ties go to the
/// larger lambda. `validation` holds one observation per row.
RhoTuning rho_tune_lambda(const SymmetricSpectrum& k, const Eigen::VectorXd& delta_mean,
                          const Eigen::MatrixXd& validation, const std::vector<Hypothesis>& labels,
                          const std::vector<double>& grid);

LinearTemplate npwmf_template(const Eigen::VectorXd& delta_mean);

/// Scores of a linear template on each row of `samples`.
ScoreSet linear_scores(const LinearTemplate& t, const Eigen::MatrixXd& samples, const std::vector<Hypothesis>& labels,
                       const std::string& observer);
ScoreSet linear_scores(const LinearTemplate& t, const Dataset& ds, const std::string& observer);

/// Analytic delta-g for an SKE task: the noise-free signal image.
Eigen::VectorXd signal_delta(const StudyConfig& cfg);

// ---- channelized Hotelling -----------------------------------------------

struct DogParams {
  double sigma0 = 0.005;
  double alpha = 1.4;
  double q = 1.67;
  int count = 10;
};

struct ChannelSet {
  Eigen::MatrixXd t;  // count x N, unit-norm rows
  DogParams params;
  double internal_noise = 2.5;  // epsilon
};

/// Difference-of-Gaussians channels: the radial profile
/// C_j(rho) = exp(-(rho / (Q s_j))^2 / 2) - exp(-(rho / s_j)^2 / 2), s_j = sigma0 alpha^j,
/// j = 1..count, sampled on the DFT frequency grid and inverse transformed to
/// pixel space about `center`.
ChannelSet dog_channels(const DogParams& params, GridDims dims, Point2 center, double internal_noise = 2.5);

struct ChoModel {
  ChannelSet channels;
  Eigen::VectorXd weights;         // (K_v + K_int)^{-1} delta_v
  Eigen::VectorXd internal_sigma;  // sqrt(diag(K_int))
};

/// Channelized statistics from labeled training images.
ChoModel train_cho(const ChannelSet& channels, const Dataset& training);

/// Internal noise v_int ~ N(0, K_int) is drawn per image, in dataset order,
/// from a stream seeded by `noise_seed`.
ScoreSet cho_scores(const ChoModel& model, const Dataset& images, std::uint64_t noise_seed,
                    const std::string& observer = "CHO");

ScoreSet cnn_observer_scores(const nn::NetworkSpec& spec, const nn::NetworkParams<float>& params, const Dataset& images,
                             const std::string& observer);

/// CSV columns: fingerprint,image_index,label,observer,score
std::string scores_csv(const ScoreSet& s, std::uint64_t fingerprint, bool header = true);

}  // namespace tiq
