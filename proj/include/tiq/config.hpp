#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiq/dataset.hpp"
#include "tiq/nn/train.hpp"
#include "tiq/observers.hpp"

namespace tiq {

inline constexpr const char* kTiqVersion = "0.1.0";

enum class StudyKind { linear_propagation, nonlinear_depth_sweep, signal_size_sweep, observer_depth_sweep };
enum class DenoiserFamily { cnn, resnet, identity };
enum class CovarianceChoice { decomposition, empirical };
enum class DeltaChoice { signal, empirical };

const char* to_string(StudyKind kind);
const char* to_string(DenoiserFamily family);
StudyKind parse_study_kind(const std::string& text);
DenoiserFamily parse_family(const std::string& text);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a study run depends on. Two plans with equal canonical text
/// produce identical outputs.
struct ExperimentPlan {
  StudyKind kind = StudyKind::nonlinear_depth_sweep;
  StudyConfig data;

  std::vector<int> depths{3, 5, 7, 9, 11, 13};
  std::vector<DenoiserFamily> families{DenoiserFamily::cnn, DenoiserFamily::resnet};
  std::vector<std::string> observers{"HO", "RHO", "CHO", "NPWMF"};
  std::vector<int> observer_depths{1, 2, 4, 6, 8, 10};
  std::vector<double> widths{1.0, 1.4142135623730951, 2.0, 2.5, 3.0};

  // denoisers
  int filters = 64;
  int linear_filters = 32;
  double input_scale = 0.01;
  nn::TrainOptions train{nn::LossKind::mse, 2000, 200, 50, 1e-4, 1, 64, 1};
  nn::LossKind resnet_loss = nn::LossKind::perceptual;

  // CNN observers
  int classifier_filters = 16;
  int classifier_kernel = 5;
  double classifier_input_scale = 0.01;
  nn::TrainOptions classifier_train{nn::LossKind::bce, 2000, 200, 50, 1e-4, 1, 0, 1};

  // linear observers
  std::vector<double> lambda_grid = default_lambda_grid();
  DogParams dog;
  double cho_epsilon = 2.5;
  CovarianceChoice noisy_covariance = CovarianceChoice::decomposition;
  DeltaChoice noisy_delta = DeltaChoice::signal;
  double rank_threshold = 1e-5;

  bool allow_large = false;
  std::size_t max_matrix_bytes = std::size_t{2} << 30;

  void validate() const;
  /// key=value text with [section] headers covering every setting.
  std::string canonical() const;
  std::uint64_t fingerprint() const;
};

/// Reference geometry and noise for a study kind with desk-scale sample counts.
ExperimentPlan default_plan(StudyKind kind);

/// Full sample counts: 1e4 train and test, 1e5 covariance per class.
void apply_full_scale(ExperimentPlan& plan);

/// Applies a config file body. Unknown sections or keys, malformed values and
/// duplicate keys raise ConfigError naming the line.
void apply_config_text(ExperimentPlan& plan, const std::string& text);
void apply_config_file(ExperimentPlan& plan, const std::string& path);

/// One line per key: section.key, default, description.
std::string config_reference();

}  // namespace tiq
