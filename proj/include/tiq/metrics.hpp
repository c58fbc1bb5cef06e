#pragma once

#include <span>
#include <string>
#include <vector>

#include "tiq/dataset.hpp"
#include "tiq/image.hpp"

namespace tiq {

/// Paired (test statistic, truth) samples for ROC analysis.
struct ScoreSet {
  std::vector<double> scores;
  std::vector<Hypothesis> labels;
  std::string observer;
};

struct RocPoint {
  double fpf = 0.0;
  double tpf = 0.0;
};

struct RocResult {
  double auc = 0.5;
  double standard_error = 0.0;
  std::vector<RocPoint> roc_points;
};

/// Mann-Whitney AUC (ties count one half) with a DeLong standard error.
/// Runs in O(n log n) via midranks.
RocResult empirical_auc(const ScoreSet& scores);

struct EfficiencyResult {
  double auc_noisy = 0.0;
  double auc_denoised = 0.0;
  double efficiency = 0.0;
  double standard_error = 0.0;
};

/// e = AUC_denoised / AUC_noisy. The error is first-order propagation of
/// both AUC errors, treated as independent.
EfficiencyResult detection_efficiency(const RocResult& noisy, const RocResult& denoised);

double rmse(std::span<const float> image, std::span<const float> reference);
double rmse(const ImageBuffer& image, const ImageBuffer& reference);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean of the local SSIM map over the fully-overlapping window positions,
/// Gaussian-weighted. `dynamic_range` is L in C1 = (k1 L)^2, C2 = (k2 L)^2.
double ssim(std::span<const float> image, std::span<const float> reference, GridDims dims, double dynamic_range,
            const SsimOptions& opt = {});
double ssim(const ImageBuffer& image, const ImageBuffer& reference, double dynamic_range, const SsimOptions& opt = {});

struct ImageQuality {
  double rmse = 0.0;
  double ssim = 0.0;
  double dynamic_range = 0.0;
};

/// Mean per-image RMSE and SSIM of `images` against the targets of `reference`.
/// L is max - min over all reference targets.
ImageQuality image_quality(const Dataset& images, const Dataset& reference, const SsimOptions& opt = {});

}  // namespace tiq
