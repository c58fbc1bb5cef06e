#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tiq/config.hpp"
#include "tiq/metrics.hpp"

namespace tiq {

struct OutputFile {
  std::string name;
  std::string content;
};

/// CSV files are a pure function of the plan; the manifest also records timings.
struct StudyReport {
  std::vector<OutputFile> files;
  std::string manifest;

  const std::string* find(const std::string& name) const;
};

using Progress = std::function<void(const std::string&)>;

// ---- linear propagation ----------------------------------------------------

struct LinearLayerRow {
  int depth = 0;
  int layer = 0;  // 0 is the network input
  double auc = 0.0;
  double standard_error = 0.0;
  double lambda = 0.0;
  std::size_t rank = 0;  // singular values above rank_threshold * sigma_max
};

struct LinearStudyResult {
  std::vector<LinearLayerRow> rows;
  StudyReport report;
};

LinearStudyResult run_linear_propagation(const ExperimentPlan& plan, const Progress& progress = {});

// ---- nonlinear depth / signal-size sweeps ------------------------------------

struct DenoiserRow {
  std::string family;  // "noisy" for the undenoised baseline
  int depth = 0;
  double width = 0.0;
  ImageQuality quality;
  std::size_t rank = 0;
  std::size_t best_iteration = 0;
};

struct ObserverRow {
  std::string family;
  int depth = 0;
  double width = 0.0;
  std::string observer;
  bool available = false;  // false when the observer could not be formed (e.g. ill-conditioned HO)
  RocResult noisy;
  RocResult denoised;
  EfficiencyResult efficiency;
  std::string note;
};

struct SweepResult {
  std::vector<DenoiserRow> denoisers;
  std::vector<ObserverRow> observers;
  StudyReport report;
};

SweepResult run_nonlinear_depth_sweep(const ExperimentPlan& plan, const Progress& progress = {});
SweepResult run_signal_size_sweep(const ExperimentPlan& plan, const Progress& progress = {});

// ---- CNN observer depth sweep ----------------------------------------------

struct ClassifierRow {
  int observer_depth = 0;
  std::string source;  // noisy, cnn, resnet, identity
  int denoiser_depth = 0;
  RocResult roc;
};

struct DpiRow {
  std::string source;
  int denoiser_depth = 0;
  int observer_depth = 0;
  double auc_noisy = 0.0;
  double auc_denoised = 0.0;
  bool holds = false;  // auc_denoised <= auc_noisy + 0.01
};

struct ObserverDepthResult {
  std::vector<ClassifierRow> rows;
  std::vector<DpiRow> dpi;
  StudyReport report;
};

ObserverDepthResult run_observer_depth_sweep(const ExperimentPlan& plan, const Progress& progress = {});

StudyReport run_study(const ExperimentPlan& plan, const Progress& progress = {});

/// Writes every file plus manifest.txt into `dir` (created if needed).
void write_report(const StudyReport& report, const std::string& dir);

// ---- building blocks shared with the CLI ---------------------------------------

nn::NetworkSpec denoiser_spec(const ExperimentPlan& plan, DenoiserFamily family, int depth);
nn::NetworkSpec linear_denoiser_spec(const ExperimentPlan& plan, int depth);
nn::NetworkSpec classifier_spec(const ExperimentPlan& plan, int depth);
nn::TrainOptions denoiser_options(const ExperimentPlan& plan, DenoiserFamily family, int depth,
                                  std::uint64_t variant = 0);
nn::TrainOptions classifier_options(const ExperimentPlan& plan, int depth);

inline constexpr double kDpiTolerance = 0.01;

}  // namespace tiq
