#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "tiq/studies.hpp"

using namespace tiq;

namespace {

ExperimentPlan tiny(StudyKind kind) {
  ExperimentPlan p = default_plan(kind);
  p.data.lumpy = {6.0, 5.0, 2.0, {12, 12}};
  p.data.system = {20.0, 1.5, {12, 12}};
  p.data.signal = {3.0, 1.0, {6.0, 6.0}};
  p.data.noise = {true, 15.0};
  p.data.counts = {60, 60, 80, 400};
  p.data.master_seed = 17;
  p.filters = 4;
  p.linear_filters = 2;
  p.train.iterations = 30;
  p.train.batch_per_class = 8;
  p.train.validate_every = 10;
  p.train.learning_rate = 1e-3;
  p.train.extractor_channels = 4;
  p.classifier_filters = 4;
  p.classifier_kernel = 3;
  p.classifier_train.iterations = 20;
  p.classifier_train.batch_per_class = 8;
  p.classifier_train.validate_every = 10;
  return p;
}

std::size_t lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("identity denoiser has efficiency exactly one for every observer") {
  auto p = tiny(StudyKind::nonlinear_depth_sweep);
  p.families = {DenoiserFamily::identity};
  p.depths = {3};
  p.observers = {"HO", "RHO", "CHO", "NPWMF"};
  const auto r = run_nonlinear_depth_sweep(p);
  REQUIRE(r.observers.size() == 4);
  for (const auto& row : r.observers) {
    CAPTURE(row.observer);
    CHECK(row.available);
    CHECK(row.efficiency.efficiency == 1.0);
  }
  REQUIRE(r.denoisers.size() == 2);
  CHECK(r.denoisers[1].quality.rmse == r.denoisers[0].quality.rmse);
}

TEST_CASE("depth sweep tables and byte-identical reruns") {
  auto p = tiny(StudyKind::nonlinear_depth_sweep);
  p.families = {DenoiserFamily::cnn, DenoiserFamily::resnet};
  p.depths = {3, 5};
  p.observers = {"RHO", "NPWMF"};
  const auto a = run_nonlinear_depth_sweep(p);
  const auto b = run_nonlinear_depth_sweep(p);
  REQUIRE(a.report.files.size() == b.report.files.size());
  for (std::size_t i = 0; i < a.report.files.size(); ++i) {
    CAPTURE(a.report.files[i].name);
    CHECK(a.report.files[i].content == b.report.files[i].content);
  }
  const auto* metrics = a.report.find("metrics.csv");
  REQUIRE(metrics);
  CHECK(lines(*metrics) == 1 + 2 * 2 * 2);
  CHECK(metrics->rfind("fingerprint,study,family,depth,width,observer,auc,se,efficiency", 0) == 0);
  CHECK(lines(*a.report.find("table2.csv")) == 1 + 1 + 4);
  CHECK(a.report.manifest.find("data_fingerprint") != std::string::npos);
  for (const auto& row : a.denoisers)
    CHECK(std::isfinite(row.quality.rmse));
}

TEST_CASE("signal size sweep writes one block per width") {
  auto p = tiny(StudyKind::signal_size_sweep);
  p.families = {DenoiserFamily::cnn};
  p.depths = {3};
  p.widths = {1.0, 2.0};
  p.observers = {"NPWMF"};
  const auto r = run_signal_size_sweep(p);
  REQUIRE(r.report.find("fig7_efficiency.csv"));
  CHECK(lines(*r.report.find("fig7_efficiency.csv")) == 3);
  CHECK(r.observers[0].width == 1.0);
  CHECK(r.observers[1].width == 2.0);
}

TEST_CASE("linear propagation table") {
  auto p = tiny(StudyKind::linear_propagation);
  p.depths = {2, 3};
  const auto r = run_linear_propagation(p);
  CHECK(r.rows.size() == 3 + 4);
  for (const auto& row : r.rows)
    if (row.layer == 0) CHECK(row.auc == r.rows[0].auc);
  CHECK(lines(*r.report.find("table1.csv")) == 1 + 7);
  CHECK(lines(*r.report.find("table1_wide.csv")) == 3);
  CHECK(r.report.find("table1_wide.csv")->find("layer_3") != std::string::npos);
  // input, then per depth the two-channel hidden layers and the one-channel output
  CHECK(lines(*r.report.find("spectra.csv")) == 1 + 144 + 288 * (1 + 2) + 144 * 2);
}

TEST_CASE("memory guard stops oversized covariance work") {
  auto p = tiny(StudyKind::linear_propagation);
  p.depths = {2};
  p.max_matrix_bytes = 1000;
  CHECK_THROWS(run_linear_propagation(p));
  p.allow_large = true;
  CHECK_NOTHROW(run_linear_propagation(p));
}

TEST_CASE("observer depth sweep rows and data processing check") {
  auto p = tiny(StudyKind::observer_depth_sweep);
  p.families = {DenoiserFamily::cnn};
  p.depths = {3};
  p.observer_depths = {1, 2};
  const auto r = run_observer_depth_sweep(p);
  CHECK(r.rows.size() == 2 * 2);
  REQUIRE(r.dpi.size() == 1);
  CHECK(r.dpi[0].observer_depth == 2);
  CHECK(r.dpi[0].holds == (r.dpi[0].auc_denoised <= r.dpi[0].auc_noisy + kDpiTolerance));
  CHECK(lines(*r.report.find("dpi_check.csv")) == 2);
}

TEST_CASE("reports are written once") {
  auto p = tiny(StudyKind::linear_propagation);
  p.depths = {2};
  const auto report = run_study(p);
  const auto dir = std::filesystem::temp_directory_path() / "tiq_report_test";
  std::filesystem::remove_all(dir);
  write_report(report, dir.string());
  CHECK(std::filesystem::exists(dir / "manifest.txt"));
  CHECK(std::filesystem::exists(dir / "table1.csv"));
  CHECK_THROWS(write_report(report, dir.string()));
  std::filesystem::remove_all(dir);
}

TEST_CASE("seeds differ across depth, family and variant") {
  const auto p = tiny(StudyKind::nonlinear_depth_sweep);
  CHECK(denoiser_options(p, DenoiserFamily::cnn, 3).seed != denoiser_options(p, DenoiserFamily::cnn, 5).seed);
  CHECK(denoiser_options(p, DenoiserFamily::cnn, 3).seed != denoiser_options(p, DenoiserFamily::resnet, 3).seed);
  CHECK(denoiser_options(p, DenoiserFamily::cnn, 3, 1).seed != denoiser_options(p, DenoiserFamily::cnn, 3).seed);
  CHECK(denoiser_options(p, DenoiserFamily::resnet, 3).loss == nn::LossKind::perceptual);
  CHECK(classifier_options(p, 2).loss == nn::LossKind::bce);
}
