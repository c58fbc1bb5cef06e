// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "tiq/covariance.hpp"
#include "tiq/observers.hpp"
#include "tiq/studies.hpp"

using namespace tiq;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void log(const std::string& msg) { std::fprintf(stderr, "  .. %s\n", msg.c_str()); }

// ---- 1: AUC oracle ---------------------------------------------------------

Outcome auc_oracle() {
  RandomStream rng(101);
  int mismatches = 0;
  for (int set = 0; set < 200; ++set) {
    const std::size_t n0 = 1 + rng.index(1000), n1 = 1 + rng.index(1000);
    const double step = set % 2 ? 0.25 : 0.0;  // odd sets carry many ties
    ScoreSet s;
    for (std::size_t i = 0; i < n0 + n1; ++i) {
      const bool present = i >= n0;
      double v = rng.normal(present ? 0.8 : 0.0, 1.0);
      if (step > 0) v = std::round(v / step) * step;
      s.scores.push_back(v);
      s.labels.push_back(present ? Hypothesis::present : Hypothesis::absent);
    }
    double wins = 0;
    for (std::size_t i = n0; i < n0 + n1; ++i)
      for (std::size_t j = 0; j < n0; ++j)
        wins += s.scores[i] > s.scores[j] ? 1.0 : s.scores[i] == s.scores[j] ? 0.5 : 0.0;
    if (empirical_auc(s).auc != wins / (static_cast<double>(n0) * static_cast<double>(n1))) ++mismatches;
  }

  // HO on N(0, K) vs N(s, K): SNR^2 = s^T K^-1 s
  MatrixXd k(3, 3);
  k << 2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.5;
  const VectorXd s = (VectorXd(3) << 0.6, -0.4, 0.3).finished();
  const double snr = std::sqrt(s.dot(k.ldlt().solve(s)));
  const MatrixXd l = k.llt().matrixL();
  const std::size_t n = 500000;
  MatrixXd g(2 * n, 3);
  std::vector<Hypothesis> labels(2 * n, Hypothesis::absent);
  VectorXd z(3);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    for (auto& v : z) v = rng.normal(0, 1);
    VectorXd x = l * z;
    if (i >= n) x += s, labels[i] = Hypothesis::present;
    g.row(static_cast<Eigen::Index>(i)) = x.transpose();
  }
  const double auc = empirical_auc(linear_scores(hotelling_template(k, s), g, labels, "HO")).auc;
  const double expect = phi(snr / std::sqrt(2.0));
  const bool ok = mismatches == 0 && std::abs(auc - expect) <= 0.005;
  return {ok, fmt("pair-count mismatches %d/200; Gaussian HO AUC %.5f vs %.5f (|diff| %.5f <= 0.005)", mismatches,
                  auc, expect, std::abs(auc - expect))};
}

// ---- 2: gradient suite -----------------------------------------------------

Outcome gradient_suite() {
  bool ok = true;
  std::string detail;
  double worst = 0.0;
  for (const auto& r : gradcheck::run_suite(7, 20)) {
    ok = ok && r.cases == 20 && r.worst <= 1e-6;
    worst = std::max(worst, r.worst);
    detail += fmt("%s %.1e; ", r.kind.c_str(), r.worst);
  }
  return {ok, fmt("worst relative error %.2e <= 1e-6 over 20 cases per kind: ", worst) + detail};
}

// ---- 3: convolution as a matrix --------------------------------------------

Outcome conv_matrix() {
  RandomStream rng(303);
  const GridDims d{8, 8};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int cin = 1 + static_cast<int>(rng.index(4)), cout = 1 + static_cast<int>(rng.index(4));
    const int k = 1 + 2 * static_cast<int>(rng.index(3));
    std::vector<double> w(static_cast<std::size_t>(cin * cout * k * k));
    for (auto& v : w) v = rng.uniform(-1, 1);
    VectorXd x(cin * 64);
    for (auto& v : x) v = rng.normal(0, 1);
    VectorXd ref = VectorXd::Zero(cout * 64);
    for (int co = 0; co < cout; ++co)
      for (int y = 0; y < 8; ++y)
        for (int xx = 0; xx < 8; ++xx)
          for (int ci = 0; ci < cin; ++ci)
            for (int i = 0; i < k; ++i)
              for (int j = 0; j < k; ++j) {
                const int sy = y + i - k / 2, sx = xx + j - k / 2;
                if (sy >= 0 && sy < 8 && sx >= 0 && sx < 8)
                  ref(co * 64 + y * 8 + xx) += w[((co * cin + ci) * k + i) * k + j] * x(ci * 64 + sy * 8 + sx);
              }
    const VectorXd y = conv_layer_matrix(nn::LayerSpec::conv(cin, cout, k, false), w, d) * x;
    worst = std::max(worst, (y - ref).norm() / ref.norm());
  }
  return {worst <= 1e-10, fmt("worst relative error %.2e <= 1e-10 over 100 cases", worst)};
}

// ---- 4: covariance propagation ---------------------------------------------

Outcome covariance_propagation() {
  StudyConfig cfg;
  cfg.lumpy = {5.0, 5.0, 3.0, {12, 12}};
  cfg.signal = {2.5, 1.0, {6.0, 6.0}};
  cfg.system = {20.0, 2.0, {12, 12}};
  cfg.noise = {true, 25.0};
  cfg.counts = {1000, 500, 10, 100000};
  cfg.master_seed = 404;
  const auto train = generate_split(cfg, Split::train), val = generate_split(cfg, Split::validation);
  const auto spec = nn::make_linear_denoiser(cfg.system.grid, 2, 4);
  const auto tr = nn::train_network(spec, train, val, {nn::LossKind::mse, 1500, 16, 100, 3e-3, 9, 0, 1});
  log(fmt("trained 2-layer linear net, validation loss %.1f at iteration %zu", tr.best_metric, tr.best_iteration));

  const auto cov = generate_split(cfg, Split::covariance);
  StudyConfig independent = cfg;  // analytic input must not share object draws with the sample
  independent.master_seed = 405;
  const auto objects = generate_noiseless(independent, Split::covariance);
  const auto k_in = decomposition_covariance(objects, cfg.noise);
  const std::vector<double> params(tr.params.values.begin(), tr.params.values.end());
  const MatrixXd analytic = propagate_covariance(k_in, spec, params, 2).back().matrix;

  const auto pd = tr.params.cast<double>();
  nn::Network<double> net(spec);
  const auto n = static_cast<Eigen::Index>(cov.pixels());
  MatrixXd out0(static_cast<Eigen::Index>(cov.size() / 2), n), out1 = out0;
  for (std::size_t b = 0; b < cov.size(); b += 1000) {
    std::vector<std::size_t> idx;
    for (std::size_t i = b; i < std::min(cov.size(), b + 1000); ++i) idx.push_back(i);
    const auto y = net.infer(pd, nn::gather_images<double>(cov, idx));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const std::size_t i = idx[r];
      MatrixXd& dst = cov.label(i) == Hypothesis::present ? out1 : out0;
      const auto row = static_cast<Eigen::Index>(i % (cov.size() / 2));
      for (Eigen::Index j = 0; j < n; ++j) dst(row, j) = y.data[r * static_cast<std::size_t>(n) + j];
    }
  }
  const MatrixXd sample = average_covariance(empirical_covariance(out0), empirical_covariance(out1)).matrix;
  const double rel = (analytic - sample).norm() / sample.norm();
  return {rel <= 0.05, fmt("||WKW^T - sample||_F / ||sample||_F = %.4f <= 0.05 (2e5 draws, 144 pixels)", rel)};
}

// ---- 5: linear propagation pattern -----------------------------------------

ExperimentPlan desk_linear_plan() {
  ExperimentPlan p = default_plan(StudyKind::linear_propagation);
  p.data.lumpy = {3.75, 5.0, 3.0, {16, 16}};
  p.data.system.grid = {16, 16};
  p.data.signal.center = {8.0, 8.0};
  p.depths = {5, 7, 9};
  p.linear_filters = 4;
  p.train.iterations = 12000;
  p.train.batch_per_class = 32;
  p.train.validate_every = 200;
  p.train.learning_rate = 3e-3;
  return p;
}

Outcome linear_pattern() {
  // Noisy-image anchor on the reference 32x32 geometry; no training involved.
  const ExperimentPlan ref = default_plan(StudyKind::linear_propagation);
  const auto val = generate_split(ref.data, Split::validation), test = generate_split(ref.data, Split::test);
  const auto k = decomposition_covariance(generate_noiseless(ref.data, Split::covariance), ref.data.noise);
  const SymmetricSpectrum eig(k.matrix);
  const VectorXd delta = signal_delta(ref.data);
  const auto tuned = rho_tune_lambda(eig, delta, sample_matrix(val), val.labels(), ref.lambda_grid);
  const double anchor = empirical_auc(linear_scores(tuned.tmpl, test, "RHO")).auc;
  const bool anchor_ok = std::abs(anchor - 0.6376) <= 0.02;
  log(fmt("32x32 noisy RHO AUC %.4f (lambda %.0e)", anchor, tuned.lambda));

  const auto r = run_linear_propagation(desk_linear_plan(), log);
  bool pattern_ok = true;
  std::string detail;
  double input = 0.0;
  for (int depth : desk_linear_plan().depths) {
    double worst_mid = 0.0, final_auc = 0.0;
    for (const auto& row : r.rows) {
      if (row.depth != depth) continue;
      if (row.layer == 0) input = row.auc;
      else if (row.layer < depth) worst_mid = std::max(worst_mid, std::abs(row.auc - input));
      else final_auc = row.auc;
    }
    const bool ok = worst_mid <= 0.01 && final_auc < input;
    pattern_ok = pattern_ok && ok;
    detail += fmt("D%d max|mid-input| %.4f, final-input %+.5f; ", depth, worst_mid, final_auc - input);
  }
  return {anchor_ok && pattern_ok,
          fmt("32x32 noisy RHO AUC %.4f (0.6376 +/- 0.02); 16x16 input AUC %.4f; ", anchor, input) + detail};
}

// ---- 6: image quality anchors ------------------------------------------------

ExperimentPlan desk_denoiser_plan() {
  ExperimentPlan p = default_plan(StudyKind::nonlinear_depth_sweep);
  p.filters = 16;
  p.train.iterations = 2000;
  p.train.batch_per_class = 8;
  p.train.validate_every = 100;
  p.train.learning_rate = 1e-3;
  p.data.counts = {2000, 250, 500, 10};
  return p;
}

Outcome image_quality_anchor() {
  const ExperimentPlan ref = default_plan(StudyKind::nonlinear_depth_sweep);
  const auto test = generate_split(ref.data, Split::test);
  const auto noisy = image_quality(test, test);
  const bool rmse_ok = std::abs(noisy.rmse - 75.42) <= 0.5;
  const bool ssim_ok = std::abs(noisy.ssim - 0.366) <= 0.01;
  log(fmt("noisy RMSE %.4f SSIM %.4f (L %.1f)", noisy.rmse, noisy.ssim, noisy.dynamic_range));

  const ExperimentPlan p = desk_denoiser_plan();
  const auto train = generate_split(p.data, Split::train), val = generate_split(p.data, Split::validation);
  const auto dtest = generate_split(p.data, Split::test);
  const auto spec = denoiser_spec(p, DenoiserFamily::cnn, 3);
  const auto tr = nn::train_network(spec, train, val, denoiser_options(p, DenoiserFamily::cnn, 3));
  const auto before = image_quality(dtest, dtest);
  const auto after = image_quality(nn::apply_denoiser(spec, tr.params, dtest), dtest);
  const bool denoise_ok = after.rmse < before.rmse / 3.0 && after.ssim > 0.85;
  return {rmse_ok && ssim_ok && denoise_ok,
          fmt("noisy RMSE %.3f (75.42 +/- 0.5) %s, noisy SSIM %.4f (0.366 +/- 0.01) %s; depth-3 CNN RMSE %.3f "
              "(< %.3f) SSIM %.4f (> 0.85) %s",
              noisy.rmse, rmse_ok ? "ok" : "MISS", noisy.ssim, ssim_ok ? "ok" : "MISS", after.rmse, before.rmse / 3.0,
              after.ssim, denoise_ok ? "ok" : "MISS")};
}

// ---- 7: spectrum collapse ----------------------------------------------------

ExperimentPlan desk_sweep_plan() {
  ExperimentPlan p = default_plan(StudyKind::nonlinear_depth_sweep);
  p.data.lumpy = {12.5, 5.0, 3.0, {32, 32}};
  p.data.system.grid = {32, 32};
  p.data.signal.center = {16.0, 16.0};
  p.data.counts = {2000, 250, 1000, 4000};
  p.filters = 16;
  p.train.iterations = 2000;
  p.train.batch_per_class = 8;
  p.train.validate_every = 100;
  p.train.learning_rate = 1e-3;
  return p;
}

Outcome spectrum_collapse() {
  ExperimentPlan p = desk_sweep_plan();
  p.families = {DenoiserFamily::cnn};
  p.depths = {3, 7, 13};
  p.observers = {};
  const auto r = run_nonlinear_depth_sweep(p, log);
  std::size_t noisy = 0;
  std::vector<std::size_t> ranks;
  for (const auto& row : r.denoisers) (row.family == "noisy" ? noisy : ranks.emplace_back(row.rank)) = row.rank;
  bool ok = ranks.size() == 3;
  std::string detail = fmt("noisy rank %zu; denoised", noisy);
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    ok = ok && ranks[i] < noisy && (i == 0 || ranks[i] <= ranks[i - 1]);
    detail += fmt(" D%d %zu", p.depths[i], ranks[i]);
  }
  return {ok, detail + " (singular values above 1e-5 sigma_max)"};
}

// ---- 8: data processing inequality ---------------------------------------------

Outcome data_processing() {
  // 16x16 at the same lump density keeps the classifier sweep within budget.
  ExperimentPlan p = desk_sweep_plan();
  p.kind = StudyKind::observer_depth_sweep;
  p.data.lumpy = {3.125, 5.0, 3.0, {16, 16}};
  p.data.system.grid = {16, 16};
  p.data.signal.center = {8.0, 8.0};
  p.data.counts = {2000, 500, 2000, 10};
  p.families = {DenoiserFamily::cnn, DenoiserFamily::resnet};
  p.depths = {3, 9};
  p.train.extractor_channels = 16;
  p.observer_depths = {1, 3};
  p.classifier_train.iterations = 1500;
  p.classifier_train.batch_per_class = 16;
  p.classifier_train.validate_every = 100;
  p.classifier_train.learning_rate = 1e-3;
  const auto r = run_observer_depth_sweep(p, log);
  bool ok = !r.dpi.empty();
  std::string detail;
  for (const auto& d : r.dpi) {
    ok = ok && d.holds;
    detail += fmt("%s%d %.4f vs noisy %.4f; ", d.source.c_str(), d.denoiser_depth, d.auc_denoised, d.auc_noisy);
  }
  return {ok, fmt("CNN observer depth %d, AUC(denoised) <= AUC(noisy) + 0.01: ", r.dpi.empty() ? 0 : r.dpi[0].observer_depth) + detail};
}

// ---- 9: observer identities ----------------------------------------------------

Outcome observer_identities() {
  RandomStream rng(909);
  MatrixXd a(8, 8);
  for (auto& v : a.reshaped()) v = rng.normal(0, 1);
  const MatrixXd k = a * a.transpose() + MatrixXd::Identity(8, 8);
  const VectorXd d = VectorXd::LinSpaced(8, -1.0, 1.5);
  const VectorXd ho = hotelling_template(k, d).weights;
  const VectorXd rho = rho_template(k, d, 1e-12).weights;
  const double rho_err = (rho - ho).norm() / ho.norm();

  MatrixXd g(4000, 8);
  std::vector<Hypothesis> labels(4000, Hypothesis::absent);
  for (Eigen::Index i = 0; i < 4000; ++i) {
    for (Eigen::Index j = 0; j < 8; ++j) g(i, j) = rng.normal(0, 1);
    if (i >= 2000) g.row(i) += 0.05 * d.transpose(), labels[static_cast<std::size_t>(i)] = Hypothesis::present;
  }
  const auto s_ho = linear_scores(hotelling_template(MatrixXd::Identity(8, 8), d), g, labels, "HO");
  const auto s_np = linear_scores(npwmf_template(d), g, labels, "NPWMF");
  const bool same_auc = empirical_auc(s_ho).auc == empirical_auc(s_np).auc;

  ExperimentPlan p = desk_sweep_plan();
  p.data.lumpy.field = p.data.system.grid = {16, 16};
  p.data.signal.center = {8.0, 8.0};
  p.data.counts = {200, 200, 400, 1000};
  p.classifier_train.iterations = 100;
  p.classifier_train.batch_per_class = 8;
  p.classifier_train.validate_every = 50;
  const auto train = generate_split(p.data, Split::train), test = generate_split(p.data, Split::test);
  const auto cho = train_cho(dog_channels(p.dog, p.data.system.grid, p.data.signal.center, 0.0), train);
  const bool cho_det = cho_scores(cho, test, 1).scores == cho_scores(cho, test, 2).scores;

  p.families = {DenoiserFamily::identity};
  p.depths = {3};
  p.observers = {"HO", "RHO", "CHO", "NPWMF", "CNN"};
  p.observer_depths = {1};
  const auto sweep = run_nonlinear_depth_sweep(p);
  bool unit = !sweep.observers.empty();
  std::string effs;
  for (const auto& row : sweep.observers) {
    unit = unit && row.available && row.efficiency.efficiency == 1.0;
    effs += fmt(" %s=%.17g", row.observer.c_str(), row.efficiency.efficiency);
  }
  const bool ok = rho_err <= 1e-8 && same_auc && cho_det && unit;
  return {ok, fmt("RHO(1e-12) vs HO rel %.1e; HO(K=I) and NPWMF AUC %s; CHO(eps=0) %s; identity efficiency:",
                  rho_err, same_auc ? "identical" : "DIFFER", cho_det ? "bit-identical" : "NOT deterministic") +
                  effs};
}

// ---- 10: reproducibility -------------------------------------------------------

Outcome reproducibility() {
  ExperimentPlan base = desk_sweep_plan();
  base.data.lumpy.field = base.data.system.grid = {12, 12};
  base.data.signal.center = {6.0, 6.0};
  base.data.counts = {60, 60, 100, 300};
  base.filters = 4;
  base.linear_filters = 2;
  base.train.iterations = 40;
  base.train.validate_every = 20;
  base.train.extractor_channels = 4;
  base.classifier_filters = 4;
  base.classifier_kernel = 3;
  base.classifier_train.iterations = 30;
  base.classifier_train.batch_per_class = 8;
  base.classifier_train.validate_every = 10;
  base.depths = {3};
  base.observer_depths = {1, 2};
  base.widths = {1.0, 2.0};
  base.observers = {"HO", "RHO", "CHO", "NPWMF"};
  std::size_t files = 0, identical = 0;
  for (auto kind : {StudyKind::linear_propagation, StudyKind::nonlinear_depth_sweep, StudyKind::signal_size_sweep,
                    StudyKind::observer_depth_sweep}) {
    ExperimentPlan p = base;
    p.kind = kind;
    if (kind == StudyKind::observer_depth_sweep) p.observers = {"CNN"};
    const auto a = run_study(p), b = run_study(p);
    for (std::size_t i = 0; i < a.files.size(); ++i) {
      ++files;
      identical += i < b.files.size() && a.files[i].name == b.files[i].name && a.files[i].content == b.files[i].content;
    }
  }
  return {files > 0 && identical == files, fmt("%zu/%zu CSV files byte-identical across reruns of all four studies",
                                               identical, files)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"oracle AUC", auc_oracle},
      {"gradient suite", gradient_suite},
      {"convolution as matrix", conv_matrix},
      {"covariance propagation", covariance_propagation},
      {"linear propagation pattern", linear_pattern},
      {"image quality anchors", image_quality_anchor},
      {"spectrum collapse", spectrum_collapse},
      {"data processing inequality", data_processing},
      {"observer identities", observer_identities},
      {"reproducibility", reproducibility},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
