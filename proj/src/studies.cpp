#include "tiq/studies.hpp"

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tiq/binary_io.hpp"
#include "tiq/covariance.hpp"
#include "tiq/nn/architectures.hpp"
#include "tiq/observers.hpp"

namespace tiq {

const std::string* StudyReport::find(const std::string& name) const {
  for (const auto& f : files)
    if (f.name == name) return &f.content;
  return nullptr;
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

using Clock = std::chrono::steady_clock;

class Manifest {
 public:
  explicit Manifest(const ExperimentPlan& plan) : plan_(plan), start_(Clock::now()), last_(start_) {}

  void step(const std::string& name, const Progress& progress) {
    const auto now = Clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    timings_ += name + " = " + num(s) + "\n";
    if (progress) progress(name + " (" + num(s) + " s)");
  }

  std::string finish(const std::vector<OutputFile>& files) const {
    std::ostringstream os;
    os << "study = " << to_string(plan_.kind) << '\n'
       << "fingerprint = " << hex(plan_.fingerprint()) << '\n'
       << "data_fingerprint = " << hex(plan_.data.fingerprint()) << '\n'
       << "seed = " << plan_.data.master_seed << '\n'
       << "tiq_version = " << kTiqVersion << '\n'
       << "eigen_version = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n'
       << "total_seconds = " << num(std::chrono::duration<double>(Clock::now() - start_).count()) << '\n';
    os << "\n[files]\n";
    for (const auto& f : files) os << f.name << " = " << hex(fnv1a64(f.content)) << '\n';
    os << "\n[timings]\n" << timings_ << "\n# config\n" << plan_.canonical();
    return os.str();
  }

 private:
  const ExperimentPlan& plan_;
  Clock::time_point start_, last_;
  std::string timings_;
};

void guard_matrix(const ExperimentPlan& plan, std::size_t dim) {
  const std::size_t bytes = dim * dim * sizeof(double);
  if (!plan.allow_large && bytes > plan.max_matrix_bytes)
    throw std::runtime_error("a " + std::to_string(dim) + "x" + std::to_string(dim) + " covariance needs " +
                             std::to_string(bytes >> 20) + " MiB, above the " +
                             std::to_string(plan.max_matrix_bytes >> 20) + " MiB guard; pass --allow-large");
}

std::uint64_t family_tag(DenoiserFamily f) { return static_cast<std::uint64_t>(f) + 1; }

// Training and evaluation data of one image domain (noisy or denoised).
struct Domain {
  const Dataset* train = nullptr;
  const Dataset* val = nullptr;
  const Dataset* test = nullptr;
  const Dataset* cov = nullptr;            // images of this domain
  const Dataset* cov_noiseless = nullptr;  // objects, for the decomposition
  // The imaging chain is still linear (noisy images or the identity map), so
  // the analytic signal and the covariance decomposition apply.
  bool linear_chain = false;
};

struct DomainEval {
  std::vector<std::pair<std::string, RocResult>> roc;
  std::vector<std::pair<std::string, std::string>> unavailable;
  SpectrumResult spectrum;
  std::size_t rank = 0;
  double rho_lambda = 0.0;

  const RocResult* find(const std::string& name) const {
    for (const auto& r : roc)
      if (r.first == name) return &r.second;
    return nullptr;
  }
};

bool in_roster(const ExperimentPlan& plan, const std::string& name) {
  for (const auto& o : plan.observers)
    if (o == name) return true;
  return false;
}

std::vector<std::string> roster_names(const ExperimentPlan& plan) {
  std::vector<std::string> out;
  for (const auto& o : plan.observers) {
    if (o == "CNN")
      for (int d : plan.observer_depths) out.push_back("CNN-" + std::to_string(d));
    else
      out.push_back(o);
  }
  return out;
}

std::uint64_t cho_noise_seed(const ExperimentPlan& plan) {
  return derive_seed(plan.data.master_seed, {stream_tag::observer, stream_tag::internal_noise});
}

RocResult train_and_score_classifier(const ExperimentPlan& plan, int depth, const Dataset& train, const Dataset& val,
                                     const Dataset& test) {
  const nn::NetworkSpec spec = classifier_spec(plan, depth);
  const nn::TrainResult tr = nn::train_network(spec, train, val, classifier_options(plan, depth));
  return empirical_auc(cnn_observer_scores(spec, tr.params, test, "CNN-" + std::to_string(depth)));
}

DomainEval evaluate_domain(const ExperimentPlan& plan, const Domain& d, bool want_spectrum) {
  DomainEval out;
  const std::size_t n = d.test->pixels();
  const bool need_k = want_spectrum || in_roster(plan, "HO") || in_roster(plan, "RHO");
  const bool need_delta = need_k || in_roster(plan, "NPWMF");

  Eigen::VectorXd delta;
  if (need_delta)
    delta = d.linear_chain && plan.noisy_delta == DeltaChoice::signal ? signal_delta(plan.data)
                                                                      : class_mean_difference(*d.train);
  CovarianceModel k;
  std::unique_ptr<SymmetricSpectrum> eig;
  if (need_k) {
    guard_matrix(plan, n);
    if (d.linear_chain && plan.noisy_covariance == CovarianceChoice::decomposition)
      k = decomposition_covariance(*d.cov_noiseless, plan.data.noise);
    else
      k = class_averaged_covariance(*d.cov);
    eig = std::make_unique<SymmetricSpectrum>(k.matrix);
    out.spectrum = eig->spectrum();
    out.rank = out.spectrum.count_above(plan.rank_threshold);
  }

  for (const auto& name : plan.observers) {
    if (name == "HO") {
      try {
        const LinearTemplate t = hotelling_template(k.matrix, delta);
        out.roc.emplace_back("HO", empirical_auc(linear_scores(t, *d.test, "HO")));
      } catch (const IllConditionedError& e) {
        out.unavailable.emplace_back("HO", "ill-conditioned covariance");
      }
    } else if (name == "RHO") {
      const RhoTuning tuned =
          rho_tune_lambda(*eig, delta, sample_matrix(*d.val), d.val->labels(), plan.lambda_grid);
      out.rho_lambda = tuned.lambda;
      out.roc.emplace_back("RHO", empirical_auc(linear_scores(tuned.tmpl, *d.test, "RHO")));
    } else if (name == "NPWMF") {
      out.roc.emplace_back("NPWMF", empirical_auc(linear_scores(npwmf_template(delta), *d.test, "NPWMF")));
    } else if (name == "CHO") {
      const ChannelSet ch = dog_channels(plan.dog, d.test->dims(), plan.data.signal.center, plan.cho_epsilon);
      const ChoModel model = train_cho(ch, *d.train);
      out.roc.emplace_back("CHO", empirical_auc(cho_scores(model, *d.test, cho_noise_seed(plan))));
    } else if (name == "CNN") {
      for (int depth : plan.observer_depths)
        out.roc.emplace_back("CNN-" + std::to_string(depth),
                             train_and_score_classifier(plan, depth, *d.train, *d.val, *d.test));
    }
  }
  return out;
}

struct TrainedDenoiser {
  nn::NetworkSpec spec;
  nn::NetworkParams<float> params;
  nn::TrainResult result;
};

TrainedDenoiser train_denoiser(const ExperimentPlan& plan, DenoiserFamily family, int depth, std::uint64_t variant,
                               const Dataset& train, const Dataset& val) {
  TrainedDenoiser out;
  out.spec = denoiser_spec(plan, family, depth);
  if (family == DenoiserFamily::identity) return out;
  out.result = nn::train_network(out.spec, train, val, denoiser_options(plan, family, depth, variant));
  out.params = out.result.params;
  return out;
}

void append_log(std::string& csv, const std::string& fp, const std::string& family, int depth, double width,
                const nn::TrainResult& r) {
  for (const auto& e : r.log)
    csv += fp + ',' + family + ',' + std::to_string(depth) + ',' + num(width) + ',' + std::to_string(e.iteration) +
           ',' + num(e.train_loss) + ',' + num(e.val_metric) + '\n';
}

const char* kLogHeader = "fingerprint,family,depth,width,iteration,train_loss,val_metric\n";
const char* kSpectrumHeader = "fingerprint,label,index,singular_value\n";

// Shared body of the depth and signal-size sweeps for one signal width.
void sweep_one_width(const ExperimentPlan& plan, std::uint64_t fingerprint, std::uint64_t variant, SweepResult& result, std::string& metrics,
                     std::string& table, std::string& spectra, std::string& logs, Manifest& manifest,
                     const Progress& progress) {
  const std::string fp = hex(fingerprint);
  const std::string study = to_string(plan.kind);
  const double width = plan.data.signal.width;
  const std::string tag = "w" + num(width);

  const Dataset train = generate_split(plan.data, Split::train);
  const Dataset val = generate_split(plan.data, Split::validation);
  const Dataset test = generate_split(plan.data, Split::test);
  const Dataset cov = generate_split(plan.data, Split::covariance);
  Dataset cov_noiseless;
  if (plan.noisy_covariance == CovarianceChoice::decomposition)
    cov_noiseless = generate_noiseless(plan.data, Split::covariance);
  manifest.step(tag + " datasets", progress);

  const Domain noisy{&train, &val, &test, &cov, &cov_noiseless, true};
  const DomainEval noisy_eval = evaluate_domain(plan, noisy, true);
  const ImageQuality noisy_q = image_quality(test, test);
  result.denoisers.push_back({"noisy", 0, width, noisy_q, noisy_eval.rank, 0});
  table += fp + ",noisy,0," + num(width) + ',' + num(noisy_q.rmse) + ',' + num(noisy_q.ssim) + ',' +
           std::to_string(noisy_eval.rank) + '\n';
  spectra += spectrum_csv(noisy_eval.spectrum, tag + "_noisy", fingerprint, false);
  manifest.step(tag + " noisy observers", progress);

  const auto names = roster_names(plan);
  for (DenoiserFamily family : plan.families) {
    for (int depth : plan.depths) {
      const std::string fam = to_string(family);
      const std::string label = tag + "_" + fam + std::to_string(depth);
      const TrainedDenoiser net = train_denoiser(plan, family, depth, variant, train, val);
      if (family != DenoiserFamily::identity) append_log(logs, fp, fam, depth, width, net.result);
      manifest.step(label + " training", progress);

      const Dataset d_train = nn::apply_denoiser(net.spec, net.params, train);
      const Dataset d_val = nn::apply_denoiser(net.spec, net.params, val);
      const Dataset d_test = nn::apply_denoiser(net.spec, net.params, test);
      const Dataset d_cov = nn::apply_denoiser(net.spec, net.params, cov);
      const ImageQuality q = image_quality(d_test, test);
      const Domain denoised{&d_train, &d_val, &d_test, &d_cov, &cov_noiseless, family == DenoiserFamily::identity};
      const DomainEval ev = evaluate_domain(plan, denoised, true);
      result.denoisers.push_back({fam, depth, width, q, ev.rank, net.result.best_iteration});
      table += fp + ',' + fam + ',' + std::to_string(depth) + ',' + num(width) + ',' + num(q.rmse) + ',' +
               num(q.ssim) + ',' + std::to_string(ev.rank) + '\n';
      spectra += spectrum_csv(ev.spectrum, label, fingerprint, false);

      for (const auto& name : names) {
        ObserverRow row{fam, depth, width, name, false, {}, {}, {}, {}};
        const RocResult* a = noisy_eval.find(name);
        const RocResult* b = ev.find(name);
        if (a && b) {
          row.available = true;
          row.noisy = *a;
          row.denoised = *b;
          row.efficiency = detection_efficiency(*a, *b);
        } else {
          row.note = "unavailable";
          for (const auto& u : noisy_eval.unavailable)
            if (u.first == name) row.note = "noisy: " + u.second;
          for (const auto& u : ev.unavailable)
            if (u.first == name) row.note = "denoised: " + u.second;
        }
        const double nan = std::nan("");
        metrics += fp + ',' + study + ',' + fam + ',' + std::to_string(depth) + ',' + num(width) + ',' + name + ',' +
                   num(row.available ? row.denoised.auc : nan) + ',' +
                   num(row.available ? row.denoised.standard_error : nan) + ',' +
                   num(row.available ? row.efficiency.efficiency : nan) + ',' +
                   num(row.available ? row.efficiency.standard_error : nan) + ',' +
                   num(row.available ? row.noisy.auc : nan) + ',' +
                   num(row.available ? row.noisy.standard_error : nan) + ',' + num(q.rmse) + ',' + num(q.ssim) + ',' +
                   row.note + '\n';
        result.observers.push_back(std::move(row));
      }
      manifest.step(label + " observers", progress);
    }
  }
}

SweepResult run_sweep(const ExperimentPlan& plan, const std::vector<double>& widths, const Progress& progress) {
  plan.validate();
  Manifest manifest(plan);
  SweepResult result;
  std::string metrics =
      "fingerprint,study,family,depth,width,observer,auc,se,efficiency,efficiency_se,auc_noisy,se_noisy,rmse,ssim,"
      "note\n";
  std::string table = "fingerprint,family,depth,width,rmse,ssim,rank\n";
  std::string spectra = kSpectrumHeader;
  std::string logs = kLogHeader;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    ExperimentPlan p = plan;
    p.data.signal.width = widths[i];
    sweep_one_width(p, plan.fingerprint(), i, result, metrics, table, spectra, logs, manifest, progress);
  }
  const bool sweep = plan.kind == StudyKind::signal_size_sweep;
  result.report.files = {{sweep ? "fig7_efficiency.csv" : "metrics.csv", metrics},
                         {"table2.csv", table},
                         {"spectra.csv", spectra},
                         {"train_log.csv", logs}};
  result.report.manifest = manifest.finish(result.report.files);
  return result;
}

}  // namespace

nn::NetworkSpec denoiser_spec(const ExperimentPlan& plan, DenoiserFamily family, int depth) {
  const GridDims dims = plan.data.system.grid;
  switch (family) {
    case DenoiserFamily::cnn: return nn::make_cnn_denoiser(dims, depth, plan.filters, plan.input_scale);
    case DenoiserFamily::resnet: return nn::make_resnet_denoiser(dims, depth, plan.filters, plan.input_scale);
    case DenoiserFamily::identity: return nn::make_identity(dims);
  }
  throw std::invalid_argument("denoiser_spec: unknown family");
}

nn::NetworkSpec linear_denoiser_spec(const ExperimentPlan& plan, int depth) {
  return nn::make_linear_denoiser(plan.data.system.grid, depth, plan.linear_filters, false);
}

nn::NetworkSpec classifier_spec(const ExperimentPlan& plan, int depth) {
  return nn::make_cnn_classifier(plan.data.system.grid, depth, plan.classifier_filters, plan.classifier_kernel,
                                 plan.classifier_input_scale);
}

nn::TrainOptions denoiser_options(const ExperimentPlan& plan, DenoiserFamily family, int depth, std::uint64_t variant) {
  nn::TrainOptions opt = plan.train;
  opt.loss = family == DenoiserFamily::resnet ? plan.resnet_loss : nn::LossKind::mse;
  opt.seed = derive_seed(plan.data.master_seed,
                         {stream_tag::depth, family_tag(family), static_cast<std::uint64_t>(depth), stream_tag::width,
                          variant});
  opt.extractor_seed = plan.data.master_seed;
  return opt;
}

nn::TrainOptions classifier_options(const ExperimentPlan& plan, int depth) {
  nn::TrainOptions opt = plan.classifier_train;
  opt.loss = nn::LossKind::bce;
  opt.seed = derive_seed(plan.data.master_seed, {stream_tag::observer, static_cast<std::uint64_t>(depth)});
  return opt;
}

LinearStudyResult run_linear_propagation(const ExperimentPlan& plan, const Progress& progress) {
  plan.validate();
  Manifest manifest(plan);
  const std::string fp = hex(plan.fingerprint());
  LinearStudyResult result;

  const Dataset train = generate_split(plan.data, Split::train);
  const Dataset val = generate_split(plan.data, Split::validation);
  const Dataset test = generate_split(plan.data, Split::test);
  const std::size_t n = test.pixels();
  guard_matrix(plan, n);
  CovarianceModel k_in;
  if (plan.noisy_covariance == CovarianceChoice::decomposition)
    k_in = decomposition_covariance(generate_noiseless(plan.data, Split::covariance), plan.data.noise);
  else
    k_in = class_averaged_covariance(generate_split(plan.data, Split::covariance));
  const Eigen::VectorXd delta_in =
      plan.noisy_delta == DeltaChoice::signal ? signal_delta(plan.data) : class_mean_difference(train);
  const Eigen::MatrixXd val_in = sample_matrix(val);
  const Eigen::MatrixXd test_in = sample_matrix(test);
  manifest.step("datasets and input covariance", progress);

  std::string spectra = kSpectrumHeader;
  std::string logs = kLogHeader;
  auto evaluate_layer = [&](int depth, int layer, const Eigen::MatrixXd& k, const Eigen::VectorXd& delta,
                            const Eigen::MatrixXd& vf, const Eigen::MatrixXd& tf) {
    const SymmetricSpectrum eig(k);
    const RhoTuning tuned = rho_tune_lambda(eig, delta, vf, val.labels(), plan.lambda_grid);
    const RocResult roc = empirical_auc(linear_scores(tuned.tmpl, tf, test.labels(), "RHO"));
    const SpectrumResult s = eig.spectrum();
    spectra += spectrum_csv(s, "D" + std::to_string(depth) + "_L" + std::to_string(layer), plan.fingerprint(), false);
    return LinearLayerRow{depth, layer, roc.auc, roc.standard_error, tuned.lambda, s.count_above(plan.rank_threshold)};
  };

  const LinearLayerRow input_row = evaluate_layer(0, 0, k_in.matrix, delta_in, val_in, test_in);
  manifest.step("input layer", progress);

  int max_depth = 0;
  for (int depth : plan.depths) {
    max_depth = std::max(max_depth, depth);
    const nn::NetworkSpec spec = linear_denoiser_spec(plan, depth);
    const nn::TrainResult tr =
        nn::train_network(spec, train, val, denoiser_options(plan, DenoiserFamily::cnn, depth, 1000));
    append_log(logs, fp, "linear", depth, plan.data.signal.width, tr);
    manifest.step("D" + std::to_string(depth) + " training", progress);

    const std::vector<double> params(tr.params.values.begin(), tr.params.values.end());
    const auto layout = nn::make_layout(spec);
    PropagationOptions popt{plan.allow_large, plan.max_matrix_bytes};
    const auto ks = propagate_covariance(k_in, spec, params, static_cast<std::size_t>(depth), popt);

    LinearLayerRow r0 = input_row;
    r0.depth = depth;
    result.rows.push_back(r0);
    Eigen::MatrixXd vf = val_in, tf = test_in;
    Eigen::VectorXd delta = delta_in;
    for (int layer = 1; layer <= depth; ++layer) {
      const auto& l = spec.layers[static_cast<std::size_t>(layer - 1)];
      const auto& slot = layout.slots[static_cast<std::size_t>(layer - 1)];
      const SparseMatrix w = conv_layer_matrix(l, std::span<const double>(params).subspan(slot.weight, slot.weight_count),
                                               spec.input);
      vf = (vf * w.transpose()).eval();
      tf = (tf * w.transpose()).eval();
      delta = (w * delta).eval();
      result.rows.push_back(evaluate_layer(depth, layer, ks[static_cast<std::size_t>(layer - 1)].matrix, delta, vf, tf));
    }
    manifest.step("D" + std::to_string(depth) + " propagation", progress);
  }

  std::string table = "fingerprint,depth,layer,auc,se,lambda,rank\n";
  for (const auto& r : result.rows)
    table += fp + ',' + std::to_string(r.depth) + ',' + std::to_string(r.layer) + ',' + num(r.auc) + ',' +
             num(r.standard_error) + ',' + num(r.lambda) + ',' + std::to_string(r.rank) + '\n';
  // Wide layout: one row per depth, one column per layer index.
  std::string wide = "fingerprint,depth";
  for (int l = 0; l <= max_depth; ++l) wide += ",layer_" + std::to_string(l);
  wide += '\n';
  for (int depth : plan.depths) {
    std::vector<std::string> cells(static_cast<std::size_t>(max_depth) + 1);
    for (const auto& r : result.rows)
      if (r.depth == depth) cells[static_cast<std::size_t>(r.layer)] = num(r.auc);
    wide += fp + ',' + std::to_string(depth);
    for (const auto& c : cells) wide += ',' + c;
    wide += '\n';
  }
  result.report.files = {
      {"table1.csv", table}, {"table1_wide.csv", wide}, {"spectra.csv", spectra}, {"train_log.csv", logs}};
  result.report.manifest = manifest.finish(result.report.files);
  return result;
}

SweepResult run_nonlinear_depth_sweep(const ExperimentPlan& plan, const Progress& progress) {
  return run_sweep(plan, {plan.data.signal.width}, progress);
}

SweepResult run_signal_size_sweep(const ExperimentPlan& plan, const Progress& progress) {
  return run_sweep(plan, plan.widths, progress);
}

ObserverDepthResult run_observer_depth_sweep(const ExperimentPlan& plan, const Progress& progress) {
  plan.validate();
  Manifest manifest(plan);
  const std::string fp = hex(plan.fingerprint());
  ObserverDepthResult result;

  const Dataset train = generate_split(plan.data, Split::train);
  const Dataset val = generate_split(plan.data, Split::validation);
  const Dataset test = generate_split(plan.data, Split::test);
  manifest.step("datasets", progress);

  struct Source {
    std::string name;
    int depth;
    Dataset train, val, test;
  };
  std::vector<Source> sources;
  sources.push_back({"noisy", 0, train, val, test});
  std::string logs = kLogHeader;
  for (DenoiserFamily family : plan.families)
    for (int depth : plan.depths) {
      const TrainedDenoiser net = train_denoiser(plan, family, depth, 0, train, val);
      if (family != DenoiserFamily::identity)
        append_log(logs, fp, to_string(family), depth, plan.data.signal.width, net.result);
      sources.push_back({to_string(family), depth, nn::apply_denoiser(net.spec, net.params, train),
                         nn::apply_denoiser(net.spec, net.params, val), nn::apply_denoiser(net.spec, net.params, test)});
      manifest.step(std::string(to_string(family)) + std::to_string(depth) + " denoiser", progress);
    }

  std::string fig = "fingerprint,observer_depth,source,denoiser_depth,auc,se\n";
  for (int od : plan.observer_depths) {
    for (const auto& s : sources) {
      const RocResult roc = train_and_score_classifier(plan, od, s.train, s.val, s.test);
      result.rows.push_back({od, s.name, s.depth, roc});
      fig += fp + ',' + std::to_string(od) + ',' + s.name + ',' + std::to_string(s.depth) + ',' + num(roc.auc) + ',' +
             num(roc.standard_error) + '\n';
      manifest.step("observer " + std::to_string(od) + " on " + s.name + std::to_string(s.depth), progress);
    }
  }

  int deepest = 0;
  for (int od : plan.observer_depths) deepest = std::max(deepest, od);
  double noisy_auc = 0.0;
  for (const auto& r : result.rows)
    if (r.observer_depth == deepest && r.source == "noisy") noisy_auc = r.roc.auc;
  std::string dpi = "fingerprint,observer_depth,source,denoiser_depth,auc_noisy,auc_denoised,holds\n";
  for (const auto& r : result.rows) {
    if (r.observer_depth != deepest || r.source == "noisy") continue;
    const DpiRow d{r.source, r.denoiser_depth, deepest, noisy_auc, r.roc.auc, r.roc.auc <= noisy_auc + kDpiTolerance};
    result.dpi.push_back(d);
    dpi += fp + ',' + std::to_string(deepest) + ',' + d.source + ',' + std::to_string(d.denoiser_depth) + ',' +
           num(d.auc_noisy) + ',' + num(d.auc_denoised) + ',' + (d.holds ? "1" : "0") + '\n';
  }
  result.report.files = {{"fig8.csv", fig}, {"dpi_check.csv", dpi}, {"train_log.csv", logs}};
  result.report.manifest = manifest.finish(result.report.files);
  return result;
}

StudyReport run_study(const ExperimentPlan& plan, const Progress& progress) {
  switch (plan.kind) {
    case StudyKind::linear_propagation: return run_linear_propagation(plan, progress).report;
    case StudyKind::nonlinear_depth_sweep: return run_nonlinear_depth_sweep(plan, progress).report;
    case StudyKind::signal_size_sweep: return run_signal_size_sweep(plan, progress).report;
    case StudyKind::observer_depth_sweep: return run_observer_depth_sweep(plan, progress).report;
  }
  throw std::invalid_argument("run_study: unknown study kind");
}

void write_report(const StudyReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& content) {
    const fs::path p = fs::path(dir) / name;
    if (fs::exists(p)) throw std::runtime_error("refusing to overwrite " + p.string() + "; choose another --out");
    std::ofstream f(p, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + p.string());
  };
  for (const auto& f : report.files) put(f.name, f.content);
  put("manifest.txt", report.manifest);
}

}  // namespace tiq
