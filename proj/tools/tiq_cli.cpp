// Command-line front end: dataset generation, training, denoising,
// covariance estimation, observers, evaluation and full studies.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "tiq/binary_io.hpp"
#include "tiq/config.hpp"
#include "tiq/covariance.hpp"
#include "tiq/nn/architectures.hpp"
#include "tiq/nn/checkpoint.hpp"
#include "tiq/observers.hpp"
#include "tiq/studies.hpp"

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool paper_scale = false;
  bool allow_large = false;
  std::string out;
  std::string study = "nonlinear_depth_sweep";
};

void add_common(CLI::App* cmd, Common& c, bool with_study = true) {
  cmd->add_option("--config", c.config, "config file (key = value with [sections])");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t s) { c.seed = s, c.seed_set = true; }, "master seed");
  cmd->add_flag("--paper-scale", c.paper_scale, "use the full sample counts");
  cmd->add_flag("--allow-large", c.allow_large, "lift the dense-matrix memory guard");
  if (with_study) cmd->add_option("--study", c.study, "study whose defaults seed the config");
}

tiq::ExperimentPlan make_plan(const Common& c, tiq::StudyKind kind) {
  tiq::ExperimentPlan plan = tiq::default_plan(kind);
  if (!c.config.empty()) tiq::apply_config_file(plan, c.config);
  if (c.seed_set) plan.data.master_seed = c.seed;
  if (c.paper_scale) tiq::apply_full_scale(plan);
  if (c.allow_large) plan.allow_large = true;
  plan.validate();
  return plan;
}

tiq::ExperimentPlan make_plan(const Common& c) { return make_plan(c, tiq::parse_study_kind(c.study)); }

tiq::Split parse_split(const std::string& s) {
  for (auto sp : {tiq::Split::train, tiq::Split::validation, tiq::Split::test, tiq::Split::covariance})
    if (s == tiq::to_string(sp)) return sp;
  throw CLI::ValidationError("--split", "expected train, validation, test or covariance");
}

tiq::nn::NetworkSpec model_spec(const tiq::ExperimentPlan& plan, const std::string& family, int depth) {
  if (family == "linear") return tiq::linear_denoiser_spec(plan, depth);
  return tiq::denoiser_spec(plan, tiq::parse_family(family), depth);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path);
}

void same_fingerprint(const std::vector<const tiq::Dataset*>& sets) {
  for (const auto* d : sets)
    if (d->fingerprint() != sets.front()->fingerprint())
      throw std::runtime_error("input datasets come from different configurations (fingerprint mismatch)");
}

tiq::ScoreSet read_scores(const std::string& path, std::uint64_t& fingerprint) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  tiq::ScoreSet s;
  std::string line;
  std::getline(f, line);
  if (line != "fingerprint,image_index,label,observer,score") throw std::runtime_error(path + ": not a score CSV");
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string fp, idx, label, obs, score;
    std::getline(ss, fp, ',');
    std::getline(ss, idx, ',');
    std::getline(ss, label, ',');
    std::getline(ss, obs, ',');
    std::getline(ss, score, ',');
    const std::uint64_t v = std::stoull(fp, nullptr, 16);
    if (first) fingerprint = v, s.observer = obs;
    else if (v != fingerprint) throw std::runtime_error(path + ": rows from different configurations");
    first = false;
    s.labels.push_back(label == "1" ? tiq::Hypothesis::present : tiq::Hypothesis::absent);
    s.scores.push_back(std::stod(score));
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-based image quality of denoising networks: simulation, training and model observers"};
  app.require_subcommand(1);
  app.footer("Config keys (section.key, description, [default]):\n" + tiq::config_reference());

  Common c;

  auto* gen = app.add_subcommand("generate", "simulate a dataset split");
  add_common(gen, c);
  std::string split = "train";
  bool noiseless = false;
  gen->add_option("--split", split, "train | validation | test | covariance");
  gen->add_flag("--noiseless", noiseless, "store the noise-free objects instead of noisy images");
  gen->add_option("--out", c.out, "output dataset file")->required();

  auto* trn = app.add_subcommand("train-denoiser", "train a denoising network");
  add_common(trn, c);
  std::string family = "cnn", train_path, val_path, in_path, model_path;
  int depth = 3;
  trn->add_option("--family", family, "cnn | resnet | linear");
  trn->add_option("--depth", depth, "network depth");
  trn->add_option("--train", train_path, "training dataset")->required();
  trn->add_option("--val", val_path, "validation dataset")->required();
  trn->add_option("--out", c.out, "output checkpoint")->required();

  auto* den = app.add_subcommand("denoise", "apply a trained denoiser to a dataset");
  add_common(den, c);
  den->add_option("--family", family, "cnn | resnet | linear | identity");
  den->add_option("--depth", depth, "network depth");
  den->add_option("--model", model_path, "checkpoint (not needed for identity)");
  den->add_option("--in", in_path, "input dataset")->required();
  den->add_option("--out", c.out, "output dataset")->required();

  auto* cov = app.add_subcommand("estimate-cov", "class-averaged covariance and its singular values");
  add_common(cov, c);
  bool decomposition = false;
  cov->add_option("--in", in_path, "dataset")->required();
  cov->add_flag("--decomposition", decomposition, "input holds noise-free objects; add the noise model");
  cov->add_option("--out", c.out, "spectrum CSV")->required();

  auto* obs = app.add_subcommand("observer", "score a test set with a model observer");
  add_common(obs, c);
  std::string kind = "RHO", test_path, cov_path, delta = "empirical";
  obs->add_option("--kind", kind, "HO | RHO | CHO | NPWMF | CNN");
  obs->add_option("--train", train_path, "training dataset (CHO, CNN, empirical mean difference)");
  obs->add_option("--val", val_path, "validation dataset (RHO lambda, CNN selection)");
  obs->add_option("--test", test_path, "test dataset")->required();
  obs->add_option("--cov", cov_path, "covariance dataset (HO, RHO)");
  obs->add_flag("--decomposition", decomposition, "--cov holds noise-free objects");
  obs->add_option("--delta", delta, "mean difference: empirical | signal");
  obs->add_option("--depth", depth, "CNN observer depth");
  obs->add_option("--out", c.out, "score CSV")->required();

  auto* ev = app.add_subcommand("evaluate", "AUC, efficiency, RMSE and SSIM");
  add_common(ev, c, false);
  std::string scores_path, baseline_path, images_path, reference_path;
  ev->add_option("--scores", scores_path, "score CSV");
  ev->add_option("--baseline", baseline_path, "score CSV on noisy images, for the efficiency");
  ev->add_option("--images", images_path, "dataset to compare");
  ev->add_option("--reference", reference_path, "dataset whose targets are the reference");
  ev->add_option("--out", c.out, "optional CSV output");

  auto* st = app.add_subcommand("study", "run a complete study");
  add_common(st, c, false);
  std::string study_kind;
  st->add_option("kind", study_kind,
                 "linear_propagation | nonlinear_depth_sweep | signal_size_sweep | observer_depth_sweep")
      ->required();
  st->add_option("--out", c.out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto plan = make_plan(c);
      const tiq::Split sp = parse_split(split);
      tiq::save_dataset(noiseless ? tiq::generate_noiseless(plan.data, sp) : tiq::generate_split(plan.data, sp), c.out);
    } else if (trn->parsed()) {
      const auto plan = make_plan(c);
      const tiq::Dataset train = tiq::load_dataset(train_path), val = tiq::load_dataset(val_path);
      same_fingerprint({&train, &val});
      const auto spec = model_spec(plan, family, depth);
      const auto fam = family == "linear" ? tiq::DenoiserFamily::cnn : tiq::parse_family(family);
      const auto result = tiq::nn::train_network(spec, train, val, tiq::denoiser_options(plan, fam, depth));
      tiq::nn::save_checkpoint(c.out, spec, result.params);
      std::string log = "iteration,train_loss,val_loss\n";
      char buf[96];
      for (const auto& e : result.log) {
        std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g\n", e.iteration, e.train_loss, e.val_metric);
        log += buf;
      }
      write_text(c.out + ".log.csv", log);
      std::printf("best validation loss %.6g at iteration %zu\n", result.best_metric, result.best_iteration);
    } else if (den->parsed()) {
      const auto plan = make_plan(c);
      const tiq::Dataset in = tiq::load_dataset(in_path);
      const auto spec = model_spec(plan, family, depth);
      tiq::nn::NetworkParams<float> params;
      if (spec.arch != tiq::nn::Architecture::identity) {
        if (model_path.empty()) throw std::runtime_error("--model is required for " + family);
        params = tiq::nn::load_checkpoint(model_path, spec);
      }
      tiq::Dataset out = tiq::nn::apply_denoiser(spec, params, in);
      out.set_fingerprint(tiq::derive_seed(in.fingerprint(), {spec.fingerprint()}));
      tiq::save_dataset(out, c.out);
    } else if (cov->parsed()) {
      const auto plan = make_plan(c);
      const tiq::Dataset in = tiq::load_dataset(in_path);
      const auto k = decomposition ? tiq::decomposition_covariance(in, plan.data.noise)
                                   : tiq::class_averaged_covariance(in);
      const auto s = tiq::svd_spectrum(k.matrix);
      write_text(c.out, tiq::spectrum_csv(s, in_path, in.fingerprint()));
      std::printf("dimension %lld, %zu singular values above %.3g sigma_max\n", static_cast<long long>(k.dimension()),
                  s.count_above(plan.rank_threshold), plan.rank_threshold);
    } else if (obs->parsed()) {
      const auto plan = make_plan(c);
      const tiq::Dataset test = tiq::load_dataset(test_path);
      std::map<std::string, tiq::Dataset> loaded;
      auto need = [&](const std::string& path, const char* flag) -> const tiq::Dataset& {
        if (path.empty()) throw std::runtime_error(kind + " needs " + flag);
        auto it = loaded.find(path);
        if (it == loaded.end()) it = loaded.emplace(path, tiq::load_dataset(path)).first;
        return it->second;
      };
      auto mean_difference = [&]() -> Eigen::VectorXd {
        if (delta == "signal") return tiq::signal_delta(plan.data);
        const auto& train = need(train_path, "--train");
        same_fingerprint({&train, &test});
        return tiq::class_mean_difference(train);
      };
      auto covariance = [&]() {
        const auto& cv = need(cov_path, "--cov");
        if (!decomposition) same_fingerprint({&cv, &test});
        return decomposition ? tiq::decomposition_covariance(cv, plan.data.noise) : tiq::class_averaged_covariance(cv);
      };
      tiq::ScoreSet scores;
      if (kind == "HO") {
        scores = tiq::linear_scores(tiq::hotelling_template(covariance().matrix, mean_difference()), test, "HO");
      } else if (kind == "RHO") {
        const auto& val = need(val_path, "--val");
        same_fingerprint({&val, &test});
        const tiq::SymmetricSpectrum eig(covariance().matrix);
        const auto tuned = tiq::rho_tune_lambda(eig, mean_difference(), tiq::sample_matrix(val), val.labels(),
                                                plan.lambda_grid);
        std::printf("selected lambda %.1e (validation AUC %.4f)\n", tuned.lambda, tuned.validation_auc);
        scores = tiq::linear_scores(tuned.tmpl, test, "RHO");
      } else if (kind == "NPWMF") {
        scores = tiq::linear_scores(tiq::npwmf_template(mean_difference()), test, "NPWMF");
      } else if (kind == "CHO") {
        const auto& train = need(train_path, "--train");
        same_fingerprint({&train, &test});
        const auto ch = tiq::dog_channels(plan.dog, test.dims(), plan.data.signal.center, plan.cho_epsilon);
        scores = tiq::cho_scores(tiq::train_cho(ch, train), test,
                                 tiq::derive_seed(plan.data.master_seed, {tiq::stream_tag::observer,
                                                                          tiq::stream_tag::internal_noise}));
      } else if (kind == "CNN") {
        const auto& train = need(train_path, "--train");
        const auto& val = need(val_path, "--val");
        same_fingerprint({&train, &val, &test});
        const auto spec = tiq::classifier_spec(plan, depth);
        const auto result = tiq::nn::train_network(spec, train, val, tiq::classifier_options(plan, depth));
        scores = tiq::cnn_observer_scores(spec, result.params, test, "CNN-" + std::to_string(depth));
      } else {
        throw std::runtime_error("unknown observer kind " + kind);
      }
      write_text(c.out, tiq::scores_csv(scores, test.fingerprint()));
      const auto roc = tiq::empirical_auc(scores);
      std::printf("%s AUC %.4f (SE %.4f)\n", scores.observer.c_str(), roc.auc, roc.standard_error);
    } else if (ev->parsed()) {
      std::string csv;
      if (!scores_path.empty()) {
        std::uint64_t fp = 0, fp0 = 0;
        const auto s = read_scores(scores_path, fp);
        const auto roc = tiq::empirical_auc(s);
        std::printf("%s AUC %.4f (SE %.4f)\n", s.observer.c_str(), roc.auc, roc.standard_error);
        csv = "observer,auc,se,efficiency,efficiency_se\n";
        char buf[160];
        if (!baseline_path.empty()) {
          const auto b = tiq::empirical_auc(read_scores(baseline_path, fp0));
          const auto e = tiq::detection_efficiency(b, roc);
          std::printf("efficiency %.4f (SE %.4f) against baseline AUC %.4f\n", e.efficiency, e.standard_error, b.auc);
          std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g\n", s.observer.c_str(), roc.auc,
                        roc.standard_error, e.efficiency, e.standard_error);
        } else {
          std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,,\n", s.observer.c_str(), roc.auc, roc.standard_error);
        }
        csv += buf;
      } else if (!images_path.empty() && !reference_path.empty()) {
        const auto q = tiq::image_quality(tiq::load_dataset(images_path), tiq::load_dataset(reference_path));
        std::printf("RMSE %.4f  SSIM %.4f  (L = %.4g)\n", q.rmse, q.ssim, q.dynamic_range);
        char buf[128];
        std::snprintf(buf, sizeof buf, "rmse,ssim,dynamic_range\n%.10g,%.10g,%.10g\n", q.rmse, q.ssim,
                      q.dynamic_range);
        csv = buf;
      } else {
        throw std::runtime_error("evaluate needs --scores or --images with --reference");
      }
      if (!c.out.empty()) write_text(c.out, csv);
    } else if (st->parsed()) {
      const auto plan = make_plan(c, tiq::parse_study_kind(study_kind));
      const auto report = tiq::run_study(plan, [](const std::string& msg) { std::fprintf(stderr, "%s\n", msg.c_str()); });
      tiq::write_report(report, c.out);
      std::printf("wrote %zu files to %s\n", report.files.size() + 1, c.out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
