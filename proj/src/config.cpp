#include "tiq/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "tiq/binary_io.hpp"

namespace tiq {

const char* to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::linear_propagation: return "linear_propagation";
    case StudyKind::nonlinear_depth_sweep: return "nonlinear_depth_sweep";
    case StudyKind::signal_size_sweep: return "signal_size_sweep";
    case StudyKind::observer_depth_sweep: return "observer_depth_sweep";
  }
  return "?";
}

const char* to_string(DenoiserFamily family) {
  switch (family) {
    case DenoiserFamily::cnn: return "cnn";
    case DenoiserFamily::resnet: return "resnet";
    case DenoiserFamily::identity: return "identity";
  }
  return "?";
}

StudyKind parse_study_kind(const std::string& text) {
  for (auto k : {StudyKind::linear_propagation, StudyKind::nonlinear_depth_sweep, StudyKind::signal_size_sweep,
                 StudyKind::observer_depth_sweep})
    if (text == to_string(k)) return k;
  throw ConfigError("unknown study kind '" + text + "'");
}

DenoiserFamily parse_family(const std::string& text) {
  for (auto f : {DenoiserFamily::cnn, DenoiserFamily::resnet, DenoiserFamily::identity})
    if (text == to_string(f)) return f;
  throw ConfigError("unknown denoiser family '" + text + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& s) {
  if (s == "sqrt2") return std::sqrt(2.0);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) throw ConfigError("not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("not a non-negative integer: '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  const auto v = parse_u64(s);
  if (v > 1u << 30) throw ConfigError("integer out of range: '" + s + "'");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "on") return true;
  if (s == "false" || s == "0" || s == "off") return false;
  throw ConfigError("not a boolean: '" + s + "'");
}

nn::LossKind parse_denoiser_loss(const std::string& s) {
  if (s == "mse") return nn::LossKind::mse;
  if (s == "perceptual") return nn::LossKind::perceptual;
  throw ConfigError("denoiser loss must be mse or perceptual, got '" + s + "'");
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + f(xs[i]);
  return out;
}

struct Key {
  const char* section;
  const char* name;
  const char* doc;
  std::function<void(ExperimentPlan&, const std::string&)> set;
  std::function<std::string(const ExperimentPlan&)> get;
};

#define TIQ_NUM(sec, key, doc, field)                                                   \
  Key {                                                                                 \
    sec, key, doc, [](ExperimentPlan& p, const std::string& v) { p.field = parse_double(v); }, \
        [](const ExperimentPlan& p) { return fmt(p.field); }                            \
  }
#define TIQ_INT(sec, key, doc, field)                                                        \
  Key {                                                                                      \
    sec, key, doc, [](ExperimentPlan& p, const std::string& v) { p.field = parse_int(v); },  \
        [](const ExperimentPlan& p) { return std::to_string(p.field); }                      \
  }
#define TIQ_SIZE(sec, key, doc, field)                                                       \
  Key {                                                                                      \
    sec, key, doc, [](ExperimentPlan& p, const std::string& v) { p.field = parse_u64(v); },  \
        [](const ExperimentPlan& p) { return std::to_string(p.field); }                      \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"study", "kind", "linear_propagation | nonlinear_depth_sweep | signal_size_sweep | observer_depth_sweep",
       [](ExperimentPlan& p, const std::string& v) { p.kind = parse_study_kind(v); },
       [](const ExperimentPlan& p) { return std::string(to_string(p.kind)); }},
      {"study", "seed", "master seed",
       [](ExperimentPlan& p, const std::string& v) { p.data.master_seed = parse_u64(v); },
       [](const ExperimentPlan& p) { return std::to_string(p.data.master_seed); }},
      {"study", "depths", "denoiser depths (comma list)",
       [](ExperimentPlan& p, const std::string& v) {
         p.depths.clear();
         for (auto& s : split_list(v)) p.depths.push_back(parse_int(s));
       },
       [](const ExperimentPlan& p) { return join(p.depths, [](int d) { return std::to_string(d); }); }},
      {"study", "families", "denoiser families: cnn, resnet, identity",
       [](ExperimentPlan& p, const std::string& v) {
         p.families.clear();
         for (auto& s : split_list(v)) p.families.push_back(parse_family(s));
       },
       [](const ExperimentPlan& p) {
         return join(p.families, [](DenoiserFamily f) { return std::string(to_string(f)); });
       }},
      {"study", "observers", "observer roster: HO, RHO, CHO, NPWMF, CNN",
       [](ExperimentPlan& p, const std::string& v) {
         p.observers.clear();
         static const std::set<std::string> known{"HO", "RHO", "CHO", "NPWMF", "CNN"};
         for (auto& s : split_list(v)) {
           if (!known.count(s)) throw ConfigError("unknown observer '" + s + "'");
           p.observers.push_back(s);
         }
       },
       [](const ExperimentPlan& p) { return join(p.observers, [](const std::string& s) { return s; }); }},
      {"study", "observer_depths", "CNN observer depths (comma list)",
       [](ExperimentPlan& p, const std::string& v) {
         p.observer_depths.clear();
         for (auto& s : split_list(v)) p.observer_depths.push_back(parse_int(s));
       },
       [](const ExperimentPlan& p) { return join(p.observer_depths, [](int d) { return std::to_string(d); }); }},
      {"study", "widths", "signal widths for the signal-size sweep (comma list; 'sqrt2' allowed)",
       [](ExperimentPlan& p, const std::string& v) {
         p.widths.clear();
         for (auto& s : split_list(v)) p.widths.push_back(parse_double(s));
       },
       [](const ExperimentPlan& p) { return join(p.widths, [](double w) { return fmt(w); }); }},

      TIQ_NUM("lumpy", "mean_lumps", "mean number of lumps", data.lumpy.mean_lumps),
      TIQ_NUM("lumpy", "amplitude", "lump magnitude a", data.lumpy.amplitude),
      TIQ_NUM("lumpy", "width", "lump width w_b", data.lumpy.lump_width),

      TIQ_NUM("signal", "amplitude", "signal amplitude A_s", data.signal.amplitude),
      TIQ_NUM("signal", "width", "signal width w_s", data.signal.width),
      TIQ_NUM("signal", "center_x", "signal center column", data.signal.center.x),
      TIQ_NUM("signal", "center_y", "signal center row", data.signal.center.y),

      TIQ_NUM("system", "height", "PSF height h", data.system.height),
      TIQ_NUM("system", "psf_width", "PSF width w_m", data.system.psf_width),
      TIQ_INT("system", "rows", "image rows", data.system.grid.height),
      TIQ_INT("system", "cols", "image columns", data.system.grid.width),

      {"noise", "poisson", "Poisson noise on/off",
       [](ExperimentPlan& p, const std::string& v) { p.data.noise.poisson_enabled = parse_bool(v); },
       [](const ExperimentPlan& p) { return std::string(p.data.noise.poisson_enabled ? "true" : "false"); }},
      TIQ_NUM("noise", "sigma", "Gaussian noise standard deviation", data.noise.gaussian_sigma),

      TIQ_SIZE("data", "train", "training images per class", data.counts.train),
      TIQ_SIZE("data", "validation", "validation images per class", data.counts.validation),
      TIQ_SIZE("data", "test", "test images per class", data.counts.test),
      TIQ_SIZE("data", "covariance", "covariance-estimation images per class", data.counts.covariance),
      {"data", "target", "denoiser target: noiseless | low_noise",
       [](ExperimentPlan& p, const std::string& v) {
         if (v == "noiseless") p.data.target_mode = TargetMode::noiseless;
         else if (v == "low_noise") p.data.target_mode = TargetMode::low_noise;
         else throw ConfigError("target must be noiseless or low_noise");
       },
       [](const ExperimentPlan& p) {
         return std::string(p.data.target_mode == TargetMode::noiseless ? "noiseless" : "low_noise");
       }},
      TIQ_NUM("data", "low_noise_scale", "noise scale of low_noise targets", data.low_noise_scale),

      TIQ_INT("denoiser", "filters", "feature maps of CNN/ResNet denoisers", filters),
      TIQ_INT("denoiser", "linear_filters", "feature maps of linear denoisers", linear_filters),
      TIQ_NUM("denoiser", "input_scale", "input multiplier (output divided by it)", input_scale),
      TIQ_SIZE("denoiser", "iterations", "training iterations", train.iterations),
      TIQ_SIZE("denoiser", "batch_per_class", "mini-batch images per class", train.batch_per_class),
      TIQ_SIZE("denoiser", "validate_every", "iterations between validation passes", train.validate_every),
      TIQ_NUM("denoiser", "learning_rate", "Adam learning rate", train.learning_rate),
      TIQ_INT("denoiser", "extractor_channels", "perceptual feature maps (0 = identity)", train.extractor_channels),
      {"denoiser", "resnet_loss", "ResNet loss: perceptual | mse",
       [](ExperimentPlan& p, const std::string& v) { p.resnet_loss = parse_denoiser_loss(v); },
       [](const ExperimentPlan& p) { return std::string(nn::to_string(p.resnet_loss)); }},

      TIQ_INT("classifier", "filters", "feature maps of CNN observers", classifier_filters),
      TIQ_INT("classifier", "kernel", "kernel size of CNN observers", classifier_kernel),
      TIQ_NUM("classifier", "input_scale", "input multiplier", classifier_input_scale),
      TIQ_SIZE("classifier", "iterations", "training iterations", classifier_train.iterations),
      TIQ_SIZE("classifier", "batch_per_class", "mini-batch images per class", classifier_train.batch_per_class),
      TIQ_SIZE("classifier", "validate_every", "iterations between validation passes",
               classifier_train.validate_every),
      TIQ_NUM("classifier", "learning_rate", "Adam learning rate", classifier_train.learning_rate),

      {"observer", "lambda_grid", "RHO truncation thresholds (comma list)",
       [](ExperimentPlan& p, const std::string& v) {
         p.lambda_grid.clear();
         for (auto& s : split_list(v)) p.lambda_grid.push_back(parse_double(s));
       },
       [](const ExperimentPlan& p) { return join(p.lambda_grid, [](double l) { return fmt(l); }); }},
      TIQ_NUM("observer", "dog_sigma0", "DOG sigma_0 (cycles/pixel)", dog.sigma0),
      TIQ_NUM("observer", "dog_alpha", "DOG alpha", dog.alpha),
      TIQ_NUM("observer", "dog_q", "DOG Q", dog.q),
      TIQ_INT("observer", "dog_count", "number of DOG channels", dog.count),
      TIQ_NUM("observer", "cho_epsilon", "CHO internal noise level", cho_epsilon),
      {"observer", "noisy_covariance", "noisy-image covariance: decomposition | empirical",
       [](ExperimentPlan& p, const std::string& v) {
         if (v == "decomposition") p.noisy_covariance = CovarianceChoice::decomposition;
         else if (v == "empirical") p.noisy_covariance = CovarianceChoice::empirical;
         else throw ConfigError("noisy_covariance must be decomposition or empirical");
       },
       [](const ExperimentPlan& p) {
         return std::string(p.noisy_covariance == CovarianceChoice::decomposition ? "decomposition" : "empirical");
       }},
      {"observer", "noisy_delta", "noisy-image mean difference: signal | empirical",
       [](ExperimentPlan& p, const std::string& v) {
         if (v == "signal") p.noisy_delta = DeltaChoice::signal;
         else if (v == "empirical") p.noisy_delta = DeltaChoice::empirical;
         else throw ConfigError("noisy_delta must be signal or empirical");
       },
       [](const ExperimentPlan& p) { return std::string(p.noisy_delta == DeltaChoice::signal ? "signal" : "empirical"); }},
      TIQ_NUM("observer", "rank_threshold", "relative singular-value threshold for spectrum counts", rank_threshold),

      {"resources", "allow_large", "permit matrices above max_matrix_mib",
       [](ExperimentPlan& p, const std::string& v) { p.allow_large = parse_bool(v); },
       [](const ExperimentPlan& p) { return std::string(p.allow_large ? "true" : "false"); }},
      {"resources", "max_matrix_mib", "memory guard for dense covariance matrices",
       [](ExperimentPlan& p, const std::string& v) { p.max_matrix_bytes = parse_u64(v) << 20; },
       [](const ExperimentPlan& p) { return std::to_string(p.max_matrix_bytes >> 20); }},
  };
  return table;
}

#undef TIQ_NUM
#undef TIQ_INT
#undef TIQ_SIZE

}  // namespace

void ExperimentPlan::validate() const {
  data.validate();
  if (depths.empty()) throw ConfigError("study.depths must not be empty");
  for (int d : depths)
    if (d < 2) throw ConfigError("denoiser depths must be >= 2");
  if (kind == StudyKind::nonlinear_depth_sweep || kind == StudyKind::observer_depth_sweep) {
    if (families.empty()) throw ConfigError("study.families must not be empty");
    for (int d : depths)
      if (d < 3) throw ConfigError("CNN/ResNet denoiser depths must be >= 3");
  }
  if (kind == StudyKind::observer_depth_sweep && observer_depths.empty())
    throw ConfigError("study.observer_depths must not be empty");
  for (int d : observer_depths)
    if (d < 1) throw ConfigError("observer depths must be >= 1");
  if (kind == StudyKind::signal_size_sweep && widths.empty()) throw ConfigError("study.widths must not be empty");
  if (lambda_grid.empty()) throw ConfigError("observer.lambda_grid must not be empty");
  if (filters < 1 || linear_filters < 1 || classifier_filters < 1) throw ConfigError("filter counts must be >= 1");
  if (classifier_kernel < 1 || classifier_kernel % 2 == 0) throw ConfigError("classifier.kernel must be odd");
  if (!(input_scale > 0) || !(classifier_input_scale > 0)) throw ConfigError("input scales must be positive");
  if (train.iterations < 1 || classifier_train.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (train.batch_per_class < 1 || classifier_train.batch_per_class < 1)
    throw ConfigError("batch_per_class must be >= 1");
  if (!(cho_epsilon >= 0)) throw ConfigError("observer.cho_epsilon must be >= 0");
  if (!(rank_threshold > 0)) throw ConfigError("observer.rank_threshold must be positive");
}

std::string ExperimentPlan::canonical() const {
  std::ostringstream os;
  const char* section = "";
  for (const auto& k : keys()) {
    if (std::string(section) != k.section) {
      section = k.section;
      os << '[' << section << "]\n";
    }
    os << k.name << " = " << k.get(*this) << '\n';
  }
  return os.str();
}

std::uint64_t ExperimentPlan::fingerprint() const { return fnv1a64(canonical()); }

ExperimentPlan default_plan(StudyKind kind) {
  ExperimentPlan p;
  p.kind = kind;
  if (kind == StudyKind::linear_propagation) {
    p.data.lumpy = {15.0, 5.0, 3.0, {32, 32}};
    p.data.signal = {2.5, 1.0, {16.0, 16.0}};
    p.data.system = {20.0, 2.0, {32, 32}};
    p.data.noise = {true, 25.0};
    p.depths = {3, 5, 7, 9, 11, 13};
    p.families = {};
    p.observers = {"RHO"};
  } else {
    p.data.lumpy = {50.0, 5.0, 3.0, {64, 64}};
    p.data.signal = {3.0, std::sqrt(2.0), {32.0, 32.0}};
    p.data.system = {20.0, 2.0, {64, 64}};
    p.data.noise = {true, 75.0};
  }
  if (kind == StudyKind::signal_size_sweep) {
    p.families = {DenoiserFamily::cnn};
    p.observers = {"RHO"};
  }
  if (kind == StudyKind::observer_depth_sweep) {
    p.depths = {3, 9, 11};
    p.observers = {"CNN"};
  }
  p.data.counts = {2000, 2000, 2000, 20000};
  return p;
}

void apply_full_scale(ExperimentPlan& plan) {
  plan.data.counts.train = 10000;
  plan.data.counts.test = 10000;
  plan.data.counts.covariance = 100000;
}

void apply_config_text(ExperimentPlan& plan, const std::string& text) {
  std::map<std::string, const Key*> index;
  std::set<std::string> sections;
  for (const auto& k : keys()) {
    index[std::string(k.section) + "." + k.name] = &k;
    sections.insert(k.section);
  }
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of a section");
    const std::string name = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = index.find(name);
    if (it == index.end()) fail("unknown key '" + name + "'");
    if (!seen.insert(name).second) fail("duplicate key '" + name + "'");
    try {
      it->second->set(plan, value);
    } catch (const ConfigError& e) {
      fail(name + ": " + e.what());
    }
  }
  plan.data.lumpy.field = plan.data.system.grid;
}

void apply_config_file(ExperimentPlan& plan, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  apply_config_text(plan, ss.str());
}

std::string config_reference() {
  std::ostringstream os;
  const ExperimentPlan defaults = default_plan(StudyKind::nonlinear_depth_sweep);
  for (const auto& k : keys()) {
    std::string name = std::string(k.section) + "." + k.name;
    os << "  " << name;
    for (std::size_t i = name.size(); i < 30; ++i) os << ' ';
    os << k.doc << " [" << k.get(defaults) << "]\n";
  }
  return os.str();
}

}  // namespace tiq
