#include "tiq/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "tiq/binary_io.hpp"

namespace tiq {

const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
    case Split::covariance: return "covariance";
  }
  return "?";
}

std::size_t SplitCounts::per_class(Split split) const {
  switch (split) {
    case Split::train: return train;
    case Split::validation: return validation;
    case Split::test: return test;
    case Split::covariance: return covariance;
  }
  throw std::invalid_argument("unknown split");
}

void StudyConfig::validate() const {
  lumpy.validate();
  system.validate();
  noise.validate();
  if (lumpy.field != system.grid) throw std::invalid_argument("StudyConfig: lumpy field and system grid differ");
  signal.validate(system.grid);
  if (counts.train < 1 || counts.validation < 1 || counts.test < 1 || counts.covariance < 1)
    throw std::invalid_argument("StudyConfig: every split count must be >= 1");
  if (target_mode == TargetMode::low_noise && !(low_noise_scale > 0.0 && low_noise_scale < 1.0))
    throw std::invalid_argument("StudyConfig: low_noise_scale must lie in (0, 1)");
}

std::string StudyConfig::canonical() const {
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "lumpy=%.17g,%.17g,%.17g,%dx%d;signal=%.17g,%.17g,%.17g,%.17g;system=%.17g,%.17g,%dx%d;"
                "noise=%d,%.17g;counts=%zu,%zu,%zu,%zu;seed=%llu;target=%d,%.17g",
                lumpy.mean_lumps, lumpy.amplitude, lumpy.lump_width, lumpy.field.height, lumpy.field.width,
                signal.amplitude, signal.width, signal.center.x, signal.center.y, system.height, system.psf_width,
                system.grid.height, system.grid.width, noise.poisson_enabled ? 1 : 0, noise.gaussian_sigma,
                counts.train, counts.validation, counts.test, counts.covariance,
                static_cast<unsigned long long>(master_seed), target_mode == TargetMode::low_noise ? 1 : 0,
                low_noise_scale);
  return buf;
}

std::uint64_t StudyConfig::fingerprint() const { return fnv1a64(canonical()); }

Dataset::Dataset(GridDims dims, std::size_t count, bool with_targets)
    : dims_(dims), with_targets_(with_targets), images_(count * dims.pixels()),
      targets_(with_targets ? count * dims.pixels() : 0), labels_(count, Hypothesis::absent) {}

std::vector<std::size_t> Dataset::indices_of(Hypothesis h) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == h) out.push_back(i);
  return out;
}

std::size_t Dataset::count_of(Hypothesis h) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), h));
}

Dataset Dataset::with_images(std::vector<float> images) const {
  if (images.size() != images_.size()) throw std::invalid_argument("Dataset::with_images: size mismatch");
  Dataset out = *this;
  out.images_ = std::move(images);
  return out;
}

namespace {

enum class Content { noisy_with_targets, noiseless_only };

Dataset generate(const StudyConfig& cfg, Split split, Content content) {
  cfg.validate();
  const std::size_t n = cfg.counts.per_class(split);
  const bool targets = content == Content::noisy_with_targets;
  Dataset ds(cfg.system.grid, 2 * n, targets);
  ds.set_fingerprint(cfg.fingerprint());
  const ImageBuffer signal = render_signal_image(cfg.signal, cfg.system);
  NoiseParams target_noise = cfg.noise;
  target_noise.gaussian_sigma *= cfg.low_noise_scale;

  for (std::size_t i = 0; i < 2 * n; ++i) {
    const Hypothesis h = i < n ? Hypothesis::absent : Hypothesis::present;
    ds.set_label(i, h);
    RandomStream rng(derive_seed(cfg.master_seed, {stream_tag::sample, static_cast<std::uint64_t>(split), i}));
    const LumpyRealization lumps = sample_lumpy_realization(cfg.lumpy, rng);
    ImageBuffer clean = render_background_image(lumps, cfg.lumpy, cfg.system);
    if (h == Hypothesis::present) clean = compose_noiseless(clean, signal);

    auto img = ds.image(i);
    if (content == Content::noiseless_only) {
      std::copy(clean.values().begin(), clean.values().end(), img.begin());
      continue;
    }
    const ImageBuffer noisy = apply_noise(clean, cfg.noise, rng);
    std::copy(noisy.values().begin(), noisy.values().end(), img.begin());
    auto tgt = ds.target(i);
    if (cfg.target_mode == TargetMode::noiseless) {
      std::copy(clean.values().begin(), clean.values().end(), tgt.begin());
    } else {
      const ImageBuffer low = apply_noise(clean, target_noise, rng);
      std::copy(low.values().begin(), low.values().end(), tgt.begin());
    }
  }
  return ds;
}

}  // namespace

Dataset generate_split(const StudyConfig& cfg, Split split) { return generate(cfg, split, Content::noisy_with_targets); }

Dataset generate_noiseless(const StudyConfig& cfg, Split split) { return generate(cfg, split, Content::noiseless_only); }

void save_dataset(const Dataset& ds, const std::string& path) {
  if (ds.empty()) throw std::invalid_argument("save_dataset: refusing to save an empty dataset");
  ByteWriter w;
  w.bytes("TIQD", 4);
  w.u32(kDatasetFormatVersion);
  w.u32(static_cast<std::uint32_t>(ds.dims().height));
  w.u32(static_cast<std::uint32_t>(ds.dims().width));
  w.u32(static_cast<std::uint32_t>(ds.size()));
  const bool targets = ds.has_targets();
  w.u8(static_cast<std::uint8_t>((targets ? 1u : 0u) | 2u));
  w.u64(ds.fingerprint());
  for (Hypothesis h : ds.labels()) w.u8(static_cast<std::uint8_t>(h));
  for (float v : ds.image_data()) w.f32(v);
  if (targets)
    for (float v : ds.target_data()) w.f32(v);
  w.seal();
  write_file(path, w.buffer());
}

Dataset load_dataset(const std::string& path) {
  const std::vector<std::uint8_t> file = read_file(path);
  ByteReader header(file);
  header.expect_magic("TIQD");
  const auto payload = verify_sealed(file);
  ByteReader r(payload);
  r.expect_magic("TIQD");
  if (r.u32() != kDatasetFormatVersion) throw FormatError("unsupported dataset format version");
  const auto height = r.u32();
  const auto width = r.u32();
  const auto count = r.u32();
  const auto flags = r.u8();
  const auto fingerprint = r.u64();
  if (height == 0 || width == 0) throw FormatError("dataset header has zero dimension");
  if (count == 0) throw FormatError("dataset header has zero samples");
  if (flags & ~3u) throw FormatError("unknown dataset flags");
  const bool targets = flags & 1u;
  const bool labels = flags & 2u;
  const GridDims dims{static_cast<int>(height), static_cast<int>(width)};
  const std::size_t values = static_cast<std::size_t>(count) * dims.pixels();
  const std::size_t expected = (labels ? count : 0) + 4 * values * (targets ? 2 : 1);
  if (r.remaining() != expected) throw FormatError("dataset size does not match header");
  Dataset ds(dims, count, targets);
  ds.set_fingerprint(fingerprint);
  if (labels) {
    for (std::size_t i = 0; i < count; ++i) {
      const auto l = r.u8();
      if (l > 1) throw FormatError("invalid label byte");
      ds.set_label(i, static_cast<Hypothesis>(l));
    }
  }
  for (float& v : ds.image_data()) v = r.f32();
  if (targets)
    for (float& v : ds.target_data()) v = r.f32();
  return ds;
}

}  // namespace tiq
