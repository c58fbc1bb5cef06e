#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tiq/image.hpp"
#include "tiq/imaging.hpp"
#include "tiq/phantom.hpp"

namespace tiq {

enum class Hypothesis : std::uint8_t { absent = 0, present = 1 };

enum class Split : std::uint32_t { train = 0, validation = 1, test = 2, covariance = 3 };

const char* to_string(Split split);

/// Samples per hypothesis for each split.
struct SplitCounts {
  std::size_t train = 2000;
  std::size_t validation = 2000;
  std::size_t test = 2000;
  std::size_t covariance = 20000;

  std::size_t per_class(Split split) const;
};

enum class TargetMode { noiseless, low_noise };

struct StudyConfig {
  LumpyParams lumpy;
  SignalParams signal;
  SystemParams system;
  NoiseParams noise;
  SplitCounts counts;
  std::uint64_t master_seed = 1;
  TargetMode target_mode = TargetMode::noiseless;
  double low_noise_scale = 0.5;

  void validate() const;
  /// Stable text form of every field; the fingerprint hashes it.
  std::string canonical() const;
  std::uint64_t fingerprint() const;
};

/// Labeled images (and optional training targets) stored as contiguous
/// float32 rows, one row of `dims.pixels()` values per sample.
class Dataset {
 public:
  Dataset() = default;
  Dataset(GridDims dims, std::size_t count, bool with_targets);

  GridDims dims() const noexcept { return dims_; }
  std::size_t pixels() const noexcept { return dims_.pixels(); }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  bool has_targets() const noexcept { return with_targets_; }

  std::span<float> image(std::size_t i) { return {images_.data() + i * pixels(), pixels()}; }
  std::span<const float> image(std::size_t i) const { return {images_.data() + i * pixels(), pixels()}; }
  std::span<float> target(std::size_t i) { return {targets_.data() + i * pixels(), pixels()}; }
  std::span<const float> target(std::size_t i) const { return {targets_.data() + i * pixels(), pixels()}; }

  Hypothesis label(std::size_t i) const { return labels_[i]; }
  void set_label(std::size_t i, Hypothesis h) { labels_[i] = h; }
  const std::vector<Hypothesis>& labels() const noexcept { return labels_; }
  std::vector<std::size_t> indices_of(Hypothesis h) const;
  std::size_t count_of(Hypothesis h) const;

  std::vector<float>& image_data() noexcept { return images_; }
  const std::vector<float>& image_data() const noexcept { return images_; }
  std::vector<float>& target_data() noexcept { return targets_; }
  const std::vector<float>& target_data() const noexcept { return targets_; }

  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  void set_fingerprint(std::uint64_t f) noexcept { fingerprint_ = f; }

  /// Copy of this dataset whose images are replaced by `images` (same layout).
  Dataset with_images(std::vector<float> images) const;

 private:
  GridDims dims_{};
  bool with_targets_ = false;
  std::vector<float> images_;
  std::vector<float> targets_;
  std::vector<Hypothesis> labels_;
  std::uint64_t fingerprint_ = 0;
};

/// Noisy inputs with targets. Samples [0, n) are signal-absent and [n, 2n)
/// signal-present; sample i is a pure function of (master_seed, split, i).
Dataset generate_split(const StudyConfig& cfg, Split split);

/// Same objects as generate_split, but the images are the noise-free
/// objects and no targets are stored.
Dataset generate_noiseless(const StudyConfig& cfg, Split split);

/// Dataset file: "TIQD", u32 version, u32 height, u32 width, u32 count,
/// u8 flags (bit0 targets, bit1 labels), u64 config fingerprint, labels (u8 each), images as
/// float32 LE row-major, targets likewise, trailing CRC32 of all preceding bytes.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

}  // namespace tiq
