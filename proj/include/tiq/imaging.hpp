#pragma once

#include <optional>

#include "tiq/image.hpp"
#include "tiq/random.hpp"

namespace tiq {

/// Idealized parallel-hole collimator: Gaussian point response of height h
/// and width w_m, identical for every detector pixel.
struct SystemParams {
  double height = 20.0;
  double psf_width = 2.0;
  GridDims grid{32, 32};

  /// A_m = h / (2 pi w_m^2)
  double psf_amplitude() const;
  void validate() const;
};

struct NoiseParams {
  bool poisson_enabled = true;
  double gaussian_sigma = 25.0;

  void validate() const;
};

/// b (signal absent) or b + s (signal present).
ImageBuffer compose_noiseless(const ImageBuffer& background, const std::optional<ImageBuffer>& signal);

/// Independent per-pixel mixed Poisson-Gaussian measurement. Poisson rates
/// are max(clean, 0).
ImageBuffer apply_noise(const ImageBuffer& clean, const NoiseParams& noise, RandomStream& rng);

}  // namespace tiq
