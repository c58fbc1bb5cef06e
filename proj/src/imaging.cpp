#include "tiq/imaging.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tiq {

double SystemParams::psf_amplitude() const { return height / (2.0 * std::numbers::pi * psf_width * psf_width); }

void SystemParams::validate() const {
  if (!(height > 0.0)) throw std::invalid_argument("SystemParams: height must be positive");
  if (!(psf_width > 0.0)) throw std::invalid_argument("SystemParams: psf_width must be positive");
  if (grid.height < 1 || grid.width < 1) throw std::invalid_argument("SystemParams: grid dims must be >= 1");
}

void NoiseParams::validate() const {
  if (!(gaussian_sigma >= 0.0)) throw std::invalid_argument("NoiseParams: gaussian_sigma must be >= 0");
}

ImageBuffer compose_noiseless(const ImageBuffer& background, const std::optional<ImageBuffer>& signal) {
  if (!signal) return background;
  if (signal->dims() != background.dims()) throw std::invalid_argument("compose_noiseless: dimension mismatch");
  ImageBuffer out = background;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*signal)[i];
  return out;
}

ImageBuffer apply_noise(const ImageBuffer& clean, const NoiseParams& noise, RandomStream& rng) {
  ImageBuffer out(clean.dims());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double x = clean[i];
    if (!std::isfinite(x)) throw std::invalid_argument("apply_noise: non-finite input pixel");
    double y = noise.poisson_enabled ? static_cast<double>(rng.poisson(std::max(x, 0.0))) : x;
    if (noise.gaussian_sigma > 0.0) y += rng.normal(0.0, noise.gaussian_sigma);
    out[i] = y;
  }
  return out;
}

}  // namespace tiq
