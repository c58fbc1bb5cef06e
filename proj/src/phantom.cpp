#include "tiq/phantom.hpp"

#include <cmath>
#include <stdexcept>

namespace tiq {

void LumpyParams::validate() const {
  if (!(mean_lumps > 0.0)) throw std::invalid_argument("LumpyParams: mean_lumps must be positive");
  if (!(lump_width > 0.0)) throw std::invalid_argument("LumpyParams: lump_width must be positive");
  if (field.height < 1 || field.width < 1) throw std::invalid_argument("LumpyParams: field dims must be >= 1");
}

void SignalParams::validate(GridDims field) const {
  if (!(width > 0.0)) throw std::invalid_argument("SignalParams: width must be positive");
  if (center.x < 0.0 || center.y < 0.0 || center.x > field.width - 1 || center.y > field.height - 1)
    throw std::invalid_argument("SignalParams: center lies outside the field");
}

LumpyRealization sample_lumpy_realization(const LumpyParams& params, RandomStream& rng) {
  params.validate();
  LumpyRealization out;
  const auto count = rng.poisson(params.mean_lumps);
  out.centers.reserve(count);
  for (std::uint64_t n = 0; n < count; ++n) {
    const double x = rng.uniform(0.0, params.field.width);
    const double y = rng.uniform(0.0, params.field.height);
    out.centers.push_back({x, y});
  }
  return out;
}

namespace {

// Adds peak * exp(-|r_m - c|^2 / (2 var)) to every pixel, using the
// separability of the isotropic Gaussian.
void add_gaussian(ImageBuffer& img, Point2 c, double peak, double var, std::vector<double>& gx,
                  std::vector<double>& gy) {
  const int h = img.height();
  const int w = img.width();
  gx.resize(w);
  gy.resize(h);
  for (int col = 0; col < w; ++col) {
    const double d = col - c.x;
    gx[col] = std::exp(-d * d / (2.0 * var));
  }
  for (int row = 0; row < h; ++row) {
    const double d = row - c.y;
    gy[row] = peak * std::exp(-d * d / (2.0 * var));
  }
  for (int row = 0; row < h; ++row)
    for (int col = 0; col < w; ++col) img.at(row, col) += gy[row] * gx[col];
}

}  // namespace

ImageBuffer render_background_image(const LumpyRealization& realization, const LumpyParams& lumpy,
                                    const SystemParams& system) {
  system.validate();
  if (system.grid != lumpy.field) throw std::invalid_argument("render_background_image: system grid differs from lumpy field");
  const double wm2 = system.psf_width * system.psf_width;
  const double wb2 = lumpy.lump_width * lumpy.lump_width;
  const double peak = lumpy.amplitude * system.height * wb2 / (wm2 + wb2);
  ImageBuffer img(system.grid);
  std::vector<double> gx, gy;
  for (const Point2& c : realization.centers) add_gaussian(img, c, peak, wm2 + wb2, gx, gy);
  return img;
}

ImageBuffer render_signal_image(const SignalParams& signal, const SystemParams& system) {
  system.validate();
  signal.validate(system.grid);
  const double wm2 = system.psf_width * system.psf_width;
  const double ws2 = signal.width * signal.width;
  const double peak = signal.amplitude * system.height * ws2 / (wm2 + ws2);
  ImageBuffer img(system.grid);
  std::vector<double> gx, gy;
  add_gaussian(img, signal.center, peak, wm2 + ws2, gx, gy);
  return img;
}

}  // namespace tiq
