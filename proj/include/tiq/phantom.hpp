#pragma once

#include <cstdint>
#include <vector>

#include "tiq/image.hpp"
#include "tiq/imaging.hpp"
#include "tiq/random.hpp"

namespace tiq {

struct Point2 {
  double x = 0.0;  // column coordinate
  double y = 0.0;  // row coordinate
};

/// Lumpy object model: a Poisson number of Gaussian lumps at uniform positions.
struct LumpyParams {
  double mean_lumps = 15.0;
  double amplitude = 5.0;
  double lump_width = 3.0;
  GridDims field{32, 32};

  void validate() const;
};

/// Gaussian signal of amplitude A_s, width w_s, centered at `center`.
struct SignalParams {
  double amplitude = 2.5;
  double width = 1.0;
  Point2 center{16.0, 16.0};

  void validate(GridDims field) const;
};

struct LumpyRealization {
  std::vector<Point2> centers;

  std::size_t lump_count() const noexcept { return centers.size(); }
};

LumpyRealization sample_lumpy_realization(const LumpyParams& params, RandomStream& rng);

/// Analytic image of a lumpy object through the Gaussian-PSF system.
ImageBuffer render_background_image(const LumpyRealization& realization, const LumpyParams& lumpy,
                                    const SystemParams& system);

/// Analytic image of the Gaussian signal through the Gaussian-PSF system.
ImageBuffer render_signal_image(const SignalParams& signal, const SystemParams& system);

}  // namespace tiq
