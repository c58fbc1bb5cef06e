#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tiq {

struct GridDims {
  int height = 0;
  int width = 0;

  std::size_t pixels() const noexcept { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  bool operator==(const GridDims&) const = default;
};

/// Single-channel 2-D scalar field, row-major. Pixel (col, row) sits at
/// coordinate r_m = (col, row) in pixel units.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  explicit ImageBuffer(GridDims dims, double fill = 0.0) : dims_(dims), values_(dims.pixels(), fill) {
    if (dims.height < 1 || dims.width < 1) throw std::invalid_argument("ImageBuffer: dimensions must be positive");
  }
  ImageBuffer(GridDims dims, std::vector<double> values) : dims_(dims), values_(std::move(values)) {
    if (values_.size() != dims.pixels()) throw std::invalid_argument("ImageBuffer: value count does not match dims");
  }

  GridDims dims() const noexcept { return dims_; }
  int height() const noexcept { return dims_.height; }
  int width() const noexcept { return dims_.width; }
  std::size_t size() const noexcept { return values_.size(); }

  double& at(int row, int col) { return values_[static_cast<std::size_t>(row) * dims_.width + col]; }
  double at(int row, int col) const { return values_[static_cast<std::size_t>(row) * dims_.width + col]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  GridDims dims_{};
  std::vector<double> values_;
};

}  // namespace tiq
