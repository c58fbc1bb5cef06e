#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tiq/dataset.hpp"

namespace tiq::nn {

/// Feature tensor stored channel-major: [channel][sample][row][col].
/// A batch of single-channel images is therefore N contiguous images.
template <typename T>
struct Tensor {
  int channels = 0;
  int batch = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c, int n, int h, int w, T fill = T(0))
      : channels(c), batch(n), height(h), width(w), data(static_cast<std::size_t>(c) * n * h * w, fill) {}

  std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }
  std::size_t channel_size() const noexcept { return plane() * batch; }
  std::size_t size() const noexcept { return data.size(); }
  std::size_t features() const noexcept { return plane() * channels; }

  T* channel(int c) noexcept { return data.data() + c * channel_size(); }
  const T* channel(int c) const noexcept { return data.data() + c * channel_size(); }
  T& at(int c, int n, int y, int x) { return data[((static_cast<std::size_t>(c) * batch + n) * height + y) * width + x]; }
  T at(int c, int n, int y, int x) const { return data[((static_cast<std::size_t>(c) * batch + n) * height + y) * width + x]; }

  bool same_shape(const Tensor& o) const noexcept {
    return channels == o.channels && batch == o.batch && height == o.height && width == o.width;
  }
  void reshape_like(const Tensor& o) {
    channels = o.channels;
    batch = o.batch;
    height = o.height;
    width = o.width;
    data.assign(o.data.size(), T(0));
  }
};

/// Gathers dataset images (or targets) at `indices` into a single-channel batch.
template <typename T>
Tensor<T> gather_images(const Dataset& ds, std::span<const std::size_t> indices, bool targets = false);

/// Writes sample n of a single-channel tensor into `dst`.
template <typename T>
void scatter_image(const Tensor<T>& t, int n, std::span<float> dst);

}  // namespace tiq::nn
