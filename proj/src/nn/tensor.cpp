#include "tiq/nn/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace tiq::nn {

template <typename T>
Tensor<T> gather_images(const Dataset& ds, std::span<const std::size_t> indices, bool targets) {
  if (targets && !ds.has_targets()) throw std::invalid_argument("gather_images: dataset has no targets");
  Tensor<T> t(1, static_cast<int>(indices.size()), ds.dims().height, ds.dims().width);
  const std::size_t p = ds.pixels();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    auto src = targets ? ds.target(indices[k]) : ds.image(indices[k]);
    std::transform(src.begin(), src.end(), t.data.begin() + k * p, [](float v) { return static_cast<T>(v); });
  }
  return t;
}

template <typename T>
void scatter_image(const Tensor<T>& t, int n, std::span<float> dst) {
  if (t.channels != 1 || dst.size() != t.plane()) throw std::invalid_argument("scatter_image: shape mismatch");
  const T* src = t.data.data() + static_cast<std::size_t>(n) * t.plane();
  std::transform(src, src + t.plane(), dst.begin(), [](T v) { return static_cast<float>(v); });
}

template Tensor<float> gather_images<float>(const Dataset&, std::span<const std::size_t>, bool);
template Tensor<double> gather_images<double>(const Dataset&, std::span<const std::size_t>, bool);
template void scatter_image<float>(const Tensor<float>&, int, std::span<float>);
template void scatter_image<double>(const Tensor<double>&, int, std::span<float>);

}  // namespace tiq::nn
