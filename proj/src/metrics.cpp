#include "tiq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tiq {

namespace {

// Midranks (1-based) of `values`; tied values share the mean of their ranks.
std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

RocResult empirical_auc(const ScoreSet& set) {
  if (set.scores.size() != set.labels.size()) throw std::invalid_argument("empirical_auc: scores and labels differ in length");
  std::vector<double> s0, s1;
  for (std::size_t i = 0; i < set.scores.size(); ++i) {
    if (!std::isfinite(set.scores[i])) throw std::invalid_argument("empirical_auc: non-finite score");
    (set.labels[i] == Hypothesis::present ? s1 : s0).push_back(set.scores[i]);
  }
  if (s0.empty() || s1.empty()) throw std::invalid_argument("empirical_auc: each class needs at least one score");
  const double n0 = static_cast<double>(s0.size());
  const double n1 = static_cast<double>(s1.size());

  std::vector<double> all = s0;
  all.insert(all.end(), s1.begin(), s1.end());
  const std::vector<double> r_all = midranks(all);
  const std::vector<double> r0 = midranks(s0);
  const std::vector<double> r1 = midranks(s1);

  // The pair-count numerator R1 - n1(n1+1)/2 is a multiple of 1/2, exact in double.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < s1.size(); ++i) rank_sum += r_all[s0.size() + i];
  RocResult out;
  out.auc = (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n0 * n1);

  std::vector<double> v10(s1.size()), v01(s0.size());
  for (std::size_t i = 0; i < s1.size(); ++i) v10[i] = (r_all[s0.size() + i] - r1[i]) / n0;
  for (std::size_t j = 0; j < s0.size(); ++j) v01[j] = 1.0 - (r_all[j] - r0[j]) / n1;
  out.standard_error = std::sqrt(sample_variance(v10) / n1 + sample_variance(v01) / n0);

  std::vector<double> thresholds = all;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::sort(s0.begin(), s0.end());
  std::sort(s1.begin(), s1.end());
  out.roc_points.push_back({0.0, 0.0});
  for (double t : thresholds) {
    const auto above0 = static_cast<double>(s0.end() - std::lower_bound(s0.begin(), s0.end(), t));
    const auto above1 = static_cast<double>(s1.end() - std::lower_bound(s1.begin(), s1.end(), t));
    out.roc_points.push_back({above0 / n0, above1 / n1});
  }
  return out;
}

EfficiencyResult detection_efficiency(const RocResult& noisy, const RocResult& denoised) {
  if (!(noisy.auc > 0.0) || !(denoised.auc > 0.0))
    throw std::invalid_argument("detection_efficiency: AUC values must be positive");
  EfficiencyResult e;
  e.auc_noisy = noisy.auc;
  e.auc_denoised = denoised.auc;
  e.efficiency = denoised.auc / noisy.auc;
  const double rn = noisy.standard_error / noisy.auc;
  const double rd = denoised.standard_error / denoised.auc;
  e.standard_error = e.efficiency * std::sqrt(rn * rn + rd * rd);
  return e;
}

double rmse(std::span<const float> image, std::span<const float> reference) {
  if (image.size() != reference.size() || image.empty()) throw std::invalid_argument("rmse: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double d = static_cast<double>(image[i]) - reference[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(image.size()));
}

double rmse(const ImageBuffer& image, const ImageBuffer& reference) {
  if (image.dims() != reference.dims()) throw std::invalid_argument("rmse: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) s += (image[i] - reference[i]) * (image[i] - reference[i]);
  return std::sqrt(s / static_cast<double>(image.size()));
}

namespace {

// Separable Gaussian filter keeping only fully-overlapping positions.
std::vector<double> filter_valid(const std::vector<double>& img, GridDims dims, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int oh = dims.height - k + 1, ow = dims.width - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(dims.height) * ow);
  for (int y = 0; y < dims.height; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += g[t] * img[static_cast<std::size_t>(y) * dims.width + x + t];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += g[t] * tmp[static_cast<std::size_t>(y + t) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double ssim(std::span<const float> image, std::span<const float> reference, GridDims dims, double dynamic_range,
            const SsimOptions& opt) {
  if (image.size() != reference.size() || image.size() != dims.pixels()) throw std::invalid_argument("ssim: dimension mismatch");
  if (dims.height < opt.window || dims.width < opt.window) throw std::invalid_argument("ssim: image smaller than window");
  if (!(dynamic_range > 0.0)) throw std::invalid_argument("ssim: dynamic range must be positive");
  std::vector<double> g(opt.window);
  const int half = opt.window / 2;
  double gs = 0.0;
  for (int t = 0; t < opt.window; ++t) {
    g[t] = std::exp(-0.5 * (t - half) * (t - half) / (opt.sigma * opt.sigma));
    gs += g[t];
  }
  for (double& v : g) v /= gs;

  const std::size_t n = image.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = image[i];
    y[i] = reference[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, dims, g), my = filter_valid(y, dims, g);
  const auto mxx = filter_valid(xx, dims, g), myy = filter_valid(yy, dims, g), mxy = filter_valid(xy, dims, g);
  const double c1 = (opt.k1 * dynamic_range) * (opt.k1 * dynamic_range);
  const double c2 = (opt.k2 * dynamic_range) * (opt.k2 * dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cxy = mxy[i] - mx[i] * my[i];
    total += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

double ssim(const ImageBuffer& image, const ImageBuffer& reference, double dynamic_range, const SsimOptions& opt) {
  if (image.dims() != reference.dims()) throw std::invalid_argument("ssim: dimension mismatch");
  const std::vector<float> a(image.values().begin(), image.values().end());
  const std::vector<float> b(reference.values().begin(), reference.values().end());
  return ssim(a, b, image.dims(), dynamic_range, opt);
}

ImageQuality image_quality(const Dataset& images, const Dataset& reference, const SsimOptions& opt) {
  if (!reference.has_targets()) throw std::invalid_argument("image_quality: reference dataset has no targets");
  if (images.size() != reference.size() || images.dims() != reference.dims() || images.empty())
    throw std::invalid_argument("image_quality: dataset mismatch");
  const auto [lo, hi] = std::minmax_element(reference.target_data().begin(), reference.target_data().end());
  ImageQuality q;
  q.dynamic_range = static_cast<double>(*hi) - static_cast<double>(*lo);
  for (std::size_t i = 0; i < images.size(); ++i) {
    q.rmse += rmse(images.image(i), reference.target(i));
    q.ssim += ssim(images.image(i), reference.target(i), images.dims(), q.dynamic_range, opt);
  }
  q.rmse /= static_cast<double>(images.size());
  q.ssim /= static_cast<double>(images.size());
  return q;
}

}  // namespace tiq
