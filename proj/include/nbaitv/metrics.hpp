#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nbaitv/image.hpp"

namespace nbaitv {

/// 10 log10(peak^2 / MSE); identical images give +infinity.
inline double psnr(const ImageGrid& reference, const ImageGrid& test, double peak = 255.0) {
  require_same_shape(reference, test, "psnr");
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  double sse = 0.0;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    const double d = reference[k] - test[k];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(reference.size());
  return 10.0 * std::log10(peak * peak / mse);
}

struct SsimParams {
  std::size_t window_size = 11;
  double window_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 255.0;

  void validate() const {
    if (window_size == 0 || window_size % 2 == 0) throw std::invalid_argument("SsimParams: window_size must be odd");
    if (!(window_sigma > 0.0)) throw std::invalid_argument("SsimParams: window_sigma must be positive");
    if (!(k1 > 0.0) || !(k2 > 0.0)) throw std::invalid_argument("SsimParams: k1, k2 must be positive");
    if (!(peak > 0.0)) throw std::invalid_argument("SsimParams: peak must be positive");
  }
};

namespace detail {

inline std::vector<double> gaussian_window_1d(std::size_t size, double sigma) {
  std::vector<double> w(size);
  const double c = (static_cast<double>(size) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

/// Separable weighted sums over every fully contained window ("valid" region).
inline std::vector<double> filter_valid(const std::vector<double>& src, std::size_t height, std::size_t width,
                                        const std::vector<double>& window) {
  const std::size_t ws = window.size();
  const std::size_t out_w = width - ws + 1;
  const std::size_t out_h = height - ws + 1;
  std::vector<double> rows(height * out_w);
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < out_w; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < ws; ++t) acc += window[t] * src[i * width + j + t];
      rows[i * out_w + j] = acc;
    }
  }
  std::vector<double> out(out_h * out_w);
  for (std::size_t i = 0; i < out_h; ++i) {
    for (std::size_t j = 0; j < out_w; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < ws; ++t) acc += window[t] * rows[(i + t) * out_w + j];
      out[i * out_w + j] = acc;
    }
  }
  return out;
}

}  // namespace detail

/// Mean SSIM over all valid window positions with Gaussian-weighted moments.
inline double ssim(const ImageGrid& reference, const ImageGrid& test, const SsimParams& params = {}) {
  require_same_shape(reference, test, "ssim");
  params.validate();
  const std::size_t h = reference.height();
  const std::size_t w = reference.width();
  if (h < params.window_size || w < params.window_size) {
    throw std::invalid_argument("ssim: image smaller than the " + std::to_string(params.window_size) +
                                "-pixel window");
  }
  const auto window = detail::gaussian_window_1d(params.window_size, params.window_sigma);
  const std::size_t n = reference.size();
  std::vector<double> xx(n), yy(n), xy(n);
  for (std::size_t k = 0; k < n; ++k) {
    xx[k] = reference[k] * reference[k];
    yy[k] = test[k] * test[k];
    xy[k] = reference[k] * test[k];
  }
  const auto mu_x = detail::filter_valid(reference.data(), h, w, window);
  const auto mu_y = detail::filter_valid(test.data(), h, w, window);
  const auto e_xx = detail::filter_valid(xx, h, w, window);
  const auto e_yy = detail::filter_valid(yy, h, w, window);
  const auto e_xy = detail::filter_valid(xy, h, w, window);

  const double c1 = (params.k1 * params.peak) * (params.k1 * params.peak);
  const double c2 = (params.k2 * params.peak) * (params.k2 * params.peak);
  double total = 0.0;
  for (std::size_t k = 0; k < mu_x.size(); ++k) {
    const double mx = mu_x[k];
    const double my = mu_y[k];
    const double sxx = e_xx[k] - mx * mx;
    const double syy = e_yy[k] - my * my;
    const double sxy = e_xy[k] - mx * my;
    total += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
  }
  return total / static_cast<double>(mu_x.size());
}

}  // namespace nbaitv
