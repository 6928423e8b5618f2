#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nbaitv/fft.hpp"
#include "nbaitv/image.hpp"

namespace nbaitv {

/// Square, normalized blur window.
struct BlurKernel {
  std::size_t size = 1;
  double sigma = 1.0;
  std::vector<double> weights;  ///< size*size, row-major, sums to 1

  [[nodiscard]] double operator()(std::size_t a, std::size_t b) const { return weights[a * size + b]; }
  /// Index of the tap that lands on offset (0, 0) when embedded.
  [[nodiscard]] std::size_t anchor() const noexcept { return size / 2; }
};

/// Gaussian window centred at (size-1)/2 in both axes, normalized to unit mass.
///
/// Even sizes have no centre pixel; the continuous centre sits between taps and
/// the embedding anchors tap size/2 at the origin.
inline BlurKernel gaussian_kernel(std::size_t size, double sigma) {
  if (size == 0) throw std::invalid_argument("gaussian_kernel: size must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("gaussian_kernel: sigma must be positive and finite");
  }
  BlurKernel k{size, sigma, std::vector<double>(size * size)};
  const double c = (static_cast<double>(size) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t a = 0; a < size; ++a) {
    for (std::size_t b = 0; b < size; ++b) {
      const double da = static_cast<double>(a) - c;
      const double db = static_cast<double>(b) - c;
      const double w = std::exp(-(da * da + db * db) / (2.0 * sigma * sigma));
      k.weights[a * size + b] = w;
      total += w;
    }
  }
  for (double& w : k.weights) w /= total;
  return k;
}

/// DFT representation of a circulant (periodic) operator on height x width images.
class SpectralOperator {
 public:
  SpectralOperator() = default;
  SpectralOperator(std::size_t height, std::size_t width, Spectrum spectrum)
      : height_(height), width_(width), spectrum_(std::move(spectrum)) {
    if (spectrum_.size() != height * width || height == 0 || width == 0) {
      throw std::invalid_argument("SpectralOperator: spectrum length does not match dimensions");
    }
  }

  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] const Spectrum& spectrum() const noexcept { return spectrum_; }
  [[nodiscard]] const Complex& operator[](std::size_t k) const noexcept { return spectrum_[k]; }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  Spectrum spectrum_;
};

inline SpectralOperator identity_operator(std::size_t height, std::size_t width) {
  return {height, width, Spectrum(height * width, Complex(1.0, 0.0))};
}

/// Embed the kernel with its anchor tap at (0, 0), wrap the remaining taps
/// circularly, and take the DFT.
inline SpectralOperator spectral_of_kernel(const BlurKernel& kernel, std::size_t height,
                                           std::size_t width) {
  if (kernel.size > height || kernel.size > width) {
    throw std::invalid_argument("spectral_of_kernel: " + std::to_string(kernel.size) +
                                "-tap kernel does not fit a " + std::to_string(height) + "x" +
                                std::to_string(width) + " image");
  }
  std::vector<double> psf(height * width, 0.0);
  const auto anchor = static_cast<std::ptrdiff_t>(kernel.anchor());
  const auto h = static_cast<std::ptrdiff_t>(height);
  const auto w = static_cast<std::ptrdiff_t>(width);
  for (std::size_t a = 0; a < kernel.size; ++a) {
    for (std::size_t b = 0; b < kernel.size; ++b) {
      const auto i = ((static_cast<std::ptrdiff_t>(a) - anchor) % h + h) % h;
      const auto j = ((static_cast<std::ptrdiff_t>(b) - anchor) % w + w) % w;
      psf[static_cast<std::size_t>(i * w + j)] += kernel(a, b);
    }
  }
  FftPlan plan(height, width);
  Spectrum spectrum;
  plan.forward(psf, spectrum);
  return {height, width, std::move(spectrum)};
}

/// Spectra of the periodic forward differences
///   (D_x u)(i,j) = u(i, j+1) - u(i, j),   (D_y u)(i,j) = u(i+1, j) - u(i, j).
/// The DC entry of both is exactly zero.
inline std::pair<SpectralOperator, SpectralOperator> diff_spectra(std::size_t height,
                                                                  std::size_t width) {
  if (height < 2 || width < 2) {
    throw std::invalid_argument("diff_spectra: both dimensions must be at least 2");
  }
  Spectrum sx(height * width);
  Spectrum sy(height * width);
  for (std::size_t p = 0; p < height; ++p) {
    const double ty = 2.0 * std::numbers::pi * static_cast<double>(p) / static_cast<double>(height);
    const Complex ey = Complex(std::cos(ty), std::sin(ty)) - 1.0;
    for (std::size_t q = 0; q < width; ++q) {
      const double tx = 2.0 * std::numbers::pi * static_cast<double>(q) / static_cast<double>(width);
      sx[p * width + q] = Complex(std::cos(tx), std::sin(tx)) - 1.0;
      sy[p * width + q] = ey;
    }
  }
  return {SpectralOperator(height, width, std::move(sx)), SpectralOperator(height, width, std::move(sy))};
}

namespace detail {

inline ImageGrid apply_spectral(const SpectralOperator& op, const ImageGrid& u, FftPlan& plan,
                                bool adjoint) {
  require_same_shape(op, u, adjoint ? "apply_adjoint" : "apply");
  require_same_shape(plan, u, "FftPlan");
  Spectrum freq;
  plan.forward(u.values(), freq);
  for (std::size_t k = 0; k < freq.size(); ++k) {
    freq[k] *= adjoint ? std::conj(op[k]) : op[k];
  }
  Spectrum back;
  plan.inverse(freq, back);
  ImageGrid out(u.height(), u.width());
  double max_imag = 0.0;
  for (std::size_t k = 0; k < back.size(); ++k) {
    out[k] = back[k].real();
    max_imag = std::max(max_imag, std::abs(back[k].imag()));
  }
  if (max_imag > 1e-8 * l2_norm(u.values())) {
    throw std::runtime_error("spectral operator produced an imaginary residue of " +
                             std::to_string(max_imag) + "; spectrum is not conjugate-symmetric");
  }
  return out;
}

}  // namespace detail

/// u -> IDFT(spectrum .* DFT(u)).
inline ImageGrid apply(const SpectralOperator& op, const ImageGrid& u, FftPlan& plan) {
  return detail::apply_spectral(op, u, plan, false);
}
inline ImageGrid apply(const SpectralOperator& op, const ImageGrid& u) {
  FftPlan plan(u.height(), u.width());
  return apply(op, u, plan);
}

/// u -> IDFT(conj(spectrum) .* DFT(u)).
inline ImageGrid apply_adjoint(const SpectralOperator& op, const ImageGrid& u, FftPlan& plan) {
  return detail::apply_spectral(op, u, plan, true);
}
inline ImageGrid apply_adjoint(const SpectralOperator& op, const ImageGrid& u) {
  FftPlan plan(u.height(), u.width());
  return apply_adjoint(op, u, plan);
}

/// Periodic forward differences evaluated directly in image space.
inline GradientField gradient(const ImageGrid& u) {
  const std::size_t h = u.height();
  const std::size_t w = u.width();
  GradientField g(h, w);
  for (std::size_t i = 0; i < h; ++i) {
    const std::size_t down = (i + 1) % h;
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t right = (j + 1) % w;
      g.horizontal(i, j) = u(i, right) - u(i, j);
      g.vertical(i, j) = u(down, j) - u(i, j);
    }
  }
  return g;
}

/// D^T p = D_x^T p_h + D_y^T p_v (negative periodic backward divergence).
inline ImageGrid gradient_adjoint(const GradientField& p) {
  const std::size_t h = p.height();
  const std::size_t w = p.width();
  ImageGrid out(h, w);
  for (std::size_t i = 0; i < h; ++i) {
    const std::size_t up = (i + h - 1) % h;
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t left = (j + w - 1) % w;
      out(i, j) = (p.horizontal(i, left) - p.horizontal(i, j)) + (p.vertical(up, j) - p.vertical(i, j));
    }
  }
  return out;
}

}  // namespace nbaitv
