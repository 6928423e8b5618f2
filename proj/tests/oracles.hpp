#pragma once

// Independent reference implementations used as test oracles. Each one is the
// slow, direct version of something the library computes another way.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include "nbaitv/image.hpp"
#include "nbaitv/operators.hpp"
#include "nbaitv/prox.hpp"

namespace oracle {

using nbaitv::ImageGrid;

inline std::size_t wrap(std::ptrdiff_t i, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

/// out(i,j) = sum_{a,b} k(a,b) u(i - (a - c), j - (b - c)), indices mod (h, w).
inline ImageGrid circular_convolution(const nbaitv::BlurKernel& k, const ImageGrid& u) {
  const auto c = static_cast<std::ptrdiff_t>(k.anchor());
  ImageGrid out(u.height(), u.width());
  for (std::size_t i = 0; i < u.height(); ++i) {
    for (std::size_t j = 0; j < u.width(); ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < k.size; ++a) {
        for (std::size_t b = 0; b < k.size; ++b) {
          const auto di = static_cast<std::ptrdiff_t>(i) - (static_cast<std::ptrdiff_t>(a) - c);
          const auto dj = static_cast<std::ptrdiff_t>(j) - (static_cast<std::ptrdiff_t>(b) - c);
          acc += k(a, b) * u(wrap(di, u.height()), wrap(dj, u.width()));
        }
      }
      out(i, j) = acc;
    }
  }
  return out;
}

/// Adjoint of circular_convolution: correlation with the same taps.
inline ImageGrid circular_correlation(const nbaitv::BlurKernel& k, const ImageGrid& u) {
  const auto c = static_cast<std::ptrdiff_t>(k.anchor());
  ImageGrid out(u.height(), u.width());
  for (std::size_t i = 0; i < u.height(); ++i) {
    for (std::size_t j = 0; j < u.width(); ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < k.size; ++a) {
        for (std::size_t b = 0; b < k.size; ++b) {
          const auto di = static_cast<std::ptrdiff_t>(i) + (static_cast<std::ptrdiff_t>(a) - c);
          const auto dj = static_cast<std::ptrdiff_t>(j) + (static_cast<std::ptrdiff_t>(b) - c);
          acc += k(a, b) * u(wrap(di, u.height()), wrap(dj, u.width()));
        }
      }
      out(i, j) = acc;
    }
  }
  return out;
}

/// Periodic forward differences along columns (dx) and rows (dy).
inline ImageGrid forward_dx(const ImageGrid& u) {
  ImageGrid out(u.height(), u.width());
  for (std::size_t i = 0; i < u.height(); ++i)
    for (std::size_t j = 0; j < u.width(); ++j) out(i, j) = u(i, (j + 1) % u.width()) - u(i, j);
  return out;
}
inline ImageGrid forward_dy(const ImageGrid& u) {
  ImageGrid out(u.height(), u.width());
  for (std::size_t i = 0; i < u.height(); ++i)
    for (std::size_t j = 0; j < u.width(); ++j) out(i, j) = u((i + 1) % u.height(), j) - u(i, j);
  return out;
}
/// Transposes: (D^T p)(i,j) = p(i,j-1) - p(i,j) and likewise down the rows.
inline ImageGrid forward_dx_transpose(const ImageGrid& p) {
  ImageGrid out(p.height(), p.width());
  for (std::size_t i = 0; i < p.height(); ++i)
    for (std::size_t j = 0; j < p.width(); ++j) out(i, j) = p(i, (j + p.width() - 1) % p.width()) - p(i, j);
  return out;
}
inline ImageGrid forward_dy_transpose(const ImageGrid& p) {
  ImageGrid out(p.height(), p.width());
  for (std::size_t i = 0; i < p.height(); ++i)
    for (std::size_t j = 0; j < p.width(); ++j) out(i, j) = p((i + p.height() - 1) % p.height(), j) - p(i, j);
  return out;
}

/// Mean SSIM computed window by window with two-pass moments and a 2D
/// Gaussian built directly from exp(-(a^2+b^2)/(2 s^2)).
inline double direct_ssim(const ImageGrid& x, const ImageGrid& y, std::size_t ws = 11, double s = 1.5,
                          double k1 = 0.01, double k2 = 0.03, double peak = 255.0) {
  std::vector<double> wt(ws * ws);
  const double c = (static_cast<double>(ws) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t a = 0; a < ws; ++a) {
    for (std::size_t b = 0; b < ws; ++b) {
      const double da = static_cast<double>(a) - c;
      const double db = static_cast<double>(b) - c;
      wt[a * ws + b] = std::exp(-(da * da + db * db) / (2.0 * s * s));
      total += wt[a * ws + b];
    }
  }
  for (double& v : wt) v /= total;
  const double c1 = (k1 * peak) * (k1 * peak);
  const double c2 = (k2 * peak) * (k2 * peak);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + ws <= x.height(); ++i) {
    for (std::size_t j = 0; j + ws <= x.width(); ++j) {
      double mx = 0.0, my = 0.0;
      for (std::size_t a = 0; a < ws; ++a)
        for (std::size_t b = 0; b < ws; ++b) {
          mx += wt[a * ws + b] * x(i + a, j + b);
          my += wt[a * ws + b] * y(i + a, j + b);
        }
      double vx = 0.0, vy = 0.0, cxy = 0.0;
      for (std::size_t a = 0; a < ws; ++a)
        for (std::size_t b = 0; b < ws; ++b) {
          const double dx = x(i + a, j + b) - mx;
          const double dy = y(i + a, j + b) - my;
          vx += wt[a * ws + b] * dx * dx;
          vy += wt[a * ws + b] * dy * dy;
          cxy += wt[a * ws + b] * dx * dy;
        }
      sum += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

/// Real eigenvalues of the companion matrix of nu^3 + a2 nu^2 + a1 nu + a0.
inline std::vector<double> companion_real_roots(double a2, double a1, double a0, double imag_tol = 1e-7) {
  Eigen::Matrix3d m;
  m << -a2, -a1, -a0, 1, 0, 0, 0, 1, 0;
  const Eigen::EigenSolver<Eigen::Matrix3d> solver(m, false);
  std::vector<double> roots;
  for (int k = 0; k < 3; ++k) {
    const std::complex<double> z = solver.eigenvalues()[k];
    if (std::abs(z.imag()) <= imag_tol * (1.0 + std::abs(z.real()))) roots.push_back(z.real());
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Minimizer of phi over the positive axis (and v = 0 when g = 0), found by
/// bracketing every sign change of dphi on a log grid and bisecting.
template <typename Phi, typename DPhi>
double bisection_minimizer(Phi phi, DPhi dphi, double upper, bool admit_zero, std::size_t grid = 4000) {
  double best = std::numeric_limits<double>::quiet_NaN();
  double best_value = std::numeric_limits<double>::infinity();
  auto consider = [&](double v) {
    const double value = phi(v);
    if (value < best_value) {
      best = v;
      best_value = value;
    }
  };
  if (admit_zero) consider(0.0);
  const double lo_exp = std::log(1e-14 * upper);
  const double hi_exp = std::log(upper);
  double prev_v = std::exp(lo_exp);
  double prev_d = dphi(prev_v);
  for (std::size_t k = 1; k <= grid; ++k) {
    const double v = std::exp(lo_exp + (hi_exp - lo_exp) * static_cast<double>(k) / static_cast<double>(grid));
    const double d = dphi(v);
    if (prev_d < 0.0 && d >= 0.0) {
      // A local minimum of phi is bracketed.
      double a = prev_v, b = v;
      for (int it = 0; it < 200 && b - a > 0.0; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        (dphi(m) < 0.0 ? a : b) = m;
      }
      consider(a);
      consider(b);
    }
    prev_v = v;
    prev_d = d;
  }
  if (prev_d < 0.0) consider(prev_v);
  return best;
}

/// Minimum of the L1 - alpha L2 prox objective over the lattice (1e-3 Z)^2.
///
/// Mirroring into the sign pattern of x and pulling any coordinate beyond |x_k|
/// back to the first lattice point past it never increases the objective, so
/// scanning i, j in [0, ceil(|x_k|/step)] gives the minimum over the whole lattice.
class ProxGridSearch {
 public:
  explicit ProxGridSearch(double max_abs, double step = 1e-3)
      : step_(step), n_(static_cast<std::size_t>(std::ceil(max_abs / step)) + 2), norm_(n_ * n_) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) norm_[i * n_ + j] = std::hypot(double(i), double(j));
  }

  [[nodiscard]] double min_value(const nbaitv::Vec2& x, double alpha, double lambda) const {
    const double ax = std::abs(x[0]);
    const double ay = std::abs(x[1]);
    const auto ni = static_cast<std::size_t>(std::ceil(ax / step_)) + 1;
    const auto nj = static_cast<std::size_t>(std::ceil(ay / step_)) + 1;
    if (ni > n_ || nj > n_) throw std::out_of_range("ProxGridSearch: x outside the precomputed range");
    std::vector<double> col(nj);
    for (std::size_t j = 0; j < nj; ++j) {
      const double y = step_ * double(j);
      col[j] = y + (ay - y) * (ay - y) / (2.0 * lambda);
    }
    const double a = alpha * step_;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ni; ++i) {
      const double y = step_ * double(i);
      const double row = y + (ax - y) * (ax - y) / (2.0 * lambda);
      const double* nrm = &norm_[i * n_];
      double row_best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < nj; ++j) row_best = std::min(row_best, col[j] - a * nrm[j]);
      best = std::min(best, row + row_best);
    }
    return best;
  }

 private:
  double step_;
  std::size_t n_;
  std::vector<double> norm_;
};

/// log P(g | mean) for NB(r, p = r/(r+mean)) via lgamma.
inline double nb_log_pmf(std::int64_t g, double mean, double r) {
  const double gd = static_cast<double>(g);
  return std::lgamma(r + gd) - std::lgamma(r) - std::lgamma(gd + 1.0) + r * std::log(r / (r + mean)) +
         (gd > 0 ? gd * std::log(mean / (r + mean)) : 0.0);
}

inline double poisson_log_pmf(std::int64_t g, double mean) {
  const double gd = static_cast<double>(g);
  return -mean + (gd > 0 ? gd * std::log(mean) : 0.0) - std::lgamma(gd + 1.0);
}

}  // namespace oracle
