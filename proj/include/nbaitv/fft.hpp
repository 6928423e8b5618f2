#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nbaitv {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

namespace detail {
// FFTW's planner is not reentrant; fftw_execute on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// 2D complex DFT of fixed size, row-major, backed by FFTW.
///
/// Owns an aligned scratch buffer and an in-place forward/backward plan pair.
/// A plan is a per-thread workspace: share SpectralOperators freely, but give
/// each concurrent solver its own FftPlan.
class FftPlan {
 public:
  FftPlan(std::size_t height, std::size_t width) : height_(height), width_(width) {
    if (height == 0 || width == 0) throw std::invalid_argument("FftPlan: empty dimensions");
    buffer_ = fftw_alloc_complex(height * width);
    if (buffer_ == nullptr) throw std::bad_alloc();
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_dft_2d(static_cast<int>(height), static_cast<int>(width), buffer_, buffer_,
                                FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(static_cast<int>(height), static_cast<int>(width), buffer_, buffer_,
                                 FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  FftPlan(FftPlan&& other) noexcept { swap(other); }
  FftPlan& operator=(FftPlan&& other) noexcept {
    if (this != &other) {
      release();
      swap(other);
    }
    return *this;
  }
  ~FftPlan() { release(); }

  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t size() const noexcept { return height_ * width_; }

  void forward(std::span<const double> in, Spectrum& out) {
    check(in.size());
    for (std::size_t k = 0; k < in.size(); ++k) {
      buffer_[k][0] = in[k];
      buffer_[k][1] = 0.0;
    }
    fftw_execute(forward_);
    copy_out(out, 1.0);
  }

  void forward(std::span<const Complex> in, Spectrum& out) {
    check(in.size());
    copy_in(in);
    fftw_execute(forward_);
    copy_out(out, 1.0);
  }

  /// Normalized inverse (includes the 1/N factor).
  void inverse(std::span<const Complex> in, Spectrum& out) {
    check(in.size());
    copy_in(in);
    fftw_execute(backward_);
    copy_out(out, 1.0 / static_cast<double>(size()));
  }

 private:
  void check(std::size_t n) const {
    if (n != size()) throw std::invalid_argument("FftPlan: input length does not match plan size");
  }
  void copy_in(std::span<const Complex> in) {
    for (std::size_t k = 0; k < in.size(); ++k) {
      buffer_[k][0] = in[k].real();
      buffer_[k][1] = in[k].imag();
    }
  }
  void copy_out(Spectrum& out, double scale) const {
    out.resize(size());
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = Complex(buffer_[k][0] * scale, buffer_[k][1] * scale);
    }
  }
  void swap(FftPlan& other) noexcept {
    std::swap(height_, other.height_);
    std::swap(width_, other.width_);
    std::swap(buffer_, other.buffer_);
    std::swap(forward_, other.forward_);
    std::swap(backward_, other.backward_);
  }
  void release() noexcept {
    if (forward_ != nullptr || backward_ != nullptr) {
      std::lock_guard lock(detail::fftw_planner_mutex());
      if (forward_ != nullptr) fftw_destroy_plan(forward_);
      if (backward_ != nullptr) fftw_destroy_plan(backward_);
    }
    if (buffer_ != nullptr) fftw_free(buffer_);
    forward_ = backward_ = nullptr;
    buffer_ = nullptr;
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace nbaitv
