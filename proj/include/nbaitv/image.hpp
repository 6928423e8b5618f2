#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nbaitv {

/// Dense 2D field stored row-major: element (i, j) lives at i * width + j.
///
/// Every per-pixel quantity in the solver (images, split variables, multipliers)
/// is a Grid. Dimensions are fixed at construction.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(std::size_t height, std::size_t width, T fill = T{})
      : height_(height), width_(width), data_(checked_size(height, width), fill) {}

  Grid(std::size_t height, std::size_t width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != checked_size(height, width)) {
      throw std::invalid_argument("Grid: data length " + std::to_string(data_.size()) +
                                  " does not match " + std::to_string(height) + "x" +
                                  std::to_string(width));
    }
  }

  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const noexcept {
    return i * width_ + j;
  }

  T& operator()(std::size_t i, std::size_t j) noexcept { return data_[index(i, j)]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[index(i, j)]; }
  T& operator[](std::size_t k) noexcept { return data_[k]; }
  const T& operator[](std::size_t k) const noexcept { return data_[k]; }

  [[nodiscard]] std::span<T> values() noexcept { return data_; }
  [[nodiscard]] std::span<const T> values() const noexcept { return data_; }
  [[nodiscard]] const std::vector<T>& data() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  [[nodiscard]] bool same_shape(const Grid& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  template <typename U>
  [[nodiscard]] bool same_shape(const Grid<U>& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static std::size_t checked_size(std::size_t height, std::size_t width) {
    if (height == 0 || width == 0) {
      throw std::invalid_argument("Grid: dimensions must be positive");
    }
    return height * width;
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

/// Real-valued intensities (true image, iterates, recovered image).
using ImageGrid = Grid<double>;
/// Nonnegative photon counts.
using CountGrid = Grid<std::int64_t>;

/// Pair of per-pixel fields holding horizontal and vertical components,
/// e.g. the gradient Df = (D_x f, D_y f) or its multiplier.
struct GradientField {
  ImageGrid horizontal;
  ImageGrid vertical;

  GradientField() = default;
  GradientField(std::size_t height, std::size_t width)
      : horizontal(height, width), vertical(height, width) {}
  GradientField(ImageGrid h, ImageGrid v) : horizontal(std::move(h)), vertical(std::move(v)) {
    if (!horizontal.same_shape(vertical)) {
      throw std::invalid_argument("GradientField: component shapes differ");
    }
  }

  [[nodiscard]] std::size_t height() const noexcept { return horizontal.height(); }
  [[nodiscard]] std::size_t width() const noexcept { return horizontal.width(); }
  [[nodiscard]] std::size_t size() const noexcept { return horizontal.size(); }

  friend bool operator==(const GradientField&, const GradientField&) = default;
};

inline void require_same_shape(const auto& a, const auto& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                                " vs " + std::to_string(b.height()) + "x" +
                                std::to_string(b.width()) + ")");
  }
}

inline ImageGrid to_image(const CountGrid& counts) {
  ImageGrid out(counts.height(), counts.width());
  for (std::size_t k = 0; k < counts.size(); ++k) out[k] = static_cast<double>(counts[k]);
  return out;
}

inline double l2_norm(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

inline double l2_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

inline double l2_norm(const GradientField& g) {
  const double h = l2_norm(g.horizontal.values());
  const double v = l2_norm(g.vertical.values());
  return std::sqrt(h * h + v * v);
}

inline double inner_product(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "inner_product");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline void clamp_nonnegative(ImageGrid& grid) noexcept {
  for (double& v : grid) v = v < 0.0 ? 0.0 : v;
}

inline bool all_finite(const ImageGrid& grid) noexcept {
  for (double v : grid) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace nbaitv
