#pragma once

#include <cstddef>

#include "nbaitv/image.hpp"

namespace nbaitv {

/// Synthetic test image on the 8-bit intensity scale: flat regions separated by
/// sharp edges (rectangle, disk, small square, thin dark bar). With_ramp adds a
/// horizontal intensity ramp band near the bottom.
inline ImageGrid make_phantom(std::size_t height, std::size_t width, bool with_ramp = false) {
  ImageGrid img(height, width, 40.0);
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  for (std::size_t i = 0; i < height; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / h;
    for (std::size_t j = 0; j < width; ++j) {
      const double v = (static_cast<double>(j) + 0.5) / w;
      double value = 40.0;
      if (u >= 0.15 && u < 0.45 && v >= 0.10 && v < 0.55) value = 200.0;
      const double du = u - 0.62;
      const double dv = v - 0.66;
      if (du * du + dv * dv < 0.2 * 0.2) value = 120.0;
      if (u >= 0.58 && u < 0.74 && v >= 0.14 && v < 0.30) value = 240.0;
      if (u >= 0.20 && u < 0.26 && v >= 0.66 && v < 0.92) value = 10.0;
      if (with_ramp && u >= 0.86 && u < 0.96) value = 20.0 + 200.0 * v;
      img(i, j) = value;
    }
  }
  return img;
}

}  // namespace nbaitv
