#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>

#include "nbaitv/image.hpp"
#include "nbaitv/operators.hpp"

namespace nbaitv {

using Rng = std::mt19937_64;

/// Negative binomial counts with dispersion r; mean mu gives p = r / (r + mu).
struct NegativeBinomial {
  double r = 1.0;
};
/// The r -> infinity limit of NegativeBinomial.
struct Poisson {};

using NoiseModel = std::variant<NegativeBinomial, Poisson>;

/// An infinite dispersion selects the Poisson model.
inline NoiseModel noise_model_from_dispersion(double r) {
  if (std::isinf(r) && r > 0) return Poisson{};
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("dispersion parameter r must be positive, got " + std::to_string(r));
  }
  return NegativeBinomial{r};
}

inline double dispersion(const NoiseModel& model) noexcept {
  if (const auto* nb = std::get_if<NegativeBinomial>(&model)) return nb->r;
  return std::numeric_limits<double>::infinity();
}

inline std::string model_name(const NoiseModel& model) {
  return std::holds_alternative<Poisson>(model) ? "poisson" : "nb";
}

struct BlurSpec {
  std::size_t size = 10;
  double sigma = 2.5;
};

inline BlurKernel gaussian_kernel(const BlurSpec& spec) { return gaussian_kernel(spec.size, spec.sigma); }

/// Simulated observation g together with everything needed to regenerate it.
struct NbObservation {
  CountGrid counts;
  NoiseModel model;
  BlurSpec blur;
  std::uint64_t seed = 0;
};

inline std::int64_t poisson_sample(double mean, Rng& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("poisson_sample: mean must be finite and nonnegative");
  }
  if (mean == 0.0) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

/// One NB(r, r/(r+mean)) draw as a Gamma-Poisson mixture:
/// lambda ~ Gamma(shape r, scale mean/r), then Poisson(lambda).
inline std::int64_t nb_sample(double mean, double r, Rng& rng) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("nb_sample: r must be positive");
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("nb_sample: mean must be finite and nonnegative");
  }
  if (mean == 0.0) return 0;
  const double lambda = std::gamma_distribution<double>(r, mean / r)(rng);
  return lambda > 0.0 ? std::poisson_distribution<std::int64_t>(lambda)(rng) : 0;
}

inline std::int64_t sample_count(const NoiseModel& model, double mean, Rng& rng) {
  if (const auto* nb = std::get_if<NegativeBinomial>(&model)) return nb_sample(mean, nb->r, rng);
  return poisson_sample(mean, rng);
}

/// Independent per-pixel draws g_i ~ model(mean (A f*)_i), row-major order.
inline CountGrid simulate_counts(const ImageGrid& truth, const SpectralOperator& blur,
                                 const NoiseModel& model, Rng& rng) {
  for (double v : truth) {
    if (!(v >= 0.0)) throw std::invalid_argument("simulate_observation: truth has negative or NaN pixels");
  }
  const ImageGrid mean = apply(blur, truth);
  CountGrid counts(truth.height(), truth.width());
  for (std::size_t k = 0; k < mean.size(); ++k) {
    // FFT round-off can leave -1e-14 where the blurred truth is exactly zero.
    counts[k] = sample_count(model, std::max(mean[k], 0.0), rng);
  }
  return counts;
}

inline NbObservation simulate_observation(const ImageGrid& truth, const BlurSpec& blur,
                                          const NoiseModel& model, std::uint64_t seed) {
  const auto op = spectral_of_kernel(gaussian_kernel(blur), truth.height(), truth.width());
  Rng rng(seed);
  return {simulate_counts(truth, op, model, rng), model, blur, seed};
}

/// sum_i (r + g_i) log(r + v_i) - g_i log v_i, evaluated at v = Af.
/// Zero counts contribute no log v term; v_i <= 0 with g_i > 0 yields +infinity.
inline double nb_data_fit(std::span<const double> v, const CountGrid& g, double r) {
  double total = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto gk = static_cast<double>(g[k]);
    if (gk > 0.0 && !(v[k] > 0.0)) return std::numeric_limits<double>::infinity();
    total += (r + gk) * std::log(r + v[k]);
    if (gk > 0.0) total -= gk * std::log(v[k]);
  }
  return total;
}

/// sum_i v_i - g_i log v_i, evaluated at v = Af.
inline double poisson_data_fit(std::span<const double> v, const CountGrid& g) {
  double total = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto gk = static_cast<double>(g[k]);
    if (gk > 0.0 && !(v[k] > 0.0)) return std::numeric_limits<double>::infinity();
    total += v[k];
    if (gk > 0.0) total -= gk * std::log(v[k]);
  }
  return total;
}

inline double data_fit(const NoiseModel& model, std::span<const double> v, const CountGrid& g) {
  if (const auto* nb = std::get_if<NegativeBinomial>(&model)) return nb_data_fit(v, g, nb->r);
  return poisson_data_fit(v, g);
}

inline double nb_neg_log_likelihood(const ImageGrid& f, const CountGrid& g, double r,
                                    const SpectralOperator& blur) {
  require_same_shape(f, g, "nb_neg_log_likelihood");
  return nb_data_fit(apply(blur, f).values(), g, r);
}

inline double poisson_neg_log_likelihood(const ImageGrid& f, const CountGrid& g,
                                         const SpectralOperator& blur) {
  require_same_shape(f, g, "poisson_neg_log_likelihood");
  return poisson_data_fit(apply(blur, f).values(), g);
}

}  // namespace nbaitv
