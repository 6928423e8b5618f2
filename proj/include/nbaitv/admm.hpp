#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "nbaitv/fft.hpp"
#include "nbaitv/image.hpp"
#include "nbaitv/noise_model.hpp"
#include "nbaitv/operators.hpp"
#include "nbaitv/prox.hpp"

namespace nbaitv {

struct SolverConfig {
  double tau = 0.05;     ///< regularization weight
  double alpha = 0.8;    ///< AITV weight, in [0, 1]
  double beta0 = 1e-4;   ///< initial penalty
  double sigma = 1.05;   ///< penalty growth factor, > 1
  double epsilon = 1e-5; ///< relative f-change stopping tolerance
  std::size_t max_iters = 500;
  std::optional<double> beta_max;  ///< defaults to 2^16 * beta0
  NoiseModel model = NegativeBinomial{1.0};
  bool nonneg_clip = false;  ///< clamp the returned image at zero

  [[nodiscard]] double effective_beta_max() const { return beta_max.value_or(65536.0 * beta0); }

  void validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("SolverConfig: " + msg); };
    if (!(tau > 0.0) || !std::isfinite(tau)) fail("tau must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
    if (!(beta0 > 0.0) || !std::isfinite(beta0)) fail("beta0 must be positive");
    if (!(sigma > 1.0) || !std::isfinite(sigma)) fail("sigma must exceed 1");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (!(effective_beta_max() >= beta0)) fail("beta_max must be at least beta0");
    if (const auto* nb = std::get_if<NegativeBinomial>(&model); nb && !(nb->r > 0.0)) {
      fail("r must be positive");
    }
  }
};

/// Iterate tuple (f, v, w, x, z, beta, k). x pairs with Af = v, z with Df = w.
struct AdmmState {
  ImageGrid f;
  ImageGrid v;
  GradientField w;
  ImageGrid x;
  GradientField z;
  double beta = 0.0;
  std::size_t k = 0;
};

struct IterationRecord {
  double objective = 0.0;          ///< data_fit + tau * aitv
  double data_fit = 0.0;           ///< negative log-likelihood at the split variable v
  double aitv = 0.0;               ///< AITV of f
  double residual_blur = 0.0;      ///< ||Af - v||_2
  double residual_gradient = 0.0;  ///< ||Df - w||_2
  double relative_change = 0.0;    ///< ||f^k - f^{k-1}|| / ||f^k||
  double beta = 0.0;               ///< penalty used in this iteration
};

enum class Termination { tolerance, max_iters };

inline const char* to_string(Termination t) noexcept {
  return t == Termination::tolerance ? "tolerance" : "max_iters";
}

struct RecoveryResult {
  ImageGrid f_hat;
  std::size_t iterations = 0;
  std::vector<IterationRecord> history;
  Termination terminated_by = Termination::max_iters;
};

/// Blur plus periodic differences, with the f-update denominator energy
/// |F(A)|^2 + |F(D_x)|^2 + |F(D_y)|^2 precomputed.
struct CirculantSystem {
  SpectralOperator blur;
  SpectralOperator dx;
  SpectralOperator dy;
  std::vector<double> energy;

  explicit CirculantSystem(SpectralOperator blur_op) : blur(std::move(blur_op)) {
    std::tie(dx, dy) = diff_spectra(blur.height(), blur.width());
    energy.resize(blur.spectrum().size());
    for (std::size_t k = 0; k < energy.size(); ++k) {
      energy[k] = std::norm(blur[k]) + std::norm(dx[k]) + std::norm(dy[k]);
    }
  }

  [[nodiscard]] std::size_t height() const noexcept { return blur.height(); }
  [[nodiscard]] std::size_t width() const noexcept { return blur.width(); }
};

/// Closed-form f-subproblem under periodic boundaries:
///   f = IDFT[ (conj(A) F(beta v - x) - conj(D) F(z - beta w)) / (beta |A|^2 + beta |D|^2) ].
inline ImageGrid f_update(const AdmmState& state, const CirculantSystem& system, FftPlan& plan) {
  require_same_shape(state.f, system, "f_update");
  const double beta = state.beta;
  const std::size_t n = state.f.size();

  std::vector<double> scratch(n);
  Spectrum data_term;
  Spectrum h_term;
  Spectrum v_term;
  for (std::size_t k = 0; k < n; ++k) scratch[k] = beta * state.v[k] - state.x[k];
  plan.forward(scratch, data_term);
  for (std::size_t k = 0; k < n; ++k) scratch[k] = state.z.horizontal[k] - beta * state.w.horizontal[k];
  plan.forward(scratch, h_term);
  for (std::size_t k = 0; k < n; ++k) scratch[k] = state.z.vertical[k] - beta * state.w.vertical[k];
  plan.forward(scratch, v_term);

  Spectrum quotient(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double denom = beta * system.energy[k];
    if (!(denom > 0.0)) {
      throw SolverError("f-subproblem: zero denominator at frequency " + std::to_string(k));
    }
    const Complex numer = std::conj(system.blur[k]) * data_term[k] - std::conj(system.dx[k]) * h_term[k] -
                          std::conj(system.dy[k]) * v_term[k];
    quotient[k] = numer / denom;
  }
  Spectrum back;
  plan.inverse(quotient, back);
  ImageGrid f(state.f.height(), state.f.width());
  for (std::size_t k = 0; k < n; ++k) f[k] = back[k].real();
  return f;
}

inline ImageGrid f_update(const AdmmState& state, const CirculantSystem& system) {
  FftPlan plan(system.height(), system.width());
  return f_update(state, system, plan);
}

/// Per-pixel v-subproblem for the configured noise model.
inline ImageGrid v_update_field(const ImageGrid& af, const CountGrid& counts, const ImageGrid& x,
                                double beta, const NoiseModel& model) {
  require_same_shape(af, counts, "v_update_field");
  require_same_shape(af, x, "v_update_field");
  ImageGrid v(af.height(), af.width());
  if (const auto* nb = std::get_if<NegativeBinomial>(&model)) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = nb_v_update(af[k], counts[k], x[k], nb->r, beta);
  } else {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = poisson_v_update(af[k], counts[k], x[k], beta);
  }
  return v;
}

/// Per-pixel w-subproblem: prox of (Df)_i + z_i / beta with lambda = tau / beta.
inline GradientField w_update_field(const GradientField& df, const GradientField& z, double beta,
                                    double tau, double alpha) {
  require_same_shape(df, z, "w_update_field");
  GradientField w(df.height(), df.width());
  const double lambda = tau / beta;
  for (std::size_t k = 0; k < df.size(); ++k) {
    const Vec2 y = prox_l1_minus_alpha_l2(
        {df.horizontal[k] + z.horizontal[k] / beta, df.vertical[k] + z.vertical[k] / beta}, alpha, lambda);
    w.horizontal[k] = y[0];
    w.vertical[k] = y[1];
  }
  return w;
}

/// Dual ascent with the current beta, then beta <- min(sigma beta, beta_max).
/// Also installs v_new and w_new as the state's split variables.
inline void multiplier_and_beta_update(AdmmState& state, const ImageGrid& af, ImageGrid v_new,
                                       const GradientField& df, GradientField w_new,
                                       const SolverConfig& config) {
  const double beta = state.beta;
  for (std::size_t k = 0; k < state.x.size(); ++k) {
    state.x[k] += beta * (af[k] - v_new[k]);
    state.z.horizontal[k] += beta * (df.horizontal[k] - w_new.horizontal[k]);
    state.z.vertical[k] += beta * (df.vertical[k] - w_new.vertical[k]);
  }
  state.v = std::move(v_new);
  state.w = std::move(w_new);
  state.beta = std::min(config.sigma * beta, config.effective_beta_max());
  ++state.k;
}

/// sum_i |D_x f|_i + |D_y f|_i  -  alpha * sum_i sqrt((D_x f)_i^2 + (D_y f)_i^2).
inline double aitv_value(const GradientField& df, double alpha) {
  double anisotropic = 0.0;
  double isotropic = 0.0;
  for (std::size_t k = 0; k < df.size(); ++k) {
    anisotropic += std::abs(df.horizontal[k]) + std::abs(df.vertical[k]);
    isotropic += std::hypot(df.horizontal[k], df.vertical[k]);
  }
  return anisotropic - alpha * isotropic;
}

inline double aitv_value(const ImageGrid& f, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("aitv_value: alpha must lie in [0, 1]");
  return aitv_value(gradient(f), alpha);
}

/// F(Af) + tau * AITV(f) for the configured model. tau = 0 is allowed here.
inline double objective_value(const ImageGrid& f, const CountGrid& counts, const SpectralOperator& blur,
                              const SolverConfig& config) {
  require_same_shape(f, counts, "objective_value");
  const double fit = data_fit(config.model, apply(blur, f).values(), counts);
  return config.tau == 0.0 ? fit : fit + config.tau * aitv_value(f, config.alpha);
}

/// Feasible start: f0 = init (default g), v0 = A f0, w0 = D f0, x0 = z0 = 0.
inline AdmmState initial_state(const CountGrid& counts, const CirculantSystem& system,
                               const SolverConfig& config, const std::optional<ImageGrid>& init,
                               FftPlan& plan) {
  AdmmState state;
  state.f = init ? *init : to_image(counts);
  require_same_shape(state.f, counts, "run_admm initializer");
  state.v = apply(system.blur, state.f, plan);
  state.w = gradient(state.f);
  state.x = ImageGrid(counts.height(), counts.width());
  state.z = GradientField(counts.height(), counts.width());
  state.beta = config.beta0;
  state.k = 0;
  return state;
}

/// ADMM for AITV-regularized NB (or Poisson) deconvolution.
///
/// Each iteration solves the f-, v- and w-subproblems in closed form, updates
/// the multipliers with the current beta and then grows beta geometrically up
/// to beta_max. Stops once ||f^k - f^{k-1}|| / ||f^k|| <= epsilon (k >= 2) or
/// after max_iters iterations.
inline RecoveryResult run_admm(const CountGrid& counts, const SpectralOperator& blur,
                               const SolverConfig& config, const std::optional<ImageGrid>& init = std::nullopt) {
  config.validate();
  require_same_shape(counts, blur, "run_admm");
  const CirculantSystem system(blur);
  FftPlan plan(counts.height(), counts.width());
  AdmmState state = initial_state(counts, system, config, init, plan);

  RecoveryResult result;
  result.history.reserve(std::min<std::size_t>(config.max_iters, 4096));

  auto require_finite = [&](const ImageGrid& grid, const char* subproblem) {
    if (!all_finite(grid)) {
      throw SolverError(std::string("non-finite values in the ") + subproblem + " at iteration " +
                        std::to_string(state.k + 1));
    }
  };

  while (state.k < config.max_iters) {
    ImageGrid f_next = f_update(state, system, plan);
    require_finite(f_next, "f-subproblem");
    const ImageGrid af = apply(system.blur, f_next, plan);
    const GradientField df = gradient(f_next);

    ImageGrid v_next = v_update_field(af, counts, state.x, state.beta, config.model);
    require_finite(v_next, "v-subproblem");
    GradientField w_next = w_update_field(df, state.z, state.beta, config.tau, config.alpha);
    require_finite(w_next.horizontal, "w-subproblem");
    require_finite(w_next.vertical, "w-subproblem");

    const double change = l2_distance(f_next.values(), state.f.values());
    const double norm = l2_norm(f_next.values());
    const double relative = norm > 0.0 ? change / norm
                                       : (change == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());

    IterationRecord record;
    record.beta = state.beta;
    record.data_fit = data_fit(config.model, v_next.values(), counts);
    record.aitv = aitv_value(df, config.alpha);
    record.objective = record.data_fit + config.tau * record.aitv;
    record.residual_blur = l2_distance(af.values(), v_next.values());
    record.residual_gradient = std::hypot(l2_distance(df.horizontal.values(), w_next.horizontal.values()),
                                          l2_distance(df.vertical.values(), w_next.vertical.values()));
    record.relative_change = relative;

    state.f = std::move(f_next);
    multiplier_and_beta_update(state, af, std::move(v_next), df, std::move(w_next), config);
    require_finite(state.x, "multiplier update");
    result.history.push_back(record);

    // From the feasible start the first f-step returns f0 exactly, so the
    // tolerance is only tested from the second iteration on.
    if (state.k > 1 && relative <= config.epsilon) {
      result.terminated_by = Termination::tolerance;
      break;
    }
  }

  result.iterations = state.k;
  result.f_hat = std::move(state.f);
  if (config.nonneg_clip) clamp_nonnegative(result.f_hat);
  return result;
}

inline RecoveryResult run_admm(const NbObservation& obs, const SolverConfig& config,
                               const std::optional<ImageGrid>& init = std::nullopt) {
  const auto blur = spectral_of_kernel(gaussian_kernel(obs.blur), obs.counts.height(), obs.counts.width());
  return run_admm(obs.counts, blur, config, init);
}

}  // namespace nbaitv
