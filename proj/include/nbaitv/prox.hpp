#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace nbaitv {

/// Raised when a subproblem produces something its closed form rules out
/// (no admissible root, non-finite iterate, zero denominator).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Monic cubic nu^3 + a2 nu^2 + a1 nu + a0.
struct CubicCoefficients {
  double a2 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;

  [[nodiscard]] double operator()(double nu) const noexcept { return ((nu + a2) * nu + a1) * nu + a0; }
  [[nodiscard]] double derivative(double nu) const noexcept { return (3.0 * nu + 2.0 * a2) * nu + a1; }
  [[nodiscard]] double scale() const noexcept {
    return std::max({1.0, std::abs(a0), std::abs(a1), std::abs(a2)});
  }
};

/// Up to three real roots, ascending. Coincident roots may be reported once.
struct RealRoots {
  std::array<double, 3> values{};
  std::size_t count = 0;

  [[nodiscard]] const double* begin() const noexcept { return values.data(); }
  [[nodiscard]] const double* end() const noexcept { return values.data() + count; }
  [[nodiscard]] std::size_t size() const noexcept { return count; }
  [[nodiscard]] double operator[](std::size_t k) const noexcept { return values[k]; }
  void push(double v) noexcept { values[count++] = v; }
};

namespace detail {

inline bool is_numerically_real(const std::complex<double>& z) noexcept {
  return std::abs(z.imag()) < 1e-8 * (1.0 + std::abs(z.real()));
}

/// Newton steps on the cubic, kept only while they shrink |P|.
inline double polish_root(const CubicCoefficients& c, double nu, int max_steps = 3) noexcept {
  double p = c(nu);
  for (int step = 0; step < max_steps && p != 0.0; ++step) {
    const double dp = c.derivative(nu);
    if (dp == 0.0) break;
    const double next = nu - p / dp;
    const double pn = c(next);
    if (!std::isfinite(next) || !(std::abs(pn) < std::abs(p))) break;
    nu = next;
    p = pn;
  }
  return nu;
}

}  // namespace detail

/// Real roots of nu^3 + a2 nu^2 + a1 nu + a0 by Cardano's formulas.
///
/// With R = (9 a2 a1 - 27 a0 - 2 a2^3)/54, Q = (3 a1 - a2^2)/9 and D = Q^3 + R^2,
/// S = cbrt(R + sqrt(D)), T = cbrt(R - sqrt(D)) and the roots are
///   -a2/3 + (S + T),   -a2/3 - (S + T)/2 +/- i sqrt(3)/2 (S - T).
/// S and T are complex whenever D < 0 (three real roots). Their cube-root
/// branches must pair so that S T = -Q, so T is taken as -Q/S with S from the
/// larger of R +/- sqrt(D).
///
/// Cardano loses all relative accuracy on small roots when |a2| is large (the
/// -a2/3 shift cancels). The largest real Cardano root is accurate, so it is
/// polished and deflated out, and the remaining quadratic is solved with the
/// cancellation-free formula. Each returned root gets Newton polish on the cubic.
inline RealRoots solve_cubic(const CubicCoefficients& c) {
  using C = std::complex<double>;
  const double a2 = c.a2;
  const double a1 = c.a1;
  const double a0 = c.a0;

  const double R = (9.0 * a2 * a1 - 27.0 * a0 - 2.0 * a2 * a2 * a2) / 54.0;
  const double Q = (3.0 * a1 - a2 * a2) / 9.0;
  const double D = Q * Q * Q + R * R;
  const C sqrt_d = std::sqrt(C(D, 0.0));
  const C plus = R + sqrt_d;
  const C minus = R - sqrt_d;
  const C big = std::abs(plus) >= std::abs(minus) ? plus : minus;
  const C S = big == C(0.0, 0.0) ? C(0.0, 0.0) : std::pow(big, 1.0 / 3.0);
  const C T = S == C(0.0, 0.0) ? C(0.0, 0.0) : -Q / S;

  const double shift = -a2 / 3.0;
  const C i_half_sqrt3(0.0, std::sqrt(3.0) / 2.0);
  const std::array<C, 3> cardano = {
      shift + (S + T),
      shift - 0.5 * (S + T) + i_half_sqrt3 * (S - T),
      shift - 0.5 * (S + T) - i_half_sqrt3 * (S - T),
  };

  // Seed root: the largest-modulus numerically real root, else the least complex one.
  std::size_t seed = 3;
  for (std::size_t k = 0; k < 3; ++k) {
    if (detail::is_numerically_real(cardano[k]) &&
        (seed == 3 || std::abs(cardano[k].real()) > std::abs(cardano[seed].real()))) {
      seed = k;
    }
  }
  if (seed == 3) {
    seed = 0;
    for (std::size_t k = 1; k < 3; ++k) {
      if (std::abs(cardano[k].imag()) / (1.0 + std::abs(cardano[k].real())) <
          std::abs(cardano[seed].imag()) / (1.0 + std::abs(cardano[seed].real()))) {
        seed = k;
      }
    }
  }
  const double nu1 = detail::polish_root(c, cardano[seed].real());

  double max_other = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    if (k != seed) max_other = std::max(max_other, std::abs(cardano[k]));
  }

  // Deflate (nu - nu1)(nu^2 + b1 nu + b0). Dividing out the dominant root is
  // stable from the constant term up; a subdominant root from the top down.
  double b1 = 0.0;
  double b0 = 0.0;
  if (nu1 != 0.0 && std::abs(nu1) >= max_other) {
    b0 = -a0 / nu1;
    b1 = (b0 - a1) / nu1;
  } else {
    b1 = a2 + nu1;
    b0 = a1 + nu1 * b1;
  }

  RealRoots roots;
  roots.push(nu1);
  const double disc = b1 * b1 - 4.0 * b0;
  if (disc >= 0.0) {
    const double q = -0.5 * (b1 + std::copysign(std::sqrt(disc), b1));
    roots.push(detail::polish_root(c, q));
    roots.push(detail::polish_root(c, q != 0.0 ? b0 / q : 0.0));
  } else {
    const C pair(-0.5 * b1, 0.5 * std::sqrt(-disc));
    if (detail::is_numerically_real(pair)) roots.push(detail::polish_root(c, pair.real()));
  }
  std::sort(roots.values.begin(), roots.values.begin() + static_cast<std::ptrdiff_t>(roots.count));
  return roots;
}

/// Per-pixel NB v-subproblem objective, up to the additive constant (r + g) log r:
///   (r + g) log(1 + v/r) - g log v - x v + beta/2 (af - v)^2.
inline double nb_v_objective(double v, double af, double g, double x, double r, double beta) noexcept {
  double value = (r + g) * std::log1p(v / r) - x * v + 0.5 * beta * (af - v) * (af - v);
  if (g > 0.0) value -= g * std::log(v);
  return value;
}

/// Stationarity of the NB v-subproblem: (r+g)/(r+v) - g/v - x - beta (af - v).
inline double nb_v_optimality_residual(double v, double af, double g, double x, double r,
                                       double beta) noexcept {
  return (r + g) / (r + v) - g / v - x - beta * (af - v);
}

/// Monic form of beta v^3 + (beta r - beta af - x) v^2 + (r - r x - beta r af) v - r g = 0.
inline CubicCoefficients nb_v_cubic(double af, double g, double x, double r, double beta) noexcept {
  return {r - af - x / beta, -r * af - r * x / beta + r / beta, -r * g / beta};
}

/// Closed-form minimizer of the NB v-subproblem at one pixel.
///
/// Candidates are the nonnegative real roots of the stationarity cubic; v = 0
/// joins them when g = 0 (the log v term is absent). Ties go to the smaller v.
inline double nb_v_update(double af, std::int64_t g, double x, double r, double beta) {
  if (!(beta > 0.0) || !(r > 0.0) || g < 0) {
    throw std::invalid_argument("nb_v_update: requires beta > 0, r > 0, g >= 0");
  }
  const auto gd = static_cast<double>(g);
  const RealRoots roots = solve_cubic(nb_v_cubic(af, gd, x, r, beta));

  double best = std::numeric_limits<double>::quiet_NaN();
  double best_value = std::numeric_limits<double>::infinity();
  auto consider = [&](double v) {
    const double value = nb_v_objective(v, af, gd, x, r, beta);
    if (value < best_value) {
      best = v;
      best_value = value;
    }
  };
  if (g == 0) consider(0.0);
  for (double v : roots) {
    if (v > 0.0) consider(v);
  }
  if (std::isnan(best)) {
    throw SolverError("nb_v_update: no admissible positive root (af=" + std::to_string(af) +
                      ", g=" + std::to_string(g) + ", x=" + std::to_string(x) +
                      ", r=" + std::to_string(r) + ", beta=" + std::to_string(beta) + ")");
  }
  return best;
}

/// Poisson v-subproblem: positive root of beta v^2 + (1 - x - beta af) v - g = 0.
inline double poisson_v_update(double af, std::int64_t g, double x, double beta) {
  if (!(beta > 0.0) || g < 0) throw std::invalid_argument("poisson_v_update: requires beta > 0, g >= 0");
  const double b = beta * af + x - 1.0;
  const double four_beta_g = 4.0 * beta * static_cast<double>(g);
  const double root = std::sqrt(b * b + four_beta_g);
  if (b >= 0.0) return (b + root) / (2.0 * beta);
  // Rationalized form avoids cancelling b against the square root.
  const double denom = root - b;
  return denom > 0.0 ? 2.0 * static_cast<double>(g) / denom : 0.0;
}

using Vec2 = std::array<double, 2>;

/// argmin_y ||y||_1 - alpha ||y||_2 + 1/(2 lambda) ||x - y||_2^2 for y in R^2.
inline Vec2 prox_l1_minus_alpha_l2(const Vec2& x, double alpha, double lambda) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("prox: alpha must lie in [0, 1]");
  if (!(lambda > 0.0)) throw std::invalid_argument("prox: lambda must be positive");

  const double ax = std::abs(x[0]);
  const double ay = std::abs(x[1]);
  const double m = std::max(ax, ay);
  if (m > lambda) {
    const Vec2 z = {std::copysign(std::max(ax - lambda, 0.0), x[0]),
                    std::copysign(std::max(ay - lambda, 0.0), x[1])};
    const double nz = std::hypot(z[0], z[1]);
    const double scale = (nz + alpha * lambda) / nz;
    return {z[0] * scale, z[1] * scale};
  }
  if (m > (1.0 - alpha) * lambda) {
    const std::size_t k = ax >= ay ? 0 : 1;
    Vec2 y = {0.0, 0.0};
    y[k] = std::copysign(m + (alpha - 1.0) * lambda, x[k]);
    return y;
  }
  return {0.0, 0.0};
}

/// ||y||_1 - alpha ||y||_2 + 1/(2 lambda) ||x - y||^2.
inline double prox_objective(const Vec2& y, const Vec2& x, double alpha, double lambda) noexcept {
  const double dx = x[0] - y[0];
  const double dy = x[1] - y[1];
  return std::abs(y[0]) + std::abs(y[1]) - alpha * std::hypot(y[0], y[1]) +
         (dx * dx + dy * dy) / (2.0 * lambda);
}

}  // namespace nbaitv
