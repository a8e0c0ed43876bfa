#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "svv/errors.hpp"
#include "svv/grid.hpp"
#include "svv/math_util.hpp"

namespace svv {

// Time profile t -> value for the sandwich bounds.
using TimeProfile = std::function<double(double)>;

inline TimeProfile constant_profile(double v) {
  return [v](double) { return v; };
}

inline TimeProfile linear_profile(double a, double b) {
  return [a, b](double t) { return a + b * t; };
}

// Volatility SDE dY = b(t, Y) dt + dZ with the two-sided repelling drift
//   b(t, y) = c / (y - phi(t))^gamma - c / (psi(t) - y)^gamma + extra(t, y)
// which keeps Y strictly inside (phi, psi).  c3 bounds the y-slope of the
// non-singular drift part; steps must satisfy dt * c3 < 1 so the implicit
// Euler equation has a unique root.
struct SandwichSpec {
  TimeProfile phi, psi;
  double gamma = 4.0;
  double c = 1.0;
  double y0 = 1.0;
  double c3 = 1.0;
  std::function<double(double, double)> extra_drift;  // optional
};

namespace detail {

// base^{-gamma} with an integer fast path; the bisection below evaluates this
// in its inner loop, where std::pow dominates the whole simulation cost.
inline double reciprocal_power(double base, double gamma) {
  const double r = std::floor(gamma);
  if (r == gamma && gamma >= 0.0 && gamma <= 64.0)
    return 1.0 / ipow(base, static_cast<unsigned>(gamma));
  return std::pow(base, -gamma);
}

inline double repelling_drift(double y, double lo, double hi, double c, double gamma) {
  return c * reciprocal_power(y - lo, gamma) - c * reciprocal_power(hi - y, gamma);
}

}  // namespace detail

inline double drift_eval(const SandwichSpec& spec, double t, double y) {
  const double lo = spec.phi(t), hi = spec.psi(t);
  double b = detail::repelling_drift(y, lo, hi, spec.c, spec.gamma);
  if (spec.extra_drift) b += spec.extra_drift(t, y);
  return b;
}

namespace detail {

// Root of g(y) = y - dt*b(t_next, y) - rhs on (lo, hi) by bisection.  g runs
// from -inf to +inf across the band when c > 0, and is strictly increasing
// when dt * c3 < 1, so the root is unique.  Split out so callers that have
// the bounds tabulated can skip the profile evaluations.
inline double implicit_root(double lo, double hi, double t_next, double dt, double rhs, double c,
                            double gamma, const std::function<double(double, double)>& extra,
                            double tol) {
  const double width = hi - lo;
  if (!(width > 0.0))
    throw assumption_error("implicit_root: bounds cross at t = " + std::to_string(t_next));
  if (tol <= 0.0) tol = 1e-12 * width;

  const auto g = [&](double y) {
    double b = repelling_drift(y, lo, hi, c, gamma);
    if (extra) b += extra(t_next, y);
    return y - dt * b - rhs;
  };

  // Shrink the margin until the bracket straddles the root; near the bounds
  // the repelling terms force g to -inf / +inf, so this terminates for c > 0.
  double delta = 0.25 * width;
  double a = lo + delta, b = hi - delta;
  double ga = g(a), gb = g(b);
  int shrink = 0;
  while (!(ga < 0.0 && gb > 0.0)) {
    if (ga >= 0.0 && gb <= 0.0)
      throw numerical_error("implicit_root: implicit equation is decreasing across the band; "
                            "check the dt * c3 < 1 step-size condition");
    delta *= 0.5;
    if (++shrink > 1100)
      throw numerical_error("implicit_root: failed to bracket the implicit Euler root");
    if (ga >= 0.0) { a = lo + delta; ga = g(a); }
    if (gb <= 0.0) { b = hi - delta; gb = g(b); }
  }

  for (int it = 0; it < 200 && b - a > tol; ++it) {
    const double mid = 0.5 * (a + b);
    const double gm = g(mid);
    if (gm < 0.0) { a = mid; ga = gm; } else { b = mid; gb = gm; }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// One drift-implicit Euler step: the returned y solves
//   y - dt * b(t_next, y) = y_prev + dz
// on the open band (phi(t_next), psi(t_next)).
inline double implicit_step(const SandwichSpec& spec, double t_next, double dt, double y_prev,
                            double dz, double tol = -1.0) {
  const double rhs = y_prev + dz;
  if (spec.c == 0.0 && !spec.extra_drift) return rhs;  // drift-free: step is explicit
  return detail::implicit_root(spec.phi(t_next), spec.psi(t_next), t_next, dt, rhs, spec.c,
                               spec.gamma, spec.extra_drift, tol);
}

// Advance the volatility along a noise path given at the grid times
// (z.size() == grid.t.size()).  Enforces the strict sandwich at every output
// point and the dt * c3 < 1 step-size condition.
inline std::vector<double> simulate_vol(const SandwichSpec& spec, const TimeGrid& grid,
                                        const std::vector<double>& z) {
  const std::size_t n = grid.steps();
  if (z.size() != n + 1)
    throw std::invalid_argument("simulate_vol: noise path not aligned with grid");

  std::vector<double> y(n + 1);
  y[0] = spec.y0;
  if (!(spec.phi(grid.t[0]) < y[0] && y[0] < spec.psi(grid.t[0])))
    throw assumption_error("simulate_vol: y0 is not strictly inside the sandwich");

  for (std::size_t k = 0; k < n; ++k) {
    const double dt = grid.t[k + 1] - grid.t[k];
    if (!(dt * spec.c3 < 1.0))
      throw assumption_error("simulate_vol: step size violates dt * c3 < 1");
    y[k + 1] = implicit_step(spec, grid.t[k + 1], dt, y[k], z[k + 1] - z[k]);
    if (!(spec.phi(grid.t[k + 1]) < y[k + 1] && y[k + 1] < spec.psi(grid.t[k + 1])))
      throw assumption_error("simulate_vol: sandwich violated at step " + std::to_string(k + 1));
  }
  return y;
}

}  // namespace svv
