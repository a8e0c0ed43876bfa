#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "svv/math_util.hpp"

namespace svv {

inline constexpr std::size_t kDefaultQuadPoints = 131072;  // 2^17

// Difference-type Volterra kernel K(u) on lags u in (0, T].  Immutable value;
// safe to share across workers.  value_at_zero is present only when the lag-0
// limit exists (rough kernels are singular there).
struct VolterraKernel {
  std::function<double(double)> eval;
  double horizon = 0.0;
  double hoelder_index = 0.0;  // in (0, 1]
  bool is_difference = true;
  std::optional<double> value_at_zero;
};

// K(u) = u^{H-1/2} / Gamma(H + 1/2); the Riemann-Liouville family.  Rough
// (singular at 0) for H < 1/2, identically 1 at H = 1/2, vanishing at 0 for
// H > 1/2.
inline VolterraKernel make_fractional_kernel(double H, double T) {
  if (!(H > 0.0 && H < 1.0)) throw std::invalid_argument("make_fractional_kernel: H must be in (0,1)");
  if (!(T > 0.0)) throw std::invalid_argument("make_fractional_kernel: horizon must be positive");
  const double expo = H - 0.5;
  const double norm = 1.0 / std::tgamma(H + 0.5);
  VolterraKernel k;
  k.eval = [expo, norm](double u) { return norm * std::pow(u, expo); };
  k.horizon = T;
  k.hoelder_index = H;
  if (H > 0.5)
    k.value_at_zero = 0.0;
  else if (H == 0.5)
    k.value_at_zero = 1.0;
  return k;
}

// K(u) = u^e, the raw power kernel of the smooth-kernel experiments (no Gamma
// normalizer).  e > 0 ensures K(0) = 0 as the Bernstein construction needs.
inline VolterraKernel make_power_kernel(double exponent, double T) {
  if (!(exponent > 0.0)) throw std::invalid_argument("make_power_kernel: exponent must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("make_power_kernel: horizon must be positive");
  VolterraKernel k;
  k.eval = [exponent](double u) { return std::pow(u, exponent); };
  k.horizon = T;
  k.hoelder_index = std::min(exponent, 1.0);
  k.value_at_zero = 0.0;
  return k;
}

// Wraps a caller-supplied difference kernel verbatim.  The Hoelder index is
// asserted by the caller, never estimated.
inline VolterraKernel make_custom_kernel(std::function<double(double)> f, double H, double T,
                                         std::optional<double> value_at_zero = std::nullopt) {
  if (!(T > 0.0)) throw std::invalid_argument("make_custom_kernel: horizon must be positive");
  if (!f) throw std::invalid_argument("make_custom_kernel: evaluation function required");
  VolterraKernel k;
  k.eval = std::move(f);
  k.horizon = T;
  k.hoelder_index = H;
  k.value_at_zero = value_at_zero;
  return k;
}

// L2([0,T]) distance by composite midpoint quadrature.  Midpoint rather than
// trapezoid so that rough kernels are never evaluated at lag 0.
inline double kernel_l2_distance(const VolterraKernel& a, const VolterraKernel& b,
                                 std::size_t n_quad = kDefaultQuadPoints) {
  if (!a.is_difference || !b.is_difference)
    throw std::invalid_argument("kernel_l2_distance: both kernels must be of difference type");
  if (std::fabs(a.horizon - b.horizon) > 1e-12 * std::max(a.horizon, b.horizon))
    throw std::invalid_argument("kernel_l2_distance: kernels live on different horizons");
  if (n_quad < 2) throw std::invalid_argument("kernel_l2_distance: n_quad must be >= 2");
  const double T = a.horizon;
  const double h = T / static_cast<double>(n_quad);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_quad; ++i) {
    const double u = (static_cast<double>(i) + 0.5) * h;
    const double d = a.eval(u) - b.eval(u);
    acc += d * d;
  }
  return std::sqrt(acc * h);
}

}  // namespace svv
