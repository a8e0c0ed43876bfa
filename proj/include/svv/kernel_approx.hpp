#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "svv/errors.hpp"
#include "svv/kernel.hpp"
#include "svv/math_util.hpp"

namespace svv {

// Sum-of-exponentials approximant K_m(u) = sum_i sigma_i exp(-alpha_i u),
// obtained by discretizing the rough kernel's spectral measure
// mu(da) = c_H a^{-H-1/2} da over a partition 0 = tau_0 < ... < tau_m.
struct OUBasis {
  std::size_t m = 0;
  std::vector<double> sigma;  // cell masses of mu, all > 0
  std::vector<double> alpha;  // cell means of mu, strictly increasing
  std::vector<double> tau;    // partition, tau[0] = 0
  double H = 0.0;             // target roughness, in (0, 1/2)
  double horizon = 0.0;
};

// Polynomial approximant K_m(u) = sum_i kappa_i u^i, the Bernstein operator
// of degree m applied to the kernel on [0, T].  The monomial coefficients
// feed the moment-factor recursion; node_values holds K(T j/m), which gives a
// positive-weight (hence well-conditioned) evaluation path at high degree
// where the monomial form cancels catastrophically.
struct BernsteinBasis {
  std::size_t m = 0;
  std::vector<double> kappa;        // monomial coefficients in the lag, kappa[0] = 0
  double horizon = 0.0;
  std::vector<double> node_values;  // K(T j/m) for j = 0..m
};

using FactorBasis = std::variant<OUBasis, BernsteinBasis>;

// Degree bound for the Bernstein fit.  Monomial/Bernstein-form agreement in
// double precision degrades with degree (binomial-scale cancellation); 64 is
// the largest degree at which the positive-weight evaluation stays exact and
// the coefficient table arithmetic is still meaningful.
inline constexpr std::size_t kMaxBernsteinDegree = 64;

// Largest degree at which the monomial form itself is trustworthy; above it
// evaluation switches to the positive-weight Bernstein form.
inline constexpr std::size_t kMonomialEvalDegree = 20;

namespace detail {

// c_H = 1 / (Gamma(H + 1/2) Gamma(1/2 - H)), the density constant of mu.
inline double ou_measure_constant(double H) {
  return 1.0 / (std::tgamma(H + 0.5) * std::tgamma(0.5 - H));
}

// Builds sigma/alpha from an arbitrary partition via the closed-form power
// antiderivatives of mu(da) and a mu(da).
inline OUBasis ou_from_partition(double H, std::vector<double> tau, double T) {
  const double c_h = ou_measure_constant(H);
  const double e_mass = 0.5 - H;   // exponent of the mass antiderivative
  const double e_mean = 1.5 - H;   // exponent of the first-moment antiderivative
  OUBasis b;
  b.m = tau.size() - 1;
  b.H = H;
  b.horizon = T;
  b.sigma.resize(b.m);
  b.alpha.resize(b.m);
  for (std::size_t i = 0; i < b.m; ++i) {
    const double lo = tau[i], hi = tau[i + 1];
    const double mass = c_h * (std::pow(hi, e_mass) - std::pow(lo, e_mass)) / e_mass;
    const double moment = c_h * (std::pow(hi, e_mean) - std::pow(lo, e_mean)) / e_mean;
    b.sigma[i] = mass;
    b.alpha[i] = moment / mass;
    if (!(b.sigma[i] > 0.0))
      throw numerical_error("ou_discretize: nonpositive cell mass at cell " + std::to_string(i));
    if (i > 0 && !(b.alpha[i] > b.alpha[i - 1]))
      throw numerical_error("ou_discretize: mean-reversion speeds not increasing at cell " +
                            std::to_string(i));
  }
  b.tau = std::move(tau);
  return b;
}

}  // namespace detail

// Default partition tau_i = (1/T) (sqrt(10)(1-2H)/(5-2H))^{2/5} i m^{-1/5},
// which balances the truncation and discretization errors and yields the
// L2 rate C_H m^{-4H/5}.
inline OUBasis ou_discretize(double H, std::size_t m, double T) {
  if (!(H > 0.0 && H < 0.5))
    throw std::invalid_argument(
        "ou_discretize: H must be in (0, 1/2); for smooth kernels use the Bernstein scheme");
  if (m < 1) throw std::invalid_argument("ou_discretize: m must be >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("ou_discretize: horizon must be positive");
  const double scale =
      (1.0 / T) * std::pow(std::sqrt(10.0) * (1.0 - 2.0 * H) / (5.0 - 2.0 * H), 0.4);
  std::vector<double> tau(m + 1);
  const double m_fac = std::pow(static_cast<double>(m), -0.2);
  for (std::size_t i = 0; i <= m; ++i) tau[i] = scale * static_cast<double>(i) * m_fac;
  return detail::ou_from_partition(H, std::move(tau), T);
}

// Geometric partition alternative: first cell [0, tau_min], then geometric
// growth up to tau_max.  Accepted for experimentation; carries no rate
// guarantee.
inline OUBasis ou_discretize_geometric(double H, std::size_t m, double T, double tau_min,
                                       double tau_max) {
  if (!(H > 0.0 && H < 0.5))
    throw std::invalid_argument(
        "ou_discretize_geometric: H must be in (0, 1/2); for smooth kernels use the Bernstein "
        "scheme");
  if (m < 1) throw std::invalid_argument("ou_discretize_geometric: m must be >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("ou_discretize_geometric: horizon must be positive");
  if (!(tau_min > 0.0 && tau_max > tau_min))
    throw std::invalid_argument("ou_discretize_geometric: need 0 < tau_min < tau_max");
  std::vector<double> tau(m + 1);
  tau[0] = 0.0;
  if (m == 1) {
    tau[1] = tau_max;
  } else {
    const double ratio = std::pow(tau_max / tau_min, 1.0 / static_cast<double>(m - 1));
    double v = tau_min;
    for (std::size_t i = 1; i <= m; ++i, v *= ratio) tau[i] = v;
    tau[m] = tau_max;
  }
  return detail::ou_from_partition(H, std::move(tau), T);
}

// Monomial coefficients of the Bernstein polynomial of the kernel:
// kappa_i = T^{-i} sum_{j<=i} (-1)^{i-j} K(Tj/m) C(m,j) C(m-j, i-j).
// Compensated summation tames the alternating binomial-scale terms.
inline BernsteinBasis bernstein_fit(const VolterraKernel& kernel, std::size_t m) {
  if (m < 1) throw std::invalid_argument("bernstein_fit: m must be >= 1");
  if (m > kMaxBernsteinDegree)
    throw std::invalid_argument(
        "bernstein_fit: degree " + std::to_string(m) + " exceeds the supported maximum " +
        std::to_string(kMaxBernsteinDegree) +
        " (double-precision conditioning of the coefficient arithmetic)");
  if (!kernel.value_at_zero.has_value() || *kernel.value_at_zero != 0.0)
    throw std::invalid_argument(
        "bernstein_fit: the Bernstein scheme requires a kernel vanishing at lag 0");
  const double T = kernel.horizon;
  BernsteinBasis b;
  b.m = m;
  b.horizon = T;
  b.node_values.resize(m + 1);
  b.node_values[0] = 0.0;
  for (std::size_t j = 1; j <= m; ++j)
    b.node_values[j] = kernel.eval(T * static_cast<double>(j) / static_cast<double>(m));
  b.kappa.resize(m + 1);
  b.kappa[0] = 0.0;  // forced by K(0) = 0
  double t_pow = 1.0;
  for (std::size_t i = 1; i <= m; ++i) {
    t_pow *= T;
    CompensatedSum acc;
    for (std::size_t j = 1; j <= i; ++j) {
      const double sign = ((i - j) % 2 == 0) ? 1.0 : -1.0;
      acc.add(sign * b.node_values[j] * binom(m, j) * binom(m - j, i - j));
    }
    b.kappa[i] = acc.value() / t_pow;
  }
  return b;
}

inline double eval_factor_kernel(const OUBasis& basis, double u) {
  if (!(u >= 0.0 && u <= basis.horizon * (1.0 + 1e-12)))
    throw std::invalid_argument("eval_factor_kernel: lag outside [0, T]");
  double s = 0.0;
  for (std::size_t i = 0; i < basis.m; ++i) s += basis.sigma[i] * std::exp(-basis.alpha[i] * u);
  return s;
}

namespace detail {

// Positive-weight Bernstein-form evaluation sum_j K(Tj/m) C(m,j) s^j (1-s)^{m-j};
// algebraically identical to the monomial form but stable at every admitted
// degree.  Weights are built in log space.
inline double bernstein_form_eval(const BernsteinBasis& basis, double s) {
  const std::size_t m = basis.m;
  if (s <= 0.0) return basis.node_values[0];
  if (s >= 1.0) return basis.node_values[m];
  const double ls = std::log(s);
  const double l1s = std::log1p(-s);
  double acc = 0.0;
  for (std::size_t j = 0; j <= m; ++j) {
    const double lw = std::lgamma(static_cast<double>(m + 1)) -
                      std::lgamma(static_cast<double>(j + 1)) -
                      std::lgamma(static_cast<double>(m - j + 1)) +
                      static_cast<double>(j) * ls + static_cast<double>(m - j) * l1s;
    acc += basis.node_values[j] * std::exp(lw);
  }
  return acc;
}

}  // namespace detail

inline double eval_factor_kernel(const BernsteinBasis& basis, double u) {
  if (!(u >= 0.0 && u <= basis.horizon * (1.0 + 1e-12)))
    throw std::invalid_argument("eval_factor_kernel: lag outside [0, T]");
  if (basis.m <= kMonomialEvalDegree) {
    // Horner on the monomial coefficients; exact agreement with the factor
    // moment arithmetic, which uses the same kappas.
    double acc = 0.0;
    for (std::size_t i = basis.kappa.size(); i-- > 0;) acc = acc * u + basis.kappa[i];
    return acc;
  }
  return detail::bernstein_form_eval(basis, u / basis.horizon);
}

inline double eval_factor_kernel(const FactorBasis& basis, double u) {
  return std::visit([u](const auto& b) { return eval_factor_kernel(b, u); }, basis);
}

inline std::size_t factor_dimension(const FactorBasis& basis) {
  // OU carries m factor values; the Bernstein scheme carries m+1 moments.
  if (const auto* ou = std::get_if<OUBasis>(&basis)) return ou->m;
  return std::get<BernsteinBasis>(basis).m + 1;
}

// Adapter so kernel-space tooling (distances, convolution) applies to
// approximants.  Both families are finite at lag 0; the approximant of a
// rough kernel is smooth, hence Lipschitz on [0, T].
inline VolterraKernel as_kernel(const OUBasis& basis) {
  VolterraKernel k;
  OUBasis copy = basis;
  k.eval = [copy](double u) { return eval_factor_kernel(copy, u); };
  k.horizon = basis.horizon;
  k.hoelder_index = 1.0;
  double at_zero = 0.0;
  for (double s : basis.sigma) at_zero += s;
  k.value_at_zero = at_zero;
  return k;
}

inline VolterraKernel as_kernel(const BernsteinBasis& basis) {
  VolterraKernel k;
  BernsteinBasis copy = basis;
  k.eval = [copy](double u) { return eval_factor_kernel(copy, u); };
  k.horizon = basis.horizon;
  k.hoelder_index = 1.0;
  k.value_at_zero = 0.0;
  return k;
}

inline VolterraKernel as_kernel(const FactorBasis& basis) {
  return std::visit([](const auto& b) { return as_kernel(b); }, basis);
}

}  // namespace svv
