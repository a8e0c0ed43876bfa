#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "svv/grid.hpp"
#include "svv/kernel.hpp"
#include "svv/kernel_approx.hpp"
#include "svv/math_util.hpp"
#include "svv/rng.hpp"

namespace svv {

// Brownian increment components in the counter-based RNG keying.
inline constexpr std::uint32_t kComponentB1 = 0;
inline constexpr std::uint32_t kComponentB2 = 1;

// One path's worth of increments of the driving two-dimensional Brownian
// motion.  dB*_k ~ Normal(0, t_{k+1} - t_k); the sequences are a pure
// function of (master_seed, path_index).
struct BrownianIncrements {
  std::vector<double> db1, db2;
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

inline BrownianIncrements sample_increments(const TimeGrid& grid, std::uint64_t master_seed,
                                            std::uint64_t path_index) {
  const CounterRng rng(master_seed, path_index);
  const std::size_t n = grid.steps();
  BrownianIncrements inc;
  inc.master_seed = master_seed;
  inc.path_index = path_index;
  inc.db1.resize(n);
  inc.db2.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double sd = std::sqrt(grid.t[k + 1] - grid.t[k]);
    inc.db1[k] = sd * rng.normal(k, kComponentB1);
    inc.db2[k] = sd * rng.normal(k, kComponentB2);
  }
  return inc;
}

// Left-point Riemann convolution Z(t_j) = sum_{i<j} K(t_j - t_i) dB1_i.
// Uniform grids only, so the lag values K(l*dt), l >= 1, can be tabulated
// once and rough kernels are never evaluated at lag 0.  This rule is the one
// under which the factor recursions below reproduce Z_m exactly.
inline std::vector<double> volterra_convolution(const VolterraKernel& kernel,
                                                const BrownianIncrements& inc,
                                                const TimeGrid& grid) {
  if (!kernel.is_difference)
    throw std::invalid_argument("volterra_convolution: kernel must be of difference type");
  if (!grid.uniform)
    throw std::invalid_argument("volterra_convolution: only uniform grids are supported");
  const std::size_t n = grid.steps();
  if (inc.db1.size() != n)
    throw std::invalid_argument("volterra_convolution: increments not aligned with grid");
  std::vector<double> lagged(n + 1, 0.0);
  for (std::size_t l = 1; l <= n; ++l) lagged[l] = kernel.eval(static_cast<double>(l) * grid.dt);
  std::vector<double> z(n + 1, 0.0);
  for (std::size_t j = 1; j <= n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < j; ++i) acc += lagged[j - i] * inc.db1[i];
    z[j] = acc;
  }
  return z;
}

// Markov factor state at a grid time: OU factor values V_1..V_m, or Bernstein
// moment accumulators M_0..M_m with M_p = sum_{j<k} s_j^p dB1_j in the
// rescaled time s = t/T (rescaling keeps the monomial moments conditioned).
struct FactorState {
  std::vector<double> values;
  std::size_t time_index = 0;
};

inline FactorState initial_factor_state(const OUBasis& basis) {
  return FactorState{std::vector<double>(basis.m, 0.0), 0};
}

inline FactorState initial_factor_state(const BernsteinBasis& basis) {
  return FactorState{std::vector<double>(basis.m + 1, 0.0), 0};
}

inline FactorState initial_factor_state(const FactorBasis& basis) {
  return std::visit([](const auto& b) { return initial_factor_state(b); }, basis);
}

// V_i <- exp(-alpha_i dt) (V_i + sigma_i dB1).  Exactly reproduces the
// left-point convolution of the OU approximant with the same increments.
inline FactorState factor_step(const OUBasis& basis, FactorState state, double db1, double dt) {
  if (state.values.size() != basis.m)
    throw std::invalid_argument("factor_step: state dimension does not match basis");
  for (std::size_t i = 0; i < basis.m; ++i)
    state.values[i] = std::exp(-basis.alpha[i] * dt) * (state.values[i] + basis.sigma[i] * db1);
  ++state.time_index;
  return state;
}

// M_p <- M_p + (t_k/T)^p dB1 for p = 0..m; t_k is the LEFT endpoint of the
// step being absorbed.
inline FactorState bernstein_factor_step(const BernsteinBasis& basis, FactorState state,
                                         double db1, double t_k) {
  if (state.values.size() != basis.m + 1)
    throw std::invalid_argument("bernstein_factor_step: state dimension does not match basis");
  const double s = t_k / basis.horizon;
  double s_pow = 1.0;
  for (std::size_t p = 0; p <= basis.m; ++p, s_pow *= s) state.values[p] += s_pow * db1;
  ++state.time_index;
  return state;
}

// Z_m value carried by an OU factor state: sum of the factors.
inline double factor_noise_value(const OUBasis& basis, const FactorState& state) {
  if (state.values.size() != basis.m)
    throw std::invalid_argument("factor_noise_value: state dimension does not match basis");
  double z = 0.0;
  for (double v : state.values) z += v;
  return z;
}

// Z_m(t) reconstructed from Bernstein moments via the binomial expansion
// (t - s)^i = sum_p C(i,p) (-1)^p t^{i-p} s^p, all in rescaled time:
// Z_m(t) = sum_p (-1)^p M_p P_p(s),  P_p(s) = sum_{i>=p} kappa_i T^i C(i,p) s^{i-p}.
inline double factor_noise_value(const BernsteinBasis& basis, const FactorState& state,
                                 double t) {
  if (state.values.size() != basis.m + 1)
    throw std::invalid_argument("factor_noise_value: state dimension does not match basis");
  const std::size_t m = basis.m;
  const double s = t / basis.horizon;
  std::vector<double> scaled(m + 1);
  double t_pow = 1.0;
  for (std::size_t i = 0; i <= m; ++i, t_pow *= basis.horizon) scaled[i] = basis.kappa[i] * t_pow;
  double z = 0.0;
  double sign = 1.0;
  for (std::size_t p = 0; p <= m; ++p, sign = -sign) {
    double horner = 0.0;
    for (std::size_t i = m + 1; i-- > p;) horner = horner * s + scaled[i] * binom(i, p);
    z += sign * state.values[p] * horner;
  }
  return z;
}

inline double factor_noise_value(const FactorBasis& basis, const FactorState& state, double t) {
  if (const auto* ou = std::get_if<OUBasis>(&basis)) return factor_noise_value(*ou, state);
  return factor_noise_value(std::get<BernsteinBasis>(basis), state, t);
}

}  // namespace svv
