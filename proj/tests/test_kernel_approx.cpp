#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "svv/kernel.hpp"
#include "svv/kernel_approx.hpp"

using namespace svv;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// adaptive Simpson on [lo, hi]; independent oracle for the spectral-measure
// cell integrals
double simpson(const std::function<double(double)>& f, double lo, double hi, double tol,
               int depth = 0) {
  const double mid = 0.5 * (lo + hi);
  const double h = hi - lo;
  const double s1 = h / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi));
  const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
  const double s2 = h / 12.0 * (f(lo) + 4.0 * f(lm) + 2.0 * f(mid) + 4.0 * f(rm) + f(hi));
  if (depth > 40 || std::abs(s2 - s1) < 15.0 * tol) return s2 + (s2 - s1) / 15.0;
  return simpson(f, lo, mid, tol / 2, depth + 1) + simpson(f, mid, hi, tol / 2, depth + 1);
}

}  // namespace

TEST_CASE("OU discretization reproduces frozen m = 1 reference values") {
  const OUBasis b = ou_discretize(0.3, 1, 1.0);
  REQUIRE(b.m == 1);
  // independently derived with 30-digit arithmetic
  CHECK_THAT(b.tau[1], WithinRel(0.607355440249823459192641534115, 1e-12));
  CHECK_THAT(b.sigma[0], WithinRel(0.846695793463684162389544004302, 1e-12));
  CHECK_THAT(b.alpha[0], WithinRel(0.101225906708303909865440255686, 1e-12));
}

TEST_CASE("OU discretization reproduces frozen m = 3 reference values") {
  const OUBasis b = ou_discretize(0.3, 3, 1.0);
  REQUIRE(b.m == 3);
  CHECK_THAT(b.tau[1], WithinRel(0.487549454649715754222056140259, 1e-12));
  const double sigma[] = {0.810293867241812306265704790476, 0.12048936512304336135298024241,
                          0.0786249082389784311393275665177};
  const double alpha[] = {0.0812582424416192923703426900432, 0.708980112159004704076793669624,
                          1.20573209236508717240436000289};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK_THAT(b.sigma[i], WithinRel(sigma[i], 1e-12));
    CHECK_THAT(b.alpha[i], WithinRel(alpha[i], 1e-12));
  }
}

TEST_CASE("OU cell masses and speeds match quadrature of the spectral measure") {
  const double H = 0.3;
  const double c_h = 1.0 / (std::tgamma(H + 0.5) * std::tgamma(0.5 - H));
  const OUBasis b = ou_discretize(H, 5, 1.0);
  for (std::size_t i = 0; i < b.m; ++i) {
    const double lo = b.tau[i], hi = b.tau[i + 1];
    // substitute a = w^5: da = 5 w^4 dw turns a^{-0.8} da into 5 dw, removing
    // the spectral density's singularity at a = 0 (H = 0.3 gives -H-1/2 = -0.8)
    const auto mass_f = [&](double) { return 5.0 * c_h; };
    const auto mom_f = [&](double w) { return 5.0 * c_h * ipow(w, 5); };
    const double wlo = std::pow(lo, 0.2), whi = std::pow(hi, 0.2);
    const double mass = simpson(mass_f, wlo, whi, 1e-12);
    const double mom = simpson(mom_f, wlo, whi, 1e-12);
    CHECK_THAT(b.sigma[i], WithinRel(mass, 1e-9));
    CHECK_THAT(b.alpha[i], WithinRel(mom / mass, 1e-9));
  }
}

TEST_CASE("OU approximant error decreases with m") {
  const VolterraKernel target = make_fractional_kernel(0.3, 1.0);
  double prev = 1e300;
  for (std::size_t m : {10, 40, 160}) {
    const double d = kernel_l2_distance(target, as_kernel(ou_discretize(0.3, m, 1.0)), 1 << 15);
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("OU discretization validates its arguments") {
  CHECK_THROWS_AS(ou_discretize(0.5, 10, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ou_discretize(0.0, 10, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ou_discretize(0.3, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ou_discretize(0.3, 10, 0.0), std::invalid_argument);
}

TEST_CASE("geometric OU partition spans [tau_min, tau_max] geometrically") {
  const OUBasis b = ou_discretize_geometric(0.3, 4, 1.0, 0.01, 100.0);
  REQUIRE(b.tau.size() == 5);
  CHECK(b.tau[0] == 0.0);
  CHECK_THAT(b.tau[1], WithinRel(0.01, 1e-12));
  CHECK_THAT(b.tau[4], WithinRel(100.0, 1e-12));
  const double ratio = b.tau[2] / b.tau[1];
  CHECK_THAT(b.tau[3] / b.tau[2], WithinRel(ratio, 1e-9));
  CHECK_THAT(ratio, WithinRel(std::pow(1e4, 1.0 / 3.0), 1e-9));
  CHECK_THROWS_AS(ou_discretize_geometric(0.3, 4, 1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ou_discretize_geometric(0.3, 4, 1.0, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("Bernstein fit reproduces the polynomial at the fit nodes") {
  const VolterraKernel target = make_power_kernel(0.4, 1.0);
  for (std::size_t m : {1, 2, 5, 10, 16}) {
    const BernsteinBasis b = bernstein_fit(target, m);
    REQUIRE(b.kappa.size() == m + 1);
    CHECK(b.kappa[0] == 0.0);
    // Bernstein operator interpolates at s = 0 and s = 1 and stays within
    // round-off of the Bernstein form at the interior nodes
    CHECK_THAT(eval_factor_kernel(b, 1.0), WithinRel(target.eval(1.0), 1e-9));
    for (std::size_t j = 1; j < m; ++j) {
      const double u = static_cast<double>(j) / static_cast<double>(m);
      const double direct = detail::bernstein_form_eval(b, u);
      CHECK_THAT(eval_factor_kernel(b, u), WithinAbs(direct, 1e-9));
    }
  }
}

TEST_CASE("Bernstein fit of a polynomial of degree <= m is near-exact in shape") {
  // Bernstein operators reproduce affine functions exactly
  const VolterraKernel lin = make_custom_kernel([](double u) { return 3.0 * u; }, 1.0, 1.0, 0.0);
  const BernsteinBasis b = bernstein_fit(lin, 7);
  for (double u : {0.1, 0.33, 0.5, 0.92})
    CHECK_THAT(eval_factor_kernel(b, u), WithinRel(3.0 * u, 1e-12));
}

TEST_CASE("Bernstein approximant keeps the kernel's Hoelder seminorm in check") {
  // |K_m(u) - K_m(v)| <= 1.05 sup |K(u) - K(v)| scaled to |u - v|^H on a grid
  const VolterraKernel target = make_power_kernel(0.4, 1.0);
  const BernsteinBasis b = bernstein_fit(target, 12);
  double worst_ratio = 0.0;
  for (int i = 0; i <= 50; ++i)
    for (int j = i + 1; j <= 50; ++j) {
      const double u = i / 50.0, v = j / 50.0;
      const double num = std::abs(eval_factor_kernel(b, v) - eval_factor_kernel(b, u));
      worst_ratio = std::max(worst_ratio, num / std::pow(v - u, 0.4));
    }
  CHECK(worst_ratio <= 1.05);  // target family has seminorm 1 on [0,1]
}

TEST_CASE("Bernstein error decreases with m on the power kernel") {
  const VolterraKernel target = make_power_kernel(0.4, 1.0);
  double prev = 1e300;
  for (std::size_t m : {4, 8, 16, 32}) {
    const double d = kernel_l2_distance(target, as_kernel(bernstein_fit(target, m)), 1 << 15);
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("Bernstein fit enforces its admission rules") {
  const VolterraKernel ok = make_power_kernel(0.4, 1.0);
  CHECK_THROWS_AS(bernstein_fit(ok, 0), std::invalid_argument);
  CHECK_THROWS_AS(bernstein_fit(ok, kMaxBernsteinDegree + 1), std::invalid_argument);
  // rough kernels are singular at lag 0: inadmissible
  CHECK_THROWS_AS(bernstein_fit(make_fractional_kernel(0.3, 1.0), 10), std::invalid_argument);
  // nonzero value at lag 0: inadmissible
  CHECK_THROWS_AS(bernstein_fit(make_fractional_kernel(0.5, 1.0), 10), std::invalid_argument);
  // max admitted degree still fits
  CHECK_NOTHROW(bernstein_fit(ok, kMaxBernsteinDegree));
}

TEST_CASE("high-degree evaluation switches to the stable positive-weight form") {
  const VolterraKernel target = make_power_kernel(0.4, 1.0);
  const BernsteinBasis b = bernstein_fit(target, 40);
  // values stay within the kernel's range; the monomial form would explode
  for (double u : {0.05, 0.3, 0.6, 0.99}) {
    const double v = eval_factor_kernel(b, u);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-9);
    CHECK_THAT(v, WithinAbs(target.eval(u), 0.15));  // operator bias only
  }
}

TEST_CASE("factor_dimension counts OU factors and Bernstein moments") {
  CHECK(factor_dimension(FactorBasis{ou_discretize(0.3, 7, 1.0)}) == 7);
  CHECK(factor_dimension(FactorBasis{bernstein_fit(make_power_kernel(0.4, 1.0), 7)}) == 8);
}

TEST_CASE("as_kernel exposes approximants to kernel tooling") {
  const OUBasis ou = ou_discretize(0.3, 3, 1.0);
  const VolterraKernel k = as_kernel(ou);
  CHECK_THAT(k.eval(0.5), WithinRel(eval_factor_kernel(ou, 0.5), 1e-15));
  REQUIRE(k.value_at_zero.has_value());
  CHECK_THAT(*k.value_at_zero, WithinRel(ou.sigma[0] + ou.sigma[1] + ou.sigma[2], 1e-15));
  const BernsteinBasis bb = bernstein_fit(make_power_kernel(0.4, 1.0), 6);
  const VolterraKernel kb = as_kernel(bb);
  CHECK_THAT(kb.eval(0.37), WithinRel(eval_factor_kernel(bb, 0.37), 1e-15));
  REQUIRE(kb.value_at_zero.has_value());
  CHECK(*kb.value_at_zero == 0.0);
}
