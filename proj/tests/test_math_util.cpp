#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "svv/math_util.hpp"

using namespace svv;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("normal_cdf matches high-precision reference values") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK_THAT(normal_cdf(1.0), WithinRel(0.841344746068542948585232545632, 1e-15));
  CHECK_THAT(normal_cdf(-1.96), WithinRel(0.0249978951482204341365842690408, 1e-14));
  CHECK_THAT(normal_cdf(2.5), WithinRel(0.993790334674223864833021895426, 1e-15));
  CHECK_THAT(normal_cdf(-3.0), WithinRel(0.00134989803163009452665181476759, 1e-14));
  CHECK_THAT(normal_cdf(0.123), WithinRel(0.548946451016436759081607310595, 1e-15));
}

TEST_CASE("normal_quantile matches high-precision reference values") {
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK_THAT(normal_quantile(0.975), WithinRel(1.95996398454005423552459443052, 1e-14));
  CHECK_THAT(normal_quantile(0.01), WithinRel(-2.32634787404084110088560616335, 1e-14));
  CHECK_THAT(normal_quantile(1e-10), WithinRel(-6.36134090240405620469537582827, 1e-14));
  CHECK_THAT(normal_quantile(0.3), WithinRel(-0.524400512708040784038289325025, 1e-14));
}

TEST_CASE("normal_quantile inverts normal_cdf across the bulk and tails") {
  // above x ~ 5 the round trip is limited by double representation of p near
  // 1 (absolute eps 1e-16 against a pdf of ~1e-6), not by the approximation
  for (double x = -7.0; x <= 5.0; x += 0.125) {
    const double p = normal_cdf(x);
    CHECK_THAT(normal_quantile(p), WithinAbs(x, 2e-9));
  }
  // symmetry of the rational approximation; representation of 1 - p bounds
  // the achievable agreement in the tail
  for (double p : {1e-8, 1e-6, 0.137, 0.4999})
    CHECK_THAT(normal_quantile(p), WithinAbs(-normal_quantile(1.0 - p), 2e-9));
}

TEST_CASE("normal_quantile rejects arguments outside (0,1)") {
  CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(-0.5), std::invalid_argument);
}

TEST_CASE("ipow multiplies out small integer powers exactly") {
  CHECK(ipow(2.0, 10) == 1024.0);
  CHECK(ipow(1.5, 0) == 1.0);
  CHECK(ipow(-2.0, 3) == -8.0);
  CHECK(ipow(0.5, 4) == 0.0625);
  CHECK_THAT(ipow(1.1, 7), WithinRel(std::pow(1.1, 7.0), 1e-15));
}

TEST_CASE("binom reproduces Pascal's triangle") {
  CHECK(binom(0, 0) == 1.0);
  CHECK(binom(5, 2) == 10.0);
  CHECK(binom(10, 3) == 120.0);
  CHECK(binom(30, 12) == 86493225.0);
  CHECK(binom(7, 9) == 0.0);
  CHECK(binom(64, 0) == 1.0);
  // beyond 2^53 the recurrence rounds; stays correct to double precision
  CHECK_THAT(binom(64, 32), WithinRel(1.832624140942590534e18, 1e-15));
  CHECK_THROWS_AS(binom(65, 1), std::invalid_argument);
}

TEST_CASE("CompensatedSum survives cancellation that breaks naive summation") {
  CompensatedSum s;
  double naive = 0.0;
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // big/small alternating magnitudes: naive summation loses the small terms
  long double exact = 0.0L;
  for (int i = 0; i < 10000; ++i) {
    const double v = (i % 2 == 0 ? 1e16 : -1e16) + u(gen);
    s.add(v);
    naive += v;
    exact += static_cast<long double>(v);
  }
  CHECK_THAT(s.value(), WithinRel(static_cast<double>(exact), 1e-12));
  CHECK(std::abs(s.value() - static_cast<double>(exact)) <=
        std::abs(naive - static_cast<double>(exact)));
}
