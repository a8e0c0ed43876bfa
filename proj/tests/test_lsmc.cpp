#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "svv/kernel_approx.hpp"
#include "svv/lsmc.hpp"

using namespace svv;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MarketSpec rough_market(std::size_t m) {
  MarketSpec spec;
  spec.sandwich.phi = constant_profile(0.01);
  spec.sandwich.psi = constant_profile(5.0);
  spec.sandwich.gamma = 4.0;
  spec.sandwich.c = 1.0;
  spec.sandwich.y0 = 1.0;
  spec.sandwich.c3 = 1.0;
  spec.kernel = make_power_kernel(0.4, 1.0);
  spec.basis = bernstein_fit(spec.kernel, m);
  spec.rho = 0.5;
  spec.x0 = 5.0;
  return spec;
}

// Constant volatility sigma: no repulsion, zero kernel.  The price is exact
// lognormal, with tails controlled by sigma.
MarketSpec flat_market(double sigma = 1.0) {
  MarketSpec spec;
  spec.sandwich.phi = constant_profile(-10.0);
  spec.sandwich.psi = constant_profile(10.0);
  spec.sandwich.c = 0.0;
  spec.sandwich.y0 = sigma;
  spec.sandwich.c3 = 0.0;
  spec.kernel = make_custom_kernel([](double) { return 0.0; }, 1.0, 1.0, 0.0);
  spec.basis = bernstein_fit(spec.kernel, 2);
  spec.rho = 0.5;
  spec.x0 = 5.0;
  return spec;
}

}  // namespace

TEST_CASE("monomial exponent enumeration is graded and complete") {
  const auto e22 = monomial_exponents(2, 2);
  const std::vector<std::vector<unsigned>> expect = {{0, 0}, {1, 0}, {0, 1},
                                                     {2, 0}, {1, 1}, {0, 2}};
  CHECK(e22 == expect);
  // count is C(dims + degree, degree)
  CHECK(monomial_exponents(13, 2).size() == 105);
  CHECK(monomial_exponents(3, 3).size() == 20);
  CHECK(monomial_exponents(4, 0).size() == 1);

  double r[2] = {2.0, 3.0};
  std::vector<double> phi(6);
  detail::monomial_features(e22, r, 2, phi.data());
  CHECK(phi == std::vector<double>{1.0, 2.0, 3.0, 4.0, 6.0, 9.0});
}

TEST_CASE("degree zero reduces to unconditional means") {
  const TimeGrid grid = TimeGrid::make_uniform(20, 1.0);
  const JointEngine engine(flat_market(), grid, true);
  const ClaimOnGrid claim = make_claim(call_payoff(4.0), grid, nullptr);
  const std::vector<std::size_t> part = partition_indices(grid, 2);
  const std::size_t n = 1000;
  const RegressionModel model = lsmc_fit(engine, part, claim, n, 0, 1e-8, 42);

  // oracle: plain per-date target means over the same training paths
  std::vector<double> num(part.size() - 1, 0.0), den(part.size() - 1, 0.0);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto s = engine.simulate_partition(part, 42, i);
    const double f = claim.discounted(s.x_bounds.back());
    for (std::size_t j = 0; j + 1 < part.size(); ++j) {
      const double dx = s.x_bounds[j + 1] - s.x_bounds[j];
      num[j] += f * dx;
      den[j] += dx * dx;
    }
  }
  for (std::size_t j = 0; j + 1 < part.size(); ++j) {
    CHECK_THAT(model.dates[j].beta_num[0], WithinRel(num[j] / n, 1e-15));
    CHECK_THAT(model.dates[j].beta_den[0], WithinRel(den[j] / n, 1e-15));
    // any state maps to the same intercept-only prediction
    const auto probe = engine.simulate_partition(part, 7, 3).states[j];
    const auto p = model.eval(j, probe);
    CHECK(p.num == model.dates[j].beta_num[0]);
    CHECK(p.den == model.dates[j].beta_den[0]);
  }
}

TEST_CASE("first rebalance date is intercept-only at any degree") {
  // the date-0 state is deterministic, so every feature column is constant
  // and dropped; degree 2 must then agree with degree 0 exactly
  const TimeGrid grid = TimeGrid::make_uniform(20, 1.0);
  const JointEngine engine(flat_market(), grid, true);
  const ClaimOnGrid claim = make_claim(call_payoff(4.0), grid, nullptr);
  const std::vector<std::size_t> part = partition_indices(grid, 2);
  const RegressionModel d0 = lsmc_fit(engine, part, claim, 1000, 0, 1e-8, 42);
  const RegressionModel d2 = lsmc_fit(engine, part, claim, 1000, 2, 1e-8, 42);

  for (std::size_t a = 1; a < d2.feature_count(); ++a) CHECK(d2.dates[0].sd[a] == 0.0);
  CHECK(d2.dates[0].beta_num[0] == d0.dates[0].beta_num[0]);
  CHECK(d2.dates[0].beta_den[0] == d0.dates[0].beta_den[0]);
  const auto st = engine.simulate_partition(part, 1, 0).states[0];
  CHECK(d2.eval(0, st).u == d0.eval(0, st).u);
}

TEST_CASE("zero claim fits an exactly zero hedge") {
  const TimeGrid grid = TimeGrid::make_uniform(20, 1.0);
  const JointEngine engine(flat_market(0.35), grid, true);
  const ClaimOnGrid claim = make_claim(constant_payoff(0.0), grid, nullptr);
  const std::vector<std::size_t> part = partition_indices(grid, 2);
  const RegressionModel model = lsmc_fit(engine, part, claim, 2000, 2, 1e-8, 9);

  for (const auto& f : model.dates)
    for (double b : f.beta_num) CHECK(b == 0.0);
  const JointPath outer = engine.simulate(17, 0, true);
  const HedgeEstimate est = lsmc_hedge(model, outer, part);
  CHECK(est.method == "LSMC");
  for (const auto& s : est.stats) {
    CHECK(s.u == 0.0);
    CHECK(s.se_u == 0.0);
    CHECK(s.den > 0.0);
  }
}

TEST_CASE("identity claim fits a ratio near one across the state cloud") {
  // population ratio is exactly 1 for F = X(T); numerator and denominator
  // regressions share the design matrix, so their errors cancel in the ratio
  // wherever the fitted denominator is bounded away from zero.  That needs
  // (a) a state cloud on which the population projection of E[(dX)^2|state]
  // stays positive and (b) fit noise small next to the denominator scale --
  // both hold at sigma = 0.35 and a million training paths, and measurably
  // fail for heavier tails (sigma = 1 passes only ~83% even at this n).
  const TimeGrid grid = TimeGrid::make_uniform(20, 1.0);
  const JointEngine engine(flat_market(0.35), grid, true);
  const ClaimOnGrid claim = make_claim(identity_payoff(), grid, nullptr);
  const std::vector<std::size_t> part = partition_indices(grid, 2);

  for (std::size_t degree : {0u, 1u, 2u}) {
    DYNAMIC_SECTION("degree " << degree) {
      const RegressionModel model = lsmc_fit(engine, part, claim, 1000000, degree, 1e-8, 6);
      std::size_t ok = 0, total = 0;
      for (std::uint64_t i = 0; i < 400; ++i) {
        const auto s = engine.simulate_partition(part, 7, i);
        for (std::size_t j = 0; j + 1 < part.size(); ++j) {
          ++total;
          try {
            if (std::abs(model.eval(j, s.states[j]).u - 1.0) <= 0.05) ++ok;
          } catch (const numerical_error&) {
            // refused extrapolation counts as a miss
          }
        }
      }
      CHECK(ok * 100 >= total * 95);
    }
  }
}

TEST_CASE("fit is independent of the worker count") {
  const TimeGrid grid = TimeGrid::make_uniform(20, 1.0);
  const JointEngine engine(flat_market(), grid, true);
  const ClaimOnGrid claim = make_claim(call_payoff(4.0), grid, nullptr);
  const std::vector<std::size_t> part = partition_indices(grid, 2);
  // 2560 paths cross a block boundary, exercising the block accumulator
  const RegressionModel a = lsmc_fit(engine, part, claim, 2560, 2, 1e-8, 3, 1);
  const RegressionModel b = lsmc_fit(engine, part, claim, 2560, 2, 1e-8, 3, 4);
  for (std::size_t j = 0; j < a.dates.size(); ++j) {
    CHECK(a.dates[j].mean == b.dates[j].mean);
    CHECK(a.dates[j].sd == b.dates[j].sd);
    CHECK(a.dates[j].beta_num == b.dates[j].beta_num);
    CHECK(a.dates[j].beta_den == b.dates[j].beta_den);
  }
}

TEST_CASE("serialized models restore bit-identical predictions") {
  const TimeGrid grid = TimeGrid::make_uniform(20, 1.0);
  const JointEngine engine(flat_market(0.35), grid, true);
  const ClaimOnGrid claim = make_claim(call_payoff(4.0), grid, nullptr);
  const std::vector<std::size_t> part = partition_indices(grid, 2);
  const RegressionModel model = lsmc_fit(engine, part, claim, 1000, 2, 1e-8, 21);

  const nlohmann::json j = to_json(model);
  const RegressionModel back = model_from_json(j);
  // through a text dump as well, as the CLI writes it to disk
  const RegressionModel text = model_from_json(nlohmann::json::parse(j.dump()));

  CHECK(back.partition == model.partition);
  CHECK(back.payoff_name == model.payoff_name);
  CHECK(back.exponents == model.exponents);
  for (std::size_t d = 0; d < model.dates.size(); ++d) {
    CHECK(back.dates[d].mean == model.dates[d].mean);
    CHECK(back.dates[d].sd == model.dates[d].sd);
    CHECK(back.dates[d].beta_num == model.dates[d].beta_num);
    CHECK(back.dates[d].beta_den == model.dates[d].beta_den);
    CHECK(text.dates[d].beta_num == model.dates[d].beta_num);
    CHECK(text.dates[d].beta_den == model.dates[d].beta_den);
  }
  std::size_t compared = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto s = engine.simulate_partition(part, 99, i);
    for (std::size_t d = 0; d + 1 < part.size(); ++d) {
      try {
        const auto p = model.eval(d, s.states[d]);
        CHECK(back.eval(d, s.states[d]).u == p.u);
        CHECK(text.eval(d, s.states[d]).u == p.u);
        ++compared;
      } catch (const numerical_error&) {
        // a refusal must round-trip too
        CHECK_THROWS_AS(back.eval(d, s.states[d]), numerical_error);
      }
    }
  }
  CHECK(compared > 0);
}

TEST_CASE("policy adapter evaluates the fitted model") {
  const TimeGrid grid = TimeGrid::make_uniform(20, 1.0);
  const JointEngine engine(flat_market(0.35), grid, true);
  const ClaimOnGrid claim = make_claim(call_payoff(4.0), grid, nullptr);
  const std::vector<std::size_t> part = partition_indices(grid, 2);
  const RegressionModel model = lsmc_fit(engine, part, claim, 20000, 1, 1e-8, 2);
  const HedgePolicy policy = lsmc_policy(model);
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto s = engine.simulate_partition(part, 55, i);
    for (std::size_t d = 0; d + 1 < part.size(); ++d)
      CHECK(policy(d, s.states[d]) == model.eval(d, s.states[d]).u);
  }
}

TEST_CASE("regression guard rails") {
  const TimeGrid grid = TimeGrid::make_uniform(20, 1.0);
  const JointEngine engine(flat_market(), grid, true);
  const ClaimOnGrid claim = make_claim(call_payoff(4.0), grid, nullptr);
  const std::vector<std::size_t> part = partition_indices(grid, 2);

  SECTION("training size floor: 10x feature count") {
    // state dims 5, degree 2 -> q = 21 -> floor 210
    CHECK_THROWS_AS(lsmc_fit(engine, part, claim, 209, 2, 1e-8, 1), config_error);
    CHECK_NOTHROW(lsmc_fit(engine, part, claim, 210, 2, 1e-8, 1));
  }

  SECTION("factor mode is required") {
    MarketSpec conv = flat_market();
    const JointEngine ce(conv, grid, false);
    CHECK_THROWS_AS(lsmc_fit(ce, part, claim, 1000, 1, 1e-8, 1), config_error);
  }

  SECTION("partition shape") {
    CHECK_THROWS_AS(lsmc_fit(engine, {0}, claim, 1000, 1, 1e-8, 1), std::invalid_argument);
    const RegressionModel model = lsmc_fit(engine, part, claim, 1000, 1, 1e-8, 1);
    const JointPath outer = engine.simulate(3, 0, true);
    CHECK_THROWS_AS(lsmc_hedge(model, outer, {0, 20}), config_error);
  }

  SECTION("prediction-time shape checks") {
    const RegressionModel model = lsmc_fit(engine, part, claim, 1000, 1, 1e-8, 1);
    const auto s = engine.simulate_partition(part, 8, 0);
    CHECK_THROWS_AS(model.eval(2, s.states[0]), std::invalid_argument);
    JointState bad = s.states[0];
    bad.factors.pop_back();
    CHECK_THROWS_AS(model.eval(0, bad), std::invalid_argument);
  }

  SECTION("serialized size mismatches are rejected") {
    const RegressionModel model = lsmc_fit(engine, part, claim, 1000, 1, 1e-8, 1);
    nlohmann::json j = to_json(model);
    j["dates"][0]["beta_num"].erase(0);
    CHECK_THROWS_AS(model_from_json(j), config_error);
    nlohmann::json j2 = to_json(model);
    j2["dates"].erase(0);
    CHECK_THROWS_AS(model_from_json(j2), config_error);
  }
}
