#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "svv/errors.hpp"
#include "svv/grid.hpp"
#include "svv/market.hpp"
#include "svv/parallel.hpp"
#include "svv/payoff.hpp"
#include "svv/rng.hpp"
#include "svv/stats.hpp"

namespace svv {

// Claim bound to a grid: hedging works throughout on discounted quantities,
// so the payoff (written on the undiscounted terminal price) is wrapped as
//   F = payoff(X(T) * growth(T)) / growth(T),  growth(T) = exp(int_0^T rate).
struct ClaimOnGrid {
  Payoff payoff;
  double growth_terminal = 1.0;
  double discounted(double x_terminal) const {
    return payoff.eval(x_terminal * growth_terminal) / growth_terminal;
  }
};

inline ClaimOnGrid make_claim(Payoff payoff, const TimeGrid& grid, const TimeProfile& rate) {
  double g = 1.0;
  if (rate) g = std::exp(accumulated_rate(grid, rate).back());
  return {std::move(payoff), g};
}

// Stream tag for the inner-path seeds of the nested estimator at one
// rebalance date: derive_seed(master, grid_index, kNmcInnerStream).
inline constexpr std::uint64_t kNmcInnerStream = 1;

// Monte Carlo estimate of the one-state hedge ratio
//   u = E[F dX | state] / E[(dX)^2 | state],  dX = X(t_mark) - X(t_state),
// from n_inner fresh continuations.  Standard errors of the two means are
// exact; se_u is the delta-method expansion of the ratio,
//   Var(u) ~ (var_num - 2 u cov + u^2 var_den) / (n * den^2).
struct NmcConditional {
  double num = 0.0, den = 0.0;      // means of F dX and (dX)^2
  double se_num = 0.0, se_den = 0.0;
  double cov_nd = 0.0;              // sample covariance of the two terms
  double u = 0.0, se_u = 0.0;
  std::size_t n_inner = 0;
};

inline NmcConditional nmc_conditional(const JointEngine& engine, const JointState& state,
                                      std::size_t mark, const ClaimOnGrid& claim,
                                      std::size_t n_inner, std::uint64_t inner_seed,
                                      int workers = 1) {
  if (n_inner < 2) throw std::invalid_argument("nmc_conditional: need at least 2 inner paths");
  std::vector<double> num(n_inner), den(n_inner);
  parallel_for(n_inner, workers, [&](std::size_t i) {
    thread_local std::vector<double> scratch;
    const ResumeSummary s = engine.resume_summary(state, mark, inner_seed, i, scratch);
    const double dx = s.x_mark - state.x;
    num[i] = claim.discounted(s.x_terminal) * dx;
    den[i] = dx * dx;
  });

  NmcConditional out;
  out.n_inner = n_inner;
  const MeanVar mn = mean_var(num), md = mean_var(den);
  out.num = mn.mean;
  out.den = md.mean;
  out.se_num = mn.se;
  out.se_den = md.se;
  out.cov_nd = covariance(num, den, mn.mean, md.mean);
  if (!(md.mean > 0.0))
    throw numerical_error("nmc_conditional: degenerate denominator E[(dX)^2] <= 0");
  out.u = mn.mean / md.mean;
  const double var_u =
      (mn.var - 2.0 * out.u * out.cov_nd + out.u * out.u * md.var) / static_cast<double>(n_inner);
  out.se_u = std::sqrt(std::max(0.0, var_u)) / md.mean;
  return out;
}

// Hedge ratios along one outer path: at each rebalance boundary tau_j =
// t[partition[j]] the conditional estimator runs with inner seed
// derive_seed(master_seed, partition[j], kNmcInnerStream), so results do not
// depend on which dates are evaluated together.
struct HedgeEstimate {
  std::vector<std::size_t> partition;  // grid-index boundaries, size P+1
  std::vector<NmcConditional> stats;   // size P, one per rebalance interval
  std::string method;                  // "NMC" or "LSMC" (LSMC rows carry zero SEs)
  std::vector<double> ratios() const {
    std::vector<double> u(stats.size());
    for (std::size_t j = 0; j < stats.size(); ++j) u[j] = stats[j].u;
    return u;
  }
};

inline HedgeEstimate nmc_hedge_path(const JointEngine& engine, const JointPath& outer,
                                    const std::vector<std::size_t>& partition,
                                    const ClaimOnGrid& claim, std::size_t n_inner,
                                    std::uint64_t master_seed, int workers = 1) {
  if (partition.size() < 2)
    throw std::invalid_argument("nmc_hedge_path: partition needs at least one interval");
  HedgeEstimate est;
  est.partition = partition;
  est.method = "NMC";
  est.stats.reserve(partition.size() - 1);
  for (std::size_t j = 0; j + 1 < partition.size(); ++j) {
    const JointState state = state_at(outer, partition[j]);
    const std::uint64_t seed = derive_seed(master_seed, partition[j], kNmcInnerStream);
    est.stats.push_back(
        nmc_conditional(engine, state, partition[j + 1], claim, n_inner, seed, workers));
  }
  return est;
}

// Decision rule u_j = policy(j, state at tau_j) for path-adapted evaluation
// of the hedging objective.
using HedgePolicy = std::function<double(std::size_t, const JointState&)>;

// J(u) = E[(F - sum_j u_j (X(tau_{j+1}) - X(tau_j)))^2] by plain Monte Carlo
// over fresh outer paths.  `claim_mean`/`claim_se` report E[F] alongside.
struct ObjectiveEstimate {
  double value = 0.0, se = 0.0;
  double claim_mean = 0.0, claim_se = 0.0;
  std::size_t n_paths = 0;
};

namespace detail {

template <typename RatioFn>
ObjectiveEstimate objective_impl(const JointEngine& engine, const ClaimOnGrid& claim,
                                 const std::vector<std::size_t>& partition, std::size_t n_paths,
                                 std::uint64_t seed, int workers, RatioFn&& ratio) {
  if (partition.size() < 2)
    throw std::invalid_argument("objective_mc: partition needs at least one interval");
  if (n_paths < 2) throw std::invalid_argument("objective_mc: need at least 2 paths");
  std::vector<double> sq_err(n_paths), fs(n_paths);
  parallel_for(n_paths, workers, [&](std::size_t i) {
    const JointEngine::PartitionSample s = engine.simulate_partition(partition, seed, i);
    const double f = claim.discounted(s.x_bounds.back());
    double gains = 0.0;
    for (std::size_t j = 0; j + 1 < partition.size(); ++j)
      gains += ratio(j, s.states[j]) * (s.x_bounds[j + 1] - s.x_bounds[j]);
    sq_err[i] = (f - gains) * (f - gains);
    fs[i] = f;
  });
  const MeanVar me = mean_var(sq_err), mf = mean_var(fs);
  return {me.mean, me.se, mf.mean, mf.se, n_paths};
}

}  // namespace detail

// Frozen ratios: one number per rebalance interval, shared by all paths.
inline ObjectiveEstimate objective_mc(const JointEngine& engine, const ClaimOnGrid& claim,
                                      const std::vector<std::size_t>& partition,
                                      const std::vector<double>& u, std::size_t n_paths,
                                      std::uint64_t seed, int workers = 1) {
  if (u.size() + 1 != partition.size())
    throw std::invalid_argument("objective_mc: one ratio per rebalance interval required");
  return detail::objective_impl(engine, claim, partition, n_paths, seed, workers,
                                [&](std::size_t j, const JointState&) { return u[j]; });
}

// Adapted ratios: the policy sees the Markov state at each rebalance date.
inline ObjectiveEstimate objective_mc(const JointEngine& engine, const ClaimOnGrid& claim,
                                      const std::vector<std::size_t>& partition,
                                      const HedgePolicy& policy, std::size_t n_paths,
                                      std::uint64_t seed, int workers = 1) {
  if (!policy) throw std::invalid_argument("objective_mc: empty policy");
  return detail::objective_impl(engine, claim, partition, n_paths, seed, workers,
                                [&](std::size_t j, const JointState& st) { return policy(j, st); });
}

}  // namespace svv
