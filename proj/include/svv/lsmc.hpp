#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "svv/errors.hpp"
#include "svv/grid.hpp"
#include "svv/hedging.hpp"
#include "svv/market.hpp"
#include "svv/parallel.hpp"

namespace svv {

// All monomial exponent vectors over `dims` variables with total degree up
// to `degree`, graded (intercept first), lexicographic within each grade.
inline std::vector<std::vector<unsigned>> monomial_exponents(std::size_t dims,
                                                             std::size_t degree) {
  std::vector<std::vector<unsigned>> out;
  std::vector<unsigned> cur(dims, 0);
  const auto rec = [&](const auto& self, std::size_t pos, unsigned left) -> void {
    if (pos + 1 == dims) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (unsigned e = left + 1; e-- > 0;) {
      cur[pos] = e;
      self(self, pos + 1, left - e);
    }
  };
  for (unsigned total = 0; total <= degree; ++total) rec(rec, 0, total);
  return out;
}

namespace detail {

// phi[f] = prod_i r[i]^{expo[f][i]}
inline void monomial_features(const std::vector<std::vector<unsigned>>& expo, const double* r,
                              std::size_t dims, double* phi) {
  for (std::size_t f = 0; f < expo.size(); ++f) {
    double v = 1.0;
    for (std::size_t i = 0; i < dims; ++i)
      for (unsigned e = 0; e < expo[f][i]; ++e) v *= r[i];
    phi[f] = v;
  }
}

}  // namespace detail

// Per-rebalance-time ridge regressions approximating the two conditional
// expectations of the hedge ratio,
//   num(state) ~ E[F dX | state],   den(state) ~ E[(dX)^2 | state],
// on standardized monomial features of the Markov state (x, y, factors).
// Columns that are constant over the training set (every column at the first
// rebalance date, where the state is deterministic) are dropped, which makes
// the intercept-only limit exact: predictions degrade to unconditional means.
struct RegressionModel {
  struct DateFit {
    std::vector<double> mean, sd;  // per feature; sd == 0 marks a dropped column
    std::vector<double> beta_num, beta_den;  // index 0 is the intercept
  };

  std::vector<std::size_t> partition;
  std::size_t degree = 2;
  std::size_t factor_dim = 0;  // state dimension is factor_dim + 2
  double ridge = 1e-8;
  std::string payoff_name;
  std::vector<DateFit> dates;
  std::vector<std::vector<unsigned>> exponents;  // derived from (degree, factor_dim)

  std::size_t state_dims() const { return factor_dim + 2; }
  std::size_t feature_count() const { return exponents.size(); }

  struct Prediction {
    double num = 0.0, den = 0.0, u = 0.0;
  };

  Prediction eval(std::size_t date, const JointState& state) const {
    if (date >= dates.size()) throw std::invalid_argument("RegressionModel: date out of range");
    if (state.factors.size() != factor_dim)
      throw std::invalid_argument("RegressionModel: state factor dimension mismatch");
    std::vector<double> r(state_dims());
    r[0] = state.x;
    r[1] = state.y;
    std::copy(state.factors.begin(), state.factors.end(), r.begin() + 2);
    std::vector<double> phi(feature_count());
    detail::monomial_features(exponents, r.data(), r.size(), phi.data());

    const DateFit& f = dates[date];
    Prediction p;
    p.num = f.beta_num[0];
    p.den = f.beta_den[0];
    for (std::size_t j = 1; j < phi.size(); ++j) {
      if (f.sd[j] == 0.0) continue;
      const double z = (phi[j] - f.mean[j]) / f.sd[j];
      p.num += f.beta_num[j] * z;
      p.den += f.beta_den[j] * z;
    }
    if (!(p.den > 0.0))
      throw numerical_error(
          "RegressionModel: non-positive denominator prediction -- state lies outside the "
          "training cloud");
    p.u = p.num / p.den;
    return p;
  }
};

inline RegressionModel lsmc_fit(const JointEngine& engine,
                                const std::vector<std::size_t>& partition,
                                const ClaimOnGrid& claim, std::size_t n_outer,
                                std::size_t degree, double ridge, std::uint64_t seed,
                                int workers = 1) {
  if (!engine.factor_mode())
    throw config_error("lsmc_fit: regression state requires factor (Markov) mode");
  if (partition.size() < 2)
    throw std::invalid_argument("lsmc_fit: partition needs at least one interval");

  RegressionModel model;
  model.partition = partition;
  model.degree = degree;
  model.factor_dim = engine.factor_dim();
  model.ridge = ridge;
  model.payoff_name = claim.payoff.name;
  model.exponents = monomial_exponents(model.state_dims(), degree);

  const std::size_t q = model.feature_count();
  const std::size_t P = partition.size() - 1;
  const std::size_t D = model.state_dims();
  if (n_outer < 10 * q)
    throw config_error("lsmc_fit: n_outer = " + std::to_string(n_outer) +
                       " is below 10x the feature count (" + std::to_string(q) + ")");

  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  std::vector<MatrixXd> gram(P, MatrixXd::Zero(q, q));  // upper triangle of sum phi phi^T
  std::vector<VectorXd> rhs_num(P, VectorXd::Zero(q)), rhs_den(P, VectorXd::Zero(q));

  // Blocks are simulated path-parallel, then accumulated date-parallel in
  // path order, so the sums are identical for every worker count.
  constexpr std::size_t kBlock = 2048;
  const std::size_t row_len = P * D + (P + 1) + 1;
  std::vector<double> buf(std::min(kBlock, n_outer) * row_len);
  for (std::size_t start = 0; start < n_outer; start += kBlock) {
    const std::size_t bn = std::min(kBlock, n_outer - start);
    parallel_for(bn, workers, [&](std::size_t i) {
      const JointEngine::PartitionSample s =
          engine.simulate_partition(partition, seed, start + i);
      double* row = &buf[i * row_len];
      for (std::size_t j = 0; j < P; ++j) {
        row[j * D] = s.states[j].x;
        row[j * D + 1] = s.states[j].y;
        std::copy(s.states[j].factors.begin(), s.states[j].factors.end(), row + j * D + 2);
      }
      std::copy(s.x_bounds.begin(), s.x_bounds.end(), row + P * D);
      row[row_len - 1] = claim.discounted(s.x_bounds.back());
    });
    parallel_for(P, workers, [&](std::size_t j) {
      std::vector<double> phi(q);
      MatrixXd& A = gram[j];
      VectorXd& bn_j = rhs_num[j];
      VectorXd& bd_j = rhs_den[j];
      for (std::size_t i = 0; i < bn; ++i) {
        const double* row = &buf[i * row_len];
        detail::monomial_features(model.exponents, row + j * D, D, phi.data());
        const double dx = row[P * D + j + 1] - row[P * D + j];
        const double tn = row[row_len - 1] * dx, td = dx * dx;
        for (std::size_t a = 0; a < q; ++a) {
          for (std::size_t b = a; b < q; ++b) A(a, b) += phi[a] * phi[b];
          bn_j(a) += tn * phi[a];
          bd_j(a) += td * phi[a];
        }
      }
    });
  }

  model.dates.resize(P);
  const double n = static_cast<double>(n_outer);
  parallel_for(P, workers, [&](std::size_t j) {
    const MatrixXd& A = gram[j];
    RegressionModel::DateFit& fit = model.dates[j];
    fit.mean.assign(q, 0.0);
    fit.sd.assign(q, 1.0);
    fit.beta_num.assign(q, 0.0);
    fit.beta_den.assign(q, 0.0);
    for (std::size_t a = 1; a < q; ++a) {
      const double mu = A(0, a) / n;
      const double var = std::max(0.0, A(a, a) / n - mu * mu);
      fit.mean[a] = mu;
      // relative floor: a column whose spread is at roundoff level is constant
      fit.sd[a] = (var <= 1e-24 * std::max(1.0, mu * mu)) ? 0.0 : std::sqrt(var);
    }

    // centered/standardized columns are orthogonal to the intercept, so the
    // intercept is the target mean and the rest solves the reduced system
    MatrixXd G = MatrixXd::Zero(q - 1, q - 1);
    VectorXd cn(q - 1), cd(q - 1);
    for (std::size_t a = 1; a < q; ++a) {
      const std::size_t ia = a - 1;
      if (fit.sd[a] == 0.0) {
        G(ia, ia) = 1.0;
        cn(ia) = cd(ia) = 0.0;
        continue;
      }
      for (std::size_t b = a; b < q; ++b) {
        if (fit.sd[b] == 0.0) continue;
        const double g = (A(a, b) - n * fit.mean[a] * fit.mean[b]) / (fit.sd[a] * fit.sd[b]);
        G(ia, b - 1) = g;
        G(b - 1, ia) = g;
      }
      G(ia, ia) += ridge * n;
      cn(ia) = (rhs_num[j](a) - fit.mean[a] * rhs_num[j](0)) / fit.sd[a];
      cd(ia) = (rhs_den[j](a) - fit.mean[a] * rhs_den[j](0)) / fit.sd[a];
    }

    const Eigen::LDLT<MatrixXd> ldlt(G);
    const VectorXd sn = ldlt.solve(cn), sd_sol = ldlt.solve(cd);
    if (ldlt.info() != Eigen::Success || !sn.allFinite() || !sd_sol.allFinite())
      throw numerical_error("lsmc_fit: singular normal equations after ridge at date index " +
                            std::to_string(j));
    fit.beta_num[0] = rhs_num[j](0) / n;
    fit.beta_den[0] = rhs_den[j](0) / n;
    for (std::size_t a = 1; a < q; ++a) {
      fit.beta_num[a] = sn(a - 1);
      fit.beta_den[a] = sd_sol(a - 1);
    }
  });
  return model;
}

// Hedge ratios along one outer path from a fitted model; regression gives no
// pathwise standard error, so SEs are zero and `num`/`den` echo the
// predicted conditional expectations.
inline HedgeEstimate lsmc_hedge(const RegressionModel& model, const JointPath& outer,
                                const std::vector<std::size_t>& partition) {
  if (partition != model.partition)
    throw config_error("lsmc_hedge: model was fitted on a different partition");
  HedgeEstimate est;
  est.partition = partition;
  est.method = "LSMC";
  est.stats.resize(partition.size() - 1);
  for (std::size_t j = 0; j + 1 < partition.size(); ++j) {
    const RegressionModel::Prediction p = model.eval(j, state_at(outer, partition[j]));
    NmcConditional& s = est.stats[j];
    s.num = p.num;
    s.den = p.den;
    s.u = p.u;
    s.n_inner = 0;
  }
  return est;
}

// Objective policy backed by a fitted model.
inline HedgePolicy lsmc_policy(const RegressionModel& model) {
  return [&model](std::size_t j, const JointState& state) { return model.eval(j, state).u; };
}

inline nlohmann::json to_json(const RegressionModel& model) {
  nlohmann::json j;
  j["partition"] = model.partition;
  j["degree"] = model.degree;
  j["factor_dim"] = model.factor_dim;
  j["ridge"] = model.ridge;
  j["payoff"] = model.payoff_name;
  j["dates"] = nlohmann::json::array();
  for (const auto& f : model.dates)
    j["dates"].push_back({{"mean", f.mean},
                          {"sd", f.sd},
                          {"beta_num", f.beta_num},
                          {"beta_den", f.beta_den}});
  return j;
}

inline RegressionModel model_from_json(const nlohmann::json& j) {
  RegressionModel model;
  model.partition = j.at("partition").get<std::vector<std::size_t>>();
  model.degree = j.at("degree").get<std::size_t>();
  model.factor_dim = j.at("factor_dim").get<std::size_t>();
  model.ridge = j.at("ridge").get<double>();
  model.payoff_name = j.value("payoff", "");
  model.exponents = monomial_exponents(model.state_dims(), model.degree);
  const std::size_t q = model.feature_count();
  for (const auto& d : j.at("dates")) {
    RegressionModel::DateFit f;
    f.mean = d.at("mean").get<std::vector<double>>();
    f.sd = d.at("sd").get<std::vector<double>>();
    f.beta_num = d.at("beta_num").get<std::vector<double>>();
    f.beta_den = d.at("beta_den").get<std::vector<double>>();
    if (f.mean.size() != q || f.sd.size() != q || f.beta_num.size() != q ||
        f.beta_den.size() != q)
      throw config_error("RegressionModel: serialized coefficient sizes do not match the "
                         "feature map");
    model.dates.push_back(std::move(f));
  }
  if (model.dates.size() + 1 != model.partition.size())
    throw config_error("RegressionModel: serialized date count does not match the partition");
  return model;
}

}  // namespace svv
