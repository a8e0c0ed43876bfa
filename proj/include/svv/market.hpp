#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "svv/errors.hpp"
#include "svv/grid.hpp"
#include "svv/kernel.hpp"
#include "svv/kernel_approx.hpp"
#include "svv/math_util.hpp"
#include "svv/noise.hpp"
#include "svv/rng.hpp"
#include "svv/sandwich.hpp"

namespace svv {

// Discounted-price dynamics on a grid:
//   X(t_{k+1}) = X(t_k) exp(-Y(t_k)^2 dt_k / 2 + Y(t_k) (rho dB1_k + sqrt(1-rho^2) dB2_k))
// driven by the sandwiched volatility Y.  `kernel` is used when the Volterra
// noise is computed by direct convolution; `basis` when it is carried by the
// Markov factor state.  `rate` is the (optional) instantaneous rate used only
// to undiscount for reporting.
struct MarketSpec {
  SandwichSpec sandwich;
  VolterraKernel kernel;
  std::optional<FactorBasis> basis;
  double rho = 0.0;
  double x0 = 1.0;
  TimeProfile rate;  // optional
};

// Markov state at grid time t_{time_index}; `factors` is empty in
// convolution mode (the path is then not resumable from a state).
struct JointState {
  double x = 0.0;
  double y = 0.0;
  std::vector<double> factors;
  std::size_t time_index = 0;
};

struct JointPath {
  TimeGrid grid;
  BrownianIncrements inc;
  std::vector<double> z, y, x;
  std::vector<std::vector<double>> factors;  // per grid time; filled on request
};

// Tail of a path re-simulated from a state: index i holds time t_{start + i}.
struct JointSegment {
  std::size_t start = 0;
  std::vector<double> z, y, x;
};

// Marked values of an inner path: X at a marked grid time and at the horizon.
struct ResumeSummary {
  double x_mark = 0.0;
  double x_terminal = 0.0;
};

// cumulative trapezoid of the rate: out[k] = int_0^{t_k} rate(s) ds
inline std::vector<double> accumulated_rate(const TimeGrid& grid, const TimeProfile& rate) {
  std::vector<double> acc(grid.t.size(), 0.0);
  if (!rate) return acc;
  double prev = rate(grid.t[0]);
  for (std::size_t k = 1; k < grid.t.size(); ++k) {
    const double cur = rate(grid.t[k]);
    acc[k] = acc[k - 1] + 0.5 * (prev + cur) * (grid.t[k] - grid.t[k - 1]);
    prev = cur;
  }
  return acc;
}

// S(t_k) = X(t_k) exp(int_0^{t_k} rate); identity when no rate is set.
inline std::vector<double> undiscount(const std::vector<double>& x, const TimeGrid& grid,
                                      const TimeProfile& rate) {
  if (x.size() != grid.t.size())
    throw std::invalid_argument("undiscount: path not aligned with grid");
  if (!rate) return x;
  const std::vector<double> acc = accumulated_rate(grid, rate);
  std::vector<double> s(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) s[k] = x[k] * std::exp(acc[k]);
  return s;
}

// Simulator bound to one (spec, grid, noise mode).  All per-step quantities
// that do not depend on the path -- OU decay factors, Bernstein moment powers
// and reconstruction polynomials, sandwich bounds, kernel lag values -- are
// tabulated once here, so the per-path loops touch no std::function and no
// transcendental except the single exp in the price update.  Construction is
// the expensive part; const methods are safe to call concurrently.
class JointEngine {
 public:
  JointEngine(MarketSpec spec, TimeGrid grid, bool use_factors)
      : spec_(std::move(spec)), grid_(std::move(grid)), use_factors_(use_factors) {
    if (!(spec_.x0 > 0.0)) throw assumption_error("JointEngine: x0 must be positive");
    if (!(spec_.rho >= -1.0 && spec_.rho <= 1.0))
      throw assumption_error("JointEngine: rho must lie in [-1, 1]");
    rho_bar_ = std::sqrt(std::max(0.0, 1.0 - spec_.rho * spec_.rho));

    const std::size_t n = grid_.steps();
    sqrt_dt_.resize(n);
    for (std::size_t k = 0; k < n; ++k) sqrt_dt_[k] = std::sqrt(grid_.t[k + 1] - grid_.t[k]);
    lo_.resize(n + 1);
    hi_.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      lo_[k] = spec_.sandwich.phi(grid_.t[k]);
      hi_[k] = spec_.sandwich.psi(grid_.t[k]);
      if (!(lo_[k] < hi_[k]))
        throw assumption_error("JointEngine: sandwich bounds cross at t = " +
                               std::to_string(grid_.t[k]));
    }
    for (std::size_t k = 0; k < n; ++k)
      if (!((grid_.t[k + 1] - grid_.t[k]) * spec_.sandwich.c3 < 1.0))
        throw assumption_error("JointEngine: step size violates dt * c3 < 1");

    if (use_factors_) {
      if (!spec_.basis)
        throw config_error("JointEngine: factor mode requires an approximation basis");
      check_horizon(std::visit([](const auto& b) { return b.horizon; }, *spec_.basis),
                    "basis");
      if (const auto* ou = std::get_if<OUBasis>(&*spec_.basis)) {
        dim_ = ou->m;
        decay_.resize(grid_.uniform ? 1 : n);
        for (std::size_t k = 0; k < decay_.size(); ++k) {
          const double dt = grid_.t[k + 1] - grid_.t[k];
          decay_[k].resize(dim_);
          for (std::size_t i = 0; i < dim_; ++i) decay_[k][i] = std::exp(-ou->alpha[i] * dt);
        }
      } else {
        const auto& bb = std::get<BernsteinBasis>(*spec_.basis);
        dim_ = bb.m + 1;
        // moment powers s_k^p at the left endpoints, reconstruction weights
        // (-1)^p P_p(s_k) at every grid time (see factor_noise_value)
        std::vector<double> scaled(bb.m + 1);
        double t_pow = 1.0;
        for (std::size_t i = 0; i <= bb.m; ++i, t_pow *= bb.horizon)
          scaled[i] = bb.kappa[i] * t_pow;
        pow_.assign(n, std::vector<double>(dim_));
        recon_.assign(n + 1, std::vector<double>(dim_));
        for (std::size_t k = 0; k < n; ++k) {
          const double s = grid_.t[k] / bb.horizon;
          double sp = 1.0;
          for (std::size_t p = 0; p < dim_; ++p, sp *= s) pow_[k][p] = sp;
        }
        for (std::size_t k = 0; k <= n; ++k) {
          const double s = grid_.t[k] / bb.horizon;
          double sign = 1.0;
          for (std::size_t p = 0; p < dim_; ++p, sign = -sign) {
            double horner = 0.0;
            for (std::size_t i = bb.m + 1; i-- > p;)
              horner = horner * s + scaled[i] * binom(i, p);
            recon_[k][p] = sign * horner;
          }
        }
      }
    } else {
      if (!spec_.kernel.eval)
        throw config_error("JointEngine: convolution mode requires a kernel");
      if (!grid_.uniform)
        throw config_error("JointEngine: convolution mode requires a uniform grid");
      check_horizon(spec_.kernel.horizon, "kernel");
    }
  }

  const MarketSpec& spec() const { return spec_; }
  const TimeGrid& grid() const { return grid_; }
  bool factor_mode() const { return use_factors_; }
  std::size_t factor_dim() const { return dim_; }

  // Noise value carried by a factor vector at grid time k.
  double noise_value(const std::vector<double>& factors, std::size_t k) const {
    require_factor_mode("noise_value");
    if (factors.size() != dim_)
      throw std::invalid_argument("JointEngine: factor vector has wrong dimension");
    if (!recon_.empty()) {
      double z = 0.0;
      for (std::size_t p = 0; p < dim_; ++p) z += recon_[k][p] * factors[p];
      return z;
    }
    double z = 0.0;
    for (double v : factors) z += v;
    return z;
  }

  JointPath simulate(std::uint64_t master_seed, std::uint64_t path_index,
                     bool store_factors = false) const {
    const std::size_t n = grid_.steps();
    JointPath path;
    path.grid = grid_;
    path.inc = sample_increments(grid_, master_seed, path_index);
    path.z.resize(n + 1);
    path.y.resize(n + 1);
    path.x.resize(n + 1);
    if (store_factors && use_factors_) path.factors.resize(n + 1);

    if (!use_factors_) {
      path.z = volterra_convolution(spec_.kernel, path.inc, grid_);
      path.y[0] = check_y0();
      path.x[0] = spec_.x0;
      for (std::size_t k = 0; k < n; ++k) {
        const double dt = grid_.t[k + 1] - grid_.t[k];
        path.x[k + 1] = price_step(path.x[k], path.y[k], dt, path.inc.db1[k], path.inc.db2[k]);
        path.y[k + 1] = vol_step(k + 1, dt, path.y[k], path.z[k + 1] - path.z[k]);
      }
      return path;
    }

    std::vector<double> f(dim_, 0.0);
    double z = 0.0;
    path.z[0] = 0.0;
    path.y[0] = check_y0();
    path.x[0] = spec_.x0;
    if (store_factors) path.factors[0] = f;
    for (std::size_t k = 0; k < n; ++k) {
      const double dt = grid_.t[k + 1] - grid_.t[k];
      path.x[k + 1] = price_step(path.x[k], path.y[k], dt, path.inc.db1[k], path.inc.db2[k]);
      const double z_next = factor_advance(f, k, path.inc.db1[k]);
      path.y[k + 1] = vol_step(k + 1, dt, path.y[k], z_next - z);
      path.z[k + 1] = z_next;
      z = z_next;
      if (store_factors) path.factors[k + 1] = f;
    }
    return path;
  }

  // One outer path reduced to what rebalancing needs: the Markov state at
  // each partition boundary except the last, and X at every boundary
  // (x_bounds.back() is the terminal price).  Factor snapshots are taken only
  // at the P boundaries, so dataset generation does not pay for per-step
  // storage.
  struct PartitionSample {
    std::vector<JointState> states;
    std::vector<double> x_bounds;
  };

  PartitionSample simulate_partition(const std::vector<std::size_t>& partition,
                                     std::uint64_t master_seed, std::uint64_t path_index) const {
    const std::size_t n = grid_.steps();
    if (partition.size() < 2 || partition.front() != 0 || partition.back() != n)
      throw std::invalid_argument("simulate_partition: partition must span the grid");
    for (std::size_t j = 0; j + 1 < partition.size(); ++j)
      if (partition[j] >= partition[j + 1])
        throw std::invalid_argument("simulate_partition: partition must be strictly increasing");
    PartitionSample out;
    out.states.reserve(partition.size() - 1);
    out.x_bounds.resize(partition.size());

    if (!use_factors_) {
      const JointPath path = simulate(master_seed, path_index, false);
      for (std::size_t j = 0; j + 1 < partition.size(); ++j)
        out.states.push_back({path.x[partition[j]], path.y[partition[j]], {}, partition[j]});
      for (std::size_t j = 0; j < partition.size(); ++j) out.x_bounds[j] = path.x[partition[j]];
      return out;
    }

    const CounterRng rng(master_seed, path_index);
    std::vector<double> f(dim_, 0.0);
    double z = 0.0, y = check_y0(), x = spec_.x0;
    std::size_t next = 0;
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == partition[next]) {
        out.x_bounds[next] = x;
        if (next + 1 < partition.size()) out.states.push_back({x, y, f, k});
        ++next;
        if (next == partition.size()) break;
      }
      const double dt = grid_.t[k + 1] - grid_.t[k];
      const double db1 = sqrt_dt_[k] * rng.normal(k, kComponentB1);
      const double db2 = sqrt_dt_[k] * rng.normal(k, kComponentB2);
      x = price_step(x, y, dt, db1, db2);
      const double z_next = factor_advance(f, k, db1);
      y = vol_step(k + 1, dt, y, z_next - z);
      z = z_next;
    }
    return out;
  }

  // Fresh-noise continuation from `state` to the horizon; factor mode only.
  // Increments are drawn from CounterRng(inner_seed, inner_path) keyed by the
  // global grid step, so distinct (seed, path) pairs give independent tails.
  JointSegment resume(const JointState& state, std::uint64_t inner_seed,
                      std::uint64_t inner_path) const {
    require_factor_mode("resume");
    check_state(state);
    const std::size_t n = grid_.steps(), k0 = state.time_index;
    const CounterRng rng(inner_seed, inner_path);
    JointSegment seg;
    seg.start = k0;
    seg.z.resize(n - k0 + 1);
    seg.y.resize(n - k0 + 1);
    seg.x.resize(n - k0 + 1);
    std::vector<double> f = state.factors;
    double z = noise_value(f, k0), y = state.y, x = state.x;
    seg.z[0] = z;
    seg.y[0] = y;
    seg.x[0] = x;
    for (std::size_t k = k0; k < n; ++k) {
      const double dt = grid_.t[k + 1] - grid_.t[k];
      const double db1 = sqrt_dt_[k] * rng.normal(k, kComponentB1);
      const double db2 = sqrt_dt_[k] * rng.normal(k, kComponentB2);
      x = price_step(x, y, dt, db1, db2);
      const double z_next = factor_advance(f, k, db1);
      y = vol_step(k + 1, dt, y, z_next - z);
      z = z_next;
      seg.z[k - k0 + 1] = z;
      seg.y[k - k0 + 1] = y;
      seg.x[k - k0 + 1] = x;
    }
    return seg;
  }

  // Same continuation, but only X at grid time `mark` and at the horizon are
  // kept; no per-path allocation beyond the factor scratch.
  ResumeSummary resume_summary(const JointState& state, std::size_t mark,
                               std::uint64_t inner_seed, std::uint64_t inner_path,
                               std::vector<double>& factor_scratch) const {
    require_factor_mode("resume_summary");
    check_state(state);
    const std::size_t n = grid_.steps(), k0 = state.time_index;
    if (mark < k0 || mark > n)
      throw std::invalid_argument("JointEngine: mark must lie in [state time, horizon]");
    const CounterRng rng(inner_seed, inner_path);
    factor_scratch = state.factors;
    std::vector<double>& f = factor_scratch;
    double z = noise_value(f, k0), y = state.y, x = state.x;
    ResumeSummary out;
    if (mark == k0) out.x_mark = x;
    for (std::size_t k = k0; k < n; ++k) {
      const double dt = grid_.t[k + 1] - grid_.t[k];
      const double db1 = sqrt_dt_[k] * rng.normal(k, kComponentB1);
      const double db2 = sqrt_dt_[k] * rng.normal(k, kComponentB2);
      x = price_step(x, y, dt, db1, db2);
      if (k + 1 == mark) out.x_mark = x;
      if (k + 1 < n) {  // Y and Z at the horizon never feed another step
        const double z_next = factor_advance(f, k, db1);
        y = vol_step(k + 1, dt, y, z_next - z);
        z = z_next;
      }
    }
    out.x_terminal = x;
    return out;
  }

 private:
  void check_horizon(double h, const char* what) const {
    if (std::abs(h - grid_.horizon()) > 1e-9 * std::max(1.0, grid_.horizon()))
      throw config_error(std::string("JointEngine: ") + what +
                         " horizon does not match the grid horizon");
  }
  void require_factor_mode(const char* fn) const {
    if (!use_factors_)
      throw std::logic_error(std::string("JointEngine: ") + fn +
                             " requires factor mode (convolution paths are not Markov)");
  }
  void check_state(const JointState& state) const {
    if (state.factors.size() != dim_)
      throw std::invalid_argument("JointEngine: state factor dimension mismatch");
    if (state.time_index > grid_.steps())
      throw std::invalid_argument("JointEngine: state time index beyond grid");
  }
  double check_y0() const {
    if (!(lo_[0] < spec_.sandwich.y0 && spec_.sandwich.y0 < hi_[0]))
      throw assumption_error("JointEngine: y0 is not strictly inside the sandwich");
    return spec_.sandwich.y0;
  }

  double price_step(double x, double y, double dt, double db1, double db2) const {
    return x * std::exp(-0.5 * y * y * dt + y * (spec_.rho * db1 + rho_bar_ * db2));
  }

  double vol_step(std::size_t k_next, double dt, double y_prev, double dz) const {
    const auto& s = spec_.sandwich;
    const double rhs = y_prev + dz;
    double y;
    if (s.c == 0.0 && !s.extra_drift)
      y = rhs;
    else
      y = detail::implicit_root(lo_[k_next], hi_[k_next], grid_.t[k_next], dt, rhs, s.c, s.gamma,
                                s.extra_drift, -1.0);
    if (!(lo_[k_next] < y && y < hi_[k_next]))
      throw assumption_error("JointEngine: sandwich violated at step " + std::to_string(k_next));
    return y;
  }

  // Absorbs step k into the factor vector; returns the noise value at k+1.
  double factor_advance(std::vector<double>& f, std::size_t k, double db1) const {
    if (!recon_.empty()) {
      const std::vector<double>& pw = pow_[k];
      const std::vector<double>& rc = recon_[k + 1];
      double z = 0.0;
      for (std::size_t p = 0; p < dim_; ++p) {
        f[p] += pw[p] * db1;
        z += rc[p] * f[p];
      }
      return z;
    }
    const auto& ou = std::get<OUBasis>(*spec_.basis);
    const std::vector<double>& dec = decay_[grid_.uniform ? 0 : k];
    double z = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      f[i] = dec[i] * (f[i] + ou.sigma[i] * db1);
      z += f[i];
    }
    return z;
  }

  MarketSpec spec_;
  TimeGrid grid_;
  bool use_factors_;
  double rho_bar_ = 1.0;
  std::size_t dim_ = 0;
  std::vector<double> sqrt_dt_, lo_, hi_;
  std::vector<std::vector<double>> decay_;        // OU: exp(-alpha_i dt_k)
  std::vector<std::vector<double>> pow_, recon_;  // Bernstein: s_k^p, (-1)^p P_p(s_k)
};

inline JointPath simulate_joint(const MarketSpec& spec, const TimeGrid& grid,
                                std::uint64_t master_seed, std::uint64_t path_index,
                                bool use_factors, bool store_factors = false) {
  return JointEngine(spec, grid, use_factors).simulate(master_seed, path_index, store_factors);
}

inline JointSegment resume_joint(const MarketSpec& spec, const TimeGrid& grid,
                                 const JointState& state, std::uint64_t inner_seed,
                                 std::uint64_t inner_path) {
  return JointEngine(spec, grid, true).resume(state, inner_seed, inner_path);
}

// State snapshot from a stored path; factor mode requires the path to have
// been simulated with store_factors.
inline JointState state_at(const JointPath& path, std::size_t k, bool factor_mode = true) {
  if (k >= path.x.size()) throw std::invalid_argument("state_at: index beyond path");
  JointState st;
  st.x = path.x[k];
  st.y = path.y[k];
  st.time_index = k;
  if (factor_mode) {
    if (path.factors.empty())
      throw std::invalid_argument("state_at: path was simulated without stored factors");
    st.factors = path.factors[k];
  }
  return st;
}

}  // namespace svv
