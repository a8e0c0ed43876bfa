#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace svv {

// Time grid 0 = t_0 < t_1 < ... < t_N = T.  Uniform grids additionally carry
// the step; the convolution and factor recursions require uniformity.
struct TimeGrid {
  std::vector<double> t;
  bool uniform = false;
  double dt = 0.0;

  std::size_t steps() const { return t.size() - 1; }
  double horizon() const { return t.back(); }

  static TimeGrid make_uniform(std::size_t n_steps, double horizon) {
    if (n_steps < 1) throw std::invalid_argument("TimeGrid: need at least one step");
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
    TimeGrid g;
    g.t.resize(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k)
      g.t[k] = horizon * static_cast<double>(k) / static_cast<double>(n_steps);
    g.uniform = true;
    g.dt = horizon / static_cast<double>(n_steps);
    return g;
  }

  static TimeGrid from_times(std::vector<double> times) {
    if (times.size() < 2) throw std::invalid_argument("TimeGrid: need at least two times");
    if (times.front() != 0.0) throw std::invalid_argument("TimeGrid: must start at 0");
    for (std::size_t k = 1; k < times.size(); ++k)
      if (!(times[k] > times[k - 1]))
        throw std::invalid_argument("TimeGrid: times must be strictly increasing");
    TimeGrid g;
    g.t = std::move(times);
    g.uniform = false;
    return g;
  }
};

// Uniform sub-partition of a uniform grid: indices 0 = p_0 < ... < p_n = N.
// The partition must be refined by the grid, i.e. N divisible by n.
inline std::vector<std::size_t> partition_indices(const TimeGrid& grid, std::size_t n_intervals) {
  if (n_intervals < 1) throw std::invalid_argument("partition_indices: need >= 1 interval");
  const std::size_t n = grid.steps();
  if (n % n_intervals != 0)
    throw std::invalid_argument(
        "partition_indices: grid step count must be a multiple of the partition size "
        "(the simulation grid has to refine the rebalancing partition)");
  std::vector<std::size_t> idx(n_intervals + 1);
  for (std::size_t j = 0; j <= n_intervals; ++j) idx[j] = j * (n / n_intervals);
  return idx;
}

}  // namespace svv
