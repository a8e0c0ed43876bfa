#pragma once

// Umbrella header for the sandwiched-volatility simulation and hedging kit.

#include "svv/config.hpp"
#include "svv/csv.hpp"
#include "svv/errors.hpp"
#include "svv/grid.hpp"
#include "svv/harness.hpp"
#include "svv/hedging.hpp"
#include "svv/kernel.hpp"
#include "svv/kernel_approx.hpp"
#include "svv/lsmc.hpp"
#include "svv/market.hpp"
#include "svv/math_util.hpp"
#include "svv/noise.hpp"
#include "svv/parallel.hpp"
#include "svv/payoff.hpp"
#include "svv/rng.hpp"
#include "svv/sandwich.hpp"
#include "svv/stats.hpp"
