#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace svv {

// Pairwise (cascade) summation.  Deterministic for a fixed element order and
// more accurate than sequential summation; all Monte Carlo reductions go
// through this after per-path results land in index-ordered slots, so the
// result never depends on worker count or scheduling.
inline double pairwise_sum(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n <= 16) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // unbiased sample variance
  double se = 0.0;   // standard error of the mean
  std::size_t n = 0;
};

inline MeanVar mean_var(std::span<const double> x) {
  MeanVar r;
  r.n = x.size();
  if (r.n == 0) throw std::invalid_argument("mean_var: empty sample");
  r.mean = pairwise_sum(x) / static_cast<double>(r.n);
  if (r.n < 2) return r;
  std::vector<double> dev2(r.n);
  for (std::size_t i = 0; i < r.n; ++i) {
    const double d = x[i] - r.mean;
    dev2[i] = d * d;
  }
  r.var = pairwise_sum(dev2) / static_cast<double>(r.n - 1);
  r.se = std::sqrt(r.var / static_cast<double>(r.n));
  return r;
}

// Sample covariance about precomputed means (two-pass, pairwise).
inline double covariance(std::span<const double> x, std::span<const double> y, double mean_x,
                         double mean_y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("covariance: need two equal-length samples of size >= 2");
  std::vector<double> prod(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mean_x) * (y[i] - mean_y);
  return pairwise_sum(prod) / static_cast<double>(x.size() - 1);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares line through (x_i, y_i); used for log-log rate fits.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: need two equal-length samples of size >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = pairwise_sum(x) / n;
  const double my = pairwise_sum(y) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
  return {sxy / sxx, my - (sxy / sxx) * mx};
}

}  // namespace svv
