#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mildlevy {

/// Sample mean with its standard error (sample standard deviation / sqrt(n)).
struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;

  double half_width(double z = 3.0) const noexcept { return z * stderr_; }
};

/// Two-pass mean and standard error, summed in index order.
MeanEstimate estimate_mean(std::span<const double> samples);

struct KsResult {
  double statistic = 0.0;  // sup |F_a - F_b|
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// Q_KS((sqrt(ne) + 0.12 + 0.11/sqrt(ne)) D), ne = n m / (n + m).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Kolmogorov distribution tail Q_KS(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_tail(double x);

/// Least-squares slope and intercept of y against x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Trapezoid rule for samples y at increasing abscissae x.
double trapezoid(std::span<const double> x, std::span<const double> y);

/// Threads used by ensemble loops: MILDLEVY_THREADS if set and positive,
/// otherwise the hardware concurrency.
std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to per-index slots; reductions then happen in index order, so the
/// outcome does not depend on the thread count. After a failure the workers stop
/// and the exception with the lowest index seen is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t threads = 0);

}  // namespace mildlevy
