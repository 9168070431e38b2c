#include "mildlevy/statistics.hpp"

#include "mildlevy/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace mildlevy {

MeanEstimate estimate_mean(std::span<const double> samples) {
  MeanEstimate e;
  e.count = samples.size();
  if (samples.empty()) return e;
  double sum = 0.0;
  for (const double v : samples) sum += v;
  e.mean = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (const double v : samples) ss += (v - e.mean) * (v - e.mean);
    const double var = ss / static_cast<double>(samples.size() - 1);
    e.stderr_ = std::sqrt(var / static_cast<double>(samples.size()));
  }
  return e;
}

double kolmogorov_tail(double x) {
  if (x < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  double previous = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * x * x);
    sum += term;
    if (std::abs(term) <= 1e-12 * std::abs(sum) || std::abs(term) <= 1e-300) return std::clamp(2.0 * sum, 0.0, 1.0);
    if (std::abs(term) >= std::abs(previous) && k > 1) break;  // series not converging (tiny x)
    previous = term;
    sign = -sign;
  }
  return 1.0;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ContractViolation("ks_two_sample: both samples must be non-empty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractViolation("least_squares: need >= 2 matching points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw ContractViolation("least_squares: abscissae are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractViolation("trapezoid: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("MILDLEVY_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t threads) {
  if (threads == 0) threads = default_thread_count();
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::size_t error_index = n;
  std::mutex error_mutex;
  const auto worker = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (i < error_index) {
          error = std::current_exception();
          error_index = i;
        }
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mildlevy
