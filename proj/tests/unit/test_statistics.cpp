#include "mildlevy/statistics.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace mildlevy;

namespace {

// sup_x |F_a(x) - F_b(x)| by brute force over every sample point.
double ks_statistic_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const auto cdf = [](const std::vector<double>& s, double x) {
    double c = 0;
    for (double v : s) c += v <= x ? 1 : 0;
    return c / static_cast<double>(s.size());
  };
  double d = 0.0;
  for (const auto* s : {&a, &b}) {
    for (double x : *s) d = std::max(d, std::abs(cdf(a, x) - cdf(b, x)));
  }
  return d;
}

double q_ks(double lambda) {
  double sum = 0.0;
  for (int j = 1; j <= 200; ++j) sum += 2.0 * (j % 2 ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace

TEST_CASE("mean estimate") {
  const std::vector<double> x{1, 2, 3, 4};
  const auto e = estimate_mean(x);
  CHECK(e.mean == 2.5);
  CHECK(e.stderr_ == doctest::Approx(std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0 / 4.0)));
  CHECK(e.count == 4);
  CHECK(e.half_width() == doctest::Approx(3 * e.stderr_));
  CHECK(estimate_mean(std::vector<double>{5.0}).stderr_ == 0.0);
}

TEST_CASE("two-sample KS") {
  testgen::Gen gen(81);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a, b;
    const std::size_t na = 20 + gen.index(200), nb = 20 + gen.index(200);
    for (std::size_t i = 0; i < na; ++i) a.push_back(gen.normal());
    for (std::size_t i = 0; i < nb; ++i) b.push_back(gen.normal() + (trial % 2 ? 0.5 : 0.0));
    const auto r = ks_two_sample(a, b);
    const double d = ks_statistic_oracle(a, b);
    CHECK(r.statistic == doctest::Approx(d).epsilon(1e-12));
    const double ne = static_cast<double>(na * nb) / static_cast<double>(na + nb);
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    CHECK(r.p_value == doctest::Approx(q_ks(lambda)).epsilon(1e-9));
  }
  const std::vector<double> same{1, 2, 3};
  CHECK(ks_two_sample(same, same).statistic == 0.0);
  CHECK(ks_two_sample(same, same).p_value == 1.0);
  const std::vector<double> far{10, 11, 12};
  CHECK(ks_two_sample(same, far).statistic == 1.0);
  CHECK(kolmogorov_tail(0.0) == 1.0);
  CHECK(kolmogorov_tail(1.36) == doctest::Approx(0.0494).epsilon(1e-2));
}

TEST_CASE("least squares and trapezoid") {
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<double> y{1, 3, 5, 7};
  const auto fit = least_squares(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  std::vector<double> t, f;
  for (int i = 0; i <= 1000; ++i) {
    t.push_back(i * 1e-3);
    f.push_back(t.back() * t.back());
  }
  CHECK(trapezoid(t, f) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  CHECK(trapezoid(std::vector<double>{0.5}, std::vector<double>{2.0}) == 0.0);
}

TEST_CASE("parallel_for covers every index and rethrows the lowest failure") {
  for (std::size_t threads : {1, 3, 8}) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, threads);
    for (int h : hits) CHECK(h == 1);
    try {
      parallel_for(
          100,
          [](std::size_t i) {
            if (i == 17 || i == 80) throw std::runtime_error(std::to_string(i));
          },
          threads);
      FAIL("expected exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "17");
    }
  }
}
