#include "mildlevy/errors.hpp"
#include "mildlevy/spectral_space.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace mildlevy;

namespace {

StateVector vec(std::initializer_list<double> xs) {
  StateVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("eigenvalues are (j pi)^2, strictly increasing") {
  SpectralBasis basis(64, 1.5);
  for (std::size_t j = 0; j < 64; ++j) {
    const double expected = std::pow((j + 1) * M_PI, 2);
    CHECK(basis.eigenvalue(j) == doctest::Approx(expected).epsilon(1e-15));
    if (j > 0) CHECK(basis.eigenvalue(j) > basis.eigenvalue(j - 1));
    CHECK(basis.decay_rate(j) == doctest::Approx(expected + 1.5).epsilon(1e-15));
  }
}

TEST_CASE("semigroup examples") {
  SpectralBasis one(1);
  const auto y = semigroup_apply(one, 1.0, vec({1.0}));
  CHECK(y[0] == doctest::Approx(std::exp(-M_PI * M_PI)).epsilon(1e-14));
  CHECK(y[0] == doctest::Approx(5.1723e-5).epsilon(1e-4));

  SpectralBasis two(2, -M_PI * M_PI);
  const auto z = semigroup_apply(two, 2.0, vec({1.0, 1.0}));
  CHECK(z[0] == 1.0);
  CHECK(z[1] == doctest::Approx(std::exp(-6.0 * M_PI * M_PI)).epsilon(1e-12));

  testgen::Gen gen(1);
  const auto x = gen.vector(16);
  const auto same = semigroup_apply(SpectralBasis(16, 3.0), 0.0, x);
  for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(same[i] == x[i]);  // bitwise
}

TEST_CASE("semigroup rejects bad input") {
  SpectralBasis basis(3);
  CHECK_THROWS_AS(semigroup_apply(basis, 1.0, vec({1.0, 2.0})), ContractViolation);
  CHECK_THROWS_AS(semigroup_apply(basis, -1.0, vec({1.0, 2.0, 3.0})), ContractViolation);
  CHECK_THROWS_AS(wave_semigroup_apply(basis, 1.0, WaveState{vec({1.0, 2.0, 3.0}), vec({1.0})}), ContractViolation);
}

TEST_CASE("per-mode decay of basis vectors") {
  SpectralBasis basis(8, -2.0);
  testgen::Gen gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    const double t = gen.uniform(0.0, 0.5);
    const std::size_t j = gen.index(8);
    StateVector e = StateVector::Zero(8);
    e[static_cast<Eigen::Index>(j)] = 1.0;
    const auto y = semigroup_apply(basis, t, e);
    const double expected = std::exp(-(std::pow((j + 1) * M_PI, 2) - 2.0) * t);
    CHECK(norm(basis, y) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("semigroup property and exponential bound") {
  testgen::Gen gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    const double kappa = gen.uniform(-30.0, 5.0);
    SpectralBasis basis(1 + gen.index(20), kappa);
    const auto x = gen.vector(basis.dimension());
    const double t = gen.uniform(0.0, 1.0);
    const double s = gen.uniform(0.0, 1.0);
    const auto a = semigroup_apply(basis, t + s, x);
    const auto b = semigroup_apply(basis, t, semigroup_apply(basis, s, x));
    CHECK((a - b).norm() <= 1e-12 * a.norm() + 1e-300);
    CHECK(norm(basis, a) <= std::exp(basis.growth_bound() * (t + s)) * norm(basis, x) * (1 + 1e-12));
  }
}

TEST_CASE("growth bound is the largest mode exponent") {
  CHECK(SpectralBasis(4, 0.0).growth_bound() == doctest::Approx(-M_PI * M_PI));
  CHECK(SpectralBasis(4, -M_PI * M_PI).growth_bound() == 0.0);
  // Not capped at zero: an unstable first mode gives a positive bound.
  CHECK(SpectralBasis(4, -2.0 * M_PI * M_PI).growth_bound() == doctest::Approx(M_PI * M_PI));
  CHECK(SpectralBasis::scalar(-0.7).growth_bound() == doctest::Approx(-0.7));
  CHECK(!std::signbit(SpectralBasis::scalar(0.0).growth_bound()));
}

TEST_CASE("wave group examples and energy") {
  SpectralBasis basis(1);
  const WaveState x{vec({1.0}), vec({0.0})};
  const auto at0 = wave_semigroup_apply(basis, 0.0, x);
  CHECK(at0.u[0] == 1.0);
  CHECK(at0.v[0] == 0.0);
  const auto half = wave_semigroup_apply(basis, 0.5, x);
  CHECK(std::abs(half.u[0]) < 1e-15);
  CHECK(half.v[0] == doctest::Approx(-M_PI).epsilon(1e-14));

  testgen::Gen gen(4);
  SpectralBasis big(12, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    const WaveState w{gen.vector(12), gen.vector(12)};
    const double t = gen.uniform(0.0, 10.0);
    const auto y = wave_semigroup_apply(big, t, w);
    CHECK(energy(big, y) == doctest::Approx(energy(big, w)).epsilon(1e-12));
    for (std::size_t j = 0; j < 12; ++j) {
      const auto i = static_cast<Eigen::Index>(j);
      const double w2 = big.decay_rate(j);
      CHECK(w2 * y.u[i] * y.u[i] + y.v[i] * y.v[i] ==
            doctest::Approx(w2 * w.u[i] * w.u[i] + w.v[i] * w.v[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("wave layout flow preserves the energy norm") {
  LinearFlow flow(SpectralBasis(10), Layout::wave);
  CHECK(flow.state_dimension() == 20);
  CHECK(flow.growth_bound() == 0.0);
  testgen::Gen gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = gen.vector(20);
    const auto y = flow.apply(gen.uniform(0.0, 3.0), x);
    CHECK(flow.squared_norm(y) == doctest::Approx(flow.squared_norm(x)).epsilon(1e-12));
  }
}

TEST_CASE("norm examples") {
  SpectralBasis one(1);
  CHECK(norm(SpectralBasis(5), StateVector::Zero(5), 3) == 0.0);
  CHECK(norm(one, vec({2.0}), 0) == 2.0);
  CHECK(norm(one, vec({1.0}), 1) == doctest::Approx(std::sqrt(1 + M_PI * M_PI)).epsilon(1e-15));
  CHECK(norm(one, vec({1.0}), 1) == doctest::Approx(3.2969).epsilon(1e-4));
}

TEST_CASE("Walsh weights positive, monotone, norms nest") {
  SpectralBasis basis(16);
  testgen::Gen gen(6);
  for (int n = -3; n <= 3; ++n) {
    for (std::size_t j = 0; j < 16; ++j) {
      CHECK(basis.walsh_weight(j, n) > 0.0);
      if (j > 0 && n > 0) CHECK(basis.walsh_weight(j, n) > basis.walsh_weight(j - 1, n));
      if (j > 0 && n < 0) CHECK(basis.walsh_weight(j, n) < basis.walsh_weight(j - 1, n));
    }
  }
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = gen.vector(16);
    const int n = static_cast<int>(gen.index(7)) - 3;
    const int m = n + static_cast<int>(gen.index(4));
    CHECK(norm(basis, x, n) <= norm(basis, x, m) * (1 + 1e-15));
  }
}

TEST_CASE("grid transform") {
  SUBCASE("first mode on eight points") {
    SineGrid grid(1, 8);
    const auto values = grid.forward(vec({1.0}));
    REQUIRE(values.size() == 8);
    for (int g = 1; g <= 8; ++g) {
      CHECK(grid.node(static_cast<std::size_t>(g - 1)) == doctest::Approx(g / 9.0));
      CHECK(values[g - 1] == doctest::Approx(std::sqrt(2.0) * std::sin(M_PI * g / 9.0)).epsilon(1e-15));
    }
  }
  SUBCASE("zero") {
    SineGrid grid(4, 16);
    CHECK(grid.forward(StateVector::Zero(4)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("fewer points than modes") { CHECK_THROWS_AS(SineGrid(8, 7), ContractViolation); }
  SUBCASE("random round trip against direct summation") {
    testgen::Gen gen(7);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t J = 1 + gen.index(32);
      const std::size_t G = J + gen.index(4 * J);
      SineGrid grid(J, G);
      const auto x = gen.vector(J);
      const auto values = grid.forward(x);
      for (std::size_t g = 0; g < G; ++g) {
        const double xg = static_cast<double>(g + 1) / static_cast<double>(G + 1);
        double direct = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
          direct += x[static_cast<Eigen::Index>(j)] * std::sqrt(2.0) * std::sin((j + 1) * M_PI * xg);
        }
        CHECK(values[static_cast<Eigen::Index>(g)] == doctest::Approx(direct).epsilon(1e-12).scale(x.norm()));
      }
      const auto back = grid.inverse(values);
      CHECK((back - x).norm() <= 1e-12 * x.norm());
    }
  }
  SUBCASE("default grid size") { CHECK(make_grid(10)->points() == 40); }
}
