#include "mildlevy/errors.hpp"
#include "mildlevy/mild_solver.hpp"
#include "mildlevy/models.hpp"
#include "mildlevy/statistics.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

using namespace mildlevy;

namespace {

Equation plain_equation(SpectralBasis basis, Coefficients coeffs = {}, NoiseModel noise = {}) {
  return Equation{LinearFlow(std::move(basis), Layout::plain), std::move(coeffs), std::move(noise)};
}

NoiseIncrement quiet_increment(double t0, double t1) {
  NoiseIncrement inc;
  inc.t0 = t0;
  inc.t1 = t1;
  inc.wiener = Eigen::VectorXd(0);
  inc.bridge = Eigen::MatrixXd(0, 0);
  return inc;
}

std::vector<double> sampled(const ModelDescriptor& model, std::size_t paths, double T, double dt, std::uint64_t seed,
                            double (*stat)(const PathRecord&)) {
  std::vector<double> out(paths);
  parallel_for(paths, [&](std::size_t i) { out[i] = stat(simulate_model(model, T, noise_for(model, seed, i, dt))); });
  return out;
}

double final_first(const PathRecord& r) { return r.final_state[0]; }
double final_square(const PathRecord& r) { return r.final_state[0] * r.final_state[0]; }
double sup_square(const PathRecord& r) { return r.sup_squared_norm(); }

}  // namespace

TEST_CASE("step without coefficients is the semigroup") {
  SpectralBasis basis(6, 1.0);
  const auto eq = plain_equation(basis);
  testgen::Gen gen(21);
  const auto x = gen.vector(6);
  const auto y = step(eq, x, quiet_increment(0.3, 0.35));
  CHECK((y - semigroup_apply(basis, 0.05, x)).norm() <= 1e-14 * x.norm());

  const auto scalar = plain_equation(SpectralBasis::scalar(1.0));
  StateVector one(1);
  one[0] = 1.0;
  CHECK(step(scalar, one, quiet_increment(0.0, 0.5))[0] == doctest::Approx(std::exp(0.5)).epsilon(1e-14));
}

TEST_CASE("step composes a jump between two flow segments") {
  SpectralBasis basis(3, -5.0);
  Coefficients coeffs;
  coeffs.jump = JumpCoefficient::linear(1.0);
  const auto measure = LevyMeasure::atoms({{0.5, 1.0}, {-0.5, 1.0}});  // no compensator drift
  const auto eq = plain_equation(basis, coeffs, NoiseModel{0, measure});
  testgen::Gen gen(22);
  const auto x = gen.vector(3);
  auto inc = quiet_increment(0.0, 0.1);
  inc.jumps.push_back(Jump{0.04, 0.5});
  inc.bridge = Eigen::MatrixXd(0, 1);
  StepTrace trace;
  const auto y = step(eq, x, inc, {}, &trace);
  const StateVector expected = semigroup_apply(basis, 0.06, 1.5 * semigroup_apply(basis, 0.04, x));
  CHECK((y - expected).norm() <= 1e-13 * expected.norm());
  REQUIRE(trace.times.size() == 2);
  CHECK(trace.is_jump[0] == 1);
  CHECK(trace.times[0] == 0.04);
  CHECK((trace.states[0] - 1.5 * trace.pre_states[0]).norm() <= 1e-14);
}

TEST_CASE("heat flow is exact") {
  const auto model = build_reaction_diffusion({.modes = 4,
                                               .f = ScalarFunction::zero(),
                                               .jump = JumpSpec{},
                                               .measure = LevyMeasure()});
  const auto rec = simulate_model(model, 1.0, noise_for(model, 1, 0, 0.1), {{}, RecordLevel::full});
  CHECK(rec.final_state[0] == doctest::Approx(std::exp(-M_PI * M_PI)).epsilon(1e-10));
  CHECK(rec.times.size() == 11);
  for (double q : rec.qv) CHECK(q == 0.0);
}

TEST_CASE("divergence guard") {
  const auto model = build_scalar_toy({.a = 30.0});
  try {
    simulate_model(model, 1.0, noise_for(model, 1, 0, 1e-3));
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.time() == doctest::Approx(std::log(1e8) / 30.0).epsilon(1e-2));
    CHECK(e.norm() > 1e8);
  }
  SimulationOptions loose;
  loose.step.blowup_bound = 1e20;
  CHECK_NOTHROW(simulate_model(model, 1.0, noise_for(model, 1, 0, 1e-3), loose));
}

TEST_CASE("path record invariants") {
  const auto model = build_reaction_diffusion({.modes = 8,
                                               .diffusion = DiffusionSpec{DiffusionCoefficient::Kind::linear, 0.3}});
  const auto rec = simulate_model(model, 1.0, noise_for(model, 5, 2, 1e-2), {{}, RecordLevel::full});
  REQUIRE(rec.times.size() == rec.states.size());
  REQUIRE(rec.jump_count() > 0);
  const auto& eq = *model.equation;
  for (std::size_t i = 1; i < rec.times.size(); ++i) {
    CHECK(rec.times[i] > rec.times[i - 1]);
    CHECK(rec.qv[i] >= rec.qv[i - 1]);
    if (rec.is_jump[i]) {
      // right limit = left limit + mark * H(left limit)
      const StateVector h = eq.jump_map(rec.pre_states[i]);
      const StateVector diff = rec.states[i] - rec.pre_states[i];
      const double mark = diff.dot(h) / h.squaredNorm();
      CHECK((diff - mark * h).norm() <= 1e-12 * (1 + diff.norm()));
      CHECK((std::abs(mark - 0.5) < 1e-12 || std::abs(mark + 0.3) < 1e-12));
    } else {
      CHECK(rec.states[i] == rec.pre_states[i]);
    }
  }
  CHECK(rec.times.back() == doctest::Approx(1.0));

  const auto csv = path_csv(rec);
  std::istringstream is(csv);
  std::string header;
  std::getline(is, header);
  CHECK(header.rfind("time,is_jump,coefficient_1,", 0) == 0);
  CHECK(header.find("pre_jump_coefficient_8,qv") != std::string::npos);
  std::size_t rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == rec.times.size());
  CHECK_THROWS_AS(path_csv(simulate_model(model, 0.1, noise_for(model, 5, 2, 1e-2))), ContractViolation);
}

TEST_CASE("coupled pairs") {
  const auto model = build_reaction_diffusion({.modes = 8});
  const auto& eq = *model.equation;
  const auto noise = noise_for(model, 3, 1, 1e-3);
  const auto same = simulate_coupled_pair(eq, eq, model.x0, model.x0, 0.5, noise, {{}, RecordLevel::full});
  REQUIRE(same.first.states.size() == same.second.states.size());
  for (std::size_t i = 0; i < same.first.states.size(); ++i) CHECK(same.first.states[i] == same.second.states[i]);
  CHECK(same.sup_difference == 0.0);

  // Linear flow: the difference follows the semigroup exactly.
  auto heat = build_reaction_diffusion({.modes = 8, .kappa = -3.0, .f = ScalarFunction::zero(), .jump = JumpSpec{}});
  testgen::Gen gen(23);
  const StateVector y0 = heat.x0 + gen.vector(8, 0.1);
  const auto pair = simulate_coupled_pair(*heat.equation, *heat.equation, heat.x0, y0, 1.0,
                                          noise_for(heat, 3, 1, 1e-2), {{}, RecordLevel::full});
  const StateVector d0 = y0 - heat.x0;
  for (std::size_t i = 0; i < pair.difference_squared.size(); ++i) {
    const double t = pair.first.times[i];
    const double exact = semigroup_apply(heat.equation->flow.basis(), t, d0).squaredNorm();
    CHECK(pair.difference_squared[i] == doctest::Approx(exact).epsilon(1e-10));
    CHECK(pair.difference_squared[i] <= std::exp(2 * heat.alpha * t) * d0.squaredNorm() * (1 + 1e-12));
  }

  auto shifted = perturb(model, Perturbation{.drift_shift = 0.1});
  CHECK_THROWS_AS(simulate_coupled_pair(eq, *shifted.equation, model.x0, model.x0, 0.5, noise), ConfigurationError);
  shifted = perturb(model, Perturbation{.drift_shift = 0.1}, true);
  const auto bounded = simulate_coupled_pair(eq, *shifted.equation, model.x0, model.x0, 0.5, noise);
  CHECK(std::isfinite(bounded.sup_difference));
  CHECK(bounded.sup_difference > 0.0);
}

TEST_CASE("sub-horizons replay the same noise") {
  const auto model = build_reaction_diffusion({.modes = 8});
  const auto noise = noise_for(model, 8, 0, 1e-2);
  const auto whole = simulate_model(model, 1.0, noise, {{}, RecordLevel::full});
  const auto first = simulate_path(*model.equation, model.x0, 0.0, 0.5, noise, {{}, RecordLevel::full});
  const auto second = simulate_path(*model.equation, first.final_state, 0.5, 1.0, noise, {{}, RecordLevel::full});
  CHECK((whole.final_state - second.final_state).norm() <= 1e-12);
  CHECK_THROWS_AS(simulate_path(*model.equation, model.x0, 0.0, 0.505, noise), ContractViolation);
}

TEST_CASE("delay equation") {
  SUBCASE("no delay, no coefficients: constant") {
    const auto m = build_delay({.point_masses = {},
                                .density = 0.0,
                                .f = ScalarFunction::zero(),
                                .k = ScalarFunction::zero(),
                                .measure = LevyMeasure(),
                                .history = DelayParams::History::constant,
                                .history_value = 0.7});
    const auto rec = simulate_model(m, 2.0, noise_for(m, 1, 0, 1e-2));
    for (double s : rec.squared_norms) CHECK(s == doctest::Approx(0.49).epsilon(1e-15));
  }
  SUBCASE("unit mass at zero: x' = x") {
    const auto m = build_delay({.point_masses = {{0.0, 1.0}},
                                .density = 0.0,
                                .f = ScalarFunction::zero(),
                                .k = ScalarFunction::zero(),
                                .measure = LevyMeasure(),
                                .history = DelayParams::History::constant,
                                .history_value = 1.0});
    for (double dt : {1e-2, 1e-3}) {
      const auto rec = simulate_model(m, 1.0, noise_for(m, 1, 0, dt));
      CHECK(std::abs(rec.final_state[0] - std::exp(1.0)) <= 2.0 * dt * std::exp(1.0));
    }
  }
  SUBCASE("zero history stays zero") {
    const auto m = build_delay({.history = DelayParams::History::constant, .history_value = 0.0});
    const auto rec = simulate_model(m, 1.0, noise_for(m, 4, 0, 1e-2));
    CHECK(rec.jump_count() > 0);
    for (double s : rec.squared_norms) CHECK(s == 0.0);
  }
  SUBCASE("literal instance: jump times match the noise") {
    const auto m = build_delay({});
    const double dt = 1e-2;
    const auto noise = noise_for(m, 6, 0, dt);
    const auto rec = simulate_model(m, 3.0, noise, {{}, RecordLevel::full});
    std::vector<double> sampled_times;
    for (std::int64_t n = 0; n < 300; ++n) {
      for (const auto& j : noise.interval(n).jumps) sampled_times.push_back(j.time);
    }
    std::vector<double> recorded;
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
      if (rec.is_jump[i]) recorded.push_back(rec.times[i]);
    }
    REQUIRE(!sampled_times.empty());
    CHECK(recorded == sampled_times);
    CHECK(rec.squared_norms.front() == doctest::Approx(0.0).epsilon(1e-15));  // sin(0)
    for (std::size_t i = 1; i < rec.times.size(); ++i) CHECK(rec.times[i] > rec.times[i - 1]);
  }
}

TEST_CASE("wave model energy") {
  SUBCASE("free rotation conserves per-mode energy") {
    testgen::Gen gen(24);
    const auto m = build_wave_cbrt({.modes = 8,
                                    .f = ScalarFunction::zero(),
                                    .jump_scale = 0.0,
                                    .measure = LevyMeasure(),
                                    .u0 = gen.vector(8),
                                    .v0 = gen.vector(8)});
    const auto rec = simulate_model(m, 10.0, noise_for(m, 1, 0, 1e-2));
    const auto& basis = m.equation->flow.basis();
    for (std::size_t j = 0; j < 8; ++j) {
      const auto u = static_cast<Eigen::Index>(j);
      const auto v = u + 8;
      const double w2 = basis.decay_rate(j);
      CHECK(w2 * rec.final_state[u] * rec.final_state[u] + rec.final_state[v] * rec.final_state[v] ==
            doctest::Approx(w2 * m.x0[u] * m.x0[u] + m.x0[v] * m.x0[v]).epsilon(1e-12));
    }
  }
  SUBCASE("cube-root damping dissipates energy") {
    testgen::Gen gen(25);
    const double dt = 1e-3;
    const auto m = build_wave_cbrt({.modes = 16,
                                    .jump_scale = 0.0,
                                    .measure = LevyMeasure(),
                                    .u0 = gen.vector(16, 0.3),
                                    .v0 = gen.vector(16, 2.0)});
    const auto rec = simulate_model(m, 2.0, noise_for(m, 1, 0, dt));
    // One explicit step adds at most dt^2 ||F||^2 <= dt^2 (1 + E).
    for (std::size_t i = 1; i < rec.squared_norms.size(); ++i) {
      const double e = rec.squared_norms[i - 1];
      CHECK(rec.squared_norms[i] <= e + dt * dt * (1 + e) + 1e-12);
    }
    CHECK(rec.squared_norms.back() < rec.squared_norms.front());
  }
  SUBCASE("zero data stays zero") {
    const auto m = build_wave_cbrt({.modes = 8,
                                    .jump_scale = 0.0,
                                    .measure = LevyMeasure(),
                                    .u0 = StateVector::Zero(8),
                                    .v0 = StateVector::Zero(8)});
    const auto rec = simulate_model(m, 1.0, noise_for(m, 1, 0, 1e-2));
    for (double s : rec.squared_norms) CHECK(s == 0.0);
  }
}

TEST_CASE("geometric Levy moments") {
  const ScalarToyParams params{.a = -0.5, .measure = LevyMeasure::atoms({{0.5, 2.0}}), .x0 = 1.0};
  const auto model = build_scalar_toy(params);
  const auto firsts = sampled(model, 10000, 1.0, 1e-3, 31, final_first);
  const auto est = estimate_mean(firsts);
  CHECK(std::abs(est.mean - std::exp(-0.5)) <= 3.0 * est.stderr_);
  const auto second = estimate_mean(sampled(model, 10000, 1.0, 1e-3, 32, final_square));
  const double exact = std::exp(2 * -0.5 + 2.0 * 0.25);
  CHECK(second.mean == doctest::Approx(exact).epsilon(0.05));
  CHECK(scalar_toy_second_moment(params, 1.0) == doctest::Approx(exact).epsilon(1e-15));
}

TEST_CASE("mesh refinement and seed stability") {
  const auto model = build_scalar_toy({.a = -1.0, .sigma = 0.5, .measure = LevyMeasure::atoms({{0.5, 1.0}, {-0.3, 2.0}})});
  const auto coarse = estimate_mean(sampled(model, 10000, 1.0, 2e-3, 41, sup_square));
  const auto fine = estimate_mean(sampled(model, 10000, 1.0, 1e-3, 41, sup_square));
  CHECK(std::abs(coarse.mean - fine.mean) <= 3.0 * std::hypot(coarse.stderr_, fine.stderr_));
  const auto other = estimate_mean(sampled(model, 10000, 1.0, 1e-3, 42, sup_square));
  CHECK(std::isfinite(other.mean));
  CHECK(std::abs(other.mean - fine.mean) <= 3.0 * std::hypot(other.stderr_, fine.stderr_));

  const auto rd = build_reaction_diffusion({.modes = 8});
  const auto rd_coarse = estimate_mean(sampled(rd, 10000, 1.0, 2e-2, 43, sup_square));
  const auto rd_fine = estimate_mean(sampled(rd, 10000, 1.0, 1e-2, 43, sup_square));
  CHECK(std::abs(rd_coarse.mean - rd_fine.mean) <= 3.0 * std::hypot(rd_coarse.stderr_, rd_fine.stderr_));
}
