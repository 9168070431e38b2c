// Acceptance suite: one line per criterion, exit status 1 if any fails.

#include "mildlevy/config.hpp"
#include "mildlevy/errors.hpp"
#include "mildlevy/models.hpp"
#include "mildlevy/monotone_ops.hpp"
#include "mildlevy/statistics.hpp"
#include "mildlevy/theory_checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace mildlevy;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note += (note.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void add(const std::string& what) { note += (note.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

EnsembleSettings ensemble(std::size_t paths, double dt, double T, std::uint64_t seed) {
  EnsembleSettings s;
  s.paths = paths;
  s.dt = dt;
  s.T = T;
  s.seed = seed;
  return s;
}

// 1. Discrete Ito-type inequality on every catalog model.
Outcome ito_gate() {
  Outcome o;
  const auto start = Clock::now();
  const std::vector<ModelDescriptor> models = {
      build_reaction_diffusion({.modes = 64, .diffusion = {DiffusionCoefficient::Kind::linear, 0.5}}),
      build_wave_cbrt({.modes = 64, .sigma = 0.5}),
      build_delay({.g = ScalarFunction::sine(0.3)}),
      build_scalar_toy({.a = -0.5, .sigma = 0.5, .measure = LevyMeasure::atoms({{0.5, 1.0}, {-0.3, 2.0}})}),
  };
  std::size_t points = 0;
  for (const auto& m : models) {
    const auto r = run_ito_check(m, ensemble(1000, 1e-3, 1.0, 2024), 1e-9);
    const auto violations = r.details["violations"].get<std::size_t>();
    points += r.details["grid_points_checked"].get<std::size_t>();
    o.require(violations == 0 && r.ensemble == 1000, m.name + " has " + std::to_string(violations) + " violations");
  }
  const double secs = seconds_since(start);
  o.require(secs < 60.0, "runtime " + fmt("%.1f s >= 60 s", secs));
  o.add("4 models x 1000 paths, " + std::to_string(points) + " grid points, 0 violations, " + fmt("%.1f s", secs));
  return o;
}

// 2. Closed-form oracles.
Outcome closed_forms() {
  Outcome o;
  const ScalarToyParams p{.a = -0.5, .sigma = 0.2, .measure = LevyMeasure::atoms({{0.2, 2.0}}), .x0 = 1.0};
  const auto model = build_scalar_toy(p);
  const std::size_t paths = 10000;
  const double T = 1.0;
  std::vector<double> first(paths), second(paths);
  parallel_for(paths, [&](std::size_t i) {
    const auto rec = simulate_model(model, T, noise_for(model, 77, i, 1e-3));
    first[i] = rec.final_state[0];
    second[i] = first[i] * first[i];
  });
  const auto m1 = estimate_mean(first);
  const double mean_oracle = p.x0 * std::exp(p.a * T);
  o.require(std::abs(m1.mean - mean_oracle) <= 3.0 * m1.stderr_, "mean");
  const auto m2 = estimate_mean(second);
  const double second_oracle = p.x0 * p.x0 * std::exp((2 * p.a + p.sigma * p.sigma + 2.0 * 0.2 * 0.2) * T);
  const double rel = std::abs(m2.mean - second_oracle) / second_oracle;
  o.require(rel <= 0.05, "second moment");

  const auto heat = build_reaction_diffusion({.modes = 64, .f = ScalarFunction::zero(), .jump = {}, .measure = {}});
  const auto rec = simulate_model(heat, T, noise_for(heat, 1, 0, 1e-3));
  const double heat_err = std::abs(rec.final_state[0] - std::exp(-M_PI * M_PI * T));
  o.require(heat_err <= 1e-10, "heat decay");

  o.add(fmt("mean %.5f vs %.5f", m1.mean, mean_oracle) + fmt(" (%.2f se)", std::abs(m1.mean - mean_oracle) / m1.stderr_));
  o.add(fmt("E x^2 %.5f vs %.5f", m2.mean, second_oracle) + fmt(" (%.2f%%)", 100 * rel));
  o.add(fmt("heat error %.1e", heat_err));
  return o;
}

// 3. Resolvent and Yosida suite.
Outcome resolvent_suite() {
  Outcome o;
  const std::vector<ScalarFunction> fs = {
      ScalarFunction::neg_cbrt(),          ScalarFunction::affine(-1.0, 0.0),       ScalarFunction::affine(-4.0, 2.0),
      ScalarFunction::saturated_linear(0.5), ScalarFunction::piecewise(0.3, 3.0, 0.0), ScalarFunction::zero(),
      ScalarFunction::shifted(ScalarFunction::neg_cbrt(), -1.0)};
  Xoshiro256 rng(derive_key(33, {1}));
  const auto u = [&](double a, double b) { return a + (b - a) * rng.uniform(); };

  double worst_residual = 0.0;
  std::size_t residual_fail = 0;
  std::size_t bound_fail = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto& f = fs[static_cast<std::size_t>(i) % fs.size()];
    const double lambda = std::pow(10.0, u(-4, 1));
    const double x = u(-1, 1) * std::pow(10.0, u(-3, 3));
    const double y = resolvent(f, lambda, x);
    const double residual = std::abs(y - lambda * f(y) - x) / (1 + std::abs(x));
    worst_residual = std::max(worst_residual, residual);
    if (residual > 1e-12) ++residual_fail;
    if (std::abs(yosida(f, lambda, x)) > std::abs(f(x))) ++bound_fail;
  }
  std::size_t monotone_fail = 0;
  for (int i = 0; i < 100; ++i) {
    const double x = u(-10, 10);
    for (const auto& f : fs) {
      double previous = INFINITY;
      for (double lambda : {1e-1, 1e-2, 1e-3}) {
        const double err = std::abs(yosida(f, lambda, x) - f(x));
        if (err > previous) ++monotone_fail;
        previous = err;
      }
    }
  }
  o.require(residual_fail == 0, std::to_string(residual_fail) + " residuals above 1e-12(1+|x|)");
  o.require(bound_fail == 0, std::to_string(bound_fail) + " violations of |f_l| <= |f|");
  o.require(monotone_fail == 0, std::to_string(monotone_fail) + " non-monotone error sequences");
  o.add(fmt("worst scaled residual %.1e over 1000 draws", worst_residual));
  o.add("|f_l| <= |f| and monotone decrease at 100 points x 7 functions");
  return o;
}

// 4. Continuity bound on five perturbation scenarios.
Outcome continuity() {
  Outcome o;
  const auto start = Clock::now();
  const auto base = build_reaction_diffusion({.modes = 16, .diffusion = {DiffusionCoefficient::Kind::linear, 0.3}});
  struct Scenario {
    const char* name;
    Perturbation p;
  };
  const std::vector<Scenario> scenarios = {
      {"drift_shift", {.drift_shift = 0.1}},
      {"diffusion_scale", {.diffusion_scale = 1.1}},
      {"jump_scale", {.jump_scale = 1.1}},
      {"initial_shift", {.x0_shift = 0.1}},
      {"combined", {.drift_shift = 0.05, .diffusion_scale = 1.05, .jump_scale = 1.05, .x0_shift = 0.05}},
  };
  std::string ratios;
  for (const auto& s : scenarios) {
    auto pair = share_declared_constants({base, perturb(base, s.p)});
    const auto r = check_continuity_bound(pair[0], pair[1], ensemble(1000, 1e-3, 1.0, 4));
    o.require(r.passed(), s.name);
    ratios += std::string(ratios.empty() ? "" : ", ") + s.name + fmt("=%.2g", r.lhs / r.rhs);
  }
  const double secs = seconds_since(start);
  o.require(secs < 120.0, fmt("runtime %.1f s >= 120 s", secs));
  o.add("5 scenarios x 1000 coupled paths, LHS/RHS: " + ratios);
  o.add(fmt("%.1f s", secs));
  return o;
}

// 5. Exponential stability at gamma = -8 and gamma = -1.
Outcome stability() {
  Outcome o;
  const std::vector<double> checkpoints{0.25, 0.5, 1.0};

  const auto linear = build_scalar_toy({.a = -5.0, .x0 = 1.0});
  StateVector y_lin(1);
  y_lin[0] = 2.0;
  const auto r8 = check_exponential_stability(linear, y_lin, checkpoints, ensemble(1000, 1e-3, 1.0, 5));
  const double g8 = r8.details["gamma"];
  o.require(std::abs(g8 + 8.0) < 1e-12, "gamma " + fmt("%.6g != -8", g8));
  o.require(r8.status == CheckStatus::pass, "gamma=-8 bound");

  // Monotone drift, small jump Lipschitz constant, kappa tuned so gamma = -1.
  ReactionDiffusionParams p{.modes = 16, .jump = {JumpCoefficient::Kind::linear, 0.1, ScalarFunction::zero()}};
  const double C = build_reaction_diffusion(p).declared.C;
  const double C2 = compute_constants(0, 0, 0).C2;
  p.kappa = (3.0 + C * C2) / 2.0 - M_PI * M_PI;
  const auto monotone = build_reaction_diffusion(p);
  StateVector y_mon = StateVector::Zero(16);
  y_mon[0] = -0.5;
  y_mon[1] = 0.3;
  const auto r1 = check_exponential_stability(monotone, y_mon, checkpoints, ensemble(1000, 1e-3, 1.0, 6));
  const double g1 = r1.details["gamma"];
  o.require(std::abs(g1 + 1.0) < 1e-9, "gamma " + fmt("%.6g != -1", g1));
  o.require(r1.status == CheckStatus::pass, "gamma=-1 bound");

  for (const auto* r : {&r8, &r1}) {
    std::string rows;
    for (const auto& row : r->details["checkpoints"]) {
      rows += fmt(" t=%.2g: %.3g", row["t"].get<double>(), row["mean"].get<double>()) +
              fmt(" <= %.3g", row["bound"].get<double>());
    }
    o.add(fmt("gamma=%.3g:", r->details["gamma"].get<double>()) + rows);
  }
  return o;
}

// 6. Yosida approximation.
Outcome yosida_convergence() {
  Outcome o;
  const std::vector<double> lambdas{0.5, 0.1, 0.02, 0.004};
  const auto rd = build_reaction_diffusion({.modes = 16});
  const auto r = check_yosida_convergence(rd, lambdas, ensemble(100, 1e-3, 1.0, 8), 1e-2);
  o.require(r.details["strictly_decreasing"] == true, "e(lambda) not strictly decreasing");
  const double rel = r.details["relative_error"];
  o.require(rel <= 1e-2, fmt("e(0.004)/E sup = %.3g > 1e-2", rel));
  std::string es;
  for (const auto& row : r.details["errors"]) es += fmt(" %.3g", row["e"].get<double>());
  o.add("neg_cbrt e(lambda):" + es + fmt(", e(0.004)/E sup = %.2g", rel));

  // x' = a x + f_l(x) with f = -x, against the reference x' = (a - 1) x.
  const double a = -0.5;
  const auto toy = build_scalar_toy({.a = a, .x0 = 1.0, .f = ScalarFunction::affine(-1.0, 0.0)});
  const auto lin = check_yosida_convergence(toy, lambdas, ensemble(2, 1e-5, 1.0, 9), 1e-2);
  double worst = 0.0;
  for (const auto& row : lin.details["errors"]) {
    const double l = row["lambda"];
    double oracle = 0.0;
    for (int i = 0; i <= 100000; ++i) {
      const double t = i * 1e-5;
      oracle = std::max(oracle, std::pow(std::exp((a - 1 / (1 + l)) * t) - std::exp((a - 1) * t), 2));
    }
    worst = std::max(worst, std::abs(row["e"].get<double>() - oracle) / oracle);
  }
  o.require(worst <= 0.05, fmt("linear case off by %.2g", worst));
  o.add(fmt("linear closed form within %.2g%%", 100 * worst));
  return o;
}

// 7. Markov property.
Outcome markov() {
  Outcome o;
  MarkovSettings s;
  s.seed = 11;
  const std::vector<ModelDescriptor> models = {
      build_scalar_toy({.a = -0.2, .sigma = 0.3, .measure = LevyMeasure::atoms({{0.5, 1.0}, {-0.4, 1.0}})}),
      build_reaction_diffusion({.modes = 16, .kappa = -9.0, .diffusion = {DiffusionCoefficient::Kind::linear, 0.5}}),
  };
  for (const auto& m : models) {
    const auto r = check_markov(m, s);
    o.require(r.details["means_agree"] == true, m.name + " means");
    o.require(r.details["ks_p_value"].get<double>() > 0.01, m.name + " KS");
    o.require(r.details["replay_max_difference"].get<double>() <= 1e-9, m.name + " replay");
    o.add(m.name + fmt(": direct %.4f", r.details["direct_mean"].get<double>()) +
          fmt(" nested %.4f", r.details["nested_mean"].get<double>()) +
          fmt(" (gap %.2g, 3se %.2g)", r.lhs, r.rhs) + fmt(" KS p=%.3g", r.details["ks_p_value"].get<double>()) +
          fmt(" replay %.1e", r.details["replay_max_difference"].get<double>()));
  }
  return o;
}

// 8. Hypothesis audits.
Outcome audits() {
  Outcome o;
  const std::vector<ModelDescriptor> models = {
      build_reaction_diffusion({.modes = 64}),
      build_reaction_diffusion({.modes = 64,
                                .eta = 0.5,
                                .f = ScalarFunction::piecewise(0.5, 2.0, 0.0),
                                .jump = {JumpCoefficient::Kind::nemitsky, 1.0, ScalarFunction::sine(0.5)},
                                .diffusion = {DiffusionCoefficient::Kind::nemitsky, 0.3, 0, ScalarFunction::sine(1.0)}}),
      build_wave_cbrt({.modes = 64, .sigma = 0.5}),
      build_delay({}),
      build_delay({.g = ScalarFunction::sine(0.3)}),
      build_scalar_toy({.a = -1.0, .sigma = 0.5, .measure = LevyMeasure::uniform(-0.5, 1.0, 2.0)}),
  };
  Xoshiro256 rng(derive_key(99, {static_cast<std::uint64_t>(StreamTag::audit)}));
  for (const auto& m : models) {
    const auto r = audit_hypothesis(m, 10000, rng, 1e-6);
    o.require(r.passed(), m.name + " declared constants");
  }
  o.add(std::to_string(models.size()) + " models pass at 10^4 pairs");

  // Halved Lipschitz constant must be caught with a witness.
  auto wrong = build_reaction_diffusion({.modes = 64});
  wrong.declared.C *= 0.5;
  const auto r = audit_hypothesis(wrong, 10000, rng, 1e-6);
  bool witnessed = false;
  for (const auto& item : r.details["items"]) {
    if (item["constant"] == "C" && item["pass"] == false && item["witness"].contains("x") && item["witness"].contains("y")) {
      witnessed = true;
    }
  }
  o.require(!r.passed() && witnessed, "wrong C not caught with witness");
  o.add("halved C rejected with witness pair");
  return o;
}

// 9. Byte-identical artifacts on rerun.
Outcome reproducibility() {
  Outcome o;
  const json base = {{"model", {{"name", "reaction_diffusion"}, {"diffusion", {{"kind", "linear"}, {"sigma", 0.3}}}}},
                     {"discretization", {{"modes", 8}, {"dt", 1e-2}, {"T", 1.0}}},
                     {"ensemble", {{"paths", 20}}},
                     {"seed", 123},
                     {"checks",
                      {{"check-markov", {{"direct_paths", 200}, {"outer_paths", 20}, {"inner_paths", 10}}},
                       {"check-yosida", {{"relative_threshold", 1.0}}},
                       {"audit", {{"samples", 500}}},
                       {"check-stability", {{"checkpoints", {0.5, 1.0}}, {"y0_scale", 0.5}}}}}};
  std::size_t compared = 0;
  for (const auto& sub : subcommand_catalog()) {
    const auto a = run_subcommand(sub, parse_config(base));
    const auto b = run_subcommand(sub, parse_config(base));
    bool same = a.artifacts.size() == b.artifacts.size() && !a.artifacts.empty();
    for (std::size_t i = 0; same && i < a.artifacts.size(); ++i) {
      same = a.artifacts[i].name == b.artifacts[i].name && a.artifacts[i].contents == b.artifacts[i].contents;
      ++compared;
    }
    o.require(same, sub + " artifacts differ");
  }
  o.add(std::to_string(subcommand_catalog().size()) + " subcommands, " + std::to_string(compared) +
        " artifacts byte-identical");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"ito inequality gate", ito_gate},
      {"closed-form oracles", closed_forms},
      {"resolvent and Yosida suite", resolvent_suite},
      {"continuity bound, 5 scenarios", continuity},
      {"exponential stability", stability},
      {"Yosida convergence", yosida_convergence},
      {"Markov property", markov},
      {"hypothesis audits", audits},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %zu. %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                seconds_since(start), o.note.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
