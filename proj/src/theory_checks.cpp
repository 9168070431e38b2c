#include "mildlevy/theory_checks.hpp"

#include "mildlevy/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace mildlevy {

BDGConstant::BDGConstant(double value) : value_(value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ContractViolation("BDGConstant: value must be positive and finite");
}

TheoremConstants compute_constants(double M, double C, double alpha, BDGConstant bdg) {
  const double c = bdg.value();
  TheoremConstants k;
  k.C2 = 8.0 * c * c + 4.0;
  k.C1 = 4.0 * M + 2.0 + C * k.C2;
  k.gamma = 2.0 * alpha + k.C1;
  return k;
}

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::pass:
      return "pass";
    case CheckStatus::fail:
      return "fail";
    case CheckStatus::warning:
      return "warning";
  }
  return "fail";
}

nlohmann::json to_json(const TheoremReport& r) {
  nlohmann::json j;
  j["check"] = r.check;
  j["verdict"] = to_string(r.status);
  j["lhs"] = r.lhs;
  j["ci_half_width"] = r.ci_half_width;
  j["rhs"] = r.rhs;
  j["ensemble"] = r.ensemble;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["bdg_constant"] = r.bdg;
  j["details"] = r.details;
  return j;
}

std::string format_table(std::span<const TheoremReport> reports) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %-8s %14s %12s %14s %9s %9s\n", "check", "verdict", "lhs", "+-ci", "rhs",
                "ensemble", "seconds");
  out += line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-24s %-8s %14.6e %12.4e %14.6e %9zu %9.2f\n", r.check.c_str(),
                  to_string(r.status).c_str(), r.lhs, r.ci_half_width, r.rhs, r.ensemble, r.runtime_seconds);
    out += line;
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

const Equation& spectral(const ModelDescriptor& model, const char* what) {
  if (!model.equation) throw ConfigurationError(std::string(what) + ": needs a spectral model, got '" + model.name + "'");
  return *model.equation;
}

// Noise able to drive both equations of a coupled pair.
NoiseSource pair_noise(const ModelDescriptor& a, const ModelDescriptor& b, std::uint64_t seed, std::uint64_t path,
                       double dt) {
  return NoiseSource(seed, path, std::max(a.wiener_modes(), b.wiener_modes()), dt, a.measure());
}

bool on_uniform_grid(const PathRecord& rec, std::size_t i) { return rec.is_jump[i] == 0; }

std::size_t checkpoint_index(const PathRecord& rec, double t) {
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    if (on_uniform_grid(rec, i) && std::abs(rec.times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
  }
  throw ConfigurationError("checkpoint t=" + std::to_string(t) + " is not a grid time");
}

Eigen::VectorXd diffusion_vector(const Equation& eq, const StateVector& x, std::size_t K) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  if (eq.coeffs.diffusion.is_zero()) return out;
  const auto J = static_cast<Eigen::Index>(eq.flow.modes());
  const StateVector src = eq.flow.layout() == Layout::wave ? StateVector(x.head(J)) : x;
  const Eigen::VectorXd c = eq.coeffs.diffusion.multipliers(src);
  const Eigen::Index k = std::min<Eigen::Index>(c.size(), out.size());
  out.head(k) = c.head(k);
  return out;
}

std::size_t diffusion_width(const Equation& a, const Equation& b) {
  const auto K = [](const Equation& e) { return e.coeffs.diffusion.is_zero() ? std::size_t{0} : e.coeffs.diffusion.modes; };
  return std::max(K(a), K(b));
}

struct ItoPathSummary {
  std::size_t points = 0;
  std::size_t violations = 0;
  double max_excess = -std::numeric_limits<double>::infinity();  // (lhs - rhs) / (1 + |rhs|)
  double first_violation_time = -1.0;
};

ItoPathSummary ito_path_summary(const PathRecord& rec, double tol) {
  ItoPathSummary s;
  const std::size_t n = rec.times.size();
  if (n == 0) throw ContractViolation("check_ito_inequality: empty path record");
  if (n > 1 && rec.events.size() + 1 < n) {
    throw ContractViolation("check_ito_inequality: path record is missing increment events");
  }
  if (rec.squared_norms.size() != n) throw ContractViolation("check_ito_inequality: path record is missing norms");
  const double a2 = 2.0 * rec.alpha;
  double rhs = rec.squared_norms[0];
  std::size_t e = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double ti = rec.times[i];
    rhs *= std::exp(a2 * (ti - rec.times[i - 1]));
    for (; e < rec.events.size() && rec.events[e].first_index == i; ++e) {
      const auto& ev = rec.events[e];
      rhs += std::exp(a2 * (ti - ev.time)) * (2.0 * ev.inner + ev.squared);
    }
    const double lhs = rec.squared_norms[i];
    const double excess = (lhs - rhs) / (1.0 + std::abs(rhs));
    s.max_excess = std::max(s.max_excess, excess);
    ++s.points;
    if (excess > tol) {
      if (s.violations == 0) s.first_violation_time = ti;
      ++s.violations;
    }
  }
  if (e != rec.events.size()) throw ContractViolation("check_ito_inequality: events out of order");
  return s;
}

TheoremReport ito_report(const std::vector<ItoPathSummary>& summaries, double tol) {
  TheoremReport r;
  r.check = "ito_inequality";
  std::size_t points = 0;
  std::size_t violations = 0;
  std::size_t bad_paths = 0;
  double max_excess = -std::numeric_limits<double>::infinity();
  nlohmann::json first = nullptr;
  for (std::size_t p = 0; p < summaries.size(); ++p) {
    const auto& s = summaries[p];
    points += s.points;
    violations += s.violations;
    max_excess = std::max(max_excess, s.max_excess);
    if (s.violations > 0) {
      ++bad_paths;
      if (first.is_null()) first = {{"path", p}, {"time", s.first_violation_time}};
    }
  }
  r.lhs = static_cast<double>(violations);
  r.rhs = 0.0;
  r.ensemble = summaries.size();
  r.status = violations == 0 ? CheckStatus::pass : CheckStatus::fail;
  r.details = {{"grid_points_checked", points},
               {"violations", violations},
               {"paths_with_violations", bad_paths},
               {"max_relative_excess", std::isfinite(max_excess) ? max_excess : 0.0},
               {"relative_tolerance", tol},
               {"first_violation", first}};
  return r;
}

}  // namespace

TheoremReport check_ito_inequality(std::span<const PathRecord> paths, double relative_tolerance) {
  const auto start = Clock::now();
  std::vector<ItoPathSummary> summaries;
  summaries.reserve(paths.size());
  for (const auto& p : paths) summaries.push_back(ito_path_summary(p, relative_tolerance));
  TheoremReport r = ito_report(summaries, relative_tolerance);
  if (!paths.empty()) r.seed = paths.front().seed;
  r.runtime_seconds = seconds_since(start);
  return r;
}

TheoremReport run_ito_check(const ModelDescriptor& model, const EnsembleSettings& settings,
                            double relative_tolerance) {
  const auto start = Clock::now();
  std::vector<ItoPathSummary> summaries(settings.paths);
  parallel_for(
      settings.paths,
      [&](std::size_t i) {
        const NoiseSource noise = noise_for(model, settings.seed, i, settings.dt);
        const PathRecord rec = simulate_model(model, settings.T, noise);
        summaries[i] = ito_path_summary(rec, relative_tolerance);
      },
      settings.threads);
  TheoremReport r = ito_report(summaries, relative_tolerance);
  r.seed = settings.seed;
  r.details["model"] = model.name;
  r.details["alpha"] = model.alpha;
  r.details["T"] = settings.T;
  r.details["dt"] = settings.dt;
  r.runtime_seconds = seconds_since(start);
  return r;
}

TheoremReport check_continuity_bound(const ModelDescriptor& base, const ModelDescriptor& perturbed,
                                     const EnsembleSettings& settings, BDGConstant bdg) {
  const auto start = Clock::now();
  const Equation& eq0 = spectral(base, "check_continuity_bound");
  const Equation& eq1 = spectral(perturbed, "check_continuity_bound");
  if (!(base.declared == perturbed.declared) || !(eq0.coeffs.declared == eq1.coeffs.declared)) {
    throw ConfigurationError("check_continuity_bound: the two coefficient sets must declare the same M, C, D");
  }
  const double alpha = eq0.flow.growth_bound();
  const TheoremConstants k = compute_constants(base.declared.M, base.declared.C, alpha, bdg);
  const double m2 = eq0.noise.measure.second_moment();
  const std::size_t K = diffusion_width(eq0, eq1);
  const auto N = static_cast<std::size_t>(std::llround(settings.T / settings.dt));

  struct PathTerms {
    double sup_weighted = 0.0;
    std::vector<double> df, dg, dh;
  };
  std::vector<PathTerms> terms(settings.paths);
  SimulationOptions opts;
  opts.record = RecordLevel::full;
  parallel_for(
      settings.paths,
      [&](std::size_t i) {
        const NoiseSource noise = pair_noise(base, perturbed, settings.seed, i, settings.dt);
        const CoupledRecord rec = simulate_coupled_pair(eq0, eq1, base.x0, perturbed.x0, settings.T, noise, opts);
        PathTerms& t = terms[i];
        t.sup_weighted = rec.sup_weighted;
        t.df.reserve(N + 1);
        t.dg.reserve(N + 1);
        t.dh.reserve(N + 1);
        const PathRecord& p = rec.first;
        for (std::size_t j = 0; j < p.times.size(); ++j) {
          if (!on_uniform_grid(p, j)) continue;
          const StateVector& x = p.states[j];
          t.df.push_back(eq0.flow.squared_norm(eq1.drift(x) - eq0.drift(x)));
          t.dg.push_back((diffusion_vector(eq1, x, K) - diffusion_vector(eq0, x, K)).squaredNorm());
          t.dh.push_back(m2 * eq0.flow.squared_norm(eq1.jump_map(x) - eq0.jump_map(x)));
        }
        if (t.df.size() != N + 1) throw ContractViolation("check_continuity_bound: unexpected grid size");
      },
      settings.threads);

  std::vector<double> sup(settings.paths);
  std::vector<double> times(N + 1), ef(N + 1, 0.0), eg(N + 1, 0.0), eh(N + 1, 0.0);
  for (std::size_t j = 0; j <= N; ++j) times[j] = static_cast<double>(j) * settings.dt;
  for (std::size_t i = 0; i < settings.paths; ++i) {
    sup[i] = terms[i].sup_weighted;
    for (std::size_t j = 0; j <= N; ++j) {
      ef[j] += terms[i].df[j];
      eg[j] += terms[i].dg[j];
      eh[j] += terms[i].dh[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(settings.paths);
  for (std::size_t j = 0; j <= N; ++j) {
    const double w = std::exp(-2.0 * alpha * times[j]) * inv;
    ef[j] *= w;
    eg[j] *= w;
    eh[j] *= w;
  }
  const double dx0 = eq0.flow.squared_norm(perturbed.x0 - base.x0);
  const double int_f = trapezoid(times, ef);
  const double int_g = trapezoid(times, eg);
  const double int_h = trapezoid(times, eh);
  const double growth = std::exp(k.C1 * settings.T);

  const MeanEstimate lhs = estimate_mean(sup);
  TheoremReport r;
  r.check = "continuity_bound";
  r.lhs = lhs.mean;
  r.ci_half_width = lhs.half_width(3.0);
  r.rhs = 2.0 * growth * (dx0 + int_f) + k.C2 * growth * (int_g + int_h);
  r.status = (r.lhs - r.ci_half_width <= r.rhs) ? CheckStatus::pass : CheckStatus::fail;
  r.ensemble = settings.paths;
  r.seed = settings.seed;
  r.bdg = bdg.value();
  r.details = {{"base", base.name},
               {"alpha", alpha},
               {"M", base.declared.M},
               {"C", base.declared.C},
               {"D", base.declared.D},
               {"C1", k.C1},
               {"C2", k.C2},
               {"T", settings.T},
               {"dt", settings.dt},
               {"initial_difference", dx0},
               {"drift_integral", int_f},
               {"diffusion_integral", int_g},
               {"jump_integral", int_h},
               {"negative_M_used", base.declared.M < 0.0}};
  r.runtime_seconds = seconds_since(start);
  return r;
}

TheoremReport check_coefficient_convergence(const ModelDescriptor& base,
                                            const std::vector<std::pair<double, ModelDescriptor>>& family,
                                            const EnsembleSettings& settings, double threshold) {
  const auto start = Clock::now();
  if (family.empty()) throw ConfigurationError("check_coefficient_convergence: empty family");
  const Equation& eq0 = spectral(base, "check_coefficient_convergence");
  for (const auto& [n, m] : family) {
    const Equation& e = spectral(m, "check_coefficient_convergence");
    if (!(m.declared == base.declared) || !(e.coeffs.declared == eq0.coeffs.declared)) {
      throw ConfigurationError("check_coefficient_convergence: member n=" + std::to_string(n) +
                               " declares constants different from the base");
    }
  }

  std::vector<MeanEstimate> d;
  d.reserve(family.size());
  for (const auto& [n, m] : family) {
    std::vector<double> sup(settings.paths);
    parallel_for(
        settings.paths,
        [&](std::size_t i) {
          const NoiseSource noise = pair_noise(base, m, settings.seed, i, settings.dt);
          sup[i] = simulate_coupled_pair(eq0, *m.equation, base.x0, m.x0, settings.T, noise).sup_difference;
        },
        settings.threads);
    d.push_back(estimate_mean(sup));
  }

  bool monotone = true;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < d.size(); ++i) {
    rows.push_back({{"n", family[i].first}, {"d", d[i].mean}, {"stderr", d[i].stderr_}});
    if (i > 0) {
      const double allowance = 3.0 * std::hypot(d[i].stderr_, d[i - 1].stderr_);
      if (d[i].mean > d[i - 1].mean + allowance) monotone = false;
    }
  }
  TheoremReport r;
  r.check = "coefficient_convergence";
  r.lhs = d.back().mean;
  r.ci_half_width = d.back().half_width(3.0);
  r.rhs = threshold;
  r.status = (monotone && d.back().mean <= threshold) ? CheckStatus::pass : CheckStatus::fail;
  r.ensemble = settings.paths;
  r.seed = settings.seed;
  r.details = {{"base", base.name}, {"sequence", rows}, {"non_increasing", monotone}, {"threshold", threshold},
               {"T", settings.T}, {"dt", settings.dt}};
  r.runtime_seconds = seconds_since(start);
  return r;
}

TheoremReport check_exponential_stability(const ModelDescriptor& model, const StateVector& y0,
                                          const std::vector<double>& checkpoints, const EnsembleSettings& settings,
                                          BDGConstant bdg) {
  const auto start = Clock::now();
  const Equation& eq = spectral(model, "check_exponential_stability");
  if (checkpoints.empty()) throw ConfigurationError("check_exponential_stability: no checkpoints");
  const double horizon = *std::max_element(checkpoints.begin(), checkpoints.end());
  const double alpha = eq.flow.growth_bound();
  const TheoremConstants k = compute_constants(model.declared.M, model.declared.C, alpha, bdg);
  const double dx0 = eq.flow.squared_norm(model.x0 - y0);

  std::vector<std::vector<double>> samples(checkpoints.size(), std::vector<double>(settings.paths));
  parallel_for(
      settings.paths,
      [&](std::size_t i) {
        const NoiseSource noise = noise_for(model, settings.seed, i, settings.dt);
        const CoupledRecord rec = simulate_coupled_pair(eq, eq, model.x0, y0, horizon, noise);
        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
          samples[c][i] = rec.difference_squared[checkpoint_index(rec.first, checkpoints[c])];
        }
      },
      settings.threads);

  bool all_hold = true;
  double worst_gap = -std::numeric_limits<double>::infinity();
  TheoremReport r;
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> fit_t{0.0};
  std::vector<double> fit_y;
  if (dx0 > 0.0) fit_y.push_back(std::log(dx0));
  if (fit_y.empty()) fit_t.clear();
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const double t = checkpoints[c];
    const MeanEstimate e = estimate_mean(samples[c]);
    const double bound = 2.0 * std::exp(k.gamma * t) * dx0;
    const double ci = e.half_width(3.0);
    const bool holds = e.mean - ci <= bound;
    all_hold = all_hold && holds;
    rows.push_back({{"t", t}, {"mean", e.mean}, {"stderr", e.stderr_}, {"bound", bound}, {"holds", holds}});
    if (e.mean - ci - bound > worst_gap) {
      worst_gap = e.mean - ci - bound;
      r.lhs = e.mean;
      r.ci_half_width = ci;
      r.rhs = bound;
    }
    if (e.mean > 0.0) {
      fit_t.push_back(t);
      fit_y.push_back(std::log(e.mean));
    }
  }
  nlohmann::json fit = nullptr;
  if (fit_t.size() >= 2) fit = least_squares(fit_t, fit_y).slope;

  r.check = "exponential_stability";
  if (k.gamma >= 0.0) {
    r.status = CheckStatus::warning;
  } else {
    r.status = all_hold ? CheckStatus::pass : CheckStatus::fail;
  }
  r.ensemble = settings.paths;
  r.seed = settings.seed;
  r.bdg = bdg.value();
  r.details = {{"model", model.name},
               {"alpha", alpha},
               {"M", model.declared.M},
               {"C", model.declared.C},
               {"C1", k.C1},
               {"gamma", k.gamma},
               {"initial_difference", dx0},
               {"checkpoints", rows},
               {"empirical_decay_rate", fit},
               {"applicable", k.gamma < 0.0},
               {"dt", settings.dt}};
  r.runtime_seconds = seconds_since(start);
  return r;
}

TheoremReport check_yosida_convergence(const ModelDescriptor& model, const std::vector<double>& lambdas,
                                       const EnsembleSettings& settings, double relative_threshold) {
  const auto start = Clock::now();
  const Equation& eq = spectral(model, "check_yosida_convergence");
  if (lambdas.empty()) throw ConfigurationError("check_yosida_convergence: empty lambda list");
  if (eq.coeffs.drift.semimonotone_constant() > 0.0) {
    throw ConfigurationError("check_yosida_convergence: drift must be monotone (M <= 0), got M = " +
                             std::to_string(eq.coeffs.drift.semimonotone_constant()));
  }
  std::vector<double> ls = lambdas;
  std::sort(ls.begin(), ls.end(), std::greater<>());
  std::vector<Equation> approx;
  approx.reserve(ls.size());
  for (const double l : ls) {
    Equation e = eq;
    e.coeffs.drift = yosida_drift(eq.coeffs.drift, l);
    approx.push_back(std::move(e));
  }

  std::vector<double> ref_sup(settings.paths);
  std::vector<std::vector<double>> err(ls.size(), std::vector<double>(settings.paths));
  parallel_for(
      settings.paths,
      [&](std::size_t i) {
        const NoiseSource noise = noise_for(model, settings.seed, i, settings.dt);
        SimulationOptions ref_opts;
        ref_opts.record = RecordLevel::full;
        ref_opts.step.scheme = Scheme::semi_implicit;
        const PathRecord ref = simulate_path(eq, model.x0, settings.T, noise, ref_opts);
        ref_sup[i] = ref.sup_squared_norm();
        SimulationOptions opts;
        opts.record = RecordLevel::full;
        for (std::size_t l = 0; l < ls.size(); ++l) {
          const PathRecord rec = simulate_path(approx[l], model.x0, settings.T, noise, opts);
          if (rec.states.size() != ref.states.size()) throw ContractViolation("check_yosida_convergence: grids differ");
          double sup = 0.0;
          for (std::size_t j = 0; j < rec.states.size(); ++j) {
            sup = std::max(sup, eq.flow.squared_norm(rec.states[j] - ref.states[j]));
          }
          err[l][i] = sup;
        }
      },
      settings.threads);

  const MeanEstimate ref = estimate_mean(ref_sup);
  std::vector<MeanEstimate> e;
  bool decreasing = true;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t l = 0; l < ls.size(); ++l) {
    e.push_back(estimate_mean(err[l]));
    rows.push_back({{"lambda", ls[l]}, {"e", e[l].mean}, {"stderr", e[l].stderr_}});
    if (l > 0 && !(e[l].mean < e[l - 1].mean)) decreasing = false;
  }
  const double bound = relative_threshold * ref.mean;

  TheoremReport r;
  r.check = "yosida_convergence";
  r.lhs = e.back().mean;
  r.ci_half_width = e.back().half_width(3.0);
  r.rhs = bound;
  // f = 0 gives e = 0 for every lambda: nothing to decrease, exact agreement.
  const bool exact = std::all_of(e.begin(), e.end(), [](const MeanEstimate& m) { return m.mean == 0.0; });
  r.status = ((decreasing || exact) && e.back().mean <= bound) ? CheckStatus::pass : CheckStatus::fail;
  r.ensemble = settings.paths;
  r.seed = settings.seed;
  r.details = {{"model", model.name},
               {"drift", eq.coeffs.drift.scalar().name()},
               {"errors", rows},
               {"strictly_decreasing", decreasing},
               {"reference_sup_mean", ref.mean},
               {"relative_error", ref.mean > 0.0 ? e.back().mean / ref.mean : 0.0},
               {"relative_threshold", relative_threshold},
               {"T", settings.T},
               {"dt", settings.dt}};
  r.runtime_seconds = seconds_since(start);
  return r;
}

double markov_functional(const StateVector& x) { return x.size() == 0 ? 0.0 : std::tanh(x[0]); }

TheoremReport check_markov(const ModelDescriptor& model, const MarkovSettings& m) {
  const auto start = Clock::now();
  const Equation& eq = spectral(model, "check_markov");
  if (!(m.r < m.s && m.s < m.t)) throw ConfigurationError("check_markov: need r < s < t");
  if (m.direct_paths < 2 || m.outer_paths < 2 || m.inner_paths < 1) {
    throw ConfigurationError("check_markov: need >= 2 direct and outer paths and >= 1 inner path");
  }
  const std::size_t K = model.wiener_modes();
  const auto& nu = model.measure();
  const std::uint64_t direct_seed = derive_key(m.seed, {static_cast<std::uint64_t>(StreamTag::markov_direct)});
  const std::uint64_t outer_seed = derive_key(m.seed, {static_cast<std::uint64_t>(StreamTag::markov_outer)});

  std::vector<double> direct(m.direct_paths);
  parallel_for(
      m.direct_paths,
      [&](std::size_t i) {
        const NoiseSource noise(direct_seed, i, K, m.dt, nu);
        direct[i] = markov_functional(simulate_path(eq, model.x0, m.r, m.t, noise).final_state);
      },
      m.threads);

  std::vector<double> nested(m.outer_paths);
  std::vector<double> single(m.outer_paths);
  parallel_for(
      m.outer_paths,
      [&](std::size_t i) {
        const NoiseSource outer(outer_seed, i, K, m.dt, nu);
        const StateVector xs = simulate_path(eq, model.x0, m.r, m.s, outer).final_state;
        const std::uint64_t inner_seed =
            derive_key(m.seed, {static_cast<std::uint64_t>(StreamTag::markov_inner), static_cast<std::uint64_t>(i)});
        double acc = 0.0;
        for (std::size_t j = 0; j < m.inner_paths; ++j) {
          const NoiseSource inner(inner_seed, j, K, m.dt, nu);
          const double phi = markov_functional(simulate_path(eq, xs, m.s, m.t, inner).final_state);
          if (j == 0) single[i] = phi;
          acc += phi;
        }
        nested[i] = acc / static_cast<double>(m.inner_paths);
      },
      m.threads);

  std::vector<double> replay(m.replay_paths);
  parallel_for(
      m.replay_paths,
      [&](std::size_t i) {
        const NoiseSource noise(direct_seed, i, K, m.dt, nu);
        const StateVector whole = simulate_path(eq, model.x0, m.r, m.t, noise).final_state;
        const StateVector mid = simulate_path(eq, model.x0, m.r, m.s, noise).final_state;
        const StateVector split = simulate_path(eq, mid, m.s, m.t, noise).final_state;
        replay[i] = (whole - split).cwiseAbs().maxCoeff();
      },
      m.threads);

  // phi lies in [-1, 1]; differences below 1e-12 are roundoff between split and
  // whole stepping and must not count as distinct values (degenerate laws).
  constexpr double resolution = 1e-12;
  const auto snap = [](std::vector<double> v) {
    for (auto& x : v) x = std::round(x / resolution) * resolution;
    return v;
  };
  const MeanEstimate d = estimate_mean(direct);
  const MeanEstimate n = estimate_mean(nested);
  const double combined = std::hypot(d.stderr_, n.stderr_);
  const double gap = std::abs(d.mean - n.mean);
  const bool agree = gap <= 3.0 * combined + resolution;
  const KsResult ks = ks_two_sample(snap(direct), snap(single));
  const bool ks_ok = ks.p_value > m.ks_threshold;
  const double replay_max = replay.empty() ? 0.0 : *std::max_element(replay.begin(), replay.end());
  const bool replay_ok = replay_max <= m.replay_tolerance;

  TheoremReport r;
  r.check = "markov";
  r.lhs = gap;
  r.ci_half_width = 0.0;
  r.rhs = 3.0 * combined;
  r.status = (agree && ks_ok && replay_ok) ? CheckStatus::pass : CheckStatus::fail;
  r.ensemble = m.direct_paths;
  r.seed = m.seed;
  r.details = {{"model", model.name},
               {"functional", "tanh(x_1)"},
               {"r", m.r},
               {"s", m.s},
               {"t", m.t},
               {"dt", m.dt},
               {"direct_mean", d.mean},
               {"direct_stderr", d.stderr_},
               {"nested_mean", n.mean},
               {"nested_stderr", n.stderr_},
               {"outer_paths", m.outer_paths},
               {"inner_paths", m.inner_paths},
               {"means_agree", agree},
               {"ks_statistic", ks.statistic},
               {"ks_p_value", ks.p_value},
               {"ks_threshold", m.ks_threshold},
               {"replay_paths", m.replay_paths},
               {"replay_max_difference", replay_max},
               {"replay_tolerance", m.replay_tolerance}};
  r.runtime_seconds = seconds_since(start);
  return r;
}

namespace {

struct AuditItem {
  std::string name;
  double declared = 0.0;
  double worst = -std::numeric_limits<double>::infinity();
  nlohmann::json witness = nullptr;
  bool failed = false;

  void offer(double ratio, double slack, const std::function<nlohmann::json()>& witness_of) {
    if (!std::isfinite(ratio)) return;
    // The worst ratio fails whenever any sample fails, so its pair is the witness.
    if (ratio > worst) {
      worst = ratio;
      witness = witness_of();
    }
    failed = failed || ratio > declared + slack * (1.0 + std::abs(declared));
  }

  nlohmann::json json() const {
    return {{"constant", name},
            {"declared", declared},
            {"worst_ratio", std::isfinite(worst) ? worst : 0.0},
            {"pass", !failed},
            {"witness", failed ? witness : nlohmann::json(nullptr)}};
  }
};

nlohmann::json vector_json(const StateVector& x) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

TheoremReport audit_report(const std::vector<AuditItem>& items, std::size_t samples, double slack) {
  TheoremReport r;
  r.check = "hypothesis_audit";
  bool ok = true;
  double worst_excess = -std::numeric_limits<double>::infinity();
  nlohmann::json list = nlohmann::json::array();
  for (const auto& it : items) {
    ok = ok && !it.failed;
    if (std::isfinite(it.worst)) worst_excess = std::max(worst_excess, it.worst - it.declared);
    list.push_back(it.json());
  }
  r.lhs = std::isfinite(worst_excess) ? worst_excess : 0.0;
  r.rhs = 0.0;
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  r.ensemble = samples;
  r.details = {{"items", list}, {"slack", slack}};
  return r;
}

// Log-uniform radius in [10^lo, 10^hi].
double radius(Xoshiro256& rng, double lo, double hi) { return std::pow(10.0, lo + (hi - lo) * rng.uniform()); }

}  // namespace

TheoremReport audit_hypothesis(const Equation& eq, const DeclaredConstants& declared, std::size_t samples,
                               Xoshiro256& rng, double slack) {
  const auto start = Clock::now();
  const auto n = static_cast<Eigen::Index>(eq.flow.state_dimension());
  const double m2 = eq.noise.measure.second_moment();
  const std::size_t K = eq.coeffs.diffusion.is_zero() ? 0 : eq.coeffs.diffusion.modes;
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto direction = [&] {
    StateVector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
    return StateVector(z / std::sqrt(eq.flow.squared_norm(z)));
  };

  AuditItem M{"M", declared.M};
  AuditItem C{"C", declared.C};
  AuditItem D{"D", declared.D};
  for (std::size_t s = 0; s < samples; ++s) {
    const StateVector x = radius(rng, -3.0, 2.0) * direction();
    const StateVector y = x + radius(rng, -4.0, 2.0) * direction();
    const StateVector d = x - y;
    const double dd = eq.flow.squared_norm(d);
    if (!(dd > 0.0)) continue;
    const StateVector fx = eq.drift(x);
    const StateVector fy = eq.drift(y);
    const Eigen::VectorXd gx = diffusion_vector(eq, x, K);
    const Eigen::VectorXd gy = diffusion_vector(eq, y, K);
    const StateVector hx = eq.jump_map(x);
    const StateVector hy = eq.jump_map(y);
    const auto pair = [&] { return nlohmann::json{{"x", vector_json(x)}, {"y", vector_json(y)}}; };

    M.offer(eq.flow.inner(fx - fy, d) / dd, slack, pair);
    C.offer(((gx - gy).squaredNorm() + m2 * eq.flow.squared_norm(hx - hy)) / dd, slack, pair);
    D.offer((eq.flow.squared_norm(fx) + gx.squaredNorm() + m2 * eq.flow.squared_norm(hx)) /
                (1.0 + eq.flow.squared_norm(x)),
            slack, [&] { return nlohmann::json{{"x", vector_json(x)}}; });
  }
  TheoremReport r = audit_report({M, C, D}, samples, slack);
  r.runtime_seconds = seconds_since(start);
  return r;
}

TheoremReport audit_hypothesis(const DelayModel& model, const DeclaredConstants& declared, std::size_t samples,
                               Xoshiro256& rng, double slack) {
  const auto start = Clock::now();
  const double m2 = model.measure.second_moment();
  AuditItem M{"M", declared.M};
  AuditItem C{"C", declared.C};
  AuditItem D{"D", declared.D};
  for (std::size_t s = 0; s < samples; ++s) {
    const double x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * radius(rng, -3.0, 2.0);
    const double y = x + (rng.uniform() < 0.5 ? -1.0 : 1.0) * radius(rng, -4.0, 2.0);
    const double d = x - y;
    if (d == 0.0) continue;
    const auto pair = [&] { return nlohmann::json{{"x", {x}}, {"y", {y}}}; };
    const double fx = model.f(x), fy = model.f(y);
    const double gx = model.g(x), gy = model.g(y);
    const double kx = model.k(x), ky = model.k(y);
    M.offer((fx - fy) * d / (d * d), slack, pair);
    C.offer(((gx - gy) * (gx - gy) + m2 * (kx - ky) * (kx - ky)) / (d * d), slack, pair);
    D.offer((fx * fx + gx * gx + m2 * kx * kx) / (1.0 + x * x), slack,
            [&] { return nlohmann::json{{"x", {x}}}; });
  }
  TheoremReport r = audit_report({M, C, D}, samples, slack);
  r.runtime_seconds = seconds_since(start);
  return r;
}

TheoremReport audit_hypothesis(const ModelDescriptor& model, std::size_t samples, Xoshiro256& rng, double slack) {
  TheoremReport r = model.delay ? audit_hypothesis(*model.delay, model.declared, samples, rng, slack)
                                : audit_hypothesis(*model.equation, model.declared, samples, rng, slack);
  r.details["model"] = model.name;
  return r;
}

std::vector<ModelDescriptor> share_declared_constants(std::vector<ModelDescriptor> models) {
  if (models.empty()) return models;
  DeclaredConstants c = models.front().declared;
  for (const auto& m : models) {
    c.M = std::max(c.M, m.declared.M);
    c.C = std::max(c.C, m.declared.C);
    c.D = std::max(c.D, m.declared.D);
  }
  for (auto& m : models) {
    m.declared = c;
    if (m.equation) m.equation->coeffs.declared = c;
  }
  return models;
}

}  // namespace mildlevy
