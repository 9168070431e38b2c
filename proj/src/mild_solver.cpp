#include "mildlevy/mild_solver.hpp"

#include "mildlevy/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace mildlevy {

// ---------------------------------------------------------------------------
// Coefficients

DiffusionCoefficient DiffusionCoefficient::constant(double sigma, std::size_t modes) {
  DiffusionCoefficient g;
  g.kind = Kind::constant;
  g.sigma = sigma;
  g.modes = modes;
  return g;
}

DiffusionCoefficient DiffusionCoefficient::linear(double sigma, std::size_t modes) {
  DiffusionCoefficient g;
  g.kind = Kind::linear;
  g.sigma = sigma;
  g.modes = modes;
  return g;
}

DiffusionCoefficient DiffusionCoefficient::nemitsky(double sigma, ScalarFunction h,
                                                    std::shared_ptr<const SineGrid> grid, std::size_t modes) {
  if (!grid) throw ContractViolation("DiffusionCoefficient::nemitsky: grid required");
  if (!std::isfinite(h.lipschitz_constant())) {
    throw ConfigurationError("diffusion: " + h.name() + " is not Lipschitz");
  }
  DiffusionCoefficient g;
  g.kind = Kind::nemitsky;
  g.sigma = sigma;
  g.h = std::move(h);
  g.grid = std::move(grid);
  g.modes = modes;
  return g;
}

void DiffusionCoefficient::multipliers(const StateVector& source, Eigen::VectorXd& c, Eigen::VectorXd& values) const {
  const auto K = static_cast<Eigen::Index>(modes);
  if (kind != Kind::none && K > source.size()) {
    throw ContractViolation("diffusion: more noise modes than state modes");
  }
  switch (kind) {
    case Kind::none:
      c.setZero(K);
      return;
    case Kind::constant:
      c.setConstant(K, sigma);
      return;
    case Kind::linear:
      c = sigma * source.head(K);
      return;
    case Kind::nemitsky: {
      grid->forward_into(source, values);
      for (Eigen::Index g = 0; g < values.size(); ++g) values[g] = h(values[g]);
      StateVector projected(source.size());
      grid->inverse_into(values, projected);
      c = sigma * projected.head(K);
      return;
    }
  }
}

Eigen::VectorXd DiffusionCoefficient::multipliers(const StateVector& source) const {
  Eigen::VectorXd c;
  Eigen::VectorXd values;
  multipliers(source, c, values);
  return c;
}

double DiffusionCoefficient::lipschitz_squared() const {
  switch (kind) {
    case Kind::none:
    case Kind::constant:
      return 0.0;
    case Kind::linear:
      return sigma * sigma;
    case Kind::nemitsky: {
      const double L = h.lipschitz_constant();
      return sigma * sigma * L * L;
    }
  }
  return 0.0;
}

std::pair<double, double> DiffusionCoefficient::growth() const {
  const double s2 = sigma * sigma;
  switch (kind) {
    case Kind::none:
      return {0.0, 0.0};
    case Kind::constant:
      return {static_cast<double>(modes) * s2, 0.0};
    case Kind::linear:
      return {0.0, s2};
    case Kind::nemitsky:
      return {s2 * h.growth_constant(), s2 * h.growth_constant()};
  }
  return {0.0, 0.0};
}

JumpCoefficient JumpCoefficient::linear(double scale) {
  JumpCoefficient k;
  k.kind = Kind::linear;
  k.scale = scale;
  return k;
}

JumpCoefficient JumpCoefficient::nemitsky(ScalarFunction h, std::shared_ptr<const SineGrid> grid) {
  if (!grid) throw ContractViolation("JumpCoefficient::nemitsky: grid required");
  if (!std::isfinite(h.lipschitz_constant())) {
    throw ConfigurationError("jump coefficient: " + h.name() + " is not Lipschitz");
  }
  JumpCoefficient k;
  k.kind = Kind::nemitsky;
  k.scale = 1.0;
  k.h = std::move(h);
  k.grid = std::move(grid);
  return k;
}

void JumpCoefficient::map(const StateVector& source, StateVector& out, Eigen::VectorXd& values) const {
  switch (kind) {
    case Kind::none:
      out.setZero(source.size());
      return;
    case Kind::linear:
      out = scale * source;
      return;
    case Kind::nemitsky:
      grid->forward_into(source, values);
      for (Eigen::Index g = 0; g < values.size(); ++g) values[g] = h(values[g]);
      out.resize(source.size());
      grid->inverse_into(values, out);
      return;
  }
}

StateVector JumpCoefficient::map(const StateVector& source) const {
  StateVector out;
  Eigen::VectorXd values;
  map(source, out, values);
  return out;
}

double JumpCoefficient::lipschitz_squared() const {
  switch (kind) {
    case Kind::none:
      return 0.0;
    case Kind::linear:
      return scale * scale;
    case Kind::nemitsky: {
      const double L = h.lipschitz_constant();
      return L * L;
    }
  }
  return 0.0;
}

std::pair<double, double> JumpCoefficient::growth() const {
  switch (kind) {
    case Kind::none:
      return {0.0, 0.0};
    case Kind::linear:
      return {0.0, scale * scale};
    case Kind::nemitsky:
      return {h.growth_constant(), h.growth_constant()};
  }
  return {0.0, 0.0};
}

// ---------------------------------------------------------------------------
// Equation

namespace {

bool is_wave(const Equation& eq) { return eq.flow.layout() == Layout::wave; }

Eigen::Index modes_of(const Equation& eq) { return static_cast<Eigen::Index>(eq.flow.modes()); }

// Position (or whole state) read by g and k.
Eigen::Ref<const StateVector> coefficient_source(const Equation& eq, const StateVector& x) {
  return is_wave(eq) ? Eigen::Ref<const StateVector>(x.head(modes_of(eq))) : Eigen::Ref<const StateVector>(x);
}

// Component the drift reads; the target of f, g and k uses the same offset.
Eigen::Ref<const StateVector> drift_source(const Equation& eq, const StateVector& x) {
  return is_wave(eq) ? Eigen::Ref<const StateVector>(x.tail(modes_of(eq))) : Eigen::Ref<const StateVector>(x);
}

Eigen::Index target_offset(const Equation& eq) { return is_wave(eq) ? modes_of(eq) : 0; }

}  // namespace

DeclaredConstants Equation::derived_constants() const {
  const double m2 = noise.measure.second_moment();
  const auto [ga, gb] = coeffs.diffusion.growth();
  const auto [ka, kb] = coeffs.jump.growth();
  double drift_growth = coeffs.drift.growth_constant();
  if (coeffs.drift.lift() == Lift::diagonal) {
    const double J = static_cast<double>(flow.modes());
    const double eta = coeffs.drift.eta();
    drift_growth = eta == 0.0 ? J * coeffs.drift.scalar().growth_constant()
                              : 2.0 * J * coeffs.drift.scalar().growth_constant() + 2.0 * eta * eta;
  }
  const double lip = coeffs.diffusion.lipschitz_squared() + m2 * coeffs.jump.lipschitz_squared();

  DeclaredConstants c;
  if (flow.layout() == Layout::plain) {
    c.M = coeffs.drift.semimonotone_constant();
    c.C = lip;
    c.D = std::max(drift_growth + ga + m2 * ka, drift_growth + gb + m2 * kb);
  } else {
    // ||u||_{L2}^2 <= ||x||_E^2 / (lambda_1 + kappa)
    const double s = 1.0 / flow.basis().decay_rate(0);
    c.M = std::max(coeffs.drift.semimonotone_constant(), 0.0);
    c.C = lip * s;
    c.D = std::max(drift_growth + ga + m2 * ka, drift_growth + s * (gb + m2 * kb));
  }
  return c;
}

StateVector Equation::drift(const StateVector& x) const {
  StateVector out = StateVector::Zero(x.size());
  if (coeffs.drift.is_zero()) return out;
  const StateVector src = drift_source(*this, x);
  out.segment(target_offset(*this), modes_of(*this)) = coeffs.drift.apply(src);
  return out;
}

double Equation::diffusion_hs_squared(const StateVector& x) const {
  if (coeffs.diffusion.is_zero()) return 0.0;
  const StateVector src = coefficient_source(*this, x);
  return coeffs.diffusion.multipliers(src).squaredNorm();
}

StateVector Equation::jump_map(const StateVector& x) const {
  StateVector out = StateVector::Zero(x.size());
  if (coeffs.jump.is_zero()) return out;
  const StateVector src = coefficient_source(*this, x);
  out.segment(target_offset(*this), modes_of(*this)) = coeffs.jump.map(src);
  return out;
}

// ---------------------------------------------------------------------------
// Stepping

void StepTrace::clear() {
  times.clear();
  is_jump.clear();
  states.clear();
  pre_states.clear();
  events.clear();
  increments.clear();
}

namespace {

class Stepper {
 public:
  Stepper(const Equation& eq, const StepOptions& options, double dt)
      : eq_(eq), options_(options), full_(eq.flow.propagator(dt)) {
    if (eq.noise.wiener_modes > eq.flow.modes() && !eq.coeffs.diffusion.is_zero()) {
      throw ContractViolation("step: more Wiener modes than state modes");
    }
  }

  void advance(StateVector& x, const NoiseIncrement& inc, StepTrace& trace) {
    trace.clear();
    const std::size_t m = inc.jumps.size();
    double s = inc.t0;
    wrem_ = inc.wiener;
    for (std::size_t i = 0; i <= m; ++i) {
      const double p = i < m ? inc.jumps[i].time : inc.t1;
      const double h = p - s;
      const std::size_t index = trace.times.size();
      if (h > 0.0) {
        if (i == m) {
          dw_ = wrem_;
        } else if (wrem_.size() > 0) {
          const double span = inc.t1 - s;
          const double mean_factor = h / span;
          const double sd = std::sqrt(h * (inc.t1 - p) / span);
          dw_ = mean_factor * wrem_ + sd * inc.bridge.col(static_cast<Eigen::Index>(i));
        } else {
          dw_.resize(0);
        }
        if (wrem_.size() > 0) wrem_ -= dw_;
        continuous(x, s, h, index, trace);
      }
      if (i < m) {
        trace.pre_states.push_back(x);
        jump(x, p, inc.jumps[i].mark, index, trace);
        trace.times.push_back(p);
        trace.is_jump.push_back(1);
        trace.states.push_back(x);
      } else {
        trace.times.push_back(p);
        trace.is_jump.push_back(0);
        trace.states.push_back(x);
        trace.pre_states.push_back(x);
      }
      check_bound(x, p);
      s = p;
    }
  }

 private:
  void continuous(StateVector& x, double s, double h, std::size_t index, StepTrace& trace) {
    const Eigen::Index J = modes_of(eq_);
    const Eigen::Index off = target_offset(eq_);
    dz_.setZero(x.size());

    const auto& drift = eq_.coeffs.drift;
    if (!drift.is_zero()) {
      src_ = drift_source(eq_, x);
      if (options_.scheme == Scheme::exponential_euler) {
        drift.apply_into(src_, fx_, values_);
        dz_.segment(off, J) += h * fx_;
      } else {
        implicit_drift(src_, h);
        dz_.segment(off, J) += fx_;
      }
    }

    const auto& g = eq_.coeffs.diffusion;
    const bool has_jump = !eq_.coeffs.jump.is_zero() && eq_.noise.measure.first_moment() != 0.0;
    if ((!g.is_zero() && dw_.size() > 0) || has_jump) {
      src_ = coefficient_source(eq_, x);
      if (!g.is_zero() && dw_.size() > 0) {
        g.multipliers(src_, c_, values_);
        const Eigen::Index K = std::min<Eigen::Index>(c_.size(), dw_.size());
        dz_.segment(off, K) += c_.head(K).cwiseProduct(dw_.head(K));
      }
      if (has_jump) {
        eq_.coeffs.jump.map(src_, hx_, values_);
        dz_.segment(off, J) -= (h * eq_.noise.measure.first_moment()) * hx_;
      }
    }

    record_event(x, s, index, trace);
    x += dz_;
    if (std::abs(h - full_.t) <= 1e-12 * full_.t) {
      eq_.flow.apply(full_, x);
    } else {
      eq_.flow.apply(eq_.flow.propagator(h), x);
    }
  }

  // Backward-Euler drift substep: pointwise resolvent on the grid (or per
  // coefficient), returned as an increment in fx_.
  void implicit_drift(const StateVector& src, double h) {
    const auto& drift = eq_.coeffs.drift;
    const auto& f = drift.scalar();
    if (drift.lift() == Lift::diagonal) {
      fx_.resize(src.size());
      for (Eigen::Index i = 0; i < src.size(); ++i) fx_[i] = resolvent(f, h, src[i]) - src[i];
    } else {
      drift.grid()->forward_into(src, values_);
      for (Eigen::Index g = 0; g < values_.size(); ++g) values_[g] = resolvent(f, h, values_[g]) - values_[g];
      fx_.resize(src.size());
      drift.grid()->inverse_into(values_, fx_);
    }
    if (drift.eta() != 0.0) fx_ += (h * drift.eta()) * src;
  }

  void jump(StateVector& x, double t, double mark, std::size_t index, StepTrace& trace) {
    const Eigen::Index J = modes_of(eq_);
    const Eigen::Index off = target_offset(eq_);
    dz_.setZero(x.size());
    if (!eq_.coeffs.jump.is_zero()) {
      src_ = coefficient_source(eq_, x);
      eq_.coeffs.jump.map(src_, hx_, values_);
      dz_.segment(off, J) = mark * hx_;
    }
    record_event(x, t, index, trace);
    x += dz_;
  }

  void record_event(const StateVector& x, double s, std::size_t index, StepTrace& trace) {
    trace.events.push_back({s, eq_.flow.inner(x, dz_), eq_.flow.squared_norm(dz_), index});
    trace.increments.push_back(dz_);
  }

  void check_bound(const StateVector& x, double t) const {
    const double sq = eq_.flow.squared_norm(x);
    if (!std::isfinite(sq) || sq > options_.blowup_bound * options_.blowup_bound) {
      throw DivergenceError(t, std::sqrt(sq));
    }
  }

  const Equation& eq_;
  StepOptions options_;
  Propagator full_;
  StateVector dz_, src_, fx_, hx_;
  Eigen::VectorXd values_, c_, dw_, wrem_;
};

void require_shared_noise(const Equation& eq, const NoiseSource& noise) {
  const auto& a = eq.noise.measure;
  const auto& b = noise.measure();
  if (a.total_rate() != b.total_rate() || a.first_moment() != b.first_moment() ||
      a.second_moment() != b.second_moment()) {
    throw ContractViolation("simulate: equation and noise source use different Levy measures");
  }
  if (!eq.coeffs.diffusion.is_zero() && noise.wiener_modes() < eq.coeffs.diffusion.modes) {
    throw ContractViolation("simulate: noise source has fewer Wiener modes than the diffusion coefficient");
  }
}

std::int64_t grid_index(double t, double dt, const char* what) {
  const double r = t / dt;
  const auto n = static_cast<std::int64_t>(std::llround(r));
  if (std::abs(r - static_cast<double>(n)) > 1e-7) {
    throw ContractViolation(std::string(what) + " is not a multiple of dt");
  }
  return n;
}

class Recorder {
 public:
  Recorder(PathRecord& rec, const LinearFlow* flow, RecordLevel level) : rec_(rec), flow_(flow), level_(level) {}

  void start(double t, const StateVector& x, double sqnorm) {
    rec_.times.push_back(t);
    rec_.is_jump.push_back(0);
    rec_.squared_norms.push_back(sqnorm);
    rec_.qv.push_back(0.0);
    rec_.initial_state = x;
    if (level_ == RecordLevel::full) {
      rec_.states.push_back(x);
      rec_.pre_states.push_back(x);
    }
  }

  void append(const StepTrace& trace) {
    const std::size_t base = rec_.times.size();
    std::size_t e = 0;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
      double qv = rec_.qv.back();
      for (; e < trace.events.size() && trace.events[e].first_index == i; ++e) {
        ItoEvent ev = trace.events[e];
        ev.first_index += base;
        rec_.events.push_back(ev);
        qv += ev.squared;
        if (level_ == RecordLevel::full) rec_.increments.push_back(trace.increments[e]);
      }
      rec_.times.push_back(trace.times[i]);
      rec_.is_jump.push_back(trace.is_jump[i]);
      rec_.squared_norms.push_back(flow_ ? flow_->squared_norm(trace.states[i]) : trace.states[i].squaredNorm());
      rec_.qv.push_back(qv);
      if (level_ == RecordLevel::full) {
        rec_.states.push_back(trace.states[i]);
        rec_.pre_states.push_back(trace.pre_states[i]);
      }
    }
  }

 private:
  PathRecord& rec_;
  const LinearFlow* flow_;
  RecordLevel level_;
};

}  // namespace

StateVector step(const Equation& eq, const StateVector& x, const NoiseIncrement& increment,
                 const StepOptions& options, StepTrace* trace) {
  if (!(increment.t1 > increment.t0)) throw ContractViolation("step: need t1 > t0");
  if (static_cast<std::size_t>(x.size()) != eq.flow.state_dimension()) {
    throw ContractViolation("step: state dimension does not match the equation");
  }
  Stepper stepper(eq, options, increment.t1 - increment.t0);
  StepTrace local;
  StateVector out = x;
  stepper.advance(out, increment, trace ? *trace : local);
  return out;
}

double PathRecord::sup_squared_norm() const {
  double s = 0.0;
  for (const double v : squared_norms) s = std::max(s, v);
  return s;
}

std::size_t PathRecord::jump_count() const {
  return static_cast<std::size_t>(std::count(is_jump.begin(), is_jump.end(), 1));
}

PathRecord simulate_path(const Equation& eq, const StateVector& x0, double t_start, double t_end,
                         const NoiseSource& noise, const SimulationOptions& options) {
  if (!(t_end > t_start)) throw ContractViolation("simulate_path: need T > t_start");
  if (static_cast<std::size_t>(x0.size()) != eq.flow.state_dimension()) {
    throw ContractViolation("simulate_path: initial state dimension does not match the equation");
  }
  require_shared_noise(eq, noise);
  const double dt = noise.dt();
  const auto n0 = grid_index(t_start, dt, "simulate_path: start time");
  const auto n1 = grid_index(t_end, dt, "simulate_path: horizon");

  PathRecord rec;
  rec.alpha = eq.flow.growth_bound();
  const auto steps = static_cast<std::size_t>(n1 - n0);
  rec.times.reserve(steps + 1);
  rec.squared_norms.reserve(steps + 1);
  rec.qv.reserve(steps + 1);
  rec.events.reserve(steps + 1);
  Recorder recorder(rec, &eq.flow, options.record);
  recorder.start(t_start, x0, eq.flow.squared_norm(x0));

  Stepper stepper(eq, options.step, dt);
  StepTrace trace;
  StateVector x = x0;
  for (auto n = n0; n < n1; ++n) {
    stepper.advance(x, noise.interval(n), trace);
    recorder.append(trace);
  }
  rec.final_state = std::move(x);
  return rec;
}

PathRecord simulate_path(const Equation& eq, const StateVector& x0, double T, const NoiseSource& noise,
                         const SimulationOptions& options) {
  return simulate_path(eq, x0, 0.0, T, noise, options);
}

CoupledRecord simulate_coupled_pair(const Equation& first, const Equation& second, const StateVector& x0_first,
                                    const StateVector& x0_second, double T, const NoiseSource& noise,
                                    const SimulationOptions& options) {
  if (!(first.coeffs.declared == second.coeffs.declared)) {
    throw ConfigurationError("simulate_coupled_pair: coefficient sets must declare the same M, C, D");
  }
  if (first.flow.state_dimension() != second.flow.state_dimension()) {
    throw ContractViolation("simulate_coupled_pair: state dimensions differ");
  }
  if (!(T > 0.0)) throw ContractViolation("simulate_coupled_pair: need T > 0");
  require_shared_noise(first, noise);
  require_shared_noise(second, noise);
  const double dt = noise.dt();
  const auto n1 = grid_index(T, dt, "simulate_coupled_pair: horizon");

  CoupledRecord out;
  const double alpha = first.flow.growth_bound();
  out.first.alpha = alpha;
  out.second.alpha = second.flow.growth_bound();
  Recorder rec_a(out.first, &first.flow, options.record);
  Recorder rec_b(out.second, &second.flow, options.record);
  rec_a.start(0.0, x0_first, first.flow.squared_norm(x0_first));
  rec_b.start(0.0, x0_second, second.flow.squared_norm(x0_second));

  const auto diff_at = [&](double t, const StateVector& a, const StateVector& b) {
    const double d = first.flow.squared_norm(a - b);
    out.difference_squared.push_back(d);
    out.sup_difference = std::max(out.sup_difference, d);
    out.sup_weighted = std::max(out.sup_weighted, std::exp(-2.0 * alpha * t) * d);
  };
  diff_at(0.0, x0_first, x0_second);

  Stepper step_a(first, options.step, dt);
  Stepper step_b(second, options.step, dt);
  StepTrace trace_a;
  StepTrace trace_b;
  StateVector xa = x0_first;
  StateVector xb = x0_second;
  for (std::int64_t n = 0; n < n1; ++n) {
    const NoiseIncrement inc = noise.interval(n);
    step_a.advance(xa, inc, trace_a);
    step_b.advance(xb, inc, trace_b);
    rec_a.append(trace_a);
    rec_b.append(trace_b);
    for (std::size_t i = 0; i < trace_a.times.size(); ++i) diff_at(trace_a.times[i], trace_a.states[i], trace_b.states[i]);
  }
  out.first.final_state = std::move(xa);
  out.second.final_state = std::move(xb);
  return out;
}

// ---------------------------------------------------------------------------
// Delay equation

DeclaredConstants DelayModel::scalar_constants() const {
  const double m2 = measure.second_moment();
  const double Lg = g.lipschitz_constant();
  const double Lk = k.lipschitz_constant();
  DeclaredConstants c;
  c.M = f.semimonotone_constant();
  c.C = Lg * Lg + m2 * Lk * Lk;
  c.D = f.growth_constant() + g.growth_constant() + m2 * k.growth_constant();
  return c;
}

double DelayModel::mu_variation() const {
  double v = std::abs(density) * h;
  for (const auto& [theta, w] : point_masses) v += std::abs(w);
  return v;
}

PathRecord simulate_delay_path(const DelayModel& model, double T, const NoiseSource& noise,
                               const SimulationOptions& options) {
  if (!(model.h > 0.0)) throw ContractViolation("simulate_delay_path: delay h must be positive");
  if (!(T > 0.0)) throw ContractViolation("simulate_delay_path: need T > 0");
  if (!model.psi) throw ContractViolation("simulate_delay_path: initial history missing");
  const double dt = noise.dt();
  const auto H = grid_index(model.h, dt, "simulate_delay_path: delay h");
  const auto N = grid_index(T, dt, "simulate_delay_path: horizon");
  const bool has_g = model.g.kind() != ScalarFunction::Kind::zero;
  if (has_g && noise.wiener_modes() < 1) throw ContractViolation("simulate_delay_path: diffusion needs a Wiener mode");
  for (const auto& [theta, w] : model.point_masses) {
    if (theta > 0.0 || theta < -model.h) throw ContractViolation("simulate_delay_path: point mass outside [-h, 0]");
  }

  // values[i] = x(-h + i dt) on the uniform grid.
  std::vector<double> values(static_cast<std::size_t>(H + N + 1));
  for (std::int64_t i = 0; i <= H; ++i) values[static_cast<std::size_t>(i)] = model.psi(-model.h + static_cast<double>(i) * dt);

  const double m1 = model.measure.first_moment();
  const auto delay_integral = [&](std::int64_t now) {
    double acc = 0.0;
    if (model.density != 0.0) {
      const auto first = values.begin() + (now - H);
      const auto last = values.begin() + now + 1;
      double sum = 0.0;
      for (auto it = first; it != last; ++it) sum += *it;
      acc += model.density * dt * (sum - 0.5 * (*first + values[static_cast<std::size_t>(now)]));
    }
    for (const auto& [theta, w] : model.point_masses) {
      const double pos = (theta + model.h) / dt;
      auto lo = static_cast<std::int64_t>(std::floor(pos));
      lo = std::clamp<std::int64_t>(lo, 0, H);
      const double frac = pos - static_cast<double>(lo);
      const auto i0 = static_cast<std::size_t>(now - H + lo);
      const double v = lo == H ? values[i0] : (1.0 - frac) * values[i0] + frac * values[i0 + 1];
      acc += w * v;
    }
    return acc;
  };

  PathRecord rec;
  rec.alpha = 0.0;
  StateVector x(1);
  x[0] = values[static_cast<std::size_t>(H)];
  Recorder recorder(rec, nullptr, options.record);
  recorder.start(0.0, x, x[0] * x[0]);
  StepTrace trace;
  const auto bound2 = options.step.blowup_bound * options.step.blowup_bound;

  for (std::int64_t n = 0; n < N; ++n) {
    const NoiseIncrement inc = noise.interval(n);
    trace.clear();
    const double memory = delay_integral(H + n);
    double xv = x[0];
    double s = inc.t0;
    double wrem = has_g ? inc.wiener[0] : 0.0;
    const std::size_t m = inc.jumps.size();
    for (std::size_t i = 0; i <= m; ++i) {
      const double p = i < m ? inc.jumps[i].time : inc.t1;
      const double hstep = p - s;
      const std::size_t index = trace.times.size();
      if (hstep > 0.0) {
        double dw = 0.0;
        if (has_g) {
          if (i == m) {
            dw = wrem;
          } else {
            const double span = inc.t1 - s;
            dw = wrem * hstep / span + std::sqrt(hstep * (inc.t1 - p) / span) * inc.bridge(0, static_cast<Eigen::Index>(i));
          }
          wrem -= dw;
        }
        double drift = memory + model.f(xv);
        if (options.step.scheme == Scheme::semi_implicit) {
          drift = memory + (resolvent(model.f, hstep, xv) - xv) / hstep;
        }
        const double dz = drift * hstep + model.g(xv) * dw - m1 * model.k(xv) * hstep;
        trace.events.push_back({s, xv * dz, dz * dz, index});
        trace.increments.push_back(StateVector::Constant(1, dz));
        xv += dz;
      }
      StateVector pre = StateVector::Constant(1, xv);
      if (i < m) {
        const double dz = inc.jumps[i].mark * model.k(xv);
        trace.events.push_back({p, xv * dz, dz * dz, index});
        trace.increments.push_back(StateVector::Constant(1, dz));
        xv += dz;
      }
      trace.times.push_back(p);
      trace.is_jump.push_back(i < m ? 1 : 0);
      trace.pre_states.push_back(std::move(pre));
      trace.states.push_back(StateVector::Constant(1, xv));
      if (!std::isfinite(xv) || xv * xv > bound2) throw DivergenceError(p, std::abs(xv), "delay equation");
      s = p;
    }
    x[0] = xv;
    values[static_cast<std::size_t>(H + n + 1)] = xv;
    recorder.append(trace);
  }
  rec.final_state = x;
  return rec;
}

// ---------------------------------------------------------------------------
// CSV export

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string path_csv(const PathRecord& record) {
  if (!record.has_states()) throw ContractViolation("path_csv: record has no states (use RecordLevel::full)");
  const auto n = static_cast<std::size_t>(record.states.front().size());
  std::string out = "time,is_jump";
  for (std::size_t j = 1; j <= n; ++j) out += ",coefficient_" + std::to_string(j);
  for (std::size_t j = 1; j <= n; ++j) out += ",pre_jump_coefficient_" + std::to_string(j);
  out += ",qv\n";
  for (std::size_t i = 0; i < record.times.size(); ++i) {
    append_number(out, record.times[i]);
    out += record.is_jump[i] ? ",1" : ",0";
    for (Eigen::Index j = 0; j < record.states[i].size(); ++j) {
      out += ',';
      append_number(out, record.states[i][j]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      out += ',';
      if (record.is_jump[i]) append_number(out, record.pre_states[i][static_cast<Eigen::Index>(j)]);
    }
    out += ',';
    append_number(out, record.qv[i]);
    out += '\n';
  }
  return out;
}

void write_path_csv(const PathRecord& record, const std::string& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + file + " for writing");
  os << path_csv(record);
}

}  // namespace mildlevy
