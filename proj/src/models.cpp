#include "mildlevy/models.hpp"

#include "mildlevy/errors.hpp"

#include <cmath>
#include <numbers>

namespace mildlevy {

namespace {

DiffusionCoefficient make_diffusion(const DiffusionSpec& spec, std::size_t modes,
                                    const std::shared_ptr<const SineGrid>& grid) {
  const std::size_t K = spec.modes == 0 ? modes : spec.modes;
  if (K > modes) throw ConfigurationError("diffusion: more noise modes than state modes");
  switch (spec.kind) {
    case DiffusionCoefficient::Kind::none:
      return DiffusionCoefficient::none();
    case DiffusionCoefficient::Kind::constant:
      return DiffusionCoefficient::constant(spec.sigma, K);
    case DiffusionCoefficient::Kind::linear:
      return DiffusionCoefficient::linear(spec.sigma, K);
    case DiffusionCoefficient::Kind::nemitsky:
      return DiffusionCoefficient::nemitsky(spec.sigma, spec.h, grid, K);
  }
  return DiffusionCoefficient::none();
}

JumpCoefficient make_jump(const JumpSpec& spec, const std::shared_ptr<const SineGrid>& grid) {
  switch (spec.kind) {
    case JumpCoefficient::Kind::none:
      return JumpCoefficient::none();
    case JumpCoefficient::Kind::linear:
      return JumpCoefficient::linear(spec.scale);
    case JumpCoefficient::Kind::nemitsky:
      return JumpCoefficient::nemitsky(spec.h, grid);
  }
  return JumpCoefficient::none();
}

StateVector unit_mode(std::size_t n) {
  StateVector x = StateVector::Zero(static_cast<Eigen::Index>(n));
  x[0] = 1.0;
  return x;
}

void finish(ModelDescriptor& m, const std::optional<DeclaredConstants>& declared) {
  m.declared = declared ? *declared : m.equation->derived_constants();
  m.equation->coeffs.declared = m.declared;
  m.alpha = m.equation->flow.growth_bound();
}

}  // namespace

std::size_t ModelDescriptor::wiener_modes() const {
  if (delay) return delay->g.kind() == ScalarFunction::Kind::zero ? 0 : 1;
  return equation->coeffs.diffusion.is_zero() ? 0 : equation->coeffs.diffusion.modes;
}

const LevyMeasure& ModelDescriptor::measure() const { return delay ? delay->measure : equation->noise.measure; }

ModelDescriptor build_reaction_diffusion(const ReactionDiffusionParams& p) {
  if (!p.f.is_decreasing()) {
    throw ConfigurationError("reaction_diffusion: drift " + p.f.name() + " must be decreasing (use eta for a linear shift)");
  }
  auto grid = make_grid(p.modes, p.grid_points);
  SpectralBasis basis(p.modes, p.kappa);

  Coefficients coeffs;
  coeffs.drift = DriftOperator(p.f, Lift::grid, grid, p.eta);
  coeffs.diffusion = make_diffusion(p.diffusion, p.modes, grid);
  coeffs.jump = make_jump(p.jump, grid);

  NoiseModel noise{coeffs.diffusion.is_zero() ? 0 : coeffs.diffusion.modes, p.measure};
  ModelDescriptor m;
  m.name = "reaction_diffusion";
  m.equation = Equation{LinearFlow(basis, Layout::plain), coeffs, noise};
  m.x0 = p.x0.size() == 0 ? unit_mode(p.modes) : p.x0;
  if (static_cast<std::size_t>(m.x0.size()) != p.modes) throw ConfigurationError("reaction_diffusion: x0 has wrong length");
  finish(m, p.declared);
  return m;
}

ModelDescriptor build_wave_cbrt(const WaveParams& p) {
  if (!p.f.is_decreasing()) throw ConfigurationError("wave_cbrt: damping " + p.f.name() + " must be decreasing");
  auto grid = make_grid(p.modes, p.grid_points);
  SpectralBasis basis(p.modes, p.kappa);

  Coefficients coeffs;
  coeffs.drift = DriftOperator(p.f, Lift::grid, grid, 0.0);
  if (p.sigma != 0.0) {
    const std::size_t K = p.wiener_modes == 0 ? p.modes : p.wiener_modes;
    if (K > p.modes) throw ConfigurationError("wave_cbrt: more noise modes than state modes");
    coeffs.diffusion = DiffusionCoefficient::linear(p.sigma, K);
  }
  if (p.jump_scale != 0.0) coeffs.jump = JumpCoefficient::linear(p.jump_scale);

  NoiseModel noise{coeffs.diffusion.is_zero() ? 0 : coeffs.diffusion.modes, p.measure};
  ModelDescriptor m;
  m.name = "wave_cbrt";
  m.equation = Equation{LinearFlow(basis, Layout::wave), coeffs, noise};
  const auto J = static_cast<Eigen::Index>(p.modes);
  const StateVector u0 = p.u0.size() == 0 ? unit_mode(p.modes) : p.u0;
  const StateVector v0 = p.v0.size() == 0 ? StateVector::Zero(J) : p.v0;
  if (u0.size() != J || v0.size() != J) throw ConfigurationError("wave_cbrt: u0/v0 have wrong length");
  m.x0.resize(2 * J);
  m.x0 << u0, v0;
  finish(m, p.declared);
  return m;
}

ModelDescriptor build_delay(const DelayParams& p) {
  if (!(p.h > 0.0)) throw ConfigurationError("delay: h must be positive");
  if (!std::isfinite(p.g.lipschitz_constant()) || !std::isfinite(p.k.lipschitz_constant())) {
    throw ConfigurationError("delay: g and k must be Lipschitz");
  }
  DelayModel d;
  d.h = p.h;
  d.point_masses = p.point_masses;
  d.density = p.density;
  d.f = p.f;
  d.g = p.g;
  d.k = p.k;
  d.measure = p.measure;
  if (!std::isfinite(d.mu_variation())) throw ConfigurationError("delay: mu must have finite variation");
  for (const auto& [theta, w] : d.point_masses) {
    if (!(theta <= 0.0 && theta >= -p.h)) throw ConfigurationError("delay: point mass outside [-h, 0]");
  }
  if (p.history == DelayParams::History::sine) {
    d.psi = [](double theta) { return std::sin(std::numbers::pi * theta); };
  } else {
    const double c = p.history_value;
    d.psi = [c](double) { return c; };
  }

  ModelDescriptor m;
  m.name = "delay";
  m.x0 = StateVector::Constant(1, d.psi(0.0));
  m.declared = p.declared ? *p.declared : d.scalar_constants();
  m.alpha = 0.0;
  m.delay = std::move(d);
  return m;
}

ModelDescriptor build_scalar_toy(const ScalarToyParams& p) {
  Coefficients coeffs;
  coeffs.drift = DriftOperator(p.f, Lift::diagonal, nullptr, 0.0);
  if (p.sigma != 0.0) coeffs.diffusion = DiffusionCoefficient::linear(p.sigma, 1);
  if (p.measure.total_rate() > 0.0) coeffs.jump = JumpCoefficient::linear(1.0);

  ModelDescriptor m;
  m.name = "scalar_toy";
  m.equation = Equation{LinearFlow(SpectralBasis::scalar(p.a), Layout::plain), coeffs,
                        NoiseModel{p.sigma != 0.0 ? 1u : 0u, p.measure}};
  m.x0 = StateVector::Constant(1, p.x0);
  finish(m, p.declared);
  return m;
}

const std::vector<std::string>& model_catalog() {
  static const std::vector<std::string> names = {"reaction_diffusion", "wave_cbrt", "delay", "scalar_toy"};
  return names;
}

double scalar_toy_mean(const ScalarToyParams& p, double T) { return p.x0 * std::exp(p.a * T); }

double scalar_toy_second_moment(const ScalarToyParams& p, double T) {
  return p.x0 * p.x0 * std::exp((2.0 * p.a + p.sigma * p.sigma + p.measure.second_moment()) * T);
}

ModelDescriptor perturb(const ModelDescriptor& model, const Perturbation& p, bool keep_declared) {
  if (!model.equation) throw ConfigurationError("perturb: " + model.name + " is not a spectral model");
  ModelDescriptor out = model;
  Coefficients& c = out.equation->coeffs;
  if (p.drift_shift != 0.0) c.drift = c.drift.with_scalar(ScalarFunction::shifted(c.drift.scalar(), p.drift_shift));
  if (p.diffusion_scale != 1.0) c.diffusion.sigma *= p.diffusion_scale;
  if (p.jump_scale != 1.0) {
    if (c.jump.kind == JumpCoefficient::Kind::nemitsky) {
      throw ConfigurationError("perturb: jump_scale needs a linear jump coefficient");
    }
    c.jump.scale *= p.jump_scale;
  }
  if (p.x0_shift != 0.0) out.x0[0] += p.x0_shift;
  if (!keep_declared) {
    out.declared = out.equation->derived_constants();
    c.declared = out.declared;
  }
  return out;
}

PathRecord simulate_model(const ModelDescriptor& model, double T, const NoiseSource& noise,
                          const SimulationOptions& options) {
  if (model.delay) return simulate_delay_path(*model.delay, T, noise, options);
  return simulate_path(*model.equation, model.x0, T, noise, options);
}

NoiseSource noise_for(const ModelDescriptor& model, std::uint64_t seed, std::uint64_t path, double dt) {
  return NoiseSource(seed, path, model.wiener_modes(), dt, model.measure());
}

}  // namespace mildlevy
