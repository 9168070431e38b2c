#pragma once

#include "mildlevy/mild_solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mildlevy {

/// A built model: either a spectral equation with its initial state, or a
/// scalar delay equation with its history.
struct ModelDescriptor {
  std::string name;
  std::optional<Equation> equation;
  StateVector x0;
  std::optional<DelayModel> delay;
  DeclaredConstants declared;
  double alpha = 0.0;

  bool is_delay() const noexcept { return delay.has_value(); }
  /// Wiener modes the noise source must provide.
  std::size_t wiener_modes() const;
  const LevyMeasure& measure() const;
};

/// Jump map selection shared by the SPDE builders: k(xi, x) = xi * H(x).
struct JumpSpec {
  JumpCoefficient::Kind kind = JumpCoefficient::Kind::none;
  double scale = 1.0;
  ScalarFunction h = ScalarFunction::zero();
};

struct DiffusionSpec {
  DiffusionCoefficient::Kind kind = DiffusionCoefficient::Kind::none;
  double sigma = 0.0;
  std::size_t modes = 0;  // 0: all state modes
  ScalarFunction h = ScalarFunction::zero();
};

struct ReactionDiffusionParams {
  std::size_t modes = 64;
  std::size_t grid_points = 0;  // 0: 4 * modes
  double kappa = 0.0;
  double eta = 0.0;
  ScalarFunction f = ScalarFunction::neg_cbrt();
  JumpSpec jump{JumpCoefficient::Kind::linear, 1.0, ScalarFunction::zero()};
  DiffusionSpec diffusion;
  LevyMeasure measure = LevyMeasure::atoms({{0.5, 1.0}, {-0.3, 2.0}});
  StateVector x0;  // empty: unit first mode
  std::optional<DeclaredConstants> declared;
};

struct WaveParams {
  std::size_t modes = 64;
  std::size_t grid_points = 0;
  double kappa = 0.0;
  ScalarFunction f = ScalarFunction::neg_cbrt();  // damping, acts on the velocity
  double jump_scale = 1.0;                        // K(xi, (u, v)) = (0, xi * scale * u)
  double sigma = 0.0;                             // g(u, v) dW = (0, sigma * u_k dW_k)
  std::size_t wiener_modes = 0;
  LevyMeasure measure = LevyMeasure::atoms({{0.5, 1.0}, {-0.5, 1.0}});
  StateVector u0;  // empty: unit first mode
  StateVector v0;  // empty: zero
  std::optional<DeclaredConstants> declared;
};

struct DelayParams {
  double h = 1.0;
  std::vector<std::pair<double, double>> point_masses;
  double density = 1.0;
  ScalarFunction f = ScalarFunction::neg_cbrt();
  ScalarFunction g = ScalarFunction::zero();
  ScalarFunction k = ScalarFunction::affine(1.0, 0.0);
  LevyMeasure measure = LevyMeasure::atoms({{0.5, 1.0}, {-0.5, 1.0}});
  enum class History { sine, constant } history = History::sine;
  double history_value = 0.0;  // for History::constant
  std::optional<DeclaredConstants> declared;
};

struct ScalarToyParams {
  double a = 0.0;
  double sigma = 0.0;
  LevyMeasure measure;  // jumps x -> x (1 + xi)
  double x0 = 1.0;
  ScalarFunction f = ScalarFunction::zero();  // optional extra drift, applied directly
  std::optional<DeclaredConstants> declared;
};

ModelDescriptor build_reaction_diffusion(const ReactionDiffusionParams& params);
ModelDescriptor build_wave_cbrt(const WaveParams& params);
ModelDescriptor build_delay(const DelayParams& params);
ModelDescriptor build_scalar_toy(const ScalarToyParams& params);

const std::vector<std::string>& model_catalog();

/// Closed-form moments of the scalar toy without extra drift:
/// E x_T = x0 e^{aT}, E x_T^2 = x0^2 exp((2a + sigma^2 + int xi^2 nu) T).
double scalar_toy_mean(const ScalarToyParams& params, double T);
double scalar_toy_second_moment(const ScalarToyParams& params, double T);

/// Coefficient perturbations used by the coupled-pair checks.
struct Perturbation {
  double drift_shift = 0.0;      // f -> f + shift
  double diffusion_scale = 1.0;  // sigma -> scale * sigma
  double jump_scale = 1.0;       // H -> scale * H (linear jump maps only)
  double x0_shift = 0.0;         // first coefficient of x0
};

/// Perturbed copy of a spectral model. Declared constants are re-derived
/// unless keep_declared is set.
ModelDescriptor perturb(const ModelDescriptor& model, const Perturbation& p, bool keep_declared = false);

/// Simulates any model (spectral or delay) on [0, T].
PathRecord simulate_model(const ModelDescriptor& model, double T, const NoiseSource& noise,
                          const SimulationOptions& options = {});

/// Noise source matching a model's Wiener truncation and Levy measure.
NoiseSource noise_for(const ModelDescriptor& model, std::uint64_t seed, std::uint64_t path, double dt);

}  // namespace mildlevy
