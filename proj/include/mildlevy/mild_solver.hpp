#pragma once

#include "mildlevy/levy_noise.hpp"
#include "mildlevy/monotone_ops.hpp"
#include "mildlevy/spectral_space.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mildlevy {

/// g(x) dW = sum_{k<K} c_k(x) dW_k e_k: a diagonal operator on K noise modes.
struct DiffusionCoefficient {
  enum class Kind { none, constant, linear, nemitsky };

  Kind kind = Kind::none;
  double sigma = 0.0;
  std::size_t modes = 0;  // K
  ScalarFunction h = ScalarFunction::zero();
  std::shared_ptr<const SineGrid> grid;

  static DiffusionCoefficient none() { return {}; }
  static DiffusionCoefficient constant(double sigma, std::size_t modes);
  static DiffusionCoefficient linear(double sigma, std::size_t modes);
  static DiffusionCoefficient nemitsky(double sigma, ScalarFunction h, std::shared_ptr<const SineGrid> grid,
                                       std::size_t modes);

  bool is_zero() const noexcept { return kind == Kind::none || sigma == 0.0 || modes == 0; }

  /// Multipliers c(x) for a source vector of the basis dimension.
  void multipliers(const StateVector& source, Eigen::VectorXd& c, Eigen::VectorXd& values) const;
  Eigen::VectorXd multipliers(const StateVector& source) const;

  /// Squared Lipschitz constant of x -> c(x) (Hilbert-Schmidt norm).
  double lipschitz_squared() const;
  /// (a, b) with ||g(x)||_HS^2 <= a + b ||x||^2.
  std::pair<double, double> growth() const;
};

/// k(xi, x) = xi * H(x).
struct JumpCoefficient {
  enum class Kind { none, linear, nemitsky };

  Kind kind = Kind::none;
  double scale = 0.0;  // linear: H(x) = scale x
  ScalarFunction h = ScalarFunction::zero();
  std::shared_ptr<const SineGrid> grid;

  static JumpCoefficient none() { return {}; }
  static JumpCoefficient linear(double scale);
  static JumpCoefficient nemitsky(ScalarFunction h, std::shared_ptr<const SineGrid> grid);

  bool is_zero() const noexcept { return kind == Kind::none || (kind == Kind::linear && scale == 0.0); }

  void map(const StateVector& source, StateVector& out, Eigen::VectorXd& values) const;
  StateVector map(const StateVector& source) const;
  StateVector operator()(double mark, const StateVector& source) const { return mark * map(source); }

  double lipschitz_squared() const;
  std::pair<double, double> growth() const;
};

/// Hypothesis constants: semimonotone M, Lipschitz C, growth D.
struct DeclaredConstants {
  double M = 0.0;
  double C = 0.0;
  double D = 0.0;

  bool operator==(const DeclaredConstants&) const = default;
};

/// Drift f, diffusion g and jump coefficient k, with their declared constants.
struct Coefficients {
  DriftOperator drift;
  DiffusionCoefficient diffusion;
  JumpCoefficient jump;
  DeclaredConstants declared;
};

/// Wiener truncation and the Levy measure shared by every equation driven by
/// the same noise.
struct NoiseModel {
  std::size_t wiener_modes = 0;
  LevyMeasure measure;
};

/// dX = A X dt + f(X) dt + g(X-) dW + int k(xi, X-) N~(dt, d xi).
/// For the wave layout f acts on the velocity, g and k read the position and
/// write the velocity.
struct Equation {
  LinearFlow flow;
  Coefficients coeffs;
  NoiseModel noise;

  /// Constants implied by the catalog entries (M, C, D in the flow's norm).
  DeclaredConstants derived_constants() const;

  /// f, g, k evaluated in the flow's layout (full state dimension).
  StateVector drift(const StateVector& x) const;
  /// Hilbert-Schmidt norm squared of g(x).
  double diffusion_hs_squared(const StateVector& x) const;
  /// H(x) in the full layout, so that k(xi, x) = xi * jump_map(x).
  StateVector jump_map(const StateVector& x) const;
};

enum class Scheme {
  exponential_euler,  // explicit drift, frozen at the left point
  semi_implicit,      // drift by pointwise resolvent (backward Euler substep)
};

struct StepOptions {
  Scheme scheme = Scheme::exponential_euler;
  double blowup_bound = 1e8;
};

/// Contribution of one noise increment to the discrete Ito-type inequality:
/// <X_{s-}, dZ_s> and ||dZ_s||^2 in the flow's inner product.
struct ItoEvent {
  double time;
  double inner;
  double squared;
  std::size_t first_index;  // first recorded time at which the increment is in effect
};

/// Sub-points produced while stepping across one noise interval.
struct StepTrace {
  std::vector<double> times;
  std::vector<char> is_jump;
  std::vector<StateVector> states;      // right limits
  std::vector<StateVector> pre_states;  // left limits (equal to states when no jump)
  std::vector<ItoEvent> events;         // first_index relative to this trace
  std::vector<StateVector> increments;  // dZ per event

  void clear();
};

/// One jump-adapted exponential-Euler step over (t0, t1] = (increment.t0, increment.t1].
StateVector step(const Equation& eq, const StateVector& x, const NoiseIncrement& increment,
                 const StepOptions& options = {}, StepTrace* trace = nullptr);

enum class RecordLevel {
  norms,  // times, squared norms, qv and Ito events
  full,   // plus states, left limits and increments
};

/// Cadlag discrete trajectory on the jump-adapted grid.
struct PathRecord {
  double alpha = 0.0;
  std::vector<double> times;
  std::vector<char> is_jump;
  std::vector<double> squared_norms;
  std::vector<double> qv;
  std::vector<ItoEvent> events;
  std::vector<StateVector> states;
  std::vector<StateVector> pre_states;
  std::vector<StateVector> increments;
  StateVector initial_state;
  StateVector final_state;
  std::uint64_t seed = 0;
  std::uint64_t path = 0;

  bool has_states() const noexcept { return !states.empty(); }
  double sup_squared_norm() const;
  std::size_t jump_count() const;
};

struct SimulationOptions {
  StepOptions step;
  RecordLevel record = RecordLevel::norms;
};

/// Simulates [t_start, t_end] on the uniform mesh dt (t_start and t_end must
/// be multiples of dt) merged with the sampled jump times.
PathRecord simulate_path(const Equation& eq, const StateVector& x0, double t_start, double t_end,
                         const NoiseSource& noise, const SimulationOptions& options = {});

PathRecord simulate_path(const Equation& eq, const StateVector& x0, double T, const NoiseSource& noise,
                         const SimulationOptions& options = {});

/// Two equations driven by the identical noise increments.
struct CoupledRecord {
  PathRecord first;
  PathRecord second;
  std::vector<double> difference_squared;  // ||X^1_t - X^0_t||^2 at each recorded time
  double sup_weighted = 0.0;               // sup_t e^{-2 alpha t} ||X^1_t - X^0_t||^2
  double sup_difference = 0.0;             // sup_t ||X^1_t - X^0_t||^2
};

CoupledRecord simulate_coupled_pair(const Equation& first, const Equation& second, const StateVector& x0_first,
                                    const StateVector& x0_second, double T, const NoiseSource& noise,
                                    const SimulationOptions& options = {});

/// Scalar stochastic delay equation
///   dx = (int_{-h}^0 mu(d theta) x(t + theta)) dt + f(x) dt + g(x) dW + k(x-) dZ~,
/// simulated with a history buffer of mesh dt.
struct DelayModel {
  double h = 1.0;
  std::vector<std::pair<double, double>> point_masses;  // (theta in [-h, 0], weight)
  double density = 0.0;                                 // Lebesgue weight on (-h, 0]
  ScalarFunction f = ScalarFunction::zero();
  ScalarFunction g = ScalarFunction::zero();  // multiplies the scalar Wiener increment
  ScalarFunction k = ScalarFunction::zero();  // jump of mark xi is xi * k(x-)
  LevyMeasure measure;
  std::function<double(double)> psi;  // initial history on [-h, 0]

  /// Constants of the scalar coefficients (M of f, C of (g, k), D).
  DeclaredConstants scalar_constants() const;
  /// Total variation of mu.
  double mu_variation() const;
};

PathRecord simulate_delay_path(const DelayModel& model, double T, const NoiseSource& noise,
                               const SimulationOptions& options = {});

/// Writes one path as CSV: time, is_jump, c_1..c_n, pre_1..pre_n (only on
/// jump rows), qv. Needs RecordLevel::full.
void write_path_csv(const PathRecord& record, const std::string& file);
std::string path_csv(const PathRecord& record);

}  // namespace mildlevy
