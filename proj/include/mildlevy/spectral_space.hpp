#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <vector>

namespace mildlevy {

/// Coordinates of a truncated state in the L^2-orthonormal sine basis.
using StateVector = Eigen::VectorXd;

/// Dirichlet Laplacian eigenbasis on (0, 1), truncated to J modes.
///
/// The generator is A = Laplacian - kappa * I, so mode j decays at rate
/// lambda_j + kappa with lambda_j = (j pi)^2.
class SpectralBasis {
 public:
  SpectralBasis(std::size_t modes, double kappa = 0.0);

  /// One-mode basis whose single mode grows like e^{rate t}; the closed-form
  /// scalar models are written on top of it.
  static SpectralBasis scalar(double rate);

  std::size_t dimension() const noexcept { return eigenvalues_.size(); }
  double kappa() const noexcept { return kappa_; }
  double eigenvalue(std::size_t j) const { return eigenvalues_.at(j); }
  const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }

  /// lambda_j + kappa for zero-based mode j.
  double decay_rate(std::size_t j) const { return eigenvalues_.at(j) + kappa_; }

  /// Smallest alpha with ||S_t|| <= e^{alpha t}: max_j -(lambda_j + kappa).
  double growth_bound() const;

  /// Walsh-scale weight (1 + lambda_j)^n.
  double walsh_weight(std::size_t j, int n) const;

 private:
  double kappa_;
  std::vector<double> eigenvalues_;
};

/// Position/velocity pair for the second-order (wave) system.
struct WaveState {
  StateVector u;
  StateVector v;
};

/// x -> S_t x, exact per mode.
StateVector semigroup_apply(const SpectralBasis& basis, double t, const StateVector& x);

/// Exact flow of (u, v)' = (v, (Laplacian - kappa) u), mode by mode.
WaveState wave_semigroup_apply(const SpectralBasis& basis, double t, const WaveState& x);

/// sqrt(sum_j (1 + lambda_j)^n a_j^2); n = 0 is the L^2 norm.
double norm(const SpectralBasis& basis, const StateVector& x, int n = 0);

/// sum_j (lambda_j + kappa) u_j^2 + v_j^2.
double energy(const SpectralBasis& basis, const WaveState& x);

/// Uniform collocation grid x_g = g / (G + 1), g = 1..G, with sine synthesis
/// phi_j(x) = sqrt(2) sin(j pi x). The inverse is the projection in the
/// discrete inner product (1/(G+1)) sum_g, in which the retained modes are
/// exactly orthonormal.
class SineGrid {
 public:
  SineGrid(std::size_t modes, std::size_t points);

  std::size_t modes() const noexcept { return static_cast<std::size_t>(synthesis_.cols()); }
  std::size_t points() const noexcept { return static_cast<std::size_t>(synthesis_.rows()); }
  double node(std::size_t g) const;

  Eigen::VectorXd forward(const StateVector& x) const;
  StateVector inverse(const Eigen::VectorXd& values) const;

  /// Allocation-free variants for the stepping loop.
  void forward_into(const StateVector& x, Eigen::VectorXd& values) const;
  void inverse_into(const Eigen::VectorXd& values, StateVector& x) const;

 private:
  Eigen::MatrixXd synthesis_;  // G x J
  Eigen::MatrixXd analysis_;   // J x G
};

/// Shared, immutable grid; G defaults to 4 J.
std::shared_ptr<const SineGrid> make_grid(std::size_t modes, std::size_t points = 0);

/// Layout of the flat state vector used by the solver.
enum class Layout {
  plain,  // heat-type: x = (a_1..a_J), L^2 inner product
  wave,   // x = (u_1..u_J, v_1..v_J), energy inner product
};

/// Precomputed one-step propagator for a fixed step length.
struct Propagator {
  double t = 0.0;
  Eigen::VectorXd decay;  // plain: e^{-(lambda+kappa) t}
  Eigen::VectorXd cos_w;  // wave only
  Eigen::VectorXd sin_w;
};

/// The linear part of a model: a basis, a layout and the inner product the
/// layout carries. Stateless and shareable.
class LinearFlow {
 public:
  LinearFlow(SpectralBasis basis, Layout layout);

  const SpectralBasis& basis() const noexcept { return basis_; }
  Layout layout() const noexcept { return layout_; }
  std::size_t modes() const noexcept { return basis_.dimension(); }
  std::size_t state_dimension() const noexcept;

  /// Growth bound in this flow's norm (0 for the wave group).
  double growth_bound() const;

  Propagator propagator(double t) const;
  void apply(const Propagator& p, StateVector& x) const;
  StateVector apply(double t, const StateVector& x) const;

  double inner(const StateVector& x, const StateVector& y) const;
  double squared_norm(const StateVector& x) const;

  /// Diagonal weights of the inner product.
  const Eigen::VectorXd& weights() const noexcept { return weights_; }

 private:
  SpectralBasis basis_;
  Layout layout_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd omega_;
};

}  // namespace mildlevy
