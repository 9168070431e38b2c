#pragma once

#include "mildlevy/rng.hpp"
#include "mildlevy/spectral_space.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace mildlevy {

/// Finite-activity Levy measure nu(d xi) on real marks: either a list of
/// atoms (xi_i, rho_i) or a uniform mark law on [a, b] with total rate rho.
class LevyMeasure {
 public:
  struct Atom {
    double mark;
    double rate;
  };

  LevyMeasure() = default;  // no jumps
  static LevyMeasure atoms(std::vector<Atom> atoms);
  static LevyMeasure uniform(double a, double b, double rate);

  bool is_uniform() const noexcept { return uniform_; }
  const std::vector<Atom>& atom_list() const noexcept { return atoms_; }
  double uniform_lower() const noexcept { return a_; }
  double uniform_upper() const noexcept { return b_; }

  double total_rate() const noexcept { return rate_; }
  /// int xi nu(d xi)
  double first_moment() const noexcept { return m1_; }
  /// int xi^2 nu(d xi)
  double second_moment() const noexcept { return m2_; }

  /// Draw from the normalized mark law nu / nu(R).
  double sample_mark(Xoshiro256& rng) const;

  /// E over the normalized mark law of h(xi), times the total rate, i.e.
  /// int h(xi) nu(d xi). Exact for atoms; 5-point Gauss-Legendre (exact for
  /// polynomials of degree <= 9) for the uniform law.
  double integrate(const std::function<double(double)>& h) const;

 private:
  std::vector<Atom> atoms_;
  bool uniform_ = false;
  double a_ = 0.0;
  double b_ = 0.0;
  double rate_ = 0.0;
  double m1_ = 0.0;
  double m2_ = 0.0;
};

struct Jump {
  double time;
  double mark;
};

/// Noise over one interval (t0, t1]: K Wiener increments, the jumps of the
/// Poisson random measure in chronological order, and the extra standard
/// normals used to split the Wiener increment at the jump times.
struct NoiseIncrement {
  double t0 = 0.0;
  double t1 = 0.0;
  Eigen::VectorXd wiener;
  std::vector<Jump> jumps;
  Eigen::MatrixXd bridge;  // K x jumps.size()
};

/// K independent N(0, dt) draws.
Eigen::VectorXd sample_wiener_increment(std::size_t K, double dt, Xoshiro256& rng);

/// Jumps of a Poisson random measure with intensity dt nu(d xi) on (t0, t1].
std::vector<Jump> sample_jumps(const LevyMeasure& measure, double t0, double t1, Xoshiro256& rng);

/// dt * int k(xi, x) nu(d xi).
StateVector compensator_integral(const LevyMeasure& measure,
                                 const std::function<StateVector(double, const StateVector&)>& k,
                                 const StateVector& x, double dt);

/// Cumulative sums of squared increment norms: the discrete [Z]_t.
std::vector<double> discrete_quadratic_variation(std::span<const double> squared_increment_norms);

/// Same, from raw increments measured in the L^2 coefficient norm.
std::vector<double> discrete_quadratic_variation(std::span<const StateVector> increments);

/// Reproducible noise for one path: interval n of mesh dt is generated from
/// substreams keyed by (seed, path, tag, n), so any sub-horizon of the path
/// replays the same noise and Wiener/jump streams stay independent.
class NoiseSource {
 public:
  NoiseSource(std::uint64_t seed, std::uint64_t path, std::size_t wiener_modes, double dt, LevyMeasure measure);

  NoiseIncrement interval(std::int64_t n) const;

  double dt() const noexcept { return dt_; }
  std::size_t wiener_modes() const noexcept { return K_; }
  const LevyMeasure& measure() const noexcept { return measure_; }

  std::uint64_t wiener_key(std::int64_t n) const;
  std::uint64_t jump_key(std::int64_t n) const;

  /// Overrides the sub-seed of one stream (used by the independence tests).
  NoiseSource with_stream_seed(StreamTag tag, std::uint64_t sub_seed) const;

 private:
  std::uint64_t seed_;
  std::uint64_t path_;
  std::uint64_t wiener_seed_;
  std::uint64_t jump_seed_;
  std::size_t K_;
  double dt_;
  LevyMeasure measure_;
};

}  // namespace mildlevy
