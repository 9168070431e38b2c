#pragma once

#include "mildlevy/rng.hpp"
#include "mildlevy/spectral_space.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mildlevy {

/// Catalog of autonomous scalar functions R -> R with declared constants.
///
/// semimonotone_constant() is an M with (f(a)-f(b))(a-b) <= M (a-b)^2 and
/// growth_constant() a D with f(a)^2 <= D (1 + a^2), both valid on all of R.
class ScalarFunction {
 public:
  enum class Kind {
    zero,
    neg_cbrt,          // -x^{1/3}
    affine,            // a x + b
    saturated_linear,  // clamp(-x, -c, c)
    piecewise,         // -(left_slope x) for x<0, -(right_slope x) for x>=0, plus lipschitz*sin(x)
    sine,              // amplitude * sin(x)
    yosida,            // Yosida approximation of an inner decreasing function
    shifted,           // inner(x) + offset
  };

  static ScalarFunction zero();
  static ScalarFunction neg_cbrt();
  static ScalarFunction affine(double a, double b);
  static ScalarFunction saturated_linear(double c);
  static ScalarFunction piecewise(double left_slope, double right_slope, double lipschitz);
  static ScalarFunction sine(double amplitude);
  static ScalarFunction yosida_of(const ScalarFunction& f, double lambda);
  static ScalarFunction shifted(const ScalarFunction& f, double offset);

  Kind kind() const noexcept { return kind_; }
  const std::vector<double>& parameters() const noexcept { return params_; }
  /// Inner function for the yosida/shifted wrappers.
  const ScalarFunction* inner() const noexcept { return inner_.get(); }

  double operator()(double x) const;
  /// Derivative where it exists and is finite.
  std::optional<double> derivative(double x) const;

  double semimonotone_constant() const;
  double growth_constant() const;
  /// +inf when the function is not globally Lipschitz.
  double lipschitz_constant() const;
  bool is_decreasing() const { return semimonotone_constant() <= 0.0; }

  std::string name() const;

 private:
  ScalarFunction(Kind kind, std::vector<double> params, std::shared_ptr<const ScalarFunction> inner = nullptr)
      : kind_(kind), params_(std::move(params)), inner_(std::move(inner)) {}

  Kind kind_;
  std::vector<double> params_;
  std::shared_ptr<const ScalarFunction> inner_;
};

/// Names accepted by the configuration surface.
const std::vector<std::string>& scalar_function_catalog();

/// Solves y - lambda f(y) = x, i.e. returns (I - lambda f)^{-1}(x).
double resolvent(const ScalarFunction& f, double lambda, double x);

/// f_lambda(x) = (resolvent(f, lambda, x) - x) / lambda.
double yosida(const ScalarFunction& f, double lambda, double x);

/// Largest sampled difference quotient (f(a)-f(b))/(a-b) over pairs in [-R, R].
double estimate_semimonotone_constant(const ScalarFunction& f, double radius, std::size_t samples, Xoshiro256& rng);

/// How a scalar function is lifted to the truncated state.
enum class Lift {
  grid,      // Nemitsky operator through the collocation grid
  diagonal,  // applied to each coefficient (scalar and delay models)
};

/// F(x) = lift(f)(x) + eta x.
class DriftOperator {
 public:
  DriftOperator() : DriftOperator(ScalarFunction::zero(), Lift::diagonal, nullptr, 0.0) {}
  DriftOperator(ScalarFunction f, Lift lift, std::shared_ptr<const SineGrid> grid, double eta = 0.0);

  const ScalarFunction& scalar() const noexcept { return f_; }
  Lift lift() const noexcept { return lift_; }
  const std::shared_ptr<const SineGrid>& grid() const noexcept { return grid_; }
  double eta() const noexcept { return eta_; }
  bool is_zero() const noexcept { return f_.kind() == ScalarFunction::Kind::zero && eta_ == 0.0; }

  /// Semimonotone constant of the lifted operator: M_f + eta.
  double semimonotone_constant() const;
  /// D with ||F(x)||^2 <= D (1 + ||x||^2).
  double growth_constant() const;

  StateVector apply(const StateVector& x) const;
  /// Workspace variant; `values` is resized to the grid size.
  void apply_into(const StateVector& x, StateVector& out, Eigen::VectorXd& values) const;

  /// Same lift with f replaced.
  DriftOperator with_scalar(ScalarFunction f) const { return DriftOperator(std::move(f), lift_, grid_, eta_); }

 private:
  ScalarFunction f_;
  Lift lift_;
  std::shared_ptr<const SineGrid> grid_;
  double eta_;
};

/// P f(grid(x)); throws NumericOverflow naming the grid index on a non-finite value.
StateVector nemitsky_apply(const DriftOperator& drift, const StateVector& x);

/// Drift whose scalar part is replaced by its Yosida approximation.
DriftOperator yosida_drift(const DriftOperator& drift, double lambda);

}  // namespace mildlevy
