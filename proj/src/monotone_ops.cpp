#include "mildlevy/monotone_ops.hpp"

#include "mildlevy/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mildlevy {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

ScalarFunction ScalarFunction::zero() { return ScalarFunction(Kind::zero, {}); }
ScalarFunction ScalarFunction::neg_cbrt() { return ScalarFunction(Kind::neg_cbrt, {}); }
ScalarFunction ScalarFunction::affine(double a, double b) { return ScalarFunction(Kind::affine, {a, b}); }

ScalarFunction ScalarFunction::saturated_linear(double c) {
  if (!(c > 0.0)) throw ConfigurationError("saturated_linear: level c must be positive");
  return ScalarFunction(Kind::saturated_linear, {c});
}

ScalarFunction ScalarFunction::piecewise(double left_slope, double right_slope, double lipschitz) {
  if (left_slope < 0.0 || right_slope < 0.0) {
    throw ConfigurationError("piecewise: decreasing part needs non-negative slopes");
  }
  return ScalarFunction(Kind::piecewise, {left_slope, right_slope, lipschitz});
}

ScalarFunction ScalarFunction::sine(double amplitude) { return ScalarFunction(Kind::sine, {amplitude}); }

ScalarFunction ScalarFunction::yosida_of(const ScalarFunction& f, double lambda) {
  if (!(lambda > 0.0)) throw ContractViolation("yosida: lambda must be positive");
  if (!f.is_decreasing()) {
    throw ContractViolation("yosida: " + f.name() + " is not monotone decreasing (M > 0)");
  }
  return ScalarFunction(Kind::yosida, {lambda}, std::make_shared<const ScalarFunction>(f));
}

ScalarFunction ScalarFunction::shifted(const ScalarFunction& f, double offset) {
  return ScalarFunction(Kind::shifted, {offset}, std::make_shared<const ScalarFunction>(f));
}

double ScalarFunction::operator()(double x) const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::neg_cbrt:
      return -std::cbrt(x);
    case Kind::affine:
      return params_[0] * x + params_[1];
    case Kind::saturated_linear:
      return std::clamp(-x, -params_[0], params_[0]);
    case Kind::piecewise:
      return (x < 0.0 ? -params_[0] * x : -params_[1] * x) + params_[2] * std::sin(x);
    case Kind::sine:
      return params_[0] * std::sin(x);
    case Kind::yosida:
      return yosida(*inner_, params_[0], x);
    case Kind::shifted:
      return (*inner_)(x) + params_[0];
  }
  return 0.0;
}

std::optional<double> ScalarFunction::derivative(double x) const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::neg_cbrt: {
      if (x == 0.0) return std::nullopt;
      const double d = -1.0 / (3.0 * std::cbrt(x * x));
      if (!std::isfinite(d)) return std::nullopt;
      return d;
    }
    case Kind::affine:
      return params_[0];
    case Kind::saturated_linear:
      if (std::abs(x) == params_[0]) return std::nullopt;
      return std::abs(x) < params_[0] ? -1.0 : 0.0;
    case Kind::piecewise:
      if (x == 0.0 && params_[0] != params_[1]) return std::nullopt;
      return (x < 0.0 ? -params_[0] : -params_[1]) + params_[2] * std::cos(x);
    case Kind::sine:
      return params_[0] * std::cos(x);
    case Kind::yosida: {
      const double lambda = params_[0];
      const auto d = inner_->derivative(resolvent(*inner_, lambda, x));
      if (!d) return std::nullopt;
      return *d / (1.0 - lambda * *d);
    }
    case Kind::shifted:
      return inner_->derivative(x);
  }
  return std::nullopt;
}

double ScalarFunction::semimonotone_constant() const {
  switch (kind_) {
    case Kind::zero:
    case Kind::neg_cbrt:
    case Kind::saturated_linear:
    case Kind::yosida:
      return 0.0;
    case Kind::affine:
      return params_[0];
    case Kind::piecewise:
      return std::abs(params_[2]);
    case Kind::sine:
      return std::abs(params_[0]);
    case Kind::shifted:
      return inner_->semimonotone_constant();
  }
  return 0.0;
}

double ScalarFunction::growth_constant() const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::neg_cbrt:
      return 1.0;  // |x|^{2/3} <= 1 + x^2
    case Kind::affine:
      return params_[0] * params_[0] + params_[1] * params_[1];
    case Kind::saturated_linear:
      return std::min(params_[0] * params_[0], 1.0);
    case Kind::piecewise: {
      const double s = std::max(params_[0], params_[1]);
      return s * s + params_[2] * params_[2];
    }
    case Kind::sine:
      return params_[0] * params_[0];
    case Kind::yosida:
      return inner_->growth_constant();  // |f_lambda| <= |f|
    case Kind::shifted: {
      const double r = std::sqrt(inner_->growth_constant()) + std::abs(params_[0]);
      return r * r;
    }
  }
  return 0.0;
}

double ScalarFunction::lipschitz_constant() const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::neg_cbrt:
      return kInf;
    case Kind::affine:
      return std::abs(params_[0]);
    case Kind::saturated_linear:
      return 1.0;
    case Kind::piecewise:
      return std::max(params_[0], params_[1]) + std::abs(params_[2]);
    case Kind::sine:
      return std::abs(params_[0]);
    case Kind::yosida:
      return 1.0 / params_[0];
    case Kind::shifted:
      return inner_->lipschitz_constant();
  }
  return kInf;
}

std::string ScalarFunction::name() const {
  switch (kind_) {
    case Kind::zero:
      return "zero";
    case Kind::neg_cbrt:
      return "neg_cbrt";
    case Kind::affine:
      return "affine(" + fmt_double(params_[0]) + "," + fmt_double(params_[1]) + ")";
    case Kind::saturated_linear:
      return "saturated_linear(" + fmt_double(params_[0]) + ")";
    case Kind::piecewise:
      return "piecewise(" + fmt_double(params_[0]) + "," + fmt_double(params_[1]) + "," + fmt_double(params_[2]) + ")";
    case Kind::sine:
      return "sine(" + fmt_double(params_[0]) + ")";
    case Kind::yosida:
      return "yosida(" + inner_->name() + "," + fmt_double(params_[0]) + ")";
    case Kind::shifted:
      return "shifted(" + inner_->name() + "," + fmt_double(params_[0]) + ")";
  }
  return "?";
}

const std::vector<std::string>& scalar_function_catalog() {
  static const std::vector<std::string> names = {"zero", "neg_cbrt", "affine", "saturated_linear", "piecewise", "sine"};
  return names;
}

double resolvent(const ScalarFunction& f, double lambda, double x) {
  if (!(lambda > 0.0)) throw ContractViolation("resolvent: lambda must be positive");
  const double M = f.semimonotone_constant();
  if (M > 0.0 && lambda * M >= 1.0) {
    throw ContractViolation("resolvent: lambda * M >= 1 for " + f.name() + "; I - lambda f may not be invertible");
  }
  if (!std::isfinite(x)) throw ContractViolation("resolvent: non-finite argument");

  // phi(y) = y - lambda f(y) - x is strictly increasing.
  const auto phi = [&](double y) { return y - lambda * f(y) - x; };
  const double f0 = std::abs(f(0.0));
  double lo = std::min(0.0, x) - lambda * f0 - std::abs(x);
  double hi = std::max(0.0, x) + lambda * f0 + std::abs(x);
  double phi_lo = phi(lo);
  double phi_hi = phi(hi);
  for (int k = 0; phi_lo > 0.0 && k < 64; ++k) {
    lo = 2.0 * lo - 1.0;
    phi_lo = phi(lo);
  }
  for (int k = 0; phi_hi < 0.0 && k < 64; ++k) {
    hi = 2.0 * hi + 1.0;
    phi_hi = phi(hi);
  }
  if (phi_lo > 0.0 || phi_hi < 0.0) throw NumericOverflow("resolvent: could not bracket root for " + f.name());
  if (phi_lo == 0.0) return lo;
  if (phi_hi == 0.0) return hi;

  const double target = 0.25e-12 * (1.0 + std::abs(x));
  double best = lo;
  double best_res = std::abs(phi_lo);
  if (std::abs(phi_hi) < best_res) {
    best = hi;
    best_res = std::abs(phi_hi);
  }
  double y = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double r = phi(y);
    if (std::abs(r) < best_res) {
      best = y;
      best_res = std::abs(r);
    }
    if (r == 0.0 || best_res <= target) break;
    if (r < 0.0) {
      lo = y;
    } else {
      hi = y;
    }
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket exhausted at double resolution

    // Newton step from the current iterate when it stays inside the bracket;
    // skipped near the cube-root singularity at the origin.
    double next = mid;
    if (std::abs(y) >= 1e-8) {
      if (const auto d = f.derivative(y)) {
        const double slope = 1.0 - lambda * *d;
        if (slope > 0.0 && std::isfinite(slope)) {
          const double candidate = y - r / slope;
          if (candidate > lo && candidate < hi) next = candidate;
        }
      }
    }
    y = next;
  }
  return best;
}

double yosida(const ScalarFunction& f, double lambda, double x) {
  if (!f.is_decreasing()) {
    throw ContractViolation("yosida: " + f.name() + " is not monotone decreasing (M > 0)");
  }
  // Equal to (J x - x) / lambda, without the cancellation when lambda is small.
  return f(resolvent(f, lambda, x));
}

double estimate_semimonotone_constant(const ScalarFunction& f, double radius, std::size_t samples, Xoshiro256& rng) {
  if (!(radius > 0.0)) throw ContractViolation("estimate_semimonotone_constant: radius must be positive");
  if (samples < 2) throw ContractViolation("estimate_semimonotone_constant: need at least two samples");
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples; ++i) {
    const double a = radius * (2.0 * rng.uniform() - 1.0);
    const double b = radius * (2.0 * rng.uniform() - 1.0);
    if (a == b) continue;
    worst = std::max(worst, (f(a) - f(b)) / (a - b));
  }
  return worst;
}

DriftOperator::DriftOperator(ScalarFunction f, Lift lift, std::shared_ptr<const SineGrid> grid, double eta)
    : f_(std::move(f)), lift_(lift), grid_(std::move(grid)), eta_(eta) {
  if (lift_ == Lift::grid && !grid_) throw ContractViolation("DriftOperator: grid lift needs a grid");
}

double DriftOperator::semimonotone_constant() const { return f_.semimonotone_constant() + eta_; }

double DriftOperator::growth_constant() const {
  if (eta_ == 0.0) return f_.growth_constant();
  // ||Pf + eta x||^2 <= 2 ||Pf||^2 + 2 eta^2 ||x||^2
  return 2.0 * f_.growth_constant() + 2.0 * eta_ * eta_;
}

void DriftOperator::apply_into(const StateVector& x, StateVector& out, Eigen::VectorXd& values) const {
  if (lift_ == Lift::diagonal) {
    out.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = f_(x[i]);
  } else {
    grid_->forward_into(x, values);
    for (Eigen::Index g = 0; g < values.size(); ++g) {
      const double fv = f_(values[g]);
      if (!std::isfinite(fv)) {
        throw NumericOverflow("nemitsky_apply: non-finite value of " + f_.name() + " at grid index " +
                              std::to_string(g));
      }
      values[g] = fv;
    }
    out.resize(x.size());
    grid_->inverse_into(values, out);
  }
  if (eta_ != 0.0) out += eta_ * x;
}

StateVector DriftOperator::apply(const StateVector& x) const {
  StateVector out;
  Eigen::VectorXd values;
  apply_into(x, out, values);
  return out;
}

StateVector nemitsky_apply(const DriftOperator& drift, const StateVector& x) { return drift.apply(x); }

DriftOperator yosida_drift(const DriftOperator& drift, double lambda) {
  if (!(lambda > 0.0)) throw ContractViolation("yosida_drift: lambda must be positive");
  if (!drift.scalar().is_decreasing() || drift.eta() > 0.0) {
    throw ConfigurationError("yosida_drift: drift " + drift.scalar().name() +
                             " is not maximal monotone (needs decreasing f and eta <= 0)");
  }
  if (drift.scalar().kind() == ScalarFunction::Kind::zero) return drift;
  return drift.with_scalar(ScalarFunction::yosida_of(drift.scalar(), lambda));
}

}  // namespace mildlevy
