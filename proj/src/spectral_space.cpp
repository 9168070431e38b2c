#include "mildlevy/spectral_space.hpp"

#include "mildlevy/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace mildlevy {

namespace {

void require_dimension(const SpectralBasis& basis, const StateVector& x, const char* what) {
  if (static_cast<std::size_t>(x.size()) != basis.dimension()) {
    throw ContractViolation(std::string(what) + ": state has " + std::to_string(x.size()) +
                            " coefficients, basis has " + std::to_string(basis.dimension()));
  }
}

void require_time(double t, const char* what) {
  if (!(t >= 0.0)) {
    throw ContractViolation(std::string(what) + ": time must be non-negative");
  }
}

}  // namespace

SpectralBasis::SpectralBasis(std::size_t modes, double kappa) : kappa_(kappa) {
  if (modes == 0) throw ContractViolation("SpectralBasis: need at least one mode");
  eigenvalues_.reserve(modes);
  for (std::size_t j = 1; j <= modes; ++j) {
    const double k = static_cast<double>(j) * std::numbers::pi;
    eigenvalues_.push_back(k * k);
  }
}

SpectralBasis SpectralBasis::scalar(double rate) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return SpectralBasis(1, -rate - pi2);
}

double SpectralBasis::growth_bound() const {
  double alpha = -decay_rate(0);
  for (std::size_t j = 1; j < eigenvalues_.size(); ++j) alpha = std::max(alpha, -decay_rate(j));
  return alpha + 0.0;  // no negative zero
}

double SpectralBasis::walsh_weight(std::size_t j, int n) const {
  return std::pow(1.0 + eigenvalues_.at(j), static_cast<double>(n));
}

StateVector semigroup_apply(const SpectralBasis& basis, double t, const StateVector& x) {
  require_dimension(basis, x, "semigroup_apply");
  require_time(t, "semigroup_apply");
  if (t == 0.0) return x;
  StateVector out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    out[j] = std::exp(-basis.decay_rate(static_cast<std::size_t>(j)) * t) * x[j];
  }
  return out;
}

WaveState wave_semigroup_apply(const SpectralBasis& basis, double t, const WaveState& x) {
  require_dimension(basis, x.u, "wave_semigroup_apply");
  require_dimension(basis, x.v, "wave_semigroup_apply");
  require_time(t, "wave_semigroup_apply");
  if (t == 0.0) return x;
  WaveState out{StateVector(x.u.size()), StateVector(x.v.size())};
  for (Eigen::Index j = 0; j < x.u.size(); ++j) {
    const double w = std::sqrt(basis.decay_rate(static_cast<std::size_t>(j)));
    const double c = std::cos(w * t);
    const double s = std::sin(w * t);
    out.u[j] = x.u[j] * c + x.v[j] * s / w;
    out.v[j] = -x.u[j] * w * s + x.v[j] * c;
  }
  return out;
}

double norm(const SpectralBasis& basis, const StateVector& x, int n) {
  require_dimension(basis, x, "norm");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    acc += basis.walsh_weight(static_cast<std::size_t>(j), n) * x[j] * x[j];
  }
  return std::sqrt(acc);
}

double energy(const SpectralBasis& basis, const WaveState& x) {
  require_dimension(basis, x.u, "energy");
  require_dimension(basis, x.v, "energy");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.u.size(); ++j) {
    acc += basis.decay_rate(static_cast<std::size_t>(j)) * x.u[j] * x.u[j] + x.v[j] * x.v[j];
  }
  return acc;
}

SineGrid::SineGrid(std::size_t modes, std::size_t points) {
  if (modes == 0) throw ContractViolation("SineGrid: need at least one mode");
  if (points < modes) {
    throw ContractViolation("SineGrid: grid size " + std::to_string(points) +
                            " is smaller than mode count " + std::to_string(modes));
  }
  const auto G = static_cast<Eigen::Index>(points);
  const auto J = static_cast<Eigen::Index>(modes);
  synthesis_.resize(G, J);
  const double h = 1.0 / static_cast<double>(points + 1);
  for (Eigen::Index g = 0; g < G; ++g) {
    const double x = static_cast<double>(g + 1) * h;
    for (Eigen::Index j = 0; j < J; ++j) {
      synthesis_(g, j) = std::numbers::sqrt2 * std::sin(static_cast<double>(j + 1) * std::numbers::pi * x);
    }
  }
  analysis_ = synthesis_.transpose() * h;
}

double SineGrid::node(std::size_t g) const {
  return static_cast<double>(g + 1) / static_cast<double>(points() + 1);
}

Eigen::VectorXd SineGrid::forward(const StateVector& x) const {
  Eigen::VectorXd values(synthesis_.rows());
  forward_into(x, values);
  return values;
}

StateVector SineGrid::inverse(const Eigen::VectorXd& values) const {
  StateVector x(analysis_.rows());
  inverse_into(values, x);
  return x;
}

void SineGrid::forward_into(const StateVector& x, Eigen::VectorXd& values) const {
  if (x.size() != synthesis_.cols()) throw ContractViolation("SineGrid::forward: dimension mismatch");
  values.noalias() = synthesis_ * x;
}

void SineGrid::inverse_into(const Eigen::VectorXd& values, StateVector& x) const {
  if (values.size() != analysis_.cols()) throw ContractViolation("SineGrid::inverse: dimension mismatch");
  x.noalias() = analysis_ * values;
}

std::shared_ptr<const SineGrid> make_grid(std::size_t modes, std::size_t points) {
  return std::make_shared<const SineGrid>(modes, points == 0 ? 4 * modes : points);
}

LinearFlow::LinearFlow(SpectralBasis basis, Layout layout) : basis_(std::move(basis)), layout_(layout) {
  const auto J = static_cast<Eigen::Index>(basis_.dimension());
  if (layout_ == Layout::plain) {
    weights_ = Eigen::VectorXd::Ones(J);
    return;
  }
  weights_.resize(2 * J);
  omega_.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const double rate = basis_.decay_rate(static_cast<std::size_t>(j));
    if (!(rate > 0.0)) throw ContractViolation("LinearFlow: wave layout needs lambda_j + kappa > 0");
    weights_[j] = rate;
    weights_[J + j] = 1.0;
    omega_[j] = std::sqrt(rate);
  }
}

std::size_t LinearFlow::state_dimension() const noexcept {
  return layout_ == Layout::plain ? basis_.dimension() : 2 * basis_.dimension();
}

double LinearFlow::growth_bound() const {
  return layout_ == Layout::plain ? basis_.growth_bound() : 0.0;
}

Propagator LinearFlow::propagator(double t) const {
  require_time(t, "LinearFlow::propagator");
  Propagator p;
  p.t = t;
  const auto J = static_cast<Eigen::Index>(basis_.dimension());
  if (layout_ == Layout::plain) {
    p.decay.resize(J);
    for (Eigen::Index j = 0; j < J; ++j) p.decay[j] = std::exp(-basis_.decay_rate(static_cast<std::size_t>(j)) * t);
  } else {
    p.cos_w = (omega_ * t).array().cos();
    p.sin_w = (omega_ * t).array().sin();
  }
  return p;
}

void LinearFlow::apply(const Propagator& p, StateVector& x) const {
  if (static_cast<std::size_t>(x.size()) != state_dimension()) {
    throw ContractViolation("LinearFlow::apply: dimension mismatch");
  }
  if (p.t == 0.0) return;
  const auto J = static_cast<Eigen::Index>(basis_.dimension());
  if (layout_ == Layout::plain) {
    x.array() *= p.decay.array();
    return;
  }
  for (Eigen::Index j = 0; j < J; ++j) {
    const double u = x[j];
    const double v = x[J + j];
    x[j] = u * p.cos_w[j] + v * p.sin_w[j] / omega_[j];
    x[J + j] = -u * omega_[j] * p.sin_w[j] + v * p.cos_w[j];
  }
}

StateVector LinearFlow::apply(double t, const StateVector& x) const {
  StateVector out = x;
  apply(propagator(t), out);
  return out;
}

double LinearFlow::inner(const StateVector& x, const StateVector& y) const {
  return (weights_.array() * x.array() * y.array()).sum();
}

double LinearFlow::squared_norm(const StateVector& x) const { return inner(x, x); }

}  // namespace mildlevy
