#include "mildlevy/levy_noise.hpp"

#include "mildlevy/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace mildlevy {

LevyMeasure LevyMeasure::atoms(std::vector<Atom> atoms) {
  LevyMeasure m;
  for (const auto& a : atoms) {
    if (!std::isfinite(a.mark) || !(a.rate > 0.0) || !std::isfinite(a.rate)) {
      throw ConfigurationError("LevyMeasure: atoms need finite marks and positive finite rates");
    }
    m.rate_ += a.rate;
    m.m1_ += a.rate * a.mark;
    m.m2_ += a.rate * a.mark * a.mark;
  }
  m.atoms_ = std::move(atoms);
  return m;
}

LevyMeasure LevyMeasure::uniform(double a, double b, double rate) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ConfigurationError("LevyMeasure: uniform marks need finite a < b");
  }
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw ConfigurationError("LevyMeasure: rate must be finite and >= 0");
  LevyMeasure m;
  m.uniform_ = true;
  m.a_ = a;
  m.b_ = b;
  m.rate_ = rate;
  m.m1_ = rate * 0.5 * (a + b);
  m.m2_ = rate * (a * a + a * b + b * b) / 3.0;
  return m;
}

double LevyMeasure::sample_mark(Xoshiro256& rng) const {
  if (uniform_) return a_ + (b_ - a_) * rng.uniform();
  if (atoms_.empty()) throw ContractViolation("LevyMeasure::sample_mark: measure has no atoms");
  double u = rng.uniform() * rate_;
  for (const auto& atom : atoms_) {
    if (u < atom.rate) return atom.mark;
    u -= atom.rate;
  }
  return atoms_.back().mark;
}

double LevyMeasure::integrate(const std::function<double(double)>& h) const {
  if (rate_ == 0.0) return 0.0;
  if (!uniform_) {
    double acc = 0.0;
    for (const auto& atom : atoms_) acc += atom.rate * h(atom.mark);
    return acc;
  }
  static constexpr std::array<double, 5> nodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                                  0.5384693101056831, 0.9061798459386640};
  static constexpr std::array<double, 5> weights = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                    0.4786286704993665, 0.2369268850561891};
  const double mid = 0.5 * (a_ + b_);
  const double half = 0.5 * (b_ - a_);
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * h(mid + half * nodes[i]);
  return rate_ * 0.5 * acc;  // mean over [a, b] = (1/(b-a)) * half * sum
}

Eigen::VectorXd sample_wiener_increment(std::size_t K, double dt, Xoshiro256& rng) {
  if (!(dt > 0.0)) throw ContractViolation("sample_wiener_increment: dt must be positive");
  Eigen::VectorXd w(static_cast<Eigen::Index>(K));
  std::normal_distribution<double> normal(0.0, std::sqrt(dt));
  for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = normal(rng);
  return w;
}

std::vector<Jump> sample_jumps(const LevyMeasure& measure, double t0, double t1, Xoshiro256& rng) {
  if (!(t1 > t0)) throw ContractViolation("sample_jumps: need t1 > t0");
  std::vector<Jump> jumps;
  const double mean = measure.total_rate() * (t1 - t0);
  if (mean <= 0.0) return jumps;
  std::poisson_distribution<int> count(mean);
  const int n = count(rng);
  jumps.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double time = t1 - (t1 - t0) * rng.uniform();  // (t0, t1]
    jumps.push_back({time, measure.sample_mark(rng)});
  }
  std::sort(jumps.begin(), jumps.end(), [](const Jump& a, const Jump& b) { return a.time < b.time; });
  return jumps;
}

StateVector compensator_integral(const LevyMeasure& measure,
                                 const std::function<StateVector(double, const StateVector&)>& k,
                                 const StateVector& x, double dt) {
  StateVector acc = StateVector::Zero(x.size());
  if (measure.total_rate() > 0.0) {
    if (!measure.is_uniform()) {
      for (const auto& atom : measure.atom_list()) acc += atom.rate * k(atom.mark, x);
    } else {
      // Gauss-Legendre on the mark law, applied componentwise.
      static constexpr std::array<double, 5> nodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                                      0.5384693101056831, 0.9061798459386640};
      static constexpr std::array<double, 5> weights = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                        0.4786286704993665, 0.2369268850561891};
      const double mid = 0.5 * (measure.uniform_lower() + measure.uniform_upper());
      const double half = 0.5 * (measure.uniform_upper() - measure.uniform_lower());
      for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * k(mid + half * nodes[i], x);
      acc *= 0.5 * measure.total_rate();
    }
    acc *= dt;
  }
  if (!acc.allFinite()) throw NumericOverflow("compensator_integral: non-finite result");
  return acc;
}

std::vector<double> discrete_quadratic_variation(std::span<const double> squared_increment_norms) {
  std::vector<double> qv;
  qv.reserve(squared_increment_norms.size());
  double acc = 0.0;
  for (const double s : squared_increment_norms) {
    acc += s;
    qv.push_back(acc);
  }
  return qv;
}

std::vector<double> discrete_quadratic_variation(std::span<const StateVector> increments) {
  std::vector<double> sq;
  sq.reserve(increments.size());
  for (const auto& dz : increments) sq.push_back(dz.squaredNorm());
  return discrete_quadratic_variation(std::span<const double>(sq));
}

NoiseSource::NoiseSource(std::uint64_t seed, std::uint64_t path, std::size_t wiener_modes, double dt,
                         LevyMeasure measure)
    : seed_(seed),
      path_(path),
      wiener_seed_(derive_key(seed, {path, static_cast<std::uint64_t>(StreamTag::wiener)})),
      jump_seed_(derive_key(seed, {path, static_cast<std::uint64_t>(StreamTag::jumps)})),
      K_(wiener_modes),
      dt_(dt),
      measure_(std::move(measure)) {
  if (!(dt > 0.0)) throw ContractViolation("NoiseSource: dt must be positive");
}

std::uint64_t NoiseSource::wiener_key(std::int64_t n) const {
  return derive_key(wiener_seed_, {static_cast<std::uint64_t>(n)});
}

std::uint64_t NoiseSource::jump_key(std::int64_t n) const {
  return derive_key(jump_seed_, {static_cast<std::uint64_t>(n)});
}

NoiseSource NoiseSource::with_stream_seed(StreamTag tag, std::uint64_t sub_seed) const {
  NoiseSource copy = *this;
  if (tag == StreamTag::wiener) {
    copy.wiener_seed_ = sub_seed;
  } else if (tag == StreamTag::jumps) {
    copy.jump_seed_ = sub_seed;
  } else {
    throw ContractViolation("NoiseSource::with_stream_seed: only wiener and jumps streams exist");
  }
  return copy;
}

NoiseIncrement NoiseSource::interval(std::int64_t n) const {
  NoiseIncrement inc;
  inc.t0 = static_cast<double>(n) * dt_;
  inc.t1 = static_cast<double>(n + 1) * dt_;
  Xoshiro256 jump_rng(jump_key(n));
  inc.jumps = sample_jumps(measure_, inc.t0, inc.t1, jump_rng);
  Xoshiro256 wiener_rng(wiener_key(n));
  inc.wiener = sample_wiener_increment(K_, dt_, wiener_rng);
  if (!inc.jumps.empty() && K_ > 0) {
    Xoshiro256 bridge_rng(derive_key(wiener_key(n), {1}));
    std::normal_distribution<double> normal(0.0, 1.0);
    inc.bridge.resize(static_cast<Eigen::Index>(K_), static_cast<Eigen::Index>(inc.jumps.size()));
    for (Eigen::Index c = 0; c < inc.bridge.cols(); ++c) {
      for (Eigen::Index k = 0; k < inc.bridge.rows(); ++k) inc.bridge(k, c) = normal(bridge_rng);
    }
  }
  return inc;
}

}  // namespace mildlevy
