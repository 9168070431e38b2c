#pragma once

#include "mildlevy/mild_solver.hpp"
#include "mildlevy/models.hpp"
#include "mildlevy/statistics.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mildlevy {

/// The p = 1 martingale-inequality constant entering the continuity bound.
class BDGConstant {
 public:
  explicit BDGConstant(double value = 3.0);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

struct TheoremConstants {
  double C1 = 0.0;
  double C2 = 0.0;
  double gamma = 0.0;
};

/// C1 = 4M + 2 + C (8 c^2 + 4), C2 = 8 c^2 + 4, gamma = 2 alpha + C1.
TheoremConstants compute_constants(double M, double C, double alpha, BDGConstant bdg = BDGConstant());

enum class CheckStatus { pass, fail, warning };
std::string to_string(CheckStatus status);

struct TheoremReport {
  std::string check;
  CheckStatus status = CheckStatus::fail;
  double lhs = 0.0;
  double ci_half_width = 0.0;
  double rhs = 0.0;
  std::size_t ensemble = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  double bdg = 3.0;
  double runtime_seconds = 0.0;  // printed, never serialized (reports stay byte-identical)
  nlohmann::json details = nlohmann::json::object();

  bool passed() const noexcept { return status != CheckStatus::fail; }
};

nlohmann::json to_json(const TheoremReport& report);
/// One line per report: check, verdict, lhs +- ci, rhs, ensemble, runtime.
std::string format_table(std::span<const TheoremReport> reports);

/// Ensemble discretization shared by the Monte Carlo checks.
struct EnsembleSettings {
  double T = 1.0;
  double dt = 1e-3;
  std::size_t paths = 1000;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: default_thread_count()
};

/// Discrete Ito-type inequality on every recorded time of every path:
/// ||X_i||^2 <= RHS_i + tol (1 + |RHS_i|), with
/// RHS_i = e^{2 alpha (t_i - t_{i-1})} RHS_{i-1} + sum e^{2 alpha (t_i - s)} (2 <X_{s-}, dZ_s> + ||dZ_s||^2).
TheoremReport check_ito_inequality(std::span<const PathRecord> paths, double relative_tolerance = 1e-9);

/// Simulates the ensemble and runs check_ito_inequality on it.
TheoremReport run_ito_check(const ModelDescriptor& model, const EnsembleSettings& settings,
                            double relative_tolerance = 1e-9);

/// Coupled-pair continuity bound between X^0 (base) and X^1 (perturbed):
/// E sup_t e^{-2 alpha t} ||X^1_t - X^0_t||^2 against
/// 2 e^{C1 T} (E||dX_0||^2 + int e^{-2 alpha t} E||df(X^0)||^2)
///   + C2 e^{C1 T} int e^{-2 alpha t} (E||dg(X^0)||_HS^2 + m2 E||dH(X^0)||^2).
TheoremReport check_continuity_bound(const ModelDescriptor& base, const ModelDescriptor& perturbed,
                                     const EnsembleSettings& settings, BDGConstant bdg = BDGConstant());

/// d_n = E sup_t ||X^n_t - X^0_t||^2 for a family (n, model_n) converging to base.
TheoremReport check_coefficient_convergence(const ModelDescriptor& base,
                                            const std::vector<std::pair<double, ModelDescriptor>>& family,
                                            const EnsembleSettings& settings, double threshold);

/// E||X_t - Y_t||^2 <= 2 e^{gamma t} ||X_0 - Y_0||^2 at the checkpoints, where X
/// starts from model.x0 and Y from y0 under the same coefficients and noise.
TheoremReport check_exponential_stability(const ModelDescriptor& model, const StateVector& y0,
                                          const std::vector<double>& checkpoints, const EnsembleSettings& settings,
                                          BDGConstant bdg = BDGConstant());

/// e(lambda) = E sup_t ||X^lambda_t - X^ref_t||^2 with X^ref the semi-implicit
/// scheme and X^lambda the explicit scheme with the Yosida drift.
TheoremReport check_yosida_convergence(const ModelDescriptor& model, const std::vector<double>& lambdas,
                                       const EnsembleSettings& settings, double relative_threshold = 1e-2);

struct MarkovSettings {
  double r = 0.0;
  double s = 0.5;
  double t = 1.0;
  double dt = 1e-2;
  std::size_t direct_paths = 10000;
  std::size_t outer_paths = 1000;
  std::size_t inner_paths = 100;
  std::size_t replay_paths = 20;
  double ks_threshold = 0.01;
  double replay_tolerance = 1e-9;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

/// phi(x) = tanh(first coefficient of x).
double markov_functional(const StateVector& x);

/// Direct estimate of E phi(X(r, x, t)) against the nested estimate through
/// restarts at s, a two-sample KS test, and a shared-noise flow replay.
TheoremReport check_markov(const ModelDescriptor& model, const MarkovSettings& settings);

/// Monte Carlo audit of declared (M, C, D): worst sampled ratios
///   <F(x)-F(y), x-y> / ||x-y||^2,
///   (||g(x)-g(y)||_HS^2 + m2 ||H(x)-H(y)||^2) / ||x-y||^2,
///   (||F(x)||^2 + ||g(x)||_HS^2 + m2 ||H(x)||^2) / (1 + ||x||^2),
/// each failing with its witness when ratio > declared + slack (1 + |declared|).
TheoremReport audit_hypothesis(const Equation& eq, const DeclaredConstants& declared, std::size_t samples,
                               Xoshiro256& rng, double slack = 1e-6);
TheoremReport audit_hypothesis(const DelayModel& model, const DeclaredConstants& declared, std::size_t samples,
                               Xoshiro256& rng, double slack = 1e-6);
TheoremReport audit_hypothesis(const ModelDescriptor& model, std::size_t samples, Xoshiro256& rng,
                               double slack = 1e-6);

/// Returns copies of the models whose declared constants are replaced by the
/// componentwise maximum over all of them, so they can be coupled.
std::vector<ModelDescriptor> share_declared_constants(std::vector<ModelDescriptor> models);

}  // namespace mildlevy
