#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gtwalk/rng.hpp"
#include "gtwalk/stats.hpp"
#include "gtwalk/walk.hpp"

namespace gtwalk {

/// chi(a) = P(|N(0,1)| <= a) = erf(a / sqrt 2).
double chi(double a);

/// (e^{kt} - 1)/k, or t for k = 0 (series for |k| < 1e-8).
double beta(double t, double k);

/// dU = -(k/2) U dt + 2 dB started from a at time t1.
struct OUParams {
  double a = 1.0;
  double k = 0.0;
  double t1 = 0.0;
};

/// Variance 4 (1 - e^{-kh}) / k of the exact transition over a step h.
double ou_transition_variance(double h, double k);

/// Exact Gaussian transitions on the grid t1, t1 + h, ..., t1 + horizon (the
/// last step may be shorter). Returns the values at the grid times.
std::vector<double> simulate_ou(const OUParams& params, double h, double horizon, RandomStream& stream);

struct OuSurvival {
  McEstimate estimate;
  /// chi(a / (2 sqrt(beta(horizon, k)))).
  double analytic = 0.0;
  /// Known grid bias of the discretized infimum, 2 sqrt(h).
  double bias_bound = 0.0;
};

/// Fraction of paths whose grid infimum stays positive. Path p uses the
/// OrnsteinUhlenbeck stream (seed, p); paths stop at the first non-positive value.
OuSurvival ou_survival_probability(const OUParams& params, double horizon, long n_paths, double h,
                                   std::uint64_t seed, int threads = 1);

/// b on [0, inf): zero, constant c, linear c*s, or a piecewise-linear table
/// (constant beyond its ends).
struct DriftProfile {
  enum class Kind { Zero, Constant, Linear, Table };
  Kind kind = Kind::Zero;
  double c = 0.0;
  std::vector<std::pair<double, double>> table;

  static DriftProfile zero() { return {}; }
  static DriftProfile constant(double c);
  static DriftProfile linear(double slope = 1.0);
  static DriftProfile sampled(std::vector<std::pair<double, double>> table);

  double value(double s) const;
  /// int_0^r b(s) ds.
  double integral(double r) const;
  std::string describe() const;
};

struct RadialComparisonSpec {
  DriftProfile b;
  double C0 = 1.0;
  double r0 = 0.5;

  void validate() const;
  /// C0 + (1/2) int_0^r b.
  double phi(double r) const;
  /// 2/(r - 2 r0) on (2r0, 2r0+1], a decreasing cubic join on (2r0+1, 2r0+2), 0 beyond.
  double psi(double r) const;
};

enum class FellerDecision { Explodes, Survives, Inconclusive };

std::string to_string(FellerDecision d);

struct FellerResult {
  FellerDecision decision = FellerDecision::Inconclusive;
  /// I(y_max) at the base step.
  double integral = 0.0;
  /// (I(Y) - I(Y/2)) / (I(Y/2) - I(Y/4)) at the base step.
  double increment_ratio = 0.0;
  /// Same ratio at half the step.
  double increment_ratio_refined = 0.0;
  double step = 0.0;
};

/// Evaluates I(Y) = int_1^Y exp(-B(y)) int_1^y exp(B(z)) dz dy with
/// B(y) = int_1^y (C + int_0^u b) du. A divergent integral (increments
/// that do not shrink) means no explosion; increments shrinking geometrically
/// mean explosion. The decision must agree at step h and h/2.
FellerResult feller_explosion_test(const RadialComparisonSpec& spec, double C, double y_max, double step = 0.0);

struct RadialPath {
  std::vector<double> times;
  std::vector<double> values;
  /// True if a value fell to 2 r0 or below; the path stops there.
  bool left_domain = false;
};

/// rho_{n+1} = rho_n + f_n (alpha lambda_{n+1} + alpha^2 (phi + psi)(rho_n)), f_n the
/// schedule fraction of step n.
RadialPath simulate_radial_comparison(const RadialComparisonSpec& spec, double a0, const Schedule& schedule,
                                      const std::vector<double>& lambdas);

/// Euler-Maruyama for d rho = dB + (phi + psi)(rho) dt on [t1, t1 + horizon].
RadialPath simulate_radial_diffusion(const RadialComparisonSpec& spec, double a0, double t1, double horizon,
                                     double h, RandomStream& stream);

/// lambda_{n+1} = <xi~_{n+1}, d/du of the o -> X_n geodesic at X_n>, or
/// sqrt(m+2) xi_{n+1}[0] while X_n is within r0 of o.
std::vector<double> radial_lambdas(const ManifoldModel& model, const WalkPath& path, const Point& o, double r0,
                                   FrameOrder order = FrameOrder::Canonical);

}  // namespace gtwalk
