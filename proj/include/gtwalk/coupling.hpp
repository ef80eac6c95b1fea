#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "gtwalk/walk.hpp"

namespace gtwalk {

enum class CouplingKind { Reflection, ParallelTransport };

std::string to_string(CouplingKind kind);

struct CouplingConfig {
  /// alpha, window, seed, drift, reference point, exit radius and frame order;
  /// walk.start is ignored.
  WalkConfig walk;
  Point start1;
  Point start2;
  CouplingKind kind = CouplingKind::Reflection;
  /// Distance at or below which the pair is declared coupled; 2 alpha if unset.
  std::optional<double> delta_couple;
  /// Curvature constant used by the diagnostics.
  double k = 0.0;
  bool stick_after_coupling = true;

  double delta() const { return delta_couple ? *delta_couple : 2.0 * walk.alpha; }
  void validate(const ManifoldModel& model) const;
};

struct CoupledStepResult {
  Point x1;
  Point x2;
  /// -2 <xi~1, g'(0)> for the geodesic g from x1 to x2; 2 sqrt(m+2) xi[0] on the diagonal.
  double lambda_star = 0.0;
  TangentVector xi1;
  TangentVector xi2;
};

struct CoupledPath {
  Schedule schedule;
  std::vector<Point> x1;
  std::vector<Point> x2;
  /// d_{g(t_n)}(X1, X2) at each schedule time.
  std::vector<double> distance;
  /// lambda_star[n] is the value produced by step n -> n + 1.
  std::vector<double> lambda_star;
  std::vector<std::uint8_t> coupled;
  double coupling_time = kInfinity;
  /// Schedule index of the coupling time; steps + 1 if never coupled.
  int coupling_index = 0;
};

/// m(v) = Pv - 2 <Pv, g'(d)> g'(d): transport along the geodesic then reflect
/// in the hyperplane orthogonal to its final velocity.
TangentVector reflection_map(const ManifoldModel& model, double t, const Geodesic& geodesic,
                             const TangentVector& v);

/// One synchronized step of the pair. With `coupled` (or x1 == x2) both
/// points use the frame at the common point.
CoupledStepResult coupled_step(const ManifoldModel& model, double t, const Point& x1, const Point& x2,
                               const Vector& xi, double alpha, CouplingKind kind, bool use_drift = false,
                               FrameOrder order = FrameOrder::Canonical, double fraction = 1.0,
                               bool coupled = false);

/// X1 uses exactly the noise of run_walk(start1) with the same seed and path
/// index, so its skeleton is bit-identical to that single walk.
CoupledPath run_coupled(const ManifoldModel& model, const CouplingConfig& config,
                        std::uint64_t path_index = 0);

/// chi(d0 / (2 sqrt(beta(horizon, k)))).
double coupling_probability_bound(double d0, double k, double horizon);

/// U(t_n) = e^{-k(t_n - t1)/2} (a + alpha sum_{j<=n} e^{k(t_{j-1} - t1)/2} lambda*_j),
/// with a = distance[0]; equivalently U_{n+1} = e^{-k(t_{n+1}-t_n)/2}(U_n + alpha lambda*_{n+1}).
std::vector<double> dominating_process(const CoupledPath& path, double k);

/// max over schedule pairs s <= t of e^{k(t-t1)/2} d(t) - e^{k(s-t1)/2} d(s).
double contraction_violation(const CoupledPath& path, double k);

/// First schedule index at which either point is farther than R - 1 from o,
/// or steps + 1.
int pair_exit_index(const CoupledPath& path, const ManifoldModel& model, const Point& o, double R);

/// CSV "n,t,x1_0..,x2_0..,dist,lambda_star,coupled"; lambda_star on row n is
/// the value used by step n -> n + 1 (empty on the last row).
void write_coupled_csv(std::ostream& out, const CoupledPath& path, bool header = true,
                       std::optional<std::uint64_t> path_id = std::nullopt);

}  // namespace gtwalk
