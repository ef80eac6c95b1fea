#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "gtwalk/manifold.hpp"
#include "gtwalk/rng.hpp"

namespace gtwalk {

struct WalkConfig {
  double alpha = 0.1;
  double t1 = 0.0;
  double t2 = 1.0;
  std::uint64_t seed = 0;
  Point start;
  bool use_drift = false;
  /// Reference point o for exit times and radial comparison; model origin if unset.
  std::optional<Point> reference_point;
  std::optional<double> exit_radius;
  FrameOrder frame_order = FrameOrder::Canonical;

  /// Throws InvalidInput unless alpha > 0, t1 < t2, alpha^2 < t2 - t1, the
  /// window lies in the model's, and start is a finite point of the model.
  void validate(const ManifoldModel& model) const;
  Point reference(const ManifoldModel& model) const {
    return reference_point ? *reference_point : model.origin();
  }
};

/// t_n = (t1 + alpha^2 n) ^ t2 for n = 0..steps; the last step may be partial.
struct Schedule {
  double t1 = 0.0;
  double t2 = 1.0;
  double alpha = 0.1;
  int steps = 0;
  std::vector<double> times;

  static Schedule make(double t1, double t2, double alpha);
  /// (t_{n+1} - t_n) / alpha^2: 1 except possibly for the final step.
  double fraction(int n) const { return (times[n + 1] - times[n]) / (alpha * alpha); }
  /// Largest n with t_n <= t (clamped to steps - 1 so a step follows it).
  int index_at(double t) const;
};

struct NoiseSample {
  Vector xi;
  TangentVector xi_tilde;
};

struct StepResult {
  Point point;
  NoiseSample noise;
  /// alpha xi~ + alpha^2 Z(t, x): the full step vector before the time fraction.
  TangentVector step_vector;
};

struct WalkPath {
  Schedule schedule;
  std::vector<Point> skeleton;
  std::vector<TangentVector> step_vectors;
  std::vector<Vector> noise_record;
};

/// xi~ = sqrt(m+2) Phi(t, x) xi.
TangentVector scaled_noise(const ManifoldModel& model, double t, const Point& x, const Vector& xi,
                           FrameOrder order = FrameOrder::Canonical);

/// exp_x(fraction (alpha xi~ + alpha^2 Z(t, x))) at time t.
StepResult step(const ManifoldModel& model, double t, const Point& x, const Vector& xi, double alpha,
                bool use_drift, FrameOrder order = FrameOrder::Canonical, double fraction = 1.0);

/// Noise of step n (0-based) of the given path.
Vector walk_noise(std::uint64_t seed, std::uint64_t path_index, std::uint64_t step, int dim);

WalkPath run_walk(const ManifoldModel& model, const WalkConfig& config, std::uint64_t path_index = 0);

/// Replays a recorded noise sequence through step; reproduces run_walk exactly.
WalkPath replay_walk(const ManifoldModel& model, const WalkConfig& config,
                     const std::vector<Vector>& noise);

/// X^alpha(t): the defining geodesic of the current step at fraction (t - t_n)/alpha^2.
Point interpolate(const ManifoldModel& model, const WalkPath& path, double t);

/// First schedule time with d_{g(t_n)}(o, X(t_n)) > R - 1, or kInfinity.
double exit_time(const WalkPath& path, const ManifoldModel& model, const Point& o, double R);

/// The walk time-changed by t -> (t1 + alpha^2 Pois(t - t1)) ^ t_N, with a
/// Poisson process of intensity alpha^{-2}.
struct SubordinatedWalk {
  WalkPath path;
  /// Jump times in (t1, t2]; at most path.schedule.steps are kept.
  std::vector<double> jump_times;

  int jumps_by(double t) const;
  /// Schedule index the time change selects at t.
  int index_at(double t) const { return jumps_by(t); }
  Point at(double t) const { return path.skeleton[index_at(t)]; }
};

SubordinatedWalk subordinated_walk(const ManifoldModel& model, const WalkConfig& config,
                                   std::uint64_t path_index = 0);

/// Number of Poisson jumps in (t1, t2] with intensity alpha^{-2}, capped at cap.
int poisson_jump_count(std::uint64_t seed, std::uint64_t path_index, double t1, double t2, double alpha,
                       int cap, std::vector<double>* jump_times = nullptr);

/// CSV "n,t,coord_0..coord_{d-1}", or "path,n,t,..." rows when path_id is set.
void write_path_csv(std::ostream& out, const WalkPath& path, bool header = true,
                    std::optional<std::uint64_t> path_id = std::nullopt);

}  // namespace gtwalk
