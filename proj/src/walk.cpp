#include "gtwalk/walk.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace gtwalk {

void WalkConfig::validate(const ManifoldModel& model) const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorKind::InvalidInput, "alpha must be positive");
  if (!(t1 < t2)) fail(ErrorKind::InvalidInput, "time window needs t1 < t2");
  if (!(alpha * alpha < t2 - t1))
    fail(ErrorKind::InvalidInput, "alpha^2 must be smaller than t2 - t1 (at least one full step)");
  if (!model.window().contains(t1) || !model.window().contains(t2))
    fail(ErrorKind::InvalidInput, "walk window lies outside the model's time window");
  if (start.size() != model.ambient_dim())
    fail(ErrorKind::InvalidInput, "start point has the wrong number of coordinates");
  if (!start.allFinite()) fail(ErrorKind::InvalidInput, "start point is not finite");
  if (model.constraint_residual(start) > 1e-8 * std::max(1.0, start.squaredNorm()))
    fail(ErrorKind::InvalidInput, "start point is not on the manifold");
  if (reference_point) {
    if (reference_point->size() != model.ambient_dim() || !reference_point->allFinite())
      fail(ErrorKind::InvalidInput, "reference point is malformed");
  }
  if (exit_radius && !(*exit_radius > 1.0)) fail(ErrorKind::InvalidInput, "exit radius must exceed 1");
}

Schedule Schedule::make(double t1, double t2, double alpha) {
  if (!(alpha > 0.0) || !(t1 < t2)) fail(ErrorKind::InvalidInput, "schedule needs alpha > 0 and t1 < t2");
  const double a2 = alpha * alpha;
  const double ratio = (t2 - t1) / a2;
  if (ratio > 1e9) fail(ErrorKind::InvalidInput, "schedule: more than 1e9 steps");
  const double nearest = std::round(ratio);
  const long steps = std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)
                         ? static_cast<long>(nearest)
                         : static_cast<long>(std::ceil(ratio));
  Schedule s{t1, t2, alpha, static_cast<int>(std::max(1L, steps)), {}};
  s.times.resize(s.steps + 1);
  for (int n = 0; n < s.steps; ++n) s.times[n] = std::min(t1 + a2 * n, t2);
  s.times[s.steps] = t2;
  return s;
}

int Schedule::index_at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const int n = static_cast<int>(it - times.begin()) - 1;
  return std::clamp(n, 0, steps - 1);
}

TangentVector scaled_noise(const ManifoldModel& model, double t, const Point& x, const Vector& xi,
                           FrameOrder order) {
  const Frame frame = frame_at(model, t, x, order);
  return {x, std::sqrt(model.dim() + 2.0) * frame.apply(xi)};
}

StepResult step(const ManifoldModel& model, double t, const Point& x, const Vector& xi, double alpha,
                bool use_drift, FrameOrder order, double fraction) {
  if (xi.size() != model.dim()) fail(ErrorKind::InvalidInput, "step: noise has the wrong dimension");
  if (xi.norm() > 1.0 + 1e-12) fail(ErrorKind::InvalidInput, "step: noise lies outside the unit ball");
  StepResult out;
  out.noise.xi = xi;
  out.noise.xi_tilde = scaled_noise(model, t, x, xi, order);
  Vector v = alpha * out.noise.xi_tilde.components;
  if (use_drift && model.has_drift()) v += alpha * alpha * model.drift(t, x);
  out.step_vector = {x, v};
  out.point = exp(model, t, x, fraction * v);
  return out;
}

Vector walk_noise(std::uint64_t seed, std::uint64_t path_index, std::uint64_t step, int dim) {
  RandomStream stream(seed, path_index, step, StreamPurpose::WalkNoise);
  return sample_unit_ball(dim, stream);
}

namespace {

WalkPath walk_from_noise(const ManifoldModel& model, const WalkConfig& config,
                         const std::vector<Vector>* recorded, std::uint64_t path_index) {
  config.validate(model);
  WalkPath path;
  path.schedule = Schedule::make(config.t1, config.t2, config.alpha);
  const int steps = path.schedule.steps;
  if (recorded && static_cast<int>(recorded->size()) != steps)
    fail(ErrorKind::InvalidInput, "replay: noise record length differs from the schedule");
  path.skeleton.reserve(steps + 1);
  path.step_vectors.reserve(steps);
  path.noise_record.reserve(steps);
  path.skeleton.push_back(config.start);
  for (int n = 0; n < steps; ++n) {
    const Vector xi = recorded ? (*recorded)[n] : walk_noise(config.seed, path_index, n, model.dim());
    StepResult r;
    try {
      r = step(model, path.schedule.times[n], path.skeleton.back(), xi, config.alpha, config.use_drift,
               config.frame_order, path.schedule.fraction(n));
    } catch (const Error& e) {
      fail(e.kind(), "walk step " + std::to_string(n) + ": " + e.what());
    }
    if (!r.point.allFinite()) fail(ErrorKind::Numerical, "walk step " + std::to_string(n) + ": non-finite point");
    path.skeleton.push_back(r.point);
    path.step_vectors.push_back(r.step_vector);
    path.noise_record.push_back(xi);
  }
  return path;
}

}  // namespace

WalkPath run_walk(const ManifoldModel& model, const WalkConfig& config, std::uint64_t path_index) {
  return walk_from_noise(model, config, nullptr, path_index);
}

WalkPath replay_walk(const ManifoldModel& model, const WalkConfig& config, const std::vector<Vector>& noise) {
  return walk_from_noise(model, config, &noise, 0);
}

Point interpolate(const ManifoldModel& model, const WalkPath& path, double t) {
  const Schedule& s = path.schedule;
  if (!(t >= s.t1 - 1e-12 && t <= s.t2 + 1e-12))
    fail(ErrorKind::InvalidInput, "interpolate: time outside the walk window");
  const int n = s.index_at(t);
  const double fraction = (std::clamp(t, s.times[n], s.times[n + 1]) - s.times[n]) / (s.alpha * s.alpha);
  if (fraction == 0.0) return path.skeleton[n];
  return exp(model, s.times[n], path.skeleton[n], fraction * path.step_vectors[n].components);
}

double exit_time(const WalkPath& path, const ManifoldModel& model, const Point& o, double R) {
  if (!(R > 1.0)) fail(ErrorKind::InvalidInput, "exit_time: R must exceed 1");
  for (std::size_t n = 0; n < path.skeleton.size(); ++n) {
    const double t = path.schedule.times[n];
    if (distance(model, t, o, path.skeleton[n]) > R - 1.0) return t;
  }
  return kInfinity;
}

int poisson_jump_count(std::uint64_t seed, std::uint64_t path_index, double t1, double t2, double alpha,
                       int cap, std::vector<double>* jump_times) {
  RandomStream stream(seed, path_index, 0, StreamPurpose::Poisson);
  const double mean_gap = alpha * alpha;
  int count = 0;
  double t = t1;
  while (count < cap) {
    t += mean_gap * stream.exponential();
    if (t > t2) break;
    ++count;
    if (jump_times) jump_times->push_back(t);
  }
  return count;
}

int SubordinatedWalk::jumps_by(double t) const {
  return static_cast<int>(std::upper_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin());
}

SubordinatedWalk subordinated_walk(const ManifoldModel& model, const WalkConfig& config,
                                   std::uint64_t path_index) {
  SubordinatedWalk out{run_walk(model, config, path_index), {}};
  poisson_jump_count(config.seed, path_index, config.t1, config.t2, config.alpha, out.path.schedule.steps,
                     &out.jump_times);
  return out;
}

void write_path_csv(std::ostream& out, const WalkPath& path, bool header,
                    std::optional<std::uint64_t> path_id) {
  const int d = path.skeleton.empty() ? 0 : static_cast<int>(path.skeleton.front().size());
  if (header) {
    if (path_id) out << "path,";
    out << "n,t";
    for (int i = 0; i < d; ++i) out << ",coord_" << i;
    out << '\n';
  }
  const auto precision = out.precision(17);
  for (std::size_t n = 0; n < path.skeleton.size(); ++n) {
    if (path_id) out << *path_id << ',';
    out << n << ',' << path.schedule.times[n];
    for (int i = 0; i < d; ++i) out << ',' << path.skeleton[n][i];
    out << '\n';
  }
  out.precision(precision);
}

}  // namespace gtwalk
