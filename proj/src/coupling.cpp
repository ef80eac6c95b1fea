#include "gtwalk/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "gtwalk/comparison.hpp"

namespace gtwalk {

std::string to_string(CouplingKind kind) {
  return kind == CouplingKind::Reflection ? "reflection" : "parallel";
}

void CouplingConfig::validate(const ManifoldModel& model) const {
  WalkConfig first = walk;
  first.start = start1;
  first.validate(model);
  WalkConfig second = walk;
  second.start = start2;
  second.validate(model);
  if (!model.has_log()) fail(ErrorKind::Unsupported, model.name() + ": coupling needs distances and log maps");
  if (!(delta() >= walk.alpha)) fail(ErrorKind::InvalidInput, "delta_couple must be at least alpha");
}

TangentVector reflection_map(const ManifoldModel& model, double t, const Geodesic& geodesic,
                             const TangentVector& v) {
  if (!(geodesic.length > 0.0)) fail(ErrorKind::Degenerate, "reflection_map: degenerate geodesic");
  const TangentVector moved = parallel_transport(model, geodesic, v);
  const Point& y = geodesic.end;
  Vector e = model.project(y, geodesic.final_velocity().components);
  e /= model.norm(t, y, e);
  return {y, moved.components - 2.0 * model.inner(t, y, moved.components, e) * e};
}

namespace {

bool same_point(const Point& a, const Point& b) { return (a - b).norm() == 0.0; }

Point move(const ManifoldModel& model, double t, const Point& x, const Vector& noise, double alpha,
           bool use_drift, double fraction) {
  Vector v = alpha * noise;
  if (use_drift && model.has_drift()) v += alpha * alpha * model.drift(t, x);
  return exp(model, t, x, fraction * v);
}

}  // namespace

CoupledStepResult coupled_step(const ManifoldModel& model, double t, const Point& x1, const Point& x2,
                               const Vector& xi, double alpha, CouplingKind kind, bool use_drift,
                               FrameOrder order, double fraction, bool coupled) {
  const int m = model.dim();
  if (xi.size() != m) fail(ErrorKind::InvalidInput, "coupled_step: noise has the wrong dimension");
  const double scale = std::sqrt(m + 2.0);
  const Frame frame = frame_at(model, t, x1, order);
  CoupledStepResult out;
  out.xi1 = {x1, scale * frame.apply(xi)};
  if (coupled || same_point(x1, x2)) {
    out.xi2 = {x2, out.xi1.components};
    out.lambda_star = 2.0 * scale * xi[0];
    out.x1 = move(model, t, x1, out.xi1.components, alpha, use_drift, fraction);
    out.x2 = same_point(x1, x2) ? out.x1 : move(model, t, x2, out.xi1.components, alpha, use_drift, fraction);
    return out;
  }
  const Geodesic geodesic = minimal_geodesic(model, t, x1, x2);
  // First variation of d(X1, X2) under the mirrored pair of moves, so that
  // d_{n+1} = d_n + alpha lambda* + O(alpha^2).
  out.lambda_star = -2.0 * model.inner(t, x1, out.xi1.components, geodesic.initial_velocity);
  out.xi2 = kind == CouplingKind::Reflection ? reflection_map(model, t, geodesic, out.xi1)
                                             : parallel_transport(model, geodesic, out.xi1);
  out.x1 = move(model, t, x1, out.xi1.components, alpha, use_drift, fraction);
  out.x2 = move(model, t, x2, out.xi2.components, alpha, use_drift, fraction);
  return out;
}

CoupledPath run_coupled(const ManifoldModel& model, const CouplingConfig& config, std::uint64_t path_index) {
  config.validate(model);
  const WalkConfig& w = config.walk;
  CoupledPath path;
  path.schedule = Schedule::make(w.t1, w.t2, w.alpha);
  const int steps = path.schedule.steps;
  path.x1.reserve(steps + 1);
  path.x2.reserve(steps + 1);
  path.distance.reserve(steps + 1);
  path.lambda_star.reserve(steps);
  path.coupled.reserve(steps + 1);
  path.coupling_index = steps + 1;

  const double delta = config.delta();
  bool is_coupled = false;
  auto record = [&](int n, Point x1, Point x2) {
    const double t = path.schedule.times[n];
    double d = same_point(x1, x2) ? 0.0 : distance(model, t, x1, x2);
    if (!is_coupled && d <= delta) {
      path.coupling_time = t;
      path.coupling_index = n;
      is_coupled = config.stick_after_coupling;
    }
    if (is_coupled) {
      x2 = x1;
      d = 0.0;
    }
    path.x1.push_back(std::move(x1));
    path.x2.push_back(std::move(x2));
    path.distance.push_back(d);
    path.coupled.push_back(is_coupled || d <= delta ? 1 : 0);
  };

  record(0, config.start1, config.start2);
  for (int n = 0; n < steps; ++n) {
    const Vector xi = walk_noise(w.seed, path_index, n, model.dim());
    CoupledStepResult r;
    try {
      r = coupled_step(model, path.schedule.times[n], path.x1.back(), path.x2.back(), xi, w.alpha, config.kind,
                       w.use_drift, w.frame_order, path.schedule.fraction(n), is_coupled);
    } catch (const Error& e) {
      fail(e.kind(), "coupled step " + std::to_string(n) + ": " + e.what());
    }
    path.lambda_star.push_back(r.lambda_star);
    record(n + 1, std::move(r.x1), std::move(r.x2));
  }
  return path;
}

double coupling_probability_bound(double d0, double k, double horizon) {
  if (!(d0 >= 0.0) || !(horizon >= 0.0))
    fail(ErrorKind::InvalidInput, "coupling_probability_bound: needs d0 >= 0 and horizon >= 0");
  if (d0 == 0.0) return 0.0;
  if (horizon == 0.0) return 1.0;
  return chi(d0 / (2.0 * std::sqrt(beta(horizon, k))));
}

std::vector<double> dominating_process(const CoupledPath& path, double k) {
  const Schedule& s = path.schedule;
  std::vector<double> u(path.distance.size());
  if (u.empty()) return u;
  u[0] = path.distance[0];
  for (std::size_t n = 0; n + 1 < u.size() && n < path.lambda_star.size(); ++n) {
    const double dt = s.times[n + 1] - s.times[n];
    u[n + 1] = std::exp(-0.5 * k * dt) * (u[n] + s.alpha * path.lambda_star[n]);
  }
  return u;
}

double contraction_violation(const CoupledPath& path, double k) {
  const Schedule& s = path.schedule;
  double running_min = kInfinity, worst = 0.0;
  for (std::size_t n = 0; n < path.distance.size(); ++n) {
    const double f = std::exp(0.5 * k * (s.times[n] - s.t1)) * path.distance[n];
    running_min = std::min(running_min, f);
    worst = std::max(worst, f - running_min);
  }
  return worst;
}

int pair_exit_index(const CoupledPath& path, const ManifoldModel& model, const Point& o, double R) {
  if (!(R > 1.0)) fail(ErrorKind::InvalidInput, "pair_exit_index: R must exceed 1");
  for (std::size_t n = 0; n < path.x1.size(); ++n) {
    const double t = path.schedule.times[n];
    if (distance(model, t, o, path.x1[n]) > R - 1.0 || distance(model, t, o, path.x2[n]) > R - 1.0)
      return static_cast<int>(n);
  }
  return path.schedule.steps + 1;
}

void write_coupled_csv(std::ostream& out, const CoupledPath& path, bool header,
                       std::optional<std::uint64_t> path_id) {
  const int d = path.x1.empty() ? 0 : static_cast<int>(path.x1.front().size());
  if (header) {
    if (path_id) out << "path,";
    out << "n,t";
    for (int i = 0; i < d; ++i) out << ",x1_" << i;
    for (int i = 0; i < d; ++i) out << ",x2_" << i;
    out << ",dist,lambda_star,coupled\n";
  }
  const auto precision = out.precision(17);
  for (std::size_t n = 0; n < path.x1.size(); ++n) {
    if (path_id) out << *path_id << ',';
    out << n << ',' << path.schedule.times[n];
    for (int i = 0; i < d; ++i) out << ',' << path.x1[n][i];
    for (int i = 0; i < d; ++i) out << ',' << path.x2[n][i];
    out << ',' << path.distance[n] << ',';
    if (n < path.lambda_star.size()) out << path.lambda_star[n];
    out << ',' << static_cast<int>(path.coupled[n]) << '\n';
  }
  out.precision(precision);
}

}  // namespace gtwalk
