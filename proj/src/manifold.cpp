#include "gtwalk/manifold.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace gtwalk {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Euclidean: return "euclidean";
    case ModelKind::RoundSphere: return "sphere";
    case ModelKind::ScaledMetric: return "scaled";
    case ModelKind::Hyperbolic: return "hyperbolic";
    case ModelKind::NumericChart: return "numeric";
  }
  return "unknown";
}

Matrix ManifoldModel::frame_candidates(const Point& x) const {
  Matrix out(ambient_dim_, ambient_dim_);
  for (int i = 0; i < ambient_dim_; ++i) {
    Vector e = Vector::Zero(ambient_dim_);
    e[i] = 1.0;
    out.col(i) = project(x, e);
  }
  return out;
}

Vector ManifoldModel::log(double, const Point&, const Point&) const {
  fail(ErrorKind::Unsupported, name() + ": log map is not available on this model");
}

double ManifoldModel::distance(double t, const Point& x, const Point& y) const {
  return norm(t, x, log(t, x, y));
}

Vector ManifoldModel::drift(double t, const Point& x) const {
  if (!drift_) return Vector::Zero(ambient_dim_);
  return project(x, drift_(t, x));
}

Vector ManifoldModel::christoffel_contract(double, const Point&, const Vector&,
                                           const Vector&) const {
  return Vector::Zero(ambient_dim_);
}

Vector ManifoldModel::drift_derivative(double t, const Point& x, const Vector& v) const {
  if (!drift_) return Vector::Zero(ambient_dim_);
  constexpr double eps = 1e-5;
  const Point ahead = flow(t, x, v, eps).point;
  const Point behind = flow(t, x, v, -eps).point;
  const Vector directional = (drift_(t, ahead) - drift_(t, behind)) / (2.0 * eps);
  return project(x, directional) + christoffel_contract(t, x, v, drift(t, x));
}

// Geodesic ---------------------------------------------------------------

GeodesicState Geodesic::state(double u) const { return model->flow(time, start, initial_velocity, u); }

Point Geodesic::sample(double u) const { return state(u).point; }

Vector Geodesic::velocity(double u) const { return state(u).velocity; }

TangentVector Geodesic::final_velocity() const {
  GeodesicState s = state(length);
  return {end, model->project(end, s.velocity)};
}

// Operations ------------------------------------------------------------

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) fail(ErrorKind::InvalidInput, std::string("non-finite ") + what);
}

}  // namespace

Point exp(const ManifoldModel& model, double t, const Point& x, const Vector& v) {
  require_finite(x, "base point");
  require_finite(v, "tangent vector");
  if (!std::isfinite(t)) fail(ErrorKind::InvalidInput, "non-finite time");
  if (v.squaredNorm() == 0.0) return x;
  return model.flow(t, x, v, 1.0).point;
}

Point exp(const ManifoldModel& model, double t, const TangentVector& v) {
  return exp(model, t, v.base, v.components);
}

Geodesic minimal_geodesic(const ManifoldModel& model, double t, const Point& x, const Point& y) {
  if (!model.has_log())
    fail(ErrorKind::Unsupported, model.name() + ": minimal geodesics are not available");
  if ((x - y).norm() < 1e-12) fail(ErrorKind::Degenerate, "minimal_geodesic: x and y coincide");
  const Vector v = model.log(t, x, y);
  const double length = model.norm(t, x, v);
  if (!(length > 0.0)) fail(ErrorKind::Degenerate, "minimal_geodesic: zero-length geodesic");
  return Geodesic{&model, t, x, y, length, v / length};
}

Geodesic geodesic_from(const ManifoldModel& model, double t, const Point& x, const Vector& v) {
  const double length = model.norm(t, x, v);
  if (!(length > 0.0)) fail(ErrorKind::Degenerate, "geodesic_from: zero initial velocity");
  const Vector unit = v / length;
  const Point end = model.flow(t, x, unit, length).point;
  return Geodesic{&model, t, x, end, length, unit};
}

TangentVector parallel_transport(const ManifoldModel& model, const Geodesic& geodesic,
                                 const TangentVector& v) {
  const double scale = std::max(1.0, geodesic.start.norm());
  if (v.base.size() != geodesic.start.size() || (v.base - geodesic.start).norm() > 1e-9 * scale)
    fail(ErrorKind::InvalidInput, "parallel_transport: vector is not based at the geodesic start");
  Vector moved = model.transport_along(geodesic.time, geodesic.start, geodesic.initial_velocity,
                                       geodesic.length, v.components);
  return {geodesic.end, moved};
}

double distance(const ManifoldModel& model, double t, const Point& x, const Point& y) {
  if (!model.has_log())
    fail(ErrorKind::Unsupported, model.name() + ": distance is not available");
  if ((x - y).norm() == 0.0) return 0.0;
  return model.distance(t, x, y);
}

Frame frame_at(const ManifoldModel& model, double t, const Point& x, FrameOrder order) {
  const Matrix candidates = model.frame_candidates(x);
  const int count = static_cast<int>(candidates.cols());
  const int m = model.dim();
  Frame frame{x, t, Matrix(model.ambient_dim(), m)};
  int filled = 0;
  for (int index = 0; index < count && filled < m; ++index) {
    const Vector c = candidates.col(order == FrameOrder::Reversed ? count - 1 - index : index);
    const double initial = model.norm(t, x, c);
    if (initial < 1e-12) continue;
    Vector w = c;
    // Two passes of modified Gram-Schmidt keep the Gram matrix at round-off.
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < filled; ++j) {
        const Vector e = frame.vectors.col(j);
        w -= model.inner(t, x, w, e) * e;
      }
    const double n = model.norm(t, x, w);
    if (n < 1e-6 * initial) continue;
    frame.vectors.col(filled++) = w / n;
  }
  if (filled != m) fail(ErrorKind::Numerical, "frame_at: could not complete a frame");
  return frame;
}

Matrix metric(const ManifoldModel& model, double t, const Point& x) {
  const Frame reference = frame_at(model, model.window().t1, x);
  const int m = model.dim();
  Matrix g(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      const double value =
          model.inner(t, x, reference.vectors.col(i), reference.vectors.col(j));
      g(i, j) = value;
      g(j, i) = value;
    }
  return g;
}

double curvature_condition_residual(const ManifoldModel& model, double t, const Point& x,
                                    const Vector& v, double k) {
  double residual = model.ricci(t, x, v, v) + k * model.inner(t, x, v, v) -
                    model.inner_dt(t, x, v, v);
  if (model.has_drift()) residual -= 2.0 * model.inner(t, x, model.drift_derivative(t, x, v), v);
  return residual;
}

double estimate_kappa(const ManifoldModel& model, double t, double s,
                      const std::vector<Point>& sample_points) {
  if (t == s) return 0.0;
  double worst = 0.0;
  for (const Point& x : sample_points) {
    const Matrix gt = metric(model, t, x);
    const Matrix gs = metric(model, s, x);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(gt, gs, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) fail(ErrorKind::Numerical, "estimate_kappa: eigensolver failed");
    for (int i = 0; i < solver.eigenvalues().size(); ++i)
      worst = std::max(worst, std::abs(std::log(solver.eigenvalues()[i])));
  }
  return worst / (2.0 * std::abs(t - s));
}

}  // namespace gtwalk
