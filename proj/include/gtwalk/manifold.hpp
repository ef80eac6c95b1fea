#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gtwalk/core.hpp"

namespace gtwalk {

enum class ModelKind { Euclidean, RoundSphere, ScaledMetric, Hyperbolic, NumericChart };

std::string to_string(ModelKind kind);

struct TimeWindow {
  double t1 = 0.0;
  double t2 = 1.0;
  bool contains(double t) const { return t >= t1 - 1e-12 && t <= t2 + 1e-12; }
};

/// A vector in the tangent space at `base`, in the model's point representation.
struct TangentVector {
  Point base;
  Vector components;
};

/// g(t)-orthonormal frame at `base`; column j holds the j-th frame vector.
struct Frame {
  Point base;
  double time = 0.0;
  Matrix vectors;
  Vector apply(const Vector& coefficients) const { return vectors * coefficients; }
};

/// Point and velocity of s -> exp_x(s v) at a given s.
struct GeodesicState {
  Point point;
  Vector velocity;
};

/// Time-dependent drift field Z(t, x), returned in the point representation.
using DriftField = std::function<Vector(double t, const Point& x)>;

/// Evaluators for (M, g(t)) on a time window. Instances are immutable after
/// construction and safe to share between threads.
class ManifoldModel : public std::enable_shared_from_this<ManifoldModel> {
 public:
  virtual ~ManifoldModel() = default;

  virtual ModelKind kind() const = 0;
  virtual std::string name() const = 0;

  int dim() const { return dim_; }
  int ambient_dim() const { return ambient_dim_; }
  const TimeWindow& window() const { return window_; }

  // g(t)(u, v), (d/dt g)(u, v), Ric_{g(t)}(u, v) and R(u, v)w at x.
  virtual double inner(double t, const Point& x, const Vector& u, const Vector& v) const = 0;
  virtual double inner_dt(double t, const Point& x, const Vector& u, const Vector& v) const = 0;
  virtual double ricci(double t, const Point& x, const Vector& u, const Vector& v) const = 0;
  virtual Vector curvature(double t, const Point& x, const Vector& u, const Vector& v,
                           const Vector& w) const = 0;

  /// Orthogonal projection onto T_x M (identity for chart models).
  virtual Vector project(const Point&, const Vector& v) const { return v; }
  /// Embedding-constraint residual; 0 for chart models.
  virtual double constraint_residual(const Point&) const { return 0.0; }
  /// Ordered candidate vectors (columns) for Gram-Schmidt frames at x.
  virtual Matrix frame_candidates(const Point& x) const;
  /// Canonical reference point o.
  virtual Point origin() const = 0;

  /// Geodesic flow s -> exp^{(t)}_x(s v).
  virtual GeodesicState flow(double t, const Point& x, const Vector& v, double s) const = 0;
  /// Parallel transport of w along s -> exp^{(t)}_x(s v) from s = 0 to s.
  virtual Vector transport_along(double t, const Point& x, const Vector& v, double s,
                                 const Vector& w) const = 0;

  virtual bool has_log() const { return true; }
  /// exp-inverse along the chosen minimal geodesic (deterministic at the cut locus).
  virtual Vector log(double t, const Point& x, const Point& y) const;
  virtual double distance(double t, const Point& x, const Point& y) const;

  /// Levi-Civita derivative of the drift at x in direction v (central
  /// differences along the geodesic through x).
  virtual Vector drift_derivative(double t, const Point& x, const Vector& v) const;
  /// Gamma(v, w) in chart models; zero where the connection is the projected
  /// ambient derivative.
  virtual Vector christoffel_contract(double t, const Point& x, const Vector& v,
                                      const Vector& w) const;

  bool has_drift() const { return static_cast<bool>(drift_); }
  Vector drift(double t, const Point& x) const;
  /// Returns a copy of this model with drift Z attached.
  virtual std::shared_ptr<const ManifoldModel> with_drift(DriftField drift) const = 0;

  double norm(double t, const Point& x, const Vector& v) const {
    return std::sqrt(std::max(0.0, inner(t, x, v, v)));
  }

 protected:
  ManifoldModel(int dim, int ambient_dim, TimeWindow window)
      : dim_(dim), ambient_dim_(ambient_dim), window_(window) {}

  DriftField drift_;

 private:
  int dim_;
  int ambient_dim_;
  TimeWindow window_;
};

using ModelPtr = std::shared_ptr<const ManifoldModel>;

/// Flat R^m in Cartesian coordinates.
ModelPtr make_euclidean(int dim, TimeWindow window = {});

/// Round sphere S^m embedded in R^{m+1} with radius sqrt(c0); g(t) = (c(t)/c0)
/// times the induced metric, where c(t) = c0 + (m-1)(t - t1) under backward
/// Ricci flow and c(t) = c0 otherwise.
ModelPtr make_round_sphere(int dim, double c0 = 1.0, bool flow = false, TimeWindow window = {});

/// g(t) = exp(-k (t - t1)) g_base(t). Shares points, geodesics and connection
/// with the base.
ModelPtr make_scaled_metric(ModelPtr base, double k);

/// Hyperbolic space of curvature -1 in the hyperboloid model in R^{1,m}.
ModelPtr make_hyperbolic(int dim, TimeWindow window = {});

using MetricField = std::function<Matrix(double t, const Point& x)>;

/// A single chart carrying an arbitrary metric callable. Geodesics and
/// transport are integrated with RK4; Christoffel symbols come from central
/// differences. No log or distance.
ModelPtr make_numeric_chart(int dim, MetricField metric, TimeWindow window = {},
                            MetricField metric_dt = {}, std::string label = "numeric");

/// Round-sphere metric in stereographic coordinates from the south pole,
/// c(t)/c0 times the radius-sqrt(c0) metric. Helper for numeric-chart models.
MetricField stereographic_sphere_metric(int dim, double c0, bool flow, TimeWindow window);

/// Maps stereographic coordinates (radius sqrt(c0)) to ambient coordinates of
/// the embedded sphere used by make_round_sphere. North pole <-> chart origin.
Point stereographic_to_sphere(const Point& chart, double c0);

/// Unit-speed g(time)-geodesic. Holds a non-owning pointer to its model; the
/// model must outlive it.
struct Geodesic {
  const ManifoldModel* model = nullptr;
  double time = 0.0;
  Point start;
  Point end;
  double length = 0.0;
  Vector initial_velocity;

  Point sample(double u) const;
  Vector velocity(double u) const;
  GeodesicState state(double u) const;
  TangentVector final_velocity() const;
};

// Operations.

Point exp(const ManifoldModel& model, double t, const Point& x, const Vector& v);
Point exp(const ManifoldModel& model, double t, const TangentVector& v);

Geodesic minimal_geodesic(const ManifoldModel& model, double t, const Point& x, const Point& y);

/// Geodesic s -> exp_x(s v/|v|) of length |v|_{g(t)}; available on every model.
Geodesic geodesic_from(const ManifoldModel& model, double t, const Point& x, const Vector& v);

TangentVector parallel_transport(const ManifoldModel& model, const Geodesic& geodesic,
                                 const TangentVector& v);

double distance(const ManifoldModel& model, double t, const Point& x, const Point& y);

/// Candidate order used by frame_at; Reversed gives an alternative section of
/// the frame bundle for frame-independence checks.
enum class FrameOrder { Canonical, Reversed };

Frame frame_at(const ManifoldModel& model, double t, const Point& x,
               FrameOrder order = FrameOrder::Canonical);

/// Gram matrix of g(t) in a fixed (t-independent) basis of T_x M.
Matrix metric(const ManifoldModel& model, double t, const Point& x);

/// Ric(v,v) + k g(v,v) - d/dt g(v,v) - 2 (grad Z)^flat(v,v).
double curvature_condition_residual(const ManifoldModel& model, double t, const Point& x,
                                    const Vector& v, double k);

/// Smallest kappa with exp(-2 kappa |t-s|) g(s) <= g(t) <= exp(2 kappa |t-s|) g(s)
/// on the sampled points, taken over all directions.
double estimate_kappa(const ManifoldModel& model, double t, double s,
                      const std::vector<Point>& sample_points);

}  // namespace gtwalk
