// Round spheres and hyperbolic space in ambient coordinates. Both have
// constant curvature, so exp, log and transport are closed form.

#include <cmath>
#include <numbers>
#include <sstream>

#include "gtwalk/manifold.hpp"

namespace gtwalk {

namespace {

class RoundSphere final : public ManifoldModel {
 public:
  RoundSphere(int dim, double c0, bool flow, TimeWindow window)
      : ManifoldModel(dim, dim + 1, window), c0_(c0), radius_(std::sqrt(c0)), flow_(flow) {
    if (dim < 1 || dim + 1 > kMaxDim) fail(ErrorKind::InvalidInput, "sphere: unsupported dimension");
    if (!(c0 > 0.0)) fail(ErrorKind::InvalidInput, "sphere: radius_c0 must be positive");
  }

  ModelKind kind() const override { return ModelKind::RoundSphere; }

  std::string name() const override {
    std::ostringstream out;
    out << "sphere(" << dim() << ", c0=" << c0_ << (flow_ ? ", backward-ricci-flow" : "") << ")";
    return out.str();
  }

  double c(double t) const { return flow_ ? c0_ + (dim() - 1) * (t - window().t1) : c0_; }
  double c_dot() const { return flow_ ? static_cast<double>(dim() - 1) : 0.0; }

  double inner(double t, const Point&, const Vector& u, const Vector& v) const override {
    return c(t) / c0_ * u.dot(v);
  }
  double inner_dt(double, const Point&, const Vector& u, const Vector& v) const override {
    return c_dot() / c0_ * u.dot(v);
  }
  double ricci(double, const Point&, const Vector& u, const Vector& v) const override {
    return (dim() - 1) / c0_ * u.dot(v);
  }
  Vector curvature(double, const Point&, const Vector& u, const Vector& v,
                   const Vector& w) const override {
    return (v.dot(w) * u - u.dot(w) * v) / c0_;
  }

  Vector project(const Point& x, const Vector& v) const override {
    return v - (x.dot(v) / x.squaredNorm()) * x;
  }
  double constraint_residual(const Point& x) const override { return std::abs(x.norm() - radius_); }

  Point origin() const override {
    Point o = Point::Zero(ambient_dim());
    o[dim()] = radius_;
    return o;
  }

  GeodesicState flow(double, const Point& x, const Vector& v, double s) const override {
    const double speed = v.norm();
    if (speed == 0.0) return {x, v};
    const Vector xhat = x / radius_;
    const Vector e = v / speed;
    const double theta = s * speed / radius_;
    const double cs = std::cos(theta), sn = std::sin(theta);
    Point p = radius_ * (cs * xhat + sn * e);
    p *= radius_ / p.norm();
    return {p, speed * (cs * e - sn * xhat)};
  }

  Vector transport_along(double, const Point& x, const Vector& v, double s,
                         const Vector& w) const override {
    const double speed = v.norm();
    if (speed == 0.0) return w;
    const Vector xhat = x / radius_;
    const Vector e = v / speed;
    const double theta = s * speed / radius_;
    const double a = w.dot(e);
    return w - a * e + a * (std::cos(theta) * e - std::sin(theta) * xhat);
  }

  Vector log(double, const Point& x, const Point& y) const override {
    const Vector xhat = x / radius_;
    const Vector yhat = y / y.norm();
    const double cos_angle = xhat.dot(yhat);
    Vector w = yhat - cos_angle * xhat;
    const double sin_angle = w.norm();
    const double angle = std::atan2(sin_angle, cos_angle);
    if (angle == 0.0) return Vector::Zero(ambient_dim());
    if (std::numbers::pi - angle < 1e-6) {
      // Cut locus: great circle through the first ambient axis not parallel to x.
      for (int i = 0; i < ambient_dim(); ++i) {
        Vector e = Vector::Zero(ambient_dim());
        e[i] = 1.0;
        Vector candidate = e - xhat[i] * xhat;
        const double n = candidate.norm();
        if (n > 1e-6) {
          w = candidate / n;
          break;
        }
      }
      return radius_ * angle * w;
    }
    return radius_ * angle * (w / sin_angle);
  }

  double distance(double t, const Point& x, const Point& y) const override {
    const Vector xhat = x / radius_;
    const Vector yhat = y / y.norm();
    const double cos_angle = xhat.dot(yhat);
    const double sin_angle = (yhat - cos_angle * xhat).norm();
    return std::sqrt(c(t) / c0_) * radius_ * std::atan2(sin_angle, cos_angle);
  }

  std::shared_ptr<const ManifoldModel> with_drift(DriftField drift) const override {
    auto copy = std::make_shared<RoundSphere>(*this);
    copy->drift_ = std::move(drift);
    return copy;
  }

 private:
  double c0_;
  double radius_;
  bool flow_;
};

inline double minkowski(const Vector& u, const Vector& v) { return u.dot(v) - 2.0 * u[0] * v[0]; }

class Hyperbolic final : public ManifoldModel {
 public:
  Hyperbolic(int dim, TimeWindow window) : ManifoldModel(dim, dim + 1, window) {
    if (dim < 1 || dim + 1 > kMaxDim) fail(ErrorKind::InvalidInput, "hyperbolic: unsupported dimension");
  }

  ModelKind kind() const override { return ModelKind::Hyperbolic; }
  std::string name() const override { return "hyperbolic(" + std::to_string(dim()) + ")"; }

  double inner(double, const Point&, const Vector& u, const Vector& v) const override {
    return minkowski(u, v);
  }
  double inner_dt(double, const Point&, const Vector&, const Vector&) const override { return 0.0; }
  double ricci(double, const Point&, const Vector& u, const Vector& v) const override {
    return -(dim() - 1) * minkowski(u, v);
  }
  Vector curvature(double, const Point&, const Vector& u, const Vector& v,
                   const Vector& w) const override {
    return -(minkowski(v, w) * u - minkowski(u, w) * v);
  }

  Vector project(const Point& x, const Vector& v) const override { return v + minkowski(x, v) * x; }
  double constraint_residual(const Point& x) const override { return std::abs(minkowski(x, x) + 1.0); }

  Point origin() const override {
    Point o = Point::Zero(ambient_dim());
    o[0] = 1.0;
    return o;
  }

  // Projected ambient axes are badly conditioned far from the origin, so use
  // the boost of the standard frame at the origin instead.
  Matrix frame_candidates(const Point& x) const override {
    const int m = dim();
    const Vector spatial = x.tail(m);
    Matrix out(ambient_dim(), m);
    for (int i = 0; i < m; ++i) {
      out(0, i) = spatial[i];
      out.col(i).tail(m) = (spatial[i] / (1.0 + x[0])) * spatial;
      out(1 + i, i) += 1.0;
    }
    return out;
  }

  GeodesicState flow(double, const Point& x, const Vector& v, double s) const override {
    const double speed = std::sqrt(std::max(0.0, minkowski(v, v)));
    if (speed == 0.0) return {x, v};
    const Vector e = v / speed;
    const double theta = s * speed;
    const double ch = std::cosh(theta), sh = std::sinh(theta);
    Point p = ch * x + sh * e;
    p[0] = std::sqrt(1.0 + p.tail(dim()).squaredNorm());
    return {p, speed * (sh * x + ch * e)};
  }

  Vector transport_along(double, const Point& x, const Vector& v, double s,
                         const Vector& w) const override {
    const double speed = std::sqrt(std::max(0.0, minkowski(v, v)));
    if (speed == 0.0) return w;
    const Vector e = v / speed;
    const double theta = s * speed;
    const double a = minkowski(w, e);
    return w - a * e + a * (std::sinh(theta) * x + std::cosh(theta) * e);
  }

  Vector log(double, const Point& x, const Point& y) const override {
    const Vector w = y + minkowski(x, y) * x;
    const double sinh_d = std::sqrt(std::max(0.0, minkowski(w, w)));
    if (sinh_d == 0.0) return Vector::Zero(ambient_dim());
    return std::asinh(sinh_d) / sinh_d * w;
  }

  double distance(double, const Point& x, const Point& y) const override {
    const Vector w = y + minkowski(x, y) * x;
    return std::asinh(std::sqrt(std::max(0.0, minkowski(w, w))));
  }

  std::shared_ptr<const ManifoldModel> with_drift(DriftField drift) const override {
    auto copy = std::make_shared<Hyperbolic>(*this);
    copy->drift_ = std::move(drift);
    return copy;
  }
};

}  // namespace

ModelPtr make_round_sphere(int dim, double c0, bool flow, TimeWindow window) {
  return std::make_shared<RoundSphere>(dim, c0, flow, window);
}

ModelPtr make_hyperbolic(int dim, TimeWindow window) {
  return std::make_shared<Hyperbolic>(dim, window);
}

}  // namespace gtwalk
