#include <Eigen/Cholesky>

#include <array>
#include <cmath>
#include <sstream>

#include "gtwalk/manifold.hpp"

namespace gtwalk {

namespace {

class Euclidean final : public ManifoldModel {
 public:
  Euclidean(int dim, TimeWindow window) : ManifoldModel(dim, dim, window) {
    if (dim < 1 || dim > kMaxDim) fail(ErrorKind::InvalidInput, "euclidean: unsupported dimension");
  }

  ModelKind kind() const override { return ModelKind::Euclidean; }
  std::string name() const override { return "euclidean(" + std::to_string(dim()) + ")"; }

  double inner(double, const Point&, const Vector& u, const Vector& v) const override { return u.dot(v); }
  double inner_dt(double, const Point&, const Vector&, const Vector&) const override { return 0.0; }
  double ricci(double, const Point&, const Vector&, const Vector&) const override { return 0.0; }
  Vector curvature(double, const Point&, const Vector&, const Vector&, const Vector&) const override {
    return Vector::Zero(dim());
  }
  Point origin() const override { return Point::Zero(dim()); }

  GeodesicState flow(double, const Point& x, const Vector& v, double s) const override {
    return {x + s * v, v};
  }
  Vector transport_along(double, const Point&, const Vector&, double, const Vector& w) const override {
    return w;
  }
  Vector log(double, const Point& x, const Point& y) const override { return y - x; }
  double distance(double, const Point& x, const Point& y) const override { return (y - x).norm(); }

  std::shared_ptr<const ManifoldModel> with_drift(DriftField drift) const override {
    auto copy = std::make_shared<Euclidean>(*this);
    copy->drift_ = std::move(drift);
    return copy;
  }
};

class ScaledMetric final : public ManifoldModel {
 public:
  ScaledMetric(ModelPtr base, double k)
      : ManifoldModel(base->dim(), base->ambient_dim(), base->window()), base_(std::move(base)), k_(k) {}

  ModelKind kind() const override { return ModelKind::ScaledMetric; }
  std::string name() const override {
    std::ostringstream out;
    out << "scaled(" << base_->name() << ", k=" << k_ << ")";
    return out.str();
  }

  double factor(double t) const { return std::exp(-k_ * (t - window().t1)); }

  double inner(double t, const Point& x, const Vector& u, const Vector& v) const override {
    return factor(t) * base_->inner(t, x, u, v);
  }
  double inner_dt(double t, const Point& x, const Vector& u, const Vector& v) const override {
    return factor(t) * (base_->inner_dt(t, x, u, v) - k_ * base_->inner(t, x, u, v));
  }
  // Ricci and the (1,3) curvature tensor are invariant under constant rescaling.
  double ricci(double t, const Point& x, const Vector& u, const Vector& v) const override {
    return base_->ricci(t, x, u, v);
  }
  Vector curvature(double t, const Point& x, const Vector& u, const Vector& v,
                   const Vector& w) const override {
    return base_->curvature(t, x, u, v, w);
  }

  Vector project(const Point& x, const Vector& v) const override { return base_->project(x, v); }
  double constraint_residual(const Point& x) const override { return base_->constraint_residual(x); }
  Matrix frame_candidates(const Point& x) const override { return base_->frame_candidates(x); }
  Point origin() const override { return base_->origin(); }

  GeodesicState flow(double t, const Point& x, const Vector& v, double s) const override {
    return base_->flow(t, x, v, s);
  }
  Vector transport_along(double t, const Point& x, const Vector& v, double s,
                         const Vector& w) const override {
    return base_->transport_along(t, x, v, s, w);
  }
  bool has_log() const override { return base_->has_log(); }
  Vector log(double t, const Point& x, const Point& y) const override { return base_->log(t, x, y); }
  double distance(double t, const Point& x, const Point& y) const override {
    return std::sqrt(factor(t)) * base_->distance(t, x, y);
  }
  Vector christoffel_contract(double t, const Point& x, const Vector& v,
                              const Vector& w) const override {
    return base_->christoffel_contract(t, x, v, w);
  }

  std::shared_ptr<const ManifoldModel> with_drift(DriftField drift) const override {
    auto copy = std::make_shared<ScaledMetric>(*this);
    copy->drift_ = std::move(drift);
    return copy;
  }

 private:
  ModelPtr base_;
  double k_;
};

/// Metric derivatives in a chart: dg[l] = d g / d x^l.
struct MetricJet {
  Matrix g;
  std::array<Matrix, kMaxDim> dg;
};

class NumericChart final : public ManifoldModel {
 public:
  static constexpr double kMetricStep = 1e-5;
  static constexpr double kChristoffelStep = 1e-4;
  static constexpr double kMaxStep = 0.05;

  NumericChart(int dim, MetricField metric, TimeWindow window, MetricField metric_dt,
               std::string label)
      : ManifoldModel(dim, dim, window),
        metric_(std::move(metric)),
        metric_dt_(std::move(metric_dt)),
        label_(std::move(label)) {
    if (dim < 1 || dim > kMaxDim) fail(ErrorKind::InvalidInput, "numeric chart: unsupported dimension");
    if (!metric_) fail(ErrorKind::InvalidInput, "numeric chart: metric callable is empty");
  }

  ModelKind kind() const override { return ModelKind::NumericChart; }
  std::string name() const override { return label_ + "(" + std::to_string(dim()) + ")"; }

  double inner(double t, const Point& x, const Vector& u, const Vector& v) const override {
    return u.dot(metric_(t, x) * v);
  }
  double inner_dt(double t, const Point& x, const Vector& u, const Vector& v) const override {
    return u.dot(metric_time_derivative(t, x) * v);
  }
  double ricci(double t, const Point& x, const Vector& u, const Vector& v) const override {
    const auto r = riemann(t, x);
    const int m = dim();
    double sum = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) sum += r[index(i, i, j, k)] * u[j] * v[k];
    return sum;
  }
  Vector curvature(double t, const Point& x, const Vector& u, const Vector& v,
                   const Vector& w) const override {
    const auto r = riemann(t, x);
    const int m = dim();
    Vector out = Vector::Zero(m);
    for (int l = 0; l < m; ++l)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          for (int k = 0; k < m; ++k) out[l] += r[index(l, i, j, k)] * u[i] * v[j] * w[k];
    return out;
  }
  Point origin() const override { return Point::Zero(dim()); }

  GeodesicState flow(double t, const Point& x, const Vector& v, double s) const override {
    const int steps = step_count(t, x, v, s);
    if (steps == 0) return {x, v};
    const double h = s / steps;
    Point p = x;
    Vector vel = v;
    for (int n = 0; n < steps; ++n) {
      const Vector a1 = acceleration(t, p, vel);
      const Point p2 = p + 0.5 * h * vel;
      const Vector v2 = vel + 0.5 * h * a1;
      const Vector a2 = acceleration(t, p2, v2);
      const Point p3 = p + 0.5 * h * v2;
      const Vector v3 = vel + 0.5 * h * a2;
      const Vector a3 = acceleration(t, p3, v3);
      const Point p4 = p + h * v3;
      const Vector v4 = vel + h * a3;
      const Vector a4 = acceleration(t, p4, v4);
      p += h / 6.0 * (vel + 2.0 * v2 + 2.0 * v3 + v4);
      vel += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    }
    return {p, vel};
  }

  Vector transport_along(double t, const Point& x, const Vector& v, double s,
                         const Vector& w) const override {
    const int steps = step_count(t, x, v, s);
    if (steps == 0) return w;
    const double h = s / steps;
    Point p = x;
    Vector vel = v;
    Vector field = w;
    // State (p, vel, field); field' = -Gamma(vel, field).
    auto rhs = [&](const Point& pp, const Vector& vv, const Vector& ww, Vector& dv, Vector& dw) {
      const MetricJet jet = jet_at(t, pp);
      dv = -solve(jet, gamma_lower(jet, vv, vv));
      dw = -solve(jet, gamma_lower(jet, vv, ww));
    };
    for (int n = 0; n < steps; ++n) {
      Vector a1, b1, a2, b2, a3, b3, a4, b4;
      rhs(p, vel, field, a1, b1);
      rhs(p + 0.5 * h * vel, vel + 0.5 * h * a1, field + 0.5 * h * b1, a2, b2);
      const Vector v2 = vel + 0.5 * h * a1;
      rhs(p + 0.5 * h * v2, vel + 0.5 * h * a2, field + 0.5 * h * b2, a3, b3);
      const Vector v3 = vel + 0.5 * h * a2;
      rhs(p + h * v3, vel + h * a3, field + h * b3, a4, b4);
      const Vector v4 = vel + h * a3;
      p += h / 6.0 * (vel + 2.0 * v2 + 2.0 * v3 + v4);
      vel += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
      field += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    }
    return field;
  }

  bool has_log() const override { return false; }

  Vector christoffel_contract(double t, const Point& x, const Vector& v,
                              const Vector& w) const override {
    const MetricJet jet = jet_at(t, x);
    return solve(jet, gamma_lower(jet, v, w));
  }

  std::shared_ptr<const ManifoldModel> with_drift(DriftField drift) const override {
    auto copy = std::make_shared<NumericChart>(*this);
    copy->drift_ = std::move(drift);
    return copy;
  }

 private:
  int index(int l, int i, int j, int k) const {
    const int m = dim();
    return ((l * m + i) * m + j) * m + k;
  }

  Matrix metric_time_derivative(double t, const Point& x) const {
    if (metric_dt_) return metric_dt_(t, x);
    constexpr double eps = kMetricStep;
    return (metric_(t + eps, x) - metric_(t - eps, x)) / (2.0 * eps);
  }

  MetricJet jet_at(double t, const Point& x) const {
    MetricJet jet;
    jet.g = metric_(t, x);
    for (int l = 0; l < dim(); ++l) {
      Point plus = x, minus = x;
      plus[l] += kMetricStep;
      minus[l] -= kMetricStep;
      jet.dg[l] = (metric_(t, plus) - metric_(t, minus)) / (2.0 * kMetricStep);
    }
    return jet;
  }

  // Gamma_{l}(u, w) with the index lowered:
  // 1/2 (d_u g w + d_w g u - (u^T d_l g w)_l).
  Vector gamma_lower(const MetricJet& jet, const Vector& u, const Vector& w) const {
    const int m = dim();
    Matrix du = Matrix::Zero(m, m), dw = Matrix::Zero(m, m);
    Vector tail(m);
    for (int l = 0; l < m; ++l) {
      du += u[l] * jet.dg[l];
      dw += w[l] * jet.dg[l];
      tail[l] = u.dot(jet.dg[l] * w);
    }
    return 0.5 * (du * w + dw * u - tail);
  }

  Vector solve(const MetricJet& jet, const Vector& lowered) const { return jet.g.ldlt().solve(lowered); }

  Vector acceleration(double t, const Point& x, const Vector& v) const {
    const MetricJet jet = jet_at(t, x);
    return -solve(jet, gamma_lower(jet, v, v));
  }

  // Full Christoffel tensor Gamma^l_{ij}, flattened as (l*m + i)*m + j.
  std::vector<double> christoffel(double t, const Point& x) const {
    const int m = dim();
    const MetricJet jet = jet_at(t, x);
    std::vector<double> out(static_cast<std::size_t>(m * m * m));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        Vector ei = Vector::Zero(m), ej = Vector::Zero(m);
        ei[i] = 1.0;
        ej[j] = 1.0;
        const Vector upper = solve(jet, gamma_lower(jet, ei, ej));
        for (int l = 0; l < m; ++l) out[(l * m + i) * m + j] = upper[l];
      }
    return out;
  }

  // R^l_{ijk} with R(d_i, d_j) d_k = R^l_{ijk} d_l.
  std::vector<double> riemann(double t, const Point& x) const {
    const int m = dim();
    const auto gamma = christoffel(t, x);
    auto at = [m](const std::vector<double>& g, int l, int i, int j) { return g[(l * m + i) * m + j]; };
    std::vector<std::vector<double>> dgamma(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      Point plus = x, minus = x;
      plus[i] += kChristoffelStep;
      minus[i] -= kChristoffelStep;
      const auto gp = christoffel(t, plus);
      const auto gm = christoffel(t, minus);
      dgamma[i].resize(gp.size());
      for (std::size_t n = 0; n < gp.size(); ++n) dgamma[i][n] = (gp[n] - gm[n]) / (2.0 * kChristoffelStep);
    }
    std::vector<double> r(static_cast<std::size_t>(m * m * m * m), 0.0);
    for (int l = 0; l < m; ++l)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          for (int k = 0; k < m; ++k) {
            double value = at(dgamma[i], l, j, k) - at(dgamma[j], l, i, k);
            for (int p = 0; p < m; ++p)
              value += at(gamma, l, i, p) * at(gamma, p, j, k) - at(gamma, l, j, p) * at(gamma, p, i, k);
            r[index(l, i, j, k)] = value;
          }
    return r;
  }

  int step_count(double t, const Point& x, const Vector& v, double s) const {
    const double length = std::abs(s) * norm(t, x, v);
    if (length == 0.0) return 0;
    // h = min(0.05, length / 20) in g(t)-arclength.
    const double h = std::min(kMaxStep, length / 20.0);
    return static_cast<int>(std::ceil(length / h - 1e-9));
  }

  MetricField metric_;
  MetricField metric_dt_;
  std::string label_;
};

}  // namespace

ModelPtr make_euclidean(int dim, TimeWindow window) { return std::make_shared<Euclidean>(dim, window); }

ModelPtr make_scaled_metric(ModelPtr base, double k) {
  if (!base) fail(ErrorKind::InvalidInput, "scaled: base model is required");
  return std::make_shared<ScaledMetric>(std::move(base), k);
}

ModelPtr make_numeric_chart(int dim, MetricField metric, TimeWindow window, MetricField metric_dt,
                            std::string label) {
  return std::make_shared<NumericChart>(dim, std::move(metric), window, std::move(metric_dt),
                                        std::move(label));
}

MetricField stereographic_sphere_metric(int dim, double c0, bool flow, TimeWindow window) {
  return [dim, c0, flow, window](double t, const Point& x) -> Matrix {
    const double c = flow ? c0 + (dim - 1) * (t - window.t1) : c0;
    const double r2 = c0;
    const double denom = r2 + x.squaredNorm();
    const double conformal = 4.0 * r2 * r2 / (denom * denom);
    return (c / c0 * conformal) * Matrix::Identity(dim, dim);
  };
}

Point stereographic_to_sphere(const Point& chart, double c0) {
  const int m = static_cast<int>(chart.size());
  const double r2 = c0;
  const double radius = std::sqrt(c0);
  const double s = chart.squaredNorm();
  Point p(m + 1);
  p.head(m) = 2.0 * r2 * chart / (r2 + s);
  p[m] = radius * (r2 - s) / (r2 + s);
  return p;
}

}  // namespace gtwalk
