#include "gtwalk/variation.hpp"

#include <cmath>
#include <ostream>

namespace gtwalk {

namespace {

constexpr int kMinGrid = 16;
constexpr int kGreenSubsteps = 8;

std::vector<double> uniform_grid(double length, int n) {
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) u[i] = length * i / (n - 1);
  u.back() = length;
  return u;
}

double trapezoid(const std::vector<double>& values, double h) {
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
  return sum * h;
}

void require_grid(int n, const char* what) {
  if (n < kMinGrid)
    fail(ErrorKind::InvalidInput, std::string(what) + ": grid needs at least 16 points");
}

void require_length(const Geodesic& geodesic, const char* what) {
  if (!(geodesic.length > 0.0)) fail(ErrorKind::Degenerate, std::string(what) + ": zero-length geodesic");
}

}  // namespace

GreenSolution solve_green(const ManifoldModel& model, const Geodesic& geodesic, int n_grid) {
  require_grid(n_grid, "solve_green");
  require_length(geodesic, "solve_green");
  const int m = model.dim();
  if (m == 1) fail(ErrorKind::Unsupported, "solve_green: undefined in dimension 1");

  const double t = geodesic.time;
  auto kappa = [&](double u) {
    const GeodesicState s = geodesic.state(u);
    return model.ricci(t, s.point, s.velocity, s.velocity) / (m - 1);
  };

  GreenSolution out{geodesic, uniform_grid(geodesic.length, n_grid), {}, {}};
  out.g.resize(n_grid);
  out.g_prime.resize(n_grid);
  double g = 0.0, gp = 1.0;
  out.g[0] = g;
  out.g_prime[0] = gp;
  for (int i = 0; i + 1 < n_grid; ++i) {
    const double h = (out.grid[i + 1] - out.grid[i]) / kGreenSubsteps;
    double u = out.grid[i];
    double k_start = kappa(u);
    for (int s = 0; s < kGreenSubsteps; ++s) {
      const double k_mid = kappa(u + 0.5 * h);
      const double k_end = kappa(u + h);
      const double a1 = gp, b1 = -k_start * g;
      const double a2 = gp + 0.5 * h * b1, b2 = -k_mid * (g + 0.5 * h * a1);
      const double a3 = gp + 0.5 * h * b2, b3 = -k_mid * (g + 0.5 * h * a2);
      const double a4 = gp + h * b3, b4 = -k_end * (g + h * a3);
      g += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
      gp += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
      u += h;
      k_start = k_end;
    }
    out.g[i + 1] = g;
    out.g_prime[i + 1] = gp;
  }
  return out;
}

double index_form(const ManifoldModel& model, double t, const Geodesic& geodesic,
                  const SampledField& field) {
  const int n = static_cast<int>(field.u.size());
  require_grid(n, "index_form");
  if (static_cast<int>(field.values.size()) != n)
    fail(ErrorKind::InvalidInput, "index_form: sample count mismatch");
  const double h = (field.u.back() - field.u.front()) / (n - 1);
  if (!(h > 0.0)) fail(ErrorKind::Degenerate, "index_form: empty parameter range");
  for (int i = 0; i < n; ++i)
    if (std::abs(field.u[i] - (field.u.front() + i * h)) > 1e-9 * std::max(1.0, field.u.back()))
      fail(ErrorKind::InvalidInput, "index_form: grid is not uniform");

  const Point& origin = geodesic.start;
  std::vector<GeodesicState> states(n);
  std::vector<Vector> pulled(n);
  for (int i = 0; i < n; ++i) {
    states[i] = geodesic.state(field.u[i]);
    pulled[i] = model.transport_along(geodesic.time, states[i].point, states[i].velocity,
                                      -field.u[i], field.values[i]);
  }

  std::vector<double> integrand(n);
  for (int i = 0; i < n; ++i) {
    Vector derivative;
    if (i == 0)
      derivative = (-3.0 * pulled[0] + 4.0 * pulled[1] - pulled[2]) / (2.0 * h);
    else if (i == n - 1)
      derivative = (3.0 * pulled[n - 1] - 4.0 * pulled[n - 2] + pulled[n - 3]) / (2.0 * h);
    else
      derivative = (pulled[i + 1] - pulled[i - 1]) / (2.0 * h);
    const Point& p = states[i].point;
    const Vector& velocity = states[i].velocity;
    const Vector& v = field.values[i];
    const double kinetic = model.inner(t, origin, derivative, derivative);
    const double curvature = model.inner(t, p, model.curvature(t, p, v, velocity, velocity), v);
    integrand[i] = kinetic - curvature;
  }
  return trapezoid(integrand, h);
}

SampledField dagger_field(const GreenSolution& green, const ManifoldModel& model,
                          const TangentVector& v) {
  const Geodesic& geodesic = green.geodesic;
  const double scale = std::max(1.0, geodesic.end.norm());
  if ((v.base - geodesic.end).norm() > 1e-9 * scale)
    fail(ErrorKind::InvalidInput, "dagger_field: vector is not based at the geodesic end");
  const double g_end = green.g.back();
  if (!(g_end > 0.0)) fail(ErrorKind::Degenerate, "dagger_field: G vanishes at the endpoint");

  const Vector end_velocity = geodesic.final_velocity().components;
  SampledField out{green.grid, std::vector<Vector>(green.grid.size())};
  for (std::size_t i = 0; i < green.grid.size(); ++i) {
    const double back = green.grid[i] - geodesic.length;
    const Vector parallel =
        model.transport_along(geodesic.time, geodesic.end, end_velocity, back, v.components);
    out.values[i] = (green.g[i] / g_end) * parallel;
  }
  out.values.back() = v.components;
  return out;
}

SampledField parallel_field(const ManifoldModel& model, const Geodesic& geodesic,
                            const TangentVector& v, int n_grid) {
  require_grid(n_grid, "parallel_field");
  require_length(geodesic, "parallel_field");
  SampledField out{uniform_grid(geodesic.length, n_grid), std::vector<Vector>(n_grid)};
  for (int i = 0; i < n_grid; ++i)
    out.values[i] = model.transport_along(geodesic.time, geodesic.start, geodesic.initial_velocity,
                                          out.u[i], v.components);
  return out;
}

double dt_distance(const ManifoldModel& model, double t, const Geodesic& geodesic, int n_grid) {
  require_grid(n_grid, "dt_distance");
  require_length(geodesic, "dt_distance");
  std::vector<double> integrand(n_grid);
  const std::vector<double> u = uniform_grid(geodesic.length, n_grid);
  for (int i = 0; i < n_grid; ++i) {
    const GeodesicState s = geodesic.state(u[i]);
    integrand[i] = model.inner_dt(t, s.point, s.velocity, s.velocity);
  }
  return 0.5 * trapezoid(integrand, geodesic.length / (n_grid - 1));
}

double drift_integral(const ManifoldModel& model, double t, const Geodesic& geodesic, int n_grid) {
  if (!model.has_drift()) return 0.0;
  require_grid(n_grid, "drift_integral");
  require_length(geodesic, "drift_integral");
  std::vector<double> integrand(n_grid);
  const std::vector<double> u = uniform_grid(geodesic.length, n_grid);
  for (int i = 0; i < n_grid; ++i) {
    const GeodesicState s = geodesic.state(u[i]);
    integrand[i] = model.inner(t, s.point, model.drift_derivative(t, s.point, s.velocity), s.velocity);
  }
  return trapezoid(integrand, geodesic.length / (n_grid - 1));
}

VariationTerms coupled_variation_terms(const ManifoldModel& model, double t, const Geodesic& geodesic,
                                       const TangentVector& xi1, double k, int n_grid) {
  require_length(geodesic, "coupled_variation_terms");
  const double scale = std::max(1.0, geodesic.start.norm());
  if ((xi1.base - geodesic.start).norm() > 1e-9 * scale)
    fail(ErrorKind::InvalidInput, "coupled_variation_terms: noise is not based at the geodesic start");

  const Vector& e = geodesic.initial_velocity;
  const double along = model.inner(t, geodesic.start, xi1.components, e);
  VariationTerms out;
  out.lambda = 2.0 * along;
  out.dt_distance = dt_distance(model, t, geodesic, n_grid);
  out.drift_term = drift_integral(model, t, geodesic, n_grid);
  const Vector orthogonal = xi1.components - along * e;
  if (model.norm(t, geodesic.start, orthogonal) > 0.0) {
    const SampledField field = parallel_field(model, geodesic, {geodesic.start, orthogonal}, n_grid);
    out.index_term = 0.5 * index_form(model, t, geodesic, field);
  }
  out.Lambda = out.dt_distance + out.drift_term + out.index_term;
  out.reference_bound = -0.5 * k * geodesic.length;
  return out;
}

void write_green_csv(std::ostream& out, const GreenSolution& green) {
  out << "u,G,G_prime\n";
  for (std::size_t i = 0; i < green.grid.size(); ++i)
    out << green.grid[i] << ',' << green.g[i] << ',' << green.g_prime[i] << '\n';
}

}  // namespace gtwalk
