#include "gtwalk/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gtwalk/parallel.hpp"

namespace gtwalk {

double chi(double a) {
  if (!(a >= 0.0)) fail(ErrorKind::InvalidInput, "chi: argument must be nonnegative");
  return std::erf(a / std::numbers::sqrt2);
}

double beta(double t, double k) {
  if (!(t >= 0.0)) fail(ErrorKind::InvalidInput, "beta: t must be nonnegative");
  if (std::abs(k) < 1e-8) {
    const double kt = k * t;
    return t * (1.0 + kt / 2.0 + kt * kt / 6.0);
  }
  return std::expm1(k * t) / k;
}

double ou_transition_variance(double h, double k) {
  if (std::abs(k) < 1e-8) {
    const double kh = k * h;
    return 4.0 * h * (1.0 - kh / 2.0 + kh * kh / 6.0);
  }
  return -4.0 * std::expm1(-k * h) / k;
}

std::vector<double> simulate_ou(const OUParams& params, double h, double horizon, RandomStream& stream) {
  if (!(h > 0.0) || !(horizon >= 0.0)) fail(ErrorKind::InvalidInput, "simulate_ou: needs h > 0, horizon >= 0");
  const long steps = static_cast<long>(std::ceil(horizon / h - 1e-9));
  std::vector<double> u;
  u.reserve(steps + 1);
  u.push_back(params.a);
  for (long i = 0; i < steps; ++i) {
    const double dt = std::min(h, horizon - i * h);
    const double sd = std::sqrt(ou_transition_variance(dt, params.k));
    u.push_back(std::exp(-0.5 * params.k * dt) * u.back() + sd * stream.normal());
  }
  return u;
}

OuSurvival ou_survival_probability(const OUParams& params, double horizon, long n_paths, double h,
                                   std::uint64_t seed, int threads) {
  if (n_paths < 1) fail(ErrorKind::InvalidInput, "ou_survival_probability: n_paths must be positive");
  if (!(params.a >= 0.0)) fail(ErrorKind::InvalidInput, "ou_survival_probability: a must be nonnegative");
  if (!(h > 0.0) || !(horizon > 0.0)) fail(ErrorKind::InvalidInput, "ou_survival_probability: needs h, horizon > 0");
  const long steps = static_cast<long>(std::ceil(horizon / h - 1e-9));
  const double decay = std::exp(-0.5 * params.k * h);
  const double sd = std::sqrt(ou_transition_variance(h, params.k));
  const auto survived = parallel_map(n_paths, threads, [&](std::int64_t p) -> std::uint8_t {
    if (params.a <= 0.0) return 0;
    RandomStream stream(seed, static_cast<std::uint64_t>(p), 0, StreamPurpose::OrnsteinUhlenbeck);
    double u = params.a;
    for (long i = 0; i < steps; ++i) {
      const double dt = std::min(h, horizon - i * h);
      if (dt < h)
        u = std::exp(-0.5 * params.k * dt) * u + std::sqrt(ou_transition_variance(dt, params.k)) * stream.normal();
      else
        u = decay * u + sd * stream.normal();
      if (u <= 0.0) return 0;
    }
    return 1;
  });
  long count = 0;
  for (auto s : survived) count += s;
  OuSurvival out;
  out.estimate = proportion_estimate(count, n_paths);
  out.analytic = params.a == 0.0 ? 0.0 : chi(params.a / (2.0 * std::sqrt(beta(horizon, params.k))));
  out.bias_bound = 2.0 * std::sqrt(h);
  return out;
}

// Drift profiles --------------------------------------------------------------

DriftProfile DriftProfile::constant(double c) {
  DriftProfile p;
  p.kind = Kind::Constant;
  p.c = c;
  return p;
}

DriftProfile DriftProfile::linear(double slope) {
  DriftProfile p;
  p.kind = Kind::Linear;
  p.c = slope;
  return p;
}

DriftProfile DriftProfile::sampled(std::vector<std::pair<double, double>> table) {
  DriftProfile p;
  p.kind = Kind::Table;
  p.table = std::move(table);
  return p;
}

double DriftProfile::value(double s) const {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return c;
    case Kind::Linear: return c * s;
    case Kind::Table: {
      if (s <= table.front().first) return table.front().second;
      if (s >= table.back().first) return table.back().second;
      const auto it = std::upper_bound(table.begin(), table.end(), s,
                                       [](double v, const auto& e) { return v < e.first; });
      const auto& [x1, y1] = *it;
      const auto& [x0, y0] = *(it - 1);
      return y0 + (y1 - y0) * (s - x0) / (x1 - x0);
    }
  }
  return 0.0;
}

double DriftProfile::integral(double r) const {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return c * r;
    case Kind::Linear: return 0.5 * c * r * r;
    case Kind::Table: {
      // Exact integral of the piecewise-linear interpolant from 0 to r.
      std::vector<double> knots = {0.0};
      for (const auto& [x, y] : table)
        if (x > 0.0 && x < r) knots.push_back(x);
      knots.push_back(r);
      double sum = 0.0;
      for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        sum += 0.5 * (value(knots[i]) + value(knots[i + 1])) * (knots[i + 1] - knots[i]);
      return sum;
    }
  }
  return 0.0;
}

std::string DriftProfile::describe() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::Zero: out << "zero"; break;
    case Kind::Constant: out << "constant(" << c << ")"; break;
    case Kind::Linear: out << "linear(" << c << ")"; break;
    case Kind::Table: out << "table(" << table.size() << " points)"; break;
  }
  return out.str();
}

void RadialComparisonSpec::validate() const {
  if (!(C0 > 0.0) || !std::isfinite(C0)) fail(ErrorKind::InvalidInput, "C0 must be positive");
  if (!(r0 > 0.0) || !std::isfinite(r0)) fail(ErrorKind::InvalidInput, "r0 must be positive");
  switch (b.kind) {
    case DriftProfile::Kind::Zero: break;
    case DriftProfile::Kind::Constant:
    case DriftProfile::Kind::Linear:
      if (!(b.c >= 0.0) || !std::isfinite(b.c)) fail(ErrorKind::InvalidInput, "b must be finite and nonnegative");
      break;
    case DriftProfile::Kind::Table:
      if (b.table.empty()) fail(ErrorKind::InvalidInput, "b table is empty");
      for (std::size_t i = 0; i < b.table.size(); ++i) {
        const auto& [x, y] = b.table[i];
        if (!std::isfinite(x) || !std::isfinite(y) || y < 0.0 || x < 0.0)
          fail(ErrorKind::InvalidInput, "b table entries must be finite and nonnegative");
        if (i > 0 && !(x > b.table[i - 1].first))
          fail(ErrorKind::InvalidInput, "b table abscissae must increase");
      }
      break;
  }
}

double RadialComparisonSpec::phi(double r) const { return C0 + 0.5 * b.integral(r); }

double RadialComparisonSpec::psi(double r) const {
  const double s = r - 2.0 * r0;
  if (!(s > 0.0)) fail(ErrorKind::Domain, "psi: argument must exceed 2 r0");
  if (s <= 1.0) return 2.0 / s;
  if (s >= 2.0) return 0.0;
  // Hermite join: value 2, slope -2 at s = 1; value 0, slope 0 at s = 2.
  const double x = s - 1.0;
  return 2.0 * x * x * x - 2.0 * x * x - 2.0 * x + 2.0;
}

// Feller test ---------------------------------------------------------------

std::string to_string(FellerDecision d) {
  switch (d) {
    case FellerDecision::Explodes: return "explodes";
    case FellerDecision::Survives: return "survives";
    case FellerDecision::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

struct FellerIntegrals {
  double at_quarter = 0.0, at_half = 0.0, at_full = 0.0;
};

// J' = 1 - bb(y) J with J(1) = 0; each step integrates exactly with bb frozen
// at the step's mean, so large drifts stay stable. I = int_1^y J.
FellerIntegrals feller_integrals(const RadialComparisonSpec& spec, double C, double y_max, double h) {
  auto big_b = [&](double y) { return C + spec.b.integral(y); };
  const long steps = static_cast<long>(std::ceil((y_max - 1.0) / h));
  const double step = (y_max - 1.0) / steps;
  const double quarter = y_max / 4.0, half = y_max / 2.0;
  FellerIntegrals out;
  double j = 0.0, integral = 0.0, y = 1.0;
  double bb_left = big_b(1.0);
  for (long i = 0; i < steps; ++i) {
    const double bb_mid = big_b(y + 0.5 * step), bb_right = big_b(y + step);
    const double delta_b = step * (bb_left + 4.0 * bb_mid + bb_right) / 6.0;
    const double decay = std::exp(-delta_b);
    const double source = delta_b > 1e-12 ? step * (-std::expm1(-delta_b)) / delta_b : step;
    const double next = decay * j + source;
    integral += 0.5 * (j + next) * step;
    j = next;
    const double y_prev = y;
    y = 1.0 + (i + 1) * step;
    bb_left = bb_right;
    if (y_prev < quarter && y >= quarter) out.at_quarter = integral - j * (y - quarter);
    if (y_prev < half && y >= half) out.at_half = integral - j * (y - half);
  }
  out.at_full = integral;
  return out;
}

FellerDecision decide(double ratio) {
  if (ratio >= 0.9) return FellerDecision::Survives;
  if (ratio <= 0.75) return FellerDecision::Explodes;
  return FellerDecision::Inconclusive;
}

double increment_ratio(const FellerIntegrals& f) {
  const double late = f.at_full - f.at_half, early = f.at_half - f.at_quarter;
  if (!(early > 0.0)) return late > 0.0 ? kInfinity : 0.0;
  return late / early;
}

}  // namespace

FellerResult feller_explosion_test(const RadialComparisonSpec& spec, double C, double y_max, double step) {
  spec.validate();
  if (!(C > 0.0)) fail(ErrorKind::InvalidInput, "feller test: C must be positive");
  if (!(y_max >= 10.0) || !std::isfinite(y_max)) fail(ErrorKind::InvalidInput, "feller test: y_max must be at least 10");
  const double h = step > 0.0 ? step : std::min(0.01, (y_max - 1.0) / 1e5);
  const FellerIntegrals coarse = feller_integrals(spec, C, y_max, h);
  const FellerIntegrals fine = feller_integrals(spec, C, y_max, h / 2.0);
  if (!std::isfinite(coarse.at_full) || !std::isfinite(fine.at_full))
    fail(ErrorKind::Numerical, "feller test: integral is not finite");
  FellerResult out;
  out.integral = coarse.at_full;
  out.increment_ratio = increment_ratio(coarse);
  out.increment_ratio_refined = increment_ratio(fine);
  out.step = h;
  const FellerDecision a = decide(out.increment_ratio), b = decide(out.increment_ratio_refined);
  out.decision = a == b ? a : FellerDecision::Inconclusive;
  return out;
}

// Radial comparison ---------------------------------------------------------------

RadialPath simulate_radial_comparison(const RadialComparisonSpec& spec, double a0, const Schedule& schedule,
                                      const std::vector<double>& lambdas) {
  spec.validate();
  if (!(a0 > 2.0 * spec.r0)) fail(ErrorKind::Domain, "radial comparison: start must exceed 2 r0");
  if (static_cast<int>(lambdas.size()) != schedule.steps)
    fail(ErrorKind::InvalidInput, "radial comparison: one lambda per schedule step is required");
  RadialPath out;
  out.times.push_back(schedule.times[0]);
  out.values.push_back(a0);
  const double alpha = schedule.alpha;
  for (int n = 0; n < schedule.steps; ++n) {
    const double rho = out.values.back();
    const double next =
        rho + schedule.fraction(n) * (alpha * lambdas[n] + alpha * alpha * (spec.phi(rho) + spec.psi(rho)));
    out.times.push_back(schedule.times[n + 1]);
    out.values.push_back(next);
    if (!(next > 2.0 * spec.r0)) {
      out.left_domain = true;
      break;
    }
  }
  return out;
}

RadialPath simulate_radial_diffusion(const RadialComparisonSpec& spec, double a0, double t1, double horizon,
                                     double h, RandomStream& stream) {
  spec.validate();
  if (!(a0 > 2.0 * spec.r0)) fail(ErrorKind::Domain, "radial diffusion: start must exceed 2 r0");
  if (!(h > 0.0) || !(horizon > 0.0)) fail(ErrorKind::InvalidInput, "radial diffusion: needs h, horizon > 0");
  const long steps = static_cast<long>(std::ceil(horizon / h - 1e-9));
  RadialPath out;
  out.times.reserve(steps + 1);
  out.values.reserve(steps + 1);
  out.times.push_back(t1);
  out.values.push_back(a0);
  for (long i = 0; i < steps; ++i) {
    const double dt = std::min(h, horizon - i * h);
    const double rho = out.values.back();
    const double next = rho + (spec.phi(rho) + spec.psi(rho)) * dt + std::sqrt(dt) * stream.normal();
    out.times.push_back(t1 + std::min(horizon, (i + 1) * h));
    out.values.push_back(next);
    if (!(next > 2.0 * spec.r0)) {
      out.left_domain = true;
      break;
    }
  }
  return out;
}

std::vector<double> radial_lambdas(const ManifoldModel& model, const WalkPath& path, const Point& o, double r0,
                                   FrameOrder order) {
  const int steps = path.schedule.steps;
  std::vector<double> out(steps);
  const double scale = std::sqrt(model.dim() + 2.0);
  for (int n = 0; n < steps; ++n) {
    const double t = path.schedule.times[n];
    const Point& x = path.skeleton[n];
    const Vector& xi = path.noise_record[n];
    if ((x - o).norm() == 0.0 || distance(model, t, o, x) < r0) {
      out[n] = scale * xi[0];
      continue;
    }
    const Geodesic g = minimal_geodesic(model, t, o, x);
    const TangentVector noise = scaled_noise(model, t, x, xi, order);
    out[n] = model.inner(t, x, noise.components, g.final_velocity().components);
  }
  return out;
}

}  // namespace gtwalk
