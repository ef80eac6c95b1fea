#include "gtwalk/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>

#include "gtwalk/parallel.hpp"

namespace gtwalk {

double VerificationReport::bias_total() const {
  double total = 0.0;
  for (const auto& b : bias_terms) total += b.value;
  return total;
}

void VerificationReport::finalize(bool extra) {
  if (!has_bound) {
    margin = 0.0;
    pass = extra;
    return;
  }
  margin = bound + 3.0 * estimate.std_error + bias_total() - estimate.mean;
  pass = margin >= 0.0 && extra;
}

Json to_json(const VerificationReport& r) {
  Json bias = Json::object();
  for (const auto& b : r.bias_terms) bias[b.name] = b.value;
  return Json{{"id", r.id},
              {"params", r.params},
              {"estimate",
               {{"n", r.estimate.n},
                {"mean", r.estimate.mean},
                {"stderr", r.estimate.std_error},
                {"ci95", {r.estimate.ci_lo, r.estimate.ci_hi}}}},
              {"bound", r.has_bound ? Json(r.bound) : Json(nullptr)},
              {"margin", r.has_bound ? Json(r.margin) : Json(nullptr)},
              {"pass", r.pass},
              {"bias_terms", bias},
              {"seed", r.seed},
              {"runtime_ms", r.runtime_ms},
              {"details", r.details}};
}

void write_report_csv_header(std::ostream& out) {
  out << "id,n,mean,stderr,ci95_lo,ci95_hi,bound,margin,pass,bias_total,seed,runtime_ms,params\n";
}

void write_report_csv_row(std::ostream& out, const VerificationReport& r) {
  // params is JSON; double the quotes for CSV.
  std::string params = r.params.dump();
  std::string quoted;
  for (char c : params) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  const auto precision = out.precision(17);
  out << r.id << ',' << r.estimate.n << ',' << r.estimate.mean << ',' << r.estimate.std_error << ','
      << r.estimate.ci_lo << ',' << r.estimate.ci_hi << ',';
  if (r.has_bound) out << r.bound << ',' << r.margin;
  else out << ',';
  out << ','
      << (r.pass ? "true" : "false") << ',' << r.bias_total() << ',' << r.seed << ',' << r.runtime_ms << ",\""
      << quoted << "\"\n";
  out.precision(precision);
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Json point_json(const Point& x) {
  Json out = Json::array();
  for (int i = 0; i < x.size(); ++i) out.push_back(x[i]);
  return out;
}

Json coupling_params(const ManifoldModel& model, const CouplingConfig& c, long n_paths) {
  return Json{{"model", model.name()},
              {"kind", to_string(c.kind)},
              {"alpha", c.walk.alpha},
              {"t1", c.walk.t1},
              {"t2", c.walk.t2},
              {"start1", point_json(c.start1)},
              {"start2", point_json(c.start2)},
              {"delta_couple", c.delta()},
              {"k", c.k},
              {"use_drift", c.walk.use_drift},
              {"n_paths", n_paths}};
}

Json walk_params(const ManifoldModel& model, const WalkConfig& c, long n_paths) {
  return Json{{"model", model.name()},
              {"alpha", c.alpha},
              {"t1", c.t1},
              {"t2", c.t2},
              {"start", point_json(c.start)},
              {"use_drift", c.use_drift},
              {"n_paths", n_paths}};
}

void require_paths(long n_paths) {
  if (n_paths < 1) fail(ErrorKind::InvalidInput, "n_paths must be positive");
}

bool never_coupled(const CoupledPath& path) { return path.coupling_index > path.schedule.steps; }

}  // namespace

VerificationReport estimate_coupling_survival(const ManifoldModel& model, const CouplingConfig& config,
                                              long n_paths, int threads, double finite_alpha_bias) {
  const auto start = Clock::now();
  require_paths(n_paths);
  if (config.kind != CouplingKind::Reflection)
    fail(ErrorKind::InvalidInput, "coupling survival needs the reflection coupling");
  config.validate(model);
  const auto survived = parallel_map(n_paths, resolve_threads(threads), [&](std::int64_t p) -> std::uint8_t {
    return never_coupled(run_coupled(model, config, static_cast<std::uint64_t>(p))) ? 1 : 0;
  });
  long count = 0;
  for (auto s : survived) count += s;

  VerificationReport r;
  r.id = "coupling_survival";
  r.params = coupling_params(model, config, n_paths);
  r.seed = config.walk.seed;
  r.estimate = proportion_estimate(count, n_paths);
  const double d0 = distance(model, config.walk.t1, config.start1, config.start2);
  r.bound = coupling_probability_bound(d0, config.k, config.walk.t2 - config.walk.t1);
  if (finite_alpha_bias > 0.0) r.bias_terms.push_back({"finite_alpha", finite_alpha_bias});
  r.details = Json{{"d0", d0}, {"survivors", count}};
  r.finalize();
  r.runtime_ms = elapsed_ms(start);
  return r;
}

VerificationReport check_contraction(const ManifoldModel& model, const CouplingConfig& config, long n_paths,
                                     int threads, double constant) {
  const auto start = Clock::now();
  require_paths(n_paths);
  if (config.kind != CouplingKind::ParallelTransport)
    fail(ErrorKind::InvalidInput, "contraction check needs the parallel-transport coupling");
  config.validate(model);
  const auto violations = parallel_map(n_paths, resolve_threads(threads), [&](std::int64_t p) {
    return contraction_violation(run_coupled(model, config, static_cast<std::uint64_t>(p)), config.k);
  });
  MeanAccumulator acc;
  double worst = 0.0;
  for (double v : violations) {
    acc.add(v);
    worst = std::max(worst, v);
  }

  VerificationReport r;
  r.id = "contraction";
  r.params = coupling_params(model, config, n_paths);
  r.params["constant"] = constant;
  r.seed = config.walk.seed;
  r.estimate.n = n_paths;
  r.estimate.mean = worst;
  r.estimate.ci_lo = r.estimate.ci_hi = worst;
  r.bound = constant * config.walk.alpha;
  r.details = Json{{"mean_violation", acc.mean()}, {"max_violation", worst}};
  r.finalize();
  r.runtime_ms = elapsed_ms(start);
  return r;
}

VerificationReport check_gradient_estimate(const ManifoldModel& model, const CouplingConfig& config,
                                           const TestFunction& f, long n_paths, int threads) {
  const auto start = Clock::now();
  require_paths(n_paths);
  if (config.kind != CouplingKind::Reflection)
    fail(ErrorKind::InvalidInput, "gradient estimate needs the reflection coupling");
  if (!(f.oscillation >= 0.0)) fail(ErrorKind::InvalidInput, "test function oscillation must be nonnegative");
  config.validate(model);
  struct Sample {
    double difference = 0.0;
    std::uint8_t coupled = 0;
  };
  const auto samples = parallel_map(n_paths, resolve_threads(threads), [&](std::int64_t p) {
    const CoupledPath path = run_coupled(model, config, static_cast<std::uint64_t>(p));
    return Sample{f.f(path.x1.back()) - f.f(path.x2.back()), static_cast<std::uint8_t>(!never_coupled(path))};
  });
  MeanAccumulator acc;
  long coupled = 0;
  for (const auto& s : samples) {
    acc.add(s.difference);
    coupled += s.coupled;
  }

  VerificationReport r;
  r.id = "gradient_estimate";
  r.params = coupling_params(model, config, n_paths);
  r.params["test_function"] = f.name;
  r.params["oscillation"] = f.oscillation;
  r.seed = config.walk.seed;
  r.estimate = acc.estimate();
  r.estimate.mean = std::abs(acc.mean());
  r.estimate.ci_lo = std::max(0.0, r.estimate.mean - (acc.mean() - r.estimate.ci_lo));
  r.estimate.ci_hi = r.estimate.mean + (r.estimate.ci_hi - acc.mean());
  const double t1 = config.walk.t1, horizon = config.walk.t2 - t1;
  const double d0 = distance(model, t1, config.start1, config.start2);
  r.bound = d0 * f.oscillation / std::sqrt(2.0 * std::numbers::pi * beta(horizon, config.k));
  r.details = Json{{"d0", d0}, {"signed_difference", acc.mean()}, {"coupled_fraction", double(coupled) / n_paths}};
  r.finalize();
  r.runtime_ms = elapsed_ms(start);
  return r;
}

double geodesic_coordinate(const ManifoldModel& model, double t, const Point& o, const Point& x) {
  if ((x - o).norm() == 0.0) return 0.0;
  if (!model.has_log()) fail(ErrorKind::Unsupported, model.name() + ": geodesic coordinates need log maps");
  const Vector v = model.log(t, o, x);
  const Frame frame = frame_at(model, t, o);
  return model.inner(t, o, v, frame.vectors.col(0));
}

ReferenceLaw gaussian_line_law(double variance) {
  if (!(variance > 0.0)) fail(ErrorKind::InvalidInput, "gaussian_line_law: variance must be positive");
  const double sd = std::sqrt(variance);
  ReferenceLaw law;
  law.name = "gaussian_line";
  law.observable = [](const ManifoldModel& model, double t, const Point& x) {
    return geodesic_coordinate(model, t, model.origin(), x);
  };
  law.cdf = [sd](double x) { return normal_cdf(x / sd); };
  law.lo = -12.0 * sd;
  law.hi = 12.0 * sd;
  return law;
}

ReferenceLaw wrapped_gaussian_law(double variance) {
  if (!(variance > 0.0)) fail(ErrorKind::InvalidInput, "wrapped_gaussian_law: variance must be positive");
  ReferenceLaw law;
  law.name = "wrapped_gaussian";
  law.observable = [](const ManifoldModel& model, double t, const Point& x) {
    return geodesic_coordinate(model, t, model.origin(), x);
  };
  law.cdf = [variance](double theta) { return wrapped_normal_cdf(theta, variance); };
  law.lo = -std::numbers::pi;
  law.hi = std::numbers::pi;
  return law;
}

VerificationReport convergence_diagnostic(const ManifoldModel& model, const WalkConfig& base,
                                          const std::vector<double>& alphas, long n_paths,
                                          const ReferenceLaw& reference, int threads, int bootstrap_replicates,
                                          std::vector<ConvergenceRow>* rows_out) {
  const auto start = Clock::now();
  require_paths(n_paths);
  if (alphas.empty()) fail(ErrorKind::InvalidInput, "convergence diagnostic: no alphas");
  for (std::size_t i = 1; i < alphas.size(); ++i)
    if (!(alphas[i] < alphas[i - 1])) fail(ErrorKind::InvalidInput, "convergence diagnostic: alphas must decrease");
  const int workers = resolve_threads(threads);

  std::vector<ConvergenceRow> rows;
  for (double alpha : alphas) {
    WalkConfig config = base;
    config.alpha = alpha;
    config.validate(model);
    const std::vector<double> values = parallel_map(n_paths, workers, [&](std::int64_t p) {
      const WalkPath path = run_walk(model, config, static_cast<std::uint64_t>(p));
      return reference.observable(model, config.t2, path.skeleton.back());
    });
    ConvergenceRow row;
    row.alpha = alpha;
    const auto w1 = [&](const std::vector<double>& v) {
      return wasserstein1_to_cdf(v, reference.cdf, reference.lo, reference.hi);
    };
    row.w1 = w1(values);
    row.w1_stderr = bootstrap_stderr(values, w1, bootstrap_replicates, base.seed);
    if (n_paths >= 100) row.ks = ks_statistic(values, reference.cdf);
    rows.push_back(row);
  }

  bool trend = true;
  Json table = Json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (i > 0) {
      const double noise = std::hypot(rows[i - 1].w1_stderr, row.w1_stderr);
      trend = trend && row.w1 <= rows[i - 1].w1 + 3.0 * noise;
    }
    table.push_back(Json{{"alpha", row.alpha},
                         {"w1", row.w1},
                         {"w1_stderr", row.w1_stderr},
                         {"ks_statistic", row.ks.statistic},
                         {"ks_p_value", row.ks.p_value},
                         {"ks_pass_01", row.ks.pass_01}});
  }
  const bool ks_ok = n_paths < 100 || rows.back().ks.pass_01;

  VerificationReport r;
  r.id = "convergence";
  r.params = walk_params(model, base, n_paths);
  r.params["alphas"] = alphas;
  r.params["reference"] = reference.name;
  r.params["bootstrap_replicates"] = bootstrap_replicates;
  r.seed = base.seed;
  r.estimate.n = n_paths;
  r.estimate.mean = rows.back().w1;
  r.estimate.std_error = rows.back().w1_stderr;
  r.estimate.ci_lo = r.estimate.mean - 1.959963984540054 * r.estimate.std_error;
  r.estimate.ci_hi = r.estimate.mean + 1.959963984540054 * r.estimate.std_error;
  r.bound = rows.front().w1;
  r.details = Json{{"rows", table}, {"trend_ok", trend}, {"ks_ok", ks_ok}};
  r.finalize(trend && ks_ok);
  r.runtime_ms = elapsed_ms(start);
  if (rows_out) *rows_out = std::move(rows);
  return r;
}

VerificationReport check_chain_domination(const ManifoldModel& model, const CouplingConfig& config, long n_paths,
                                          int threads, double margin, double max_fraction) {
  const auto start = Clock::now();
  require_paths(n_paths);
  if (config.kind != CouplingKind::Reflection)
    fail(ErrorKind::InvalidInput, "chain domination needs the reflection coupling");
  config.validate(model);
  const Point o = config.walk.reference(model);
  const double R = config.walk.exit_radius.value_or(8.0);
  struct Outcome {
    std::uint8_t violated = 0;
    double worst = 0.0;
  };
  const auto outcomes = parallel_map(n_paths, resolve_threads(threads), [&](std::int64_t p) {
    const CoupledPath path = run_coupled(model, config, static_cast<std::uint64_t>(p));
    const std::vector<double> u = dominating_process(path, config.k);
    const int stop = std::min(path.coupling_index, pair_exit_index(path, model, o, R));
    Outcome out;
    out.worst = -kInfinity;
    for (int n = 0; n < stop && n < static_cast<int>(u.size()); ++n)
      out.worst = std::max(out.worst, path.distance[n] - u[n]);
    out.violated = out.worst > margin ? 1 : 0;
    return out;
  });
  long violated = 0;
  double worst = -kInfinity;
  for (const auto& o2 : outcomes) {
    violated += o2.violated;
    worst = std::max(worst, o2.worst);
  }

  VerificationReport r;
  r.id = "chain_domination";
  r.params = coupling_params(model, config, n_paths);
  r.params["margin"] = margin;
  r.params["exit_radius"] = R;
  r.seed = config.walk.seed;
  r.estimate = proportion_estimate(violated, n_paths);
  r.bound = max_fraction;
  r.details = Json{{"violations", violated}, {"largest_excess", worst}};
  r.finalize();
  r.runtime_ms = elapsed_ms(start);
  return r;
}

VerificationReport check_radial_domination(const ManifoldModel& model, const WalkConfig& config,
                                           const RadialComparisonSpec& spec, long n_paths, int threads,
                                           double margin, double max_fraction) {
  const auto start = Clock::now();
  require_paths(n_paths);
  config.validate(model);
  spec.validate();
  const Point o = config.reference(model);
  const double R = config.exit_radius.value_or(8.0);
  const double a0 = distance(model, config.t1, o, config.start) + 3.0 * spec.r0;
  struct Outcome {
    std::uint8_t violated = 0;
    std::uint8_t left_domain = 0;
    double worst = 0.0;
  };
  const auto outcomes = parallel_map(n_paths, resolve_threads(threads), [&](std::int64_t p) {
    const WalkPath walk = run_walk(model, config, static_cast<std::uint64_t>(p));
    const std::vector<double> lambdas = radial_lambdas(model, walk, o, spec.r0, config.frame_order);
    const RadialPath rho = simulate_radial_comparison(spec, a0, walk.schedule, lambdas);
    Outcome out;
    out.worst = -kInfinity;
    out.left_domain = rho.left_domain ? 1 : 0;
    for (std::size_t n = 0; n < rho.values.size(); ++n) {
      const double d = distance(model, walk.schedule.times[n], o, walk.skeleton[n]);
      if (d > R - 1.0) break;
      out.worst = std::max(out.worst, d - rho.values[n]);
    }
    out.violated = out.worst > margin ? 1 : 0;
    return out;
  });
  long violated = 0, left = 0;
  double worst = -kInfinity;
  for (const auto& o2 : outcomes) {
    violated += o2.violated;
    left += o2.left_domain;
    worst = std::max(worst, o2.worst);
  }

  VerificationReport r;
  r.id = "radial_domination";
  r.params = walk_params(model, config, n_paths);
  r.params["margin"] = margin;
  r.params["exit_radius"] = R;
  r.params["b"] = spec.b.describe();
  r.params["C0"] = spec.C0;
  r.params["r0"] = spec.r0;
  r.seed = config.seed;
  r.estimate = proportion_estimate(violated, n_paths);
  r.bound = max_fraction;
  r.details = Json{{"violations", violated}, {"left_domain", left}, {"largest_excess", worst}, {"rho0", a0}};
  r.finalize();
  r.runtime_ms = elapsed_ms(start);
  return r;
}

VerificationReport check_ou_survival(const OUParams& params, double horizon, long n_paths, double h,
                                     std::uint64_t seed, int threads) {
  const auto start = Clock::now();
  const OuSurvival s = ou_survival_probability(params, horizon, n_paths, h, seed, resolve_threads(threads));
  VerificationReport r;
  r.id = "ou_survival";
  r.params = Json{{"a", params.a}, {"k", params.k}, {"t1", params.t1}, {"horizon", horizon},
                  {"h", h}, {"n_paths", n_paths}};
  r.seed = seed;
  r.estimate = s.estimate;
  r.bound = s.analytic;
  r.bias_terms.push_back({"grid_infimum", s.bias_bound});
  const bool above = s.estimate.mean >= s.analytic - 3.0 * s.estimate.std_error - s.bias_bound;
  r.details = Json{{"analytic", s.analytic}, {"lower_side_ok", above}};
  r.finalize(above);
  r.runtime_ms = elapsed_ms(start);
  return r;
}

}  // namespace gtwalk
