// Acceptance run: one PASS/FAIL line per criterion. Experiments come from
// configs/acceptance.json so the same runs can be repeated with the CLI.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "gtwalk/experiment.hpp"
#include "gtwalk/parallel.hpp"
#include "gtwalk/variation.hpp"
#include "test_util.hpp"

namespace {

using namespace gtwalk;
using testing::random_point;
using testing::random_tangent;

struct Outcome {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [failed: " << what << "]";
    }
  }
};

class Acceptance {
 public:
  Acceptance(const std::string& config_path, int threads) : threads_(threads) {
    for (auto& c : load_config(config_path)) configs_.emplace(c.id, std::move(c));
  }

  const ExperimentConfig& config(const std::string& id) const {
    const auto it = configs_.find(id);
    if (it == configs_.end()) fail(ErrorKind::InvalidInput, "acceptance config has no experiment '" + id + "'");
    return it->second;
  }

  VerificationReport run(const std::string& id) {
    const auto start = std::chrono::steady_clock::now();
    VerificationReport r = run_experiment(config(id), threads_);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "  ran %-24s %7.1f s\n", id.c_str(), s);
    return r;
  }

  const std::map<std::string, ExperimentConfig>& configs() const { return configs_; }
  int threads() const { return threads_; }

 private:
  int threads_;
  std::map<std::string, ExperimentConfig> configs_;
};

double stderr_of(const VerificationReport& r) { return r.estimate.std_error; }

Outcome flat_mirror(Acceptance& a) {
  Outcome o;
  const VerificationReport r = a.run("flat-mirror");
  const double target = chi(0.5);
  const double tol = 3.0 * stderr_of(r) + 0.02;
  o.note << "survival " << r.estimate.mean << " +- " << stderr_of(r) << ", chi(0.5) = " << target << ", tol "
         << tol;
  o.require(std::abs(r.estimate.mean - target) <= tol, "|estimate - chi(0.5)| <= 3 se + 0.02");
  o.require(std::abs(r.bound - target) < 1e-12, "report bound is chi(0.5)");
  return o;
}

Outcome sphere_bound(Acceptance& a) {
  Outcome o;
  const VerificationReport r = a.run("sphere-bound");
  const double bound = chi(1.0 / std::sqrt(2.0));
  o.note << "survival " << r.estimate.mean << " +- " << stderr_of(r) << ", bound " << bound;
  o.require(r.estimate.mean <= bound + 3.0 * stderr_of(r), "estimate <= chi(1/sqrt 2) + 3 se");
  o.require(r.pass, "report pass");
  return o;
}

Outcome flow_sphere(Acceptance& a) {
  Outcome o;
  const ExperimentConfig& c = a.config("flow-sphere-bound");
  const ModelPtr model = parse_manifold(c.manifold, {c.t1, c.t2});
  std::mt19937_64 rng(31);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = testing::random_time(*model, rng);
    const Point x = random_point(*model, rng, 1.5);
    const Vector v = random_tangent(*model, x, rng);
    worst = std::max(worst, std::abs(curvature_condition_residual(*model, t, x, v / model->norm(t, x, v), c.k)));
  }
  const VerificationReport r = a.run("flow-sphere-bound");
  const double bound = chi(1.0 / std::sqrt(2.0));
  o.note << "max residual " << worst << " on 1000 samples; survival " << r.estimate.mean << " +- "
         << stderr_of(r) << ", bound " << bound;
  o.require(worst <= 1e-8, "residual <= 1e-8");
  o.require(r.estimate.mean <= bound + 3.0 * stderr_of(r), "estimate <= bound + 3 se");
  return o;
}

Outcome contraction(Acceptance& a) {
  Outcome o;
  // Scaled flat metric: e^{k(t-t1)/2} d_t is constant along every path.
  const ExperimentConfig& c = a.config("scaled-contraction");
  const ModelPtr model = parse_manifold(c.manifold, {c.t1, c.t2});
  CouplingConfig pair;
  pair.walk.alpha = *c.alpha;
  pair.walk.t1 = c.t1;
  pair.walk.t2 = c.t2;
  pair.walk.seed = c.seed;
  pair.start1 = model->origin();
  pair.start2 = exp(*model, c.t1, pair.start1, *c.d0 * frame_at(*model, c.t1, pair.start1).vectors.col(0));
  pair.kind = CouplingKind::ParallelTransport;
  pair.k = c.k;
  const std::vector<double> deviations = parallel_map(c.n_paths, a.threads(), [&](std::int64_t p) {
    const CoupledPath path = run_coupled(*model, pair, static_cast<std::uint64_t>(p));
    double worst = 0.0;
    for (std::size_t n = 0; n < path.distance.size(); ++n)
      worst = std::max(worst, std::abs(std::exp(0.5 * c.k * (path.schedule.times[n] - c.t1)) * path.distance[n] -
                                       path.distance[0]));
    return worst;
  });
  double scaled_worst = 0.0;
  for (double d : deviations) scaled_worst = std::max(scaled_worst, d);
  o.note << "scaled flat max deviation " << scaled_worst << " over " << c.n_paths << " paths";
  o.require(scaled_worst <= 1e-10, "scaled flat deviation <= 1e-10");

  for (const char* id : {"flow-contraction-0.05", "flow-contraction-0.02"}) {
    const VerificationReport r = a.run(id);
    o.note << "; " << id << " violation " << r.estimate.mean << " vs " << r.bound;
    o.require(r.estimate.mean <= r.bound, std::string(id) + " violation <= 5 alpha");
  }
  return o;
}

Outcome gradient(Acceptance& a) {
  Outcome o;
  const VerificationReport r = a.run("gradient");
  const double exact = r.details["exact_difference"].get<double>();
  const double bound = 0.2 / std::sqrt(2.0 * std::numbers::pi);
  const double se = stderr_of(r);
  o.note << "exact " << exact << ", MC " << r.estimate.mean << " +- " << se << ", bound " << bound;
  o.require(std::abs(r.bound - bound) < 1e-12, "report bound is d / sqrt(2 pi)");
  o.require(exact < bound, "exact difference below the bound");
  o.require(r.estimate.mean <= bound + 3.0 * se, "MC below the bound (3 se)");
  o.require(std::abs(r.estimate.mean - exact) <= 3.0 * se, "MC within 3 se of exact");
  return o;
}

Outcome convergence(Acceptance& a) {
  Outcome o;
  const VerificationReport line = a.run("line-law");
  const Json& row = line.details["rows"].back();
  o.note << "line: KS D = " << row["ks_statistic"].get<double>() << " (p = " << row["ks_p_value"].get<double>()
         << ")";
  o.require(row["ks_pass_01"].get<bool>(), "line KS at level 0.01");

  const VerificationReport circle = a.run("circle-law");
  o.note << "; circle W1:";
  for (const Json& c : circle.details["rows"])
    o.note << " alpha=" << c["alpha"].get<double>() << " " << c["w1"].get<double>() << "+-"
           << c["w1_stderr"].get<double>();
  o.require(circle.details["trend_ok"].get<bool>(), "circle W1 non-increasing within bootstrap noise");
  return o;
}

Outcome ou(Acceptance& a) {
  Outcome o;
  for (const char* id : {"ou-k0", "ou-k1"}) {
    const VerificationReport r = a.run(id);
    const double analytic = r.details["analytic"].get<double>();
    const double tol = 3.0 * stderr_of(r) + 2.0 * std::sqrt(a.config(id).h);
    o.note << id << " " << r.estimate.mean << " vs " << analytic << " (tol " << tol << "); ";
    o.require(std::abs(r.estimate.mean - analytic) <= tol, std::string(id) + " within 3 se + 2 sqrt(h)");
  }
  return o;
}

Outcome variation() {
  Outcome o;
  const TimeWindow w{0.0, 1.0};
  // Green functions against u, sin u and sinh u.
  double green_err = 0.0;
  const auto flat = make_euclidean(3, w);
  const auto sphere = make_round_sphere(2, 1.0, false, w);
  const auto hyper = make_hyperbolic(3, w);
  const std::vector<std::pair<const ManifoldModel*, double (*)(double)>> closed = {
      {flat.get(), [](double u) { return u; }},
      {sphere.get(), [](double u) { return std::sin(u); }},
      {hyper.get(), [](double u) { return std::sinh(u); }}};
  std::mt19937_64 rng(32);
  for (const auto& [model, g] : closed) {
    for (double length : {0.5, 1.5, 3.0}) {
      const Point x = model->origin();
      Vector v = random_tangent(*model, x, rng);
      v *= length / model->norm(0.0, x, v);
      const GreenSolution green = solve_green(*model, geodesic_from(*model, 0.0, x, v));
      for (std::size_t i = 0; i < green.grid.size(); ++i)
        green_err = std::max(green_err, std::abs(green.g[i] - g(green.grid[i])));
    }
  }
  o.note << "Green max error " << green_err;
  o.require(green_err <= 1e-6, "Green function within 1e-6");

  // Trace of the dagger index forms against (m-1) G'(d) / G(d).
  double trace_err = 0.0;
  const std::vector<ModelPtr> curved = {make_round_sphere(3, 1.0, false, w), make_round_sphere(3, 2.0, true, w),
                                        make_hyperbolic(3, w),
                                        make_scaled_metric(make_round_sphere(2, 1.0, false, w), 0.5)};
  for (const auto& model : curved) {
    for (int trial = 0; trial < 3; ++trial) {
      const double t = testing::random_time(*model, rng);
      const Point x = random_point(*model, rng, 0.5);
      Vector v = random_tangent(*model, x, rng);
      v *= (0.5 + 0.4 * trial) / model->norm(t, x, v);
      const Geodesic g = geodesic_from(*model, t, x, v);
      const GreenSolution green = solve_green(*model, g);
      const Frame frame = frame_at(*model, t, g.end);
      const Vector e = g.final_velocity().components;
      std::vector<Vector> basis;
      for (int i = 0; i < model->dim(); ++i) {
        Vector b = frame.vectors.col(i);
        b -= model->inner(t, g.end, b, e) * e;
        for (const Vector& c : basis) b -= model->inner(t, g.end, b, c) * c;
        const double n = model->norm(t, g.end, b);
        if (n > 1e-6) basis.push_back(b / n);
      }
      double trace = 0.0;
      for (const Vector& b : basis) trace += index_form(*model, t, g, dagger_field(green, *model, {g.end, b}));
      trace_err = std::max(trace_err, std::abs(trace - (model->dim() - 1) * green.g_prime.back() / green.g.back()));
    }
  }
  o.note << "; dagger trace max error " << trace_err;
  o.require(trace_err <= 1e-3, "summed dagger index form within 1e-3");

  // d/dt distance: finite differences and the two closed forms.
  double fd_err = 0.0, closed_err = 0.0;
  for (const auto& [label, model] : testing::all_models()) {
    if (!model->has_log()) continue;
    for (int trial = 0; trial < 10; ++trial) {
      const double t = 0.2 + 0.6 * std::uniform_real_distribution<double>()(rng);
      const Point x = random_point(*model, rng), y = random_point(*model, rng);
      const double h = 1e-4;
      const double fd = (distance(*model, t + h, x, y) - distance(*model, t - h, x, y)) / (2 * h);
      fd_err = std::max(fd_err, std::abs(dt_distance(*model, t, minimal_geodesic(*model, t, x, y)) - fd));
    }
  }
  const double k = 0.9;
  const auto scaled = make_scaled_metric(make_euclidean(2, w), k);
  const auto flow = make_round_sphere(2, 1.0, true, w);
  for (int trial = 0; trial < 10; ++trial) {
    const double t = testing::random_time(*scaled, rng);
    const Point x = random_point(*scaled, rng), y = random_point(*scaled, rng);
    const Geodesic g = minimal_geodesic(*scaled, t, x, y);
    closed_err = std::max(closed_err, std::abs(dt_distance(*scaled, t, g) + 0.5 * k * g.length));
    const Point p = random_point(*flow, rng), q = random_point(*flow, rng);
    const Geodesic gf = minimal_geodesic(*flow, t, p, q);
    closed_err = std::max(closed_err, std::abs(dt_distance(*flow, t, gf) - gf.length / (2.0 * (1.0 + t))));
  }
  o.note << "; dt_distance FD error " << fd_err << ", closed-form error " << closed_err;
  o.require(fd_err <= 1e-5, "dt_distance vs finite differences within 1e-5");
  o.require(closed_err <= 1e-5, "dt_distance closed forms within 1e-5");
  return o;
}

Outcome feller(Acceptance& a) {
  Outcome o;
  for (const char* id : {"feller-zero", "feller-linear"}) {
    const VerificationReport r = a.run(id);
    o.note << id << " " << r.details["decision"].get<std::string>() << " (doubled y_max: "
           << r.details["decision_doubled_y_max"].get<std::string>() << "); ";
    o.require(r.pass, std::string(id) + " decision as expected and stable");
  }
  return o;
}

Outcome domination(Acceptance& a) {
  Outcome o;
  // Exact flat recursion d_{n+1} = |d_n + alpha lambda*| and U = d before the first fold.
  const auto flat = make_euclidean(2);
  CouplingConfig pair;
  pair.walk.alpha = 0.02;
  pair.walk.seed = 33;
  pair.start1 = testing::vec({0.0, 0.0});
  pair.start2 = testing::vec({1.0, 0.0});
  double worst = 0.0, worst_u = 0.0;
  for (int p = 0; p < 200; ++p) {
    const CoupledPath path = run_coupled(*flat, pair, p);
    const std::vector<double> u = dominating_process(path, 0.0);
    const int until = std::min(path.coupling_index - 1, path.schedule.steps);
    bool folded = false;
    for (int n = 0; n < until; ++n) {
      const double next = path.distance[n] + pair.walk.alpha * path.lambda_star[n];
      worst = std::max(worst, std::abs(path.distance[n + 1] - std::abs(next)));
      folded = folded || next < 0.0;
      if (!folded) worst_u = std::max(worst_u, std::abs(path.distance[n + 1] - u[n + 1]));
    }
  }
  o.note << "flat recursion error " << worst << ", U - d before folding " << worst_u;
  o.require(worst <= 1e-10 && worst_u <= 1e-10, "flat recursion exact");

  const VerificationReport chain = a.run("chain-domination");
  o.note << "; chain violated on " << chain.estimate.mean << " (margin " << a.config("chain-domination").margin.value()
         << ")";
  o.require(chain.estimate.mean < 0.05, "chain domination violated on < 5%");
  const VerificationReport radial = a.run("radial-domination");
  o.note << "; radial violated on " << radial.estimate.mean << " (margin "
         << a.config("radial-domination").margin.value() << ")";
  o.require(radial.estimate.mean < 0.05, "radial domination violated on < 5%");
  return o;
}

Outcome determinism(Acceptance& a) {
  Outcome o;
  int compared = 0, differing = 0;
  for (const auto& [id, base] : a.configs()) {
    ExperimentConfig c = base;
    c.n_paths = std::max<long>(20, c.n_paths / 50);
    Json one = to_json(run_experiment(c, 1));
    Json four = to_json(run_experiment(c, 4));
    one.erase("runtime_ms");
    four.erase("runtime_ms");
    ++compared;
    if (one.dump() != four.dump()) {
      ++differing;
      o.require(false, id + " differs between 1 and 4 workers");
    }
  }
  o.note << compared << " experiments rerun with 1 and 4 workers, " << differing << " differ";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string config_path = argc > 1 ? argv[1] : GTWALK_ACCEPTANCE_CONFIG;
  try {
    Acceptance a(config_path, resolve_threads(0));
    struct Criterion {
      const char* name;
      std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"flat mirror-coupling equality", [&] { return flat_mirror(a); }},
        {"curved coupling bound (unit sphere)", [&] { return sphere_bound(a); }},
        {"backward Ricci flow sphere", [&] { return flow_sphere(a); }},
        {"parallel-transport contraction", [&] { return contraction(a); }},
        {"gradient estimate", [&] { return gradient(a); }},
        {"convergence in law", [&] { return convergence(a); }},
        {"OU survival identity", [&] { return ou(a); }},
        {"variation machinery", [] { return variation(); }},
        {"Feller test", [&] { return feller(a); }},
        {"domination diagnostics", [&] { return domination(a); }},
        {"determinism across worker counts", [&] { return determinism(a); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
      Outcome out;
      try {
        out = criteria[i].run();
      } catch (const std::exception& e) {
        out.pass = false;
        out.note << "error: " << e.what();
      }
      failures += !out.pass;
      std::cout << (out.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].name << ": "
                << out.note.str() << std::endl;
    }
    std::cout << criteria.size() - failures << "/" << criteria.size() << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
