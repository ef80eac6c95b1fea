#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gtwalk/comparison.hpp"
#include "gtwalk/coupling.hpp"
#include "gtwalk/stats.hpp"

namespace gtwalk {

using Json = nlohmann::ordered_json;

struct BiasTerm {
  std::string name;
  double value = 0.0;
};

/// Outcome of one Monte Carlo check. Every check compares an estimate against
/// an upper bound: pass iff estimate <= bound + 3 stderr + sum(bias_terms).
struct VerificationReport {
  std::string id;
  Json params = Json::object();
  McEstimate estimate;
  double bound = 0.0;
  /// False for descriptive runs; bound and margin then serialize as null.
  bool has_bound = true;
  std::vector<BiasTerm> bias_terms;
  /// bound + 3 stderr + bias - estimate.
  double margin = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
  double runtime_ms = 0.0;
  /// Check-specific tables and secondary numbers.
  Json details = Json::object();

  double bias_total() const;
  /// Computes margin and pass; `extra` can veto a pass for checks with
  /// conditions beyond the bound comparison.
  void finalize(bool extra = true);
};

Json to_json(const VerificationReport& report);

/// CSV mirror of the JSON report: one row per report.
void write_report_csv_header(std::ostream& out);
void write_report_csv_row(std::ostream& out, const VerificationReport& report);

/// Fraction of reflection-coupled paths still apart at walk.t2, against
/// chi(d0 / (2 sqrt(beta(t2 - t1)))). `finite_alpha_bias` is recorded as a
/// declared bias term.
VerificationReport estimate_coupling_survival(const ManifoldModel& model, const CouplingConfig& config,
                                              long n_paths, int threads = 0, double finite_alpha_bias = 0.0);

/// Largest rise of e^{k(t-t1)/2} d(t) over all parallel-coupled paths, against
/// constant * alpha.
VerificationReport check_contraction(const ManifoldModel& model, const CouplingConfig& config, long n_paths,
                                     int threads = 0, double constant = 5.0);

struct TestFunction {
  std::string name;
  std::function<double(const Point&)> f;
  /// sup f - inf f.
  double oscillation = 1.0;
};

/// |E f(X1(t2)) - E f(X2(t2))| from the reflection-coupled pair started at
/// (start1, start2), against d(start1, start2) osc(f) / sqrt(2 pi beta(t2 - t1)).
VerificationReport check_gradient_estimate(const ManifoldModel& model, const CouplingConfig& config,
                                           const TestFunction& f, long n_paths, int threads = 0);

/// Scalar summary of X(t2) and its limiting law.
struct ReferenceLaw {
  std::string name;
  std::function<double(const ManifoldModel&, double, const Point&)> observable;
  std::function<double(double)> cdf;
  /// Support of the reference law used for the W1 integral.
  double lo = -10.0;
  double hi = 10.0;
};

/// Signed geodesic coordinate of x along the first frame vector at o (the
/// angle on a unit circle, the coordinate on a line).
double geodesic_coordinate(const ManifoldModel& model, double t, const Point& o, const Point& x);

/// N(0, t2 - t1) law of the coordinate of a 1-dimensional flat walk started at the origin.
ReferenceLaw gaussian_line_law(double variance);
/// Wrapped N(0, variance) law of the angle on the unit circle, measured from the start.
ReferenceLaw wrapped_gaussian_law(double variance);

struct ConvergenceRow {
  double alpha = 0.0;
  double w1 = 0.0;
  double w1_stderr = 0.0;
  KsResult ks;
};

/// Per-alpha W1 (with bootstrap stderr) and KS of X^alpha(t2) against the
/// reference law. Passes when W1 does not increase by more than 3 combined
/// bootstrap stderrs between consecutive alphas and the KS test passes at the
/// smallest alpha. The estimate is W1 at the smallest alpha, the bound W1 at
/// the largest.
VerificationReport convergence_diagnostic(const ManifoldModel& model, const WalkConfig& base,
                                          const std::vector<double>& alphas, long n_paths,
                                          const ReferenceLaw& reference, int threads = 0,
                                          int bootstrap_replicates = 100,
                                          std::vector<ConvergenceRow>* rows = nullptr);

/// Fraction of reflection-coupled paths with d(X1, X2) > U + margin at some
/// schedule time before coupling or pair exit (radius walk.exit_radius, 8 if
/// unset), against max_fraction.
VerificationReport check_chain_domination(const ManifoldModel& model, const CouplingConfig& config, long n_paths,
                                          int threads = 0, double margin = 0.05, double max_fraction = 0.05);

/// Fraction of walks with d(o, X) > rho + margin before exit, rho the discrete
/// radial comparison driven by the walk's own noise from d(o, x0) + 3 r0.
VerificationReport check_radial_domination(const ManifoldModel& model, const WalkConfig& config,
                                           const RadialComparisonSpec& spec, long n_paths, int threads = 0,
                                           double margin = 0.1, double max_fraction = 0.05);

/// OU survival by exact transitions against chi(a / (2 sqrt(beta))), with the
/// grid bias 2 sqrt(h) declared. Passes on |estimate - analytic| within
/// 3 stderr + bias; the bound field carries the analytic value.
VerificationReport check_ou_survival(const OUParams& params, double horizon, long n_paths, double h,
                                     std::uint64_t seed, int threads = 0);

}  // namespace gtwalk
