#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gtwalk/verify.hpp"

namespace gtwalk {

enum class ExperimentKind {
  Walk,
  Couple,
  VerifyCouplingBound,
  VerifyContraction,
  VerifyGradient,
  Convergence,
  FellerTest,
  OuSurvival,
  RadialDomination,
  ChainDomination,
};

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(const std::string& name);
const std::vector<std::string>& experiment_kind_names();

/// Builds a model from a descriptor such as "euclidean(2)", "sphere(2)",
/// "flow_sphere(2, 1.5)", "hyperbolic(3)", "scaled(euclidean(2), 1)" or
/// "chart_sphere(2)". `key` names the config entry in error messages.
ModelPtr parse_manifold(const std::string& descriptor, TimeWindow window, const std::string& key = "manifold");

/// One line per descriptor form, for list-models.
std::vector<std::string> manifold_descriptor_help();

/// Point given as ambient coordinates [..] or as {"exp": [..]}, the image of
/// a tangent vector at the model origin.
struct PointSpec {
  std::optional<Point> coordinates;
  std::optional<Vector> exp_from_origin;
  Point resolve(const ManifoldModel& model, double t) const;
};

struct HalfSpace {
  std::optional<Vector> normal;
  std::optional<double> offset;
};

struct ExperimentConfig {
  std::string id;
  ExperimentKind kind = ExperimentKind::Walk;
  std::string manifold;
  double t1 = 0.0;
  double t2 = 1.0;
  std::optional<double> alpha;
  std::vector<double> alphas;
  long n_paths = 1000;
  std::uint64_t seed = 0;
  double k = 0.0;
  std::optional<PointSpec> start;
  std::optional<PointSpec> start1;
  std::optional<PointSpec> start2;
  /// Places start2 at this g(t1)-distance from start1 along its first frame vector.
  std::optional<double> d0;
  std::optional<double> delta_couple;
  std::optional<PointSpec> reference_point;
  double exit_radius = 8.0;
  CouplingKind coupling = CouplingKind::Reflection;
  bool stick_after_coupling = true;
  DriftProfile b;
  double C0 = 1.0;
  double r0 = 0.5;
  double feller_C = 1.0;
  double y_max = 100.0;
  std::optional<FellerDecision> expect;
  double a = 1.0;
  double h = 1e-4;
  std::optional<double> horizon;
  std::string reference_law;
  int bootstrap = 100;
  double contraction_constant = 5.0;
  std::optional<double> margin;
  double max_fraction = 0.05;
  double bias = 0.0;
  HalfSpace halfspace;
  int dump_paths = 0;
  std::string out = ".";
  /// The experiment document as parsed (after flag overrides); hashed into the manifest.
  Json source;
};

/// Flags that replace the corresponding config keys.
struct ConfigOverrides {
  std::optional<double> alpha;
  std::optional<long> n_paths;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> manifold;
};

/// Parses one experiment object. Unknown keys, missing required keys and
/// invalid values raise InvalidInput naming the key path (prefix + key).
ExperimentConfig parse_experiment(const Json& doc, const std::string& prefix = "");

/// A single experiment object or {"experiments": [...]}; overrides apply to every entry.
std::vector<ExperimentConfig> parse_config(Json doc, const ConfigOverrides& overrides = {});

/// Reads and parses a JSON file; syntax errors report the file name.
std::vector<ExperimentConfig> load_config(const std::string& path, const ConfigOverrides& overrides = {});

/// Runs one experiment. Path dumps (dump_paths > 0, walk and couple only) go to `paths_csv`.
VerificationReport run_experiment(const ExperimentConfig& config, int threads, std::ostream* paths_csv = nullptr);

/// 64-bit FNV-1a of the bytes.
std::uint64_t fnv1a(const std::string& bytes);
/// Hex FNV-1a of the canonical serialization (sorted keys, no whitespace).
std::string config_hash(const Json& doc);

struct ManifestEntry {
  std::string id;
  std::string report_json;
  std::string report_csv;
  std::string paths_csv;
  bool pass = false;
};

struct RunManifest {
  std::string tool_version;
  std::string config_hash;
  double wall_ms = 0.0;
  std::vector<ManifestEntry> entries;
};

Json to_json(const RunManifest& manifest);

extern const char* const kToolVersion;

/// Runs every experiment, writing <out>/<id>.json, <out>/<id>.csv, optional
/// <out>/<id>_paths.csv and <out>/manifest.json. Returns 0 if all pass, 2 if
/// any verification fails. Errors propagate as exceptions.
int run_experiments(const std::vector<ExperimentConfig>& configs, const Json& document, int threads,
                    std::ostream& log, RunManifest* manifest = nullptr);

}  // namespace gtwalk
