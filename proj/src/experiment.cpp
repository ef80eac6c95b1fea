#include "gtwalk/experiment.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "gtwalk/parallel.hpp"

namespace gtwalk {

const char* const kToolVersion = "0.1.0";

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::Walk, "walk"},
    {ExperimentKind::Couple, "couple"},
    {ExperimentKind::VerifyCouplingBound, "verify-coupling-bound"},
    {ExperimentKind::VerifyContraction, "verify-contraction"},
    {ExperimentKind::VerifyGradient, "verify-gradient"},
    {ExperimentKind::Convergence, "convergence"},
    {ExperimentKind::FellerTest, "feller-test"},
    {ExperimentKind::OuSurvival, "ou-survival"},
    {ExperimentKind::RadialDomination, "radial-domination"},
    {ExperimentKind::ChainDomination, "chain-domination"},
};

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "walk";
}

std::optional<ExperimentKind> parse_experiment_kind(const std::string& name) {
  for (const auto& k : kKinds)
    if (name == k.name) return k.kind;
  return std::nullopt;
}

const std::vector<std::string>& experiment_kind_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& k : kKinds) out.emplace_back(k.name);
    return out;
  }();
  return names;
}

// Manifold descriptors ----------------------------------------------------------

namespace {

struct Descriptor {
  std::string name;
  std::vector<std::string> args;
};

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// name(arg, arg, ...) with arguments split at top-level commas.
Descriptor split_descriptor(const std::string& text, const std::string& key) {
  const std::string s = trim(text);
  const auto open = s.find('(');
  Descriptor d;
  if (open == std::string::npos) {
    d.name = s;
    return d;
  }
  if (s.back() != ')') fail(ErrorKind::Parse, key + ": malformed manifold descriptor '" + text + "'");
  d.name = trim(s.substr(0, open));
  const std::string inner = s.substr(open + 1, s.size() - open - 2);
  int depth = 0;
  std::string current;
  for (char c : inner) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth < 0) fail(ErrorKind::Parse, key + ": unbalanced parentheses in '" + text + "'");
    if (c == ',' && depth == 0) {
      d.args.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (depth != 0) fail(ErrorKind::Parse, key + ": unbalanced parentheses in '" + text + "'");
  if (!trim(current).empty() || !d.args.empty()) d.args.push_back(trim(current));
  return d;
}

double parse_number(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(value))
    fail(ErrorKind::Parse, key + ": expected a number, got '" + text + "'");
  return value;
}

int parse_dimension(const std::string& text, const std::string& key) {
  const double v = parse_number(text, key);
  if (v != std::floor(v) || v < 1 || v >= kMaxDim)
    fail(ErrorKind::Parse, key + ": dimension must be an integer in [1, " + std::to_string(kMaxDim - 1) + "]");
  return static_cast<int>(v);
}

}  // namespace

ModelPtr parse_manifold(const std::string& descriptor, TimeWindow window, const std::string& key) {
  const Descriptor d = split_descriptor(descriptor, key);
  const auto arity = [&](std::size_t lo, std::size_t hi) {
    if (d.args.size() < lo || d.args.size() > hi)
      fail(ErrorKind::Parse, key + ": wrong number of arguments for '" + d.name + "'");
  };
  try {
    if (d.name == "euclidean") {
      arity(1, 1);
      return make_euclidean(parse_dimension(d.args[0], key), window);
    }
    if (d.name == "sphere" || d.name == "flow_sphere") {
      arity(1, 2);
      const double c0 = d.args.size() > 1 ? parse_number(d.args[1], key) : 1.0;
      return make_round_sphere(parse_dimension(d.args[0], key), c0, d.name == "flow_sphere", window);
    }
    if (d.name == "circle") {
      arity(0, 0);
      return make_round_sphere(1, 1.0, false, window);
    }
    if (d.name == "hyperbolic") {
      arity(1, 1);
      return make_hyperbolic(parse_dimension(d.args[0], key), window);
    }
    if (d.name == "scaled") {
      arity(2, 2);
      return make_scaled_metric(parse_manifold(d.args[0], window, key), parse_number(d.args[1], key));
    }
    if (d.name == "chart_sphere" || d.name == "chart_flow_sphere") {
      arity(1, 2);
      const int m = parse_dimension(d.args[0], key);
      const double c0 = d.args.size() > 1 ? parse_number(d.args[1], key) : 1.0;
      return make_numeric_chart(m, stereographic_sphere_metric(m, c0, d.name == "chart_flow_sphere", window),
                                window);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw;
    fail(ErrorKind::InvalidInput, key + ": " + e.what());
  }
  fail(ErrorKind::Parse, key + ": unknown manifold kind '" + d.name + "'");
}

std::vector<std::string> manifold_descriptor_help() {
  return {
      "euclidean(m)            flat R^m",
      "sphere(m[, c0])         static round sphere of radius sqrt(c0) in R^{m+1}",
      "flow_sphere(m[, c0])    round sphere under backward Ricci flow, c(t) = c0 + (m-1)(t - t1)",
      "circle                  unit circle, same as sphere(1)",
      "hyperbolic(m)           hyperboloid model of curvature -1",
      "scaled(<model>, k)      metric e^{-k(t - t1)} g of a static model",
      "chart_sphere(m[, c0])   sphere in stereographic coordinates, numeric geodesics (walks only)",
      "chart_flow_sphere(m[, c0])  flow sphere in stereographic coordinates (walks only)",
  };
}

Point PointSpec::resolve(const ManifoldModel& model, double t) const {
  if (coordinates) return *coordinates;
  const Point o = model.origin();
  if (exp_from_origin->size() != model.ambient_dim())
    fail(ErrorKind::InvalidInput, "tangent vector has the wrong dimension");
  return exp(model, t, o, model.project(o, *exp_from_origin));
}

// Config parsing ---------------------------------------------------------------

namespace {

class Fields {
 public:
  Fields(const Json& doc, std::string prefix) : doc_(doc), prefix_(std::move(prefix)) {
    if (!doc.is_object()) fail(ErrorKind::Parse, (prefix_.empty() ? "config" : prefix_) + ": expected an object");
  }

  std::string path(const std::string& key) const { return prefix_ + key; }
  bool has(const std::string& key) {
    used_.insert(key);
    return doc_.contains(key) && !doc_.at(key).is_null();
  }
  const Json& at(const std::string& key) {
    used_.insert(key);
    return doc_.at(key);
  }

  double number(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number()) fail(ErrorKind::Parse, path(key) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(ErrorKind::Parse, path(key) + ": expected a finite number");
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }
  std::optional<double> optional_number(const std::string& key) {
    return has(key) ? std::optional<double>(number(key)) : std::nullopt;
  }
  long integer(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_number_integer()) fail(ErrorKind::Parse, path(key) + ": expected an integer");
    return v.get<long>();
  }
  std::string text(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_string()) fail(ErrorKind::Parse, path(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) { return has(key) ? text(key) : fallback; }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_boolean()) fail(ErrorKind::Parse, path(key) + ": expected true or false");
    return v.get<bool>();
  }
  Vector vector(const std::string& key, const Json& v) {
    if (!v.is_array() || v.empty() || static_cast<int>(v.size()) > kMaxDim)
      fail(ErrorKind::Parse, path(key) + ": expected an array of 1 to " + std::to_string(kMaxDim) + " numbers");
    Vector out(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(ErrorKind::Parse, path(key) + "[" + std::to_string(i) + "]: expected a number");
      out[static_cast<int>(i)] = v[i].get<double>();
    }
    return out;
  }
  std::optional<PointSpec> point(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const Json& v = at(key);
    PointSpec spec;
    if (v.is_object()) {
      if (v.size() != 1 || !v.contains("exp"))
        fail(ErrorKind::Parse, path(key) + ": a point object must have the single key 'exp'");
      spec.exp_from_origin = vector(key + ".exp", v.at("exp"));
    } else {
      spec.coordinates = vector(key, v);
    }
    return spec;
  }

  void reject_unknown() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it)
      if (!used_.count(it.key())) fail(ErrorKind::Parse, path(it.key()) + ": unknown key");
  }

 private:
  const Json& doc_;
  std::string prefix_;
  std::set<std::string> used_;
};

DriftProfile parse_drift(Fields& f, const std::string& key) {
  if (!f.has(key)) return DriftProfile::zero();
  const Json& v = f.at(key);
  if (v.is_array()) {
    std::vector<std::pair<double, double>> table;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Json& row = v[i];
      const std::string where = f.path(key) + "[" + std::to_string(i) + "]";
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
        fail(ErrorKind::Parse, where + ": expected [s, b(s)]");
      table.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
    if (table.empty()) fail(ErrorKind::Parse, f.path(key) + ": empty table");
    return DriftProfile::sampled(std::move(table));
  }
  if (!v.is_string()) fail(ErrorKind::Parse, f.path(key) + ": expected a builtin name or a table");
  const Descriptor d = split_descriptor(v.get<std::string>(), f.path(key));
  if (d.name == "zero" && d.args.empty()) return DriftProfile::zero();
  if (d.name == "constant" && d.args.size() == 1) return DriftProfile::constant(parse_number(d.args[0], f.path(key)));
  if (d.name == "linear" && d.args.size() <= 1)
    return DriftProfile::linear(d.args.empty() ? 1.0 : parse_number(d.args[0], f.path(key)));
  fail(ErrorKind::Parse, f.path(key) + ": unknown drift profile '" + v.get<std::string>() + "'");
}

bool needs_manifold(ExperimentKind kind) {
  return kind != ExperimentKind::FellerTest && kind != ExperimentKind::OuSurvival;
}

bool needs_alpha(ExperimentKind kind) {
  return needs_manifold(kind) && kind != ExperimentKind::Convergence;
}

bool is_pair_kind(ExperimentKind kind) {
  return kind == ExperimentKind::Couple || kind == ExperimentKind::VerifyCouplingBound ||
         kind == ExperimentKind::VerifyContraction || kind == ExperimentKind::VerifyGradient ||
         kind == ExperimentKind::ChainDomination;
}

bool valid_id(const std::string& id) {
  if (id.empty()) return false;
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') return false;
  return id != "." && id != ".." && id != "manifest";
}

}  // namespace

ExperimentConfig parse_experiment(const Json& doc, const std::string& prefix) {
  Fields f(doc, prefix);
  ExperimentConfig c;
  c.source = doc;
  if (!f.has("kind")) fail(ErrorKind::Parse, f.path("kind") + ": missing");
  const std::string kind_name = f.text("kind");
  const auto kind = parse_experiment_kind(kind_name);
  if (!kind) fail(ErrorKind::Parse, f.path("kind") + ": unknown experiment kind '" + kind_name + "'");
  c.kind = *kind;
  c.id = f.text("id", kind_name);
  if (!valid_id(c.id)) fail(ErrorKind::Parse, f.path("id") + ": use letters, digits, '_', '-' or '.'");

  c.t1 = f.number("t1", 0.0);
  c.t2 = f.number("t2", 1.0);
  if (!(c.t1 < c.t2)) fail(ErrorKind::Parse, f.path("t2") + ": t2 must exceed t1");
  c.n_paths = f.integer("n_paths", 1000);
  if (c.n_paths < 1) fail(ErrorKind::Parse, f.path("n_paths") + ": must be at least 1");
  if (f.has("seed")) {
    const Json& s = f.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      fail(ErrorKind::Parse, f.path("seed") + ": expected a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.k = f.number("k", 0.0);
  c.out = f.text("out", ".");

  if (needs_manifold(c.kind)) {
    if (!f.has("manifold")) fail(ErrorKind::Parse, f.path("manifold") + ": missing");
    c.manifold = f.text("manifold");
    parse_manifold(c.manifold, {c.t1, c.t2}, f.path("manifold"));
  } else if (f.has("manifold")) {
    c.manifold = f.text("manifold");
  }

  c.alpha = f.optional_number("alpha");
  if (needs_alpha(c.kind) && !c.alpha) fail(ErrorKind::Parse, f.path("alpha") + ": missing");
  if (c.alpha) {
    if (!(*c.alpha > 0.0)) fail(ErrorKind::Parse, f.path("alpha") + ": must be positive");
    if (!(*c.alpha * *c.alpha < c.t2 - c.t1)) {
      std::ostringstream msg;
      msg << f.path("alpha") << ": alpha^2 = " << *c.alpha * *c.alpha << " must be below t2 - t1 = " << c.t2 - c.t1
          << " for a valid schedule";
      fail(ErrorKind::Parse, msg.str());
    }
  }
  if (f.has("alphas")) {
    const Json& v = f.at("alphas");
    if (!v.is_array() || v.empty()) fail(ErrorKind::Parse, f.path("alphas") + ": expected a nonempty array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string where = f.path("alphas") + "[" + std::to_string(i) + "]";
      if (!v[i].is_number() || !(v[i].get<double>() > 0.0)) fail(ErrorKind::Parse, where + ": expected a positive number");
      const double a = v[i].get<double>();
      if (!(a * a < c.t2 - c.t1)) fail(ErrorKind::Parse, where + ": alpha^2 must be below t2 - t1");
      if (!c.alphas.empty() && !(a < c.alphas.back())) fail(ErrorKind::Parse, where + ": alphas must decrease");
      c.alphas.push_back(a);
    }
  }
  if (c.kind == ExperimentKind::Convergence && c.alphas.empty())
    fail(ErrorKind::Parse, f.path("alphas") + ": missing");

  c.start = f.point("start");
  c.start1 = f.point("start1");
  c.start2 = f.point("start2");
  c.d0 = f.optional_number("d0");
  if (c.d0 && !(*c.d0 >= 0.0)) fail(ErrorKind::Parse, f.path("d0") + ": must be nonnegative");
  if (is_pair_kind(c.kind) && !c.start2 && !c.d0)
    fail(ErrorKind::Parse, f.path("start2") + ": missing (give start2 or d0)");
  if (c.start2 && c.d0) fail(ErrorKind::Parse, f.path("d0") + ": give either start2 or d0, not both");
  c.delta_couple = f.optional_number("delta_couple");
  if (c.delta_couple && c.alpha && !(*c.delta_couple >= *c.alpha))
    fail(ErrorKind::Parse, f.path("delta_couple") + ": must be at least alpha");
  c.reference_point = f.point("reference_point");
  c.exit_radius = f.number("exit_radius", 8.0);
  if (!(c.exit_radius > 1.0)) fail(ErrorKind::Parse, f.path("exit_radius") + ": must exceed 1");

  c.coupling = c.kind == ExperimentKind::VerifyContraction ? CouplingKind::ParallelTransport : CouplingKind::Reflection;
  if (f.has("coupling")) {
    const std::string name = f.text("coupling");
    if (name == "reflection") c.coupling = CouplingKind::Reflection;
    else if (name == "parallel") c.coupling = CouplingKind::ParallelTransport;
    else fail(ErrorKind::Parse, f.path("coupling") + ": expected 'reflection' or 'parallel'");
    const bool ok = c.kind == ExperimentKind::Couple ||
                    (c.kind == ExperimentKind::VerifyContraction) == (c.coupling == CouplingKind::ParallelTransport);
    if (!ok) fail(ErrorKind::Parse, f.path("coupling") + ": not allowed for kind '" + kind_name + "'");
  }
  c.stick_after_coupling = f.boolean("stick_after_coupling", true);

  c.b = parse_drift(f, "b");
  c.C0 = f.number("C0", 1.0);
  c.r0 = f.number("r0", 0.5);
  try {
    RadialComparisonSpec{c.b, c.C0, c.r0}.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Parse, f.path("b") + ": " + e.what());
  }
  c.feller_C = f.number("C", 1.0);
  if (!(c.feller_C > 0.0)) fail(ErrorKind::Parse, f.path("C") + ": must be positive");
  c.y_max = f.number("y_max", 100.0);
  if (!(c.y_max >= 10.0)) fail(ErrorKind::Parse, f.path("y_max") + ": must be at least 10");
  if (f.has("expect")) {
    const std::string e = f.text("expect");
    if (e == "explodes") c.expect = FellerDecision::Explodes;
    else if (e == "survives") c.expect = FellerDecision::Survives;
    else fail(ErrorKind::Parse, f.path("expect") + ": expected 'explodes' or 'survives'");
  }
  c.a = f.number("a", 1.0);
  if (!(c.a >= 0.0)) fail(ErrorKind::Parse, f.path("a") + ": must be nonnegative");
  c.h = f.number("h", 1e-4);
  if (!(c.h > 0.0)) fail(ErrorKind::Parse, f.path("h") + ": must be positive");
  c.horizon = f.optional_number("horizon");
  if (c.horizon && !(*c.horizon > 0.0)) fail(ErrorKind::Parse, f.path("horizon") + ": must be positive");
  c.reference_law = f.text("reference", "");
  if (!c.reference_law.empty() && c.reference_law != "gaussian_line" && c.reference_law != "wrapped_gaussian")
    fail(ErrorKind::Parse, f.path("reference") + ": expected 'gaussian_line' or 'wrapped_gaussian'");
  c.bootstrap = static_cast<int>(f.integer("bootstrap", 100));
  if (c.bootstrap < 2) fail(ErrorKind::Parse, f.path("bootstrap") + ": must be at least 2");
  c.contraction_constant = f.number("contraction_constant", 5.0);
  c.margin = f.optional_number("margin");
  c.max_fraction = f.number("max_fraction", 0.05);
  c.bias = f.number("bias", 0.0);
  if (!(c.bias >= 0.0)) fail(ErrorKind::Parse, f.path("bias") + ": must be nonnegative");
  if (f.has("halfspace")) {
    const Json& hs = f.at("halfspace");
    if (!hs.is_object()) fail(ErrorKind::Parse, f.path("halfspace") + ": expected an object");
    Fields g(hs, f.path("halfspace") + ".");
    if (g.has("normal")) c.halfspace.normal = g.vector("normal", g.at("normal"));
    c.halfspace.offset = g.optional_number("offset");
    g.reject_unknown();
  }
  c.dump_paths = static_cast<int>(f.integer("dump_paths", 0));
  if (c.dump_paths < 0) fail(ErrorKind::Parse, f.path("dump_paths") + ": must be nonnegative");
  f.reject_unknown();
  return c;
}

std::vector<ExperimentConfig> parse_config(Json doc, const ConfigOverrides& overrides) {
  auto apply = [&](Json& e) {
    if (!e.is_object()) return;
    if (overrides.alpha) e["alpha"] = *overrides.alpha;
    if (overrides.n_paths) e["n_paths"] = *overrides.n_paths;
    if (overrides.seed) e["seed"] = *overrides.seed;
    if (overrides.out) e["out"] = *overrides.out;
    if (overrides.manifold) e["manifold"] = *overrides.manifold;
  };
  std::vector<ExperimentConfig> out;
  if (doc.is_object() && doc.contains("experiments")) {
    if (doc.size() != 1) {
      for (auto it = doc.begin(); it != doc.end(); ++it)
        if (it.key() != "experiments") fail(ErrorKind::Parse, it.key() + ": unknown key");
    }
    Json& list = doc["experiments"];
    if (!list.is_array() || list.empty()) fail(ErrorKind::Parse, "experiments: expected a nonempty array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < list.size(); ++i) {
      apply(list[i]);
      out.push_back(parse_experiment(list[i], "experiments[" + std::to_string(i) + "]."));
      if (!ids.insert(out.back().id).second)
        fail(ErrorKind::Parse, "experiments[" + std::to_string(i) + "].id: duplicate id '" + out.back().id + "'");
    }
    return out;
  }
  apply(doc);
  out.push_back(parse_experiment(doc));
  return out;
}

std::vector<ExperimentConfig> load_config(const std::string& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, path + ": cannot open config");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, path + ": " + e.what());
  }
  return parse_config(std::move(doc), overrides);
}

// Running ------------------------------------------------------------------------

namespace {

struct Setup {
  ModelPtr model;
  WalkConfig walk;
  CouplingConfig pair;
};

Setup make_setup(const ExperimentConfig& c) {
  Setup s;
  s.model = parse_manifold(c.manifold, {c.t1, c.t2});
  const ManifoldModel& model = *s.model;
  WalkConfig& w = s.walk;
  w.alpha = c.alpha.value_or(c.alphas.empty() ? 0.1 : c.alphas.front());
  w.t1 = c.t1;
  w.t2 = c.t2;
  w.seed = c.seed;
  w.start = c.start ? c.start->resolve(model, c.t1) : model.origin();
  if (c.reference_point) w.reference_point = c.reference_point->resolve(model, c.t1);
  w.exit_radius = c.exit_radius;
  if (!is_pair_kind(c.kind)) return s;

  CouplingConfig& p = s.pair;
  p.walk = w;
  p.start1 = c.start1 ? c.start1->resolve(model, c.t1) : (c.start ? w.start : model.origin());
  if (c.start2) {
    p.start2 = c.start2->resolve(model, c.t1);
  } else if (*c.d0 == 0.0) {
    p.start2 = p.start1;
  } else {
    const Frame frame = frame_at(model, c.t1, p.start1);
    p.start2 = exp(model, c.t1, p.start1, *c.d0 * frame.vectors.col(0));
  }
  p.walk.start = p.start1;
  p.kind = c.coupling;
  p.delta_couple = c.delta_couple;
  p.k = c.k;
  p.stick_after_coupling = c.stick_after_coupling;
  return s;
}

VerificationReport run_walks(const ExperimentConfig& c, const Setup& s, int threads, std::ostream* paths) {
  const auto start = std::chrono::steady_clock::now();
  const ManifoldModel& model = *s.model;
  s.walk.validate(model);
  const Point o = s.walk.reference(model);
  struct Outcome {
    double final_distance = 0.0;
    std::uint8_t exited = 0;
  };
  const bool has_distance = model.has_log();
  const auto outcomes = parallel_map(c.n_paths, threads, [&](std::int64_t p) {
    const WalkPath path = run_walk(model, s.walk, static_cast<std::uint64_t>(p));
    Outcome out;
    if (has_distance) {
      out.final_distance = distance(model, c.t2, o, path.skeleton.back());
      out.exited = exit_time(path, model, o, c.exit_radius) < kInfinity ? 1 : 0;
    }
    return out;
  });
  MeanAccumulator acc;
  long exited = 0;
  for (const auto& o2 : outcomes) {
    acc.add(o2.final_distance);
    exited += o2.exited;
  }
  if (paths) {
    for (int p = 0; p < std::min<long>(c.dump_paths, c.n_paths); ++p)
      write_path_csv(*paths, run_walk(model, s.walk, p), p == 0, static_cast<std::uint64_t>(p));
  }
  VerificationReport r;
  r.estimate = acc.estimate();
  r.has_bound = false;
  r.details = Json{{"statistic", has_distance ? "final distance from the reference point" : "unavailable"},
                   {"exit_fraction", double(exited) / c.n_paths},
                   {"steps", Schedule::make(c.t1, c.t2, s.walk.alpha).steps}};
  r.finalize();
  r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

VerificationReport run_pairs(const ExperimentConfig& c, const Setup& s, int threads, std::ostream* paths) {
  const auto start = std::chrono::steady_clock::now();
  const ManifoldModel& model = *s.model;
  s.pair.validate(model);
  const auto times = parallel_map(c.n_paths, threads, [&](std::int64_t p) {
    return run_coupled(model, s.pair, static_cast<std::uint64_t>(p)).coupling_time;
  });
  long apart = 0;
  MeanAccumulator coupled_at;
  for (double t : times) {
    if (t == kInfinity) ++apart;
    else coupled_at.add(t);
  }
  if (paths) {
    for (int p = 0; p < std::min<long>(c.dump_paths, c.n_paths); ++p)
      write_coupled_csv(*paths, run_coupled(model, s.pair, p), p == 0, static_cast<std::uint64_t>(p));
  }
  VerificationReport r;
  r.estimate = proportion_estimate(apart, c.n_paths);
  r.has_bound = false;
  const double d0 = distance(model, c.t1, s.pair.start1, s.pair.start2);
  r.details = Json{{"statistic", "fraction of pairs not coupled by t2"},
                   {"d0", d0},
                   {"mean_coupling_time", coupled_at.count() ? Json(coupled_at.mean()) : Json(nullptr)}};
  if (s.pair.kind == CouplingKind::Reflection)
    r.details["survival_bound"] = coupling_probability_bound(d0, c.k, c.t2 - c.t1);
  r.finalize();
  r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

TestFunction halfspace_indicator(const ExperimentConfig& c, const Setup& s, Vector* normal_out, double* offset_out) {
  const int n = s.model->ambient_dim();
  Vector normal = c.halfspace.normal ? *c.halfspace.normal : Vector::Unit(n, 0);
  if (normal.size() != n) fail(ErrorKind::InvalidInput, "halfspace.normal: wrong dimension");
  if (!(normal.norm() > 0.0)) fail(ErrorKind::InvalidInput, "halfspace.normal: must be nonzero");
  const double offset = c.halfspace.offset ? *c.halfspace.offset : normal.dot(0.5 * (s.pair.start1 + s.pair.start2));
  *normal_out = normal;
  *offset_out = offset;
  TestFunction f;
  f.name = "halfspace";
  f.f = [normal, offset](const Point& x) { return normal.dot(x) <= offset ? 1.0 : 0.0; };
  f.oscillation = 1.0;
  return f;
}

ReferenceLaw reference_for(const ExperimentConfig& c, const ManifoldModel& model) {
  const double variance = c.t2 - c.t1;
  std::string name = c.reference_law;
  if (name.empty()) {
    if (model.kind() == ModelKind::Euclidean && model.dim() == 1) name = "gaussian_line";
    else if (model.name() == make_round_sphere(1)->name()) name = "wrapped_gaussian";
    else fail(ErrorKind::InvalidInput, "reference: no default reference law for " + model.name());
  }
  return name == "gaussian_line" ? gaussian_line_law(variance) : wrapped_gaussian_law(variance);
}

}  // namespace

VerificationReport run_experiment(const ExperimentConfig& c, int threads, std::ostream* paths_csv) {
  threads = resolve_threads(threads);
  VerificationReport r;
  switch (c.kind) {
    case ExperimentKind::Walk: r = run_walks(c, make_setup(c), threads, paths_csv); break;
    case ExperimentKind::Couple: r = run_pairs(c, make_setup(c), threads, paths_csv); break;
    case ExperimentKind::VerifyCouplingBound: {
      const Setup s = make_setup(c);
      r = estimate_coupling_survival(*s.model, s.pair, c.n_paths, threads, c.bias);
      break;
    }
    case ExperimentKind::VerifyContraction: {
      const Setup s = make_setup(c);
      r = check_contraction(*s.model, s.pair, c.n_paths, threads, c.contraction_constant);
      break;
    }
    case ExperimentKind::VerifyGradient: {
      const Setup s = make_setup(c);
      Vector normal;
      double offset = 0.0;
      const TestFunction f = halfspace_indicator(c, s, &normal, &offset);
      r = check_gradient_estimate(*s.model, s.pair, f, c.n_paths, threads);
      r.params["halfspace_offset"] = offset;
      if (s.model->kind() == ModelKind::Euclidean) {
        // Heat semigroup of Delta/2: <n, X(t2)> ~ N(<n, x>, |n|^2 (t2 - t1)).
        const double sd = normal.norm() * std::sqrt(c.t2 - c.t1);
        const double exact = std::abs(normal_cdf((offset - normal.dot(s.pair.start1)) / sd) -
                                      normal_cdf((offset - normal.dot(s.pair.start2)) / sd));
        r.details["exact_difference"] = exact;
      }
      break;
    }
    case ExperimentKind::Convergence: {
      const Setup s = make_setup(c);
      r = convergence_diagnostic(*s.model, s.walk, c.alphas, c.n_paths, reference_for(c, *s.model), threads,
                                 c.bootstrap);
      break;
    }
    case ExperimentKind::FellerTest: {
      const auto start = std::chrono::steady_clock::now();
      const RadialComparisonSpec spec{c.b, c.C0, c.r0};
      const FellerResult base = feller_explosion_test(spec, c.feller_C, c.y_max);
      const FellerResult doubled = feller_explosion_test(spec, c.feller_C, 2.0 * c.y_max);
      const bool stable = base.decision == doubled.decision;
      const bool decided = base.decision != FellerDecision::Inconclusive;
      r.params = Json{{"b", c.b.describe()}, {"C", c.feller_C}, {"y_max", c.y_max}};
      if (c.expect) r.params["expect"] = to_string(*c.expect);
      r.estimate.mean = base.increment_ratio;
      r.has_bound = false;
      r.details = Json{{"decision", to_string(base.decision)},
                       {"decision_doubled_y_max", to_string(doubled.decision)},
                       {"integral", base.integral},
                       {"increment_ratio", base.increment_ratio},
                       {"increment_ratio_half_step", base.increment_ratio_refined},
                       {"step", base.step}};
      r.finalize(stable && decided && (!c.expect || *c.expect == base.decision));
      r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      break;
    }
    case ExperimentKind::OuSurvival:
      r = check_ou_survival({c.a, c.k, c.t1}, c.horizon.value_or(c.t2 - c.t1), c.n_paths, c.h, c.seed, threads);
      break;
    case ExperimentKind::RadialDomination: {
      const Setup s = make_setup(c);
      r = check_radial_domination(*s.model, s.walk, {c.b, c.C0, c.r0}, c.n_paths, threads, c.margin.value_or(0.1),
                                  c.max_fraction);
      break;
    }
    case ExperimentKind::ChainDomination: {
      const Setup s = make_setup(c);
      r = check_chain_domination(*s.model, s.pair, c.n_paths, threads, c.margin.value_or(0.05), c.max_fraction);
      break;
    }
  }
  Json params = Json{{"kind", to_string(c.kind)}};
  if (!c.manifold.empty() && !r.params.contains("model")) params["manifold"] = c.manifold;
  params.update(r.params);
  if (!params.contains("n_paths") && c.kind != ExperimentKind::FellerTest) params["n_paths"] = c.n_paths;
  r.params = std::move(params);
  r.id = c.id;
  r.seed = c.seed;
  return r;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(const Json& doc) {
  // nlohmann::json (unordered) sorts object keys, which canonicalizes the text.
  const nlohmann::json canonical = nlohmann::json::parse(doc.dump());
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(fnv1a(canonical.dump())));
  return buffer;
}

Json to_json(const RunManifest& m) {
  Json entries = Json::array();
  for (const auto& e : m.entries) {
    Json j{{"id", e.id}, {"report_json", e.report_json}, {"report_csv", e.report_csv}, {"pass", e.pass}};
    if (!e.paths_csv.empty()) j["paths_csv"] = e.paths_csv;
    entries.push_back(std::move(j));
  }
  return Json{{"tool_version", m.tool_version},
              {"config_hash", m.config_hash},
              {"wall_ms", m.wall_ms},
              {"reports", entries}};
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, path.string() + ": cannot write");
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

}  // namespace

int run_experiments(const std::vector<ExperimentConfig>& configs, const Json& document, int threads,
                     std::ostream& log, RunManifest* manifest_out) {
  namespace fs = std::filesystem;
  const auto start = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.tool_version = kToolVersion;
  manifest.config_hash = config_hash(document);
  bool all_pass = true;
  fs::path manifest_dir;
  for (const auto& c : configs) {
    const fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, dir.string() + ": cannot create directory: " + ec.message());
    if (manifest_dir.empty()) manifest_dir = dir;

    ManifestEntry entry;
    entry.id = c.id;
    std::ofstream paths;
    const bool dumps = c.dump_paths > 0 && (c.kind == ExperimentKind::Walk || c.kind == ExperimentKind::Couple);
    if (dumps) {
      entry.paths_csv = (dir / (c.id + "_paths.csv")).string();
      paths = open_output(entry.paths_csv);
    }
    const VerificationReport report = run_experiment(c, threads, dumps ? &paths : nullptr);
    if (dumps) check_written(paths, entry.paths_csv);

    entry.report_json = (dir / (c.id + ".json")).string();
    entry.report_csv = (dir / (c.id + ".csv")).string();
    {
      std::ofstream json = open_output(entry.report_json);
      json << to_json(report).dump(2) << '\n';
      check_written(json, entry.report_json);
      std::ofstream csv = open_output(entry.report_csv);
      write_report_csv_header(csv);
      write_report_csv_row(csv, report);
      check_written(csv, entry.report_csv);
    }
    entry.pass = report.pass;
    all_pass = all_pass && report.pass;
    log << (report.pass ? "PASS " : "FAIL ") << c.id << "  estimate=" << report.estimate.mean;
    if (report.has_bound) log << " bound=" << report.bound << " margin=" << report.margin;
    log << "  (" << entry.report_json << ")\n";
    manifest.entries.push_back(std::move(entry));
  }
  manifest.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  const fs::path manifest_path = manifest_dir / "manifest.json";
  std::ofstream out = open_output(manifest_path);
  out << to_json(manifest).dump(2) << '\n';
  check_written(out, manifest_path);
  if (manifest_out) *manifest_out = manifest;
  return all_pass ? 0 : 2;
}

}  // namespace gtwalk
