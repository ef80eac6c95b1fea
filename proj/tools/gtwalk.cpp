#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gtwalk/experiment.hpp"

namespace {

using gtwalk::Json;

struct Flags {
  std::optional<double> alpha;
  std::optional<long> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> manifold;
  std::string config;
  std::vector<std::string> sets;
  std::optional<double> t1, t2, d0, k;

  gtwalk::ConfigOverrides overrides() const { return {alpha, samples, seed, out, manifold}; }
};

void add_override_flags(CLI::App* app, Flags& f) {
  app->add_option("--alpha", f.alpha, "Step size alpha");
  app->add_option("--samples", f.samples, "Number of paths (n_paths)");
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--manifold", f.manifold, "Manifold descriptor, see list-models");
}

void add_experiment_flags(CLI::App* app, Flags& f) {
  add_override_flags(app, f);
  app->add_option("--config", f.config, "Experiment object to start from (JSON file)");
  app->add_option("--t1", f.t1, "Start time");
  app->add_option("--t2", f.t2, "End time");
  app->add_option("--k", f.k, "Curvature-flow constant k");
  app->add_option("--set", f.sets, "Any config key as key=value (value parsed as JSON, else a string)");
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) gtwalk::fail(gtwalk::ErrorKind::Io, path + ": cannot open config");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    gtwalk::fail(gtwalk::ErrorKind::Parse, path + ": " + e.what());
  }
}

// One experiment object assembled from --config, the named flags and --set.
Json experiment_document(const Flags& f, const std::string& kind) {
  Json doc = f.config.empty() ? Json::object() : read_json(f.config);
  if (!doc.is_object() || doc.contains("experiments"))
    gtwalk::fail(gtwalk::ErrorKind::Parse, f.config + ": expected a single experiment object");
  doc["kind"] = kind;
  if (f.t1) doc["t1"] = *f.t1;
  if (f.t2) doc["t2"] = *f.t2;
  if (f.k) doc["k"] = *f.k;
  if (f.d0) doc["d0"] = *f.d0;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) gtwalk::fail(gtwalk::ErrorKind::Parse, "--set " + s + ": expected key=value");
    const std::string key = s.substr(0, eq), value = s.substr(eq + 1);
    Json parsed = Json::parse(value, nullptr, false);
    doc[key] = parsed.is_discarded() ? Json(value) : parsed;
  }
  return doc;
}

Json effective_document(const std::vector<gtwalk::ExperimentConfig>& configs, bool list) {
  if (!list) return configs.front().source;
  Json doc = {{"experiments", Json::array()}};
  for (const auto& c : configs) doc["experiments"].push_back(c.source);
  return doc;
}

int run_document(const Json& doc, const Flags& f, int threads) {
  const auto configs = gtwalk::parse_config(doc, f.overrides());
  const bool list = doc.is_object() && doc.contains("experiments");
  return gtwalk::run_experiments(configs, effective_document(configs, list), threads, std::cout);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// Whitespace-separated columns with two blank lines between paths, so that
// gnuplot's `index` selects one path.
int gnuplot_columns(const std::string& path, const std::string& fields, std::ostream& out) {
  std::ifstream in(path);
  if (!in) gtwalk::fail(gtwalk::ErrorKind::Io, path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) gtwalk::fail(gtwalk::ErrorKind::Parse, path + ": empty file");
  const auto header = split(line, ',');
  std::vector<std::size_t> selected;
  if (fields.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] != "path") selected.push_back(i);
  } else {
    for (const auto& name : split(fields, ',')) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) gtwalk::fail(gtwalk::ErrorKind::InvalidInput, path + ": no column '" + name + "'");
      selected.push_back(static_cast<std::size_t>(it - header.begin()));
    }
  }
  const auto path_column = std::find(header.begin(), header.end(), "path");
  const bool has_path = path_column != header.end();
  const std::size_t path_index = static_cast<std::size_t>(path_column - header.begin());

  out << '#';
  for (std::size_t i : selected) out << ' ' << header[i];
  out << '\n';
  std::string current;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) gtwalk::fail(gtwalk::ErrorKind::Parse, path + ": ragged row");
    if (has_path) {
      if (!first && cells[path_index] != current) out << "\n\n";
      current = cells[path_index];
    }
    first = false;
    for (std::size_t j = 0; j < selected.size(); ++j) {
      const std::string& v = cells[selected[j]];
      out << (j ? " " : "") << (v.empty() ? "NaN" : v);
    }
    out << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geodesic random walks and couplings on manifolds with time-dependent metrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gtwalk::kToolVersion));
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: GTWALK_THREADS, else 1)")->check(CLI::NonNegativeNumber);

  Flags run_flags;
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a config file (one experiment or {\"experiments\": [...]})");
  run->add_option("config", config_path, "Config file")->required();
  add_override_flags(run, run_flags);

  Flags walk_flags;
  auto* walk = app.add_subcommand("walk", "Simulate walks and report the final distance from the reference point");
  add_experiment_flags(walk, walk_flags);

  Flags couple_flags;
  auto* couple = app.add_subcommand("couple", "Simulate coupled pairs and report the uncoupled fraction");
  add_experiment_flags(couple, couple_flags);
  couple->add_option("--d0", couple_flags.d0, "Initial distance along the first frame vector");

  Flags verify_flags;
  std::string check;
  auto* verify = app.add_subcommand("verify", "Run one verification experiment");
  verify->add_option("--check", check, "Experiment kind, see list-models")->required();
  add_experiment_flags(verify, verify_flags);
  verify->add_option("--d0", verify_flags.d0, "Initial distance along the first frame vector");

  Flags dump_flags;
  int count = 10;
  std::string dump_output;
  auto* dump = app.add_subcommand("dump-paths", "Write path CSV (walks, or coupled pairs when --d0 is given)");
  add_experiment_flags(dump, dump_flags);
  dump->add_option("--d0", dump_flags.d0, "Initial distance; switches to coupled pairs");
  dump->add_option("--count", count, "Number of paths to write")->check(CLI::PositiveNumber);
  dump->add_option("--output", dump_output, "CSV file (default: standard output)");

  std::string columns_path, columns_fields;
  auto* columns = app.add_subcommand("gnuplot-columns", "Convert a path CSV into gnuplot data blocks");
  columns->add_option("csv", columns_path, "Path CSV")->required();
  columns->add_option("--fields", columns_fields, "Comma-separated column names (default: all but path)");

  auto* list = app.add_subcommand("list-models", "List manifold descriptors and experiment kinds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      return run_document(read_json(config_path), run_flags, threads);
    }
    if (*walk) return run_document(experiment_document(walk_flags, "walk"), walk_flags, threads);
    if (*couple) return run_document(experiment_document(couple_flags, "couple"), couple_flags, threads);
    if (*verify) {
      if (!gtwalk::parse_experiment_kind(check))
        gtwalk::fail(gtwalk::ErrorKind::Parse, "--check: unknown experiment kind '" + check + "'");
      return run_document(experiment_document(verify_flags, check), verify_flags, threads);
    }
    if (*dump) {
      Json doc = experiment_document(dump_flags, dump_flags.d0 ? "couple" : "walk");
      doc["dump_paths"] = count;
      if (!doc.contains("n_paths") && !dump_flags.samples) doc["n_paths"] = count;
      const auto configs = gtwalk::parse_config(doc, dump_flags.overrides());
      if (dump_output.empty()) {
        gtwalk::run_experiment(configs.front(), threads, &std::cout);
      } else {
        std::ofstream out(dump_output);
        if (!out) gtwalk::fail(gtwalk::ErrorKind::Io, dump_output + ": cannot write");
        gtwalk::run_experiment(configs.front(), threads, &out);
        out.flush();
        if (!out) gtwalk::fail(gtwalk::ErrorKind::Io, dump_output + ": write failed");
      }
      return 0;
    }
    if (*columns) return gnuplot_columns(columns_path, columns_fields, std::cout);
    if (*list) {
      std::cout << "Manifolds:\n";
      for (const auto& line : gtwalk::manifold_descriptor_help()) std::cout << "  " << line << '\n';
      std::cout << "Experiment kinds:\n";
      for (const auto& name : gtwalk::experiment_kind_names()) std::cout << "  " << name << '\n';
      return 0;
    }
  } catch (const gtwalk::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
