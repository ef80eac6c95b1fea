#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtwalk/experiment.hpp"

namespace gtwalk {
namespace {

namespace fs = std::filesystem;

std::string error_message(const Json& doc) {
  try {
    parse_config(doc);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

Json without_runtime(Json report) {
  report.erase("runtime_ms");
  return report;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gtwalk_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(ParseConfig, MinimalWalkGetsDefaults) {
  const Json doc = Json::parse(R"j({"kind": "walk", "manifold": "euclidean(2)", "alpha": 0.05,
                                   "t1": 0, "t2": 1, "seed": 7})j");
  const auto configs = parse_config(doc);
  ASSERT_EQ(configs.size(), 1u);
  const ExperimentConfig& c = configs[0];
  EXPECT_EQ(c.kind, ExperimentKind::Walk);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.n_paths, 1000);
  EXPECT_EQ(c.exit_radius, 8.0);
  EXPECT_FALSE(c.reference_point.has_value());
  EXPECT_FALSE(c.delta_couple.has_value());
  EXPECT_EQ(c.id, "walk");

  // delta_couple falls back to 2 alpha and o to the origin once the run is set up.
  CouplingConfig pair;
  pair.walk.alpha = *c.alpha;
  EXPECT_EQ(pair.delta(), 0.1);
  const ModelPtr model = parse_manifold(c.manifold, {c.t1, c.t2});
  WalkConfig walk;
  EXPECT_EQ(walk.reference(*model), model->origin());
}

TEST(ParseConfig, UnknownManifoldNamesTheKey) {
  const std::string msg = error_message(Json::parse(R"j({"kind": "walk", "manifold": "torus(2)", "alpha": 0.1})j"));
  EXPECT_NE(msg.find("manifold"), std::string::npos) << msg;
  EXPECT_NE(msg.find("torus"), std::string::npos) << msg;
  const std::string nested = error_message(Json::parse(
      R"j({"experiments": [{"kind": "walk", "manifold": "sphere(2)", "alpha": 0.1},
                          {"kind": "walk", "manifold": "torus(2)", "alpha": 0.1}]})j"));
  EXPECT_NE(nested.find("experiments[1].manifold"), std::string::npos) << nested;
}

TEST(ParseConfig, ScheduleValidity) {
  const std::string msg = error_message(Json::parse(
      R"j({"kind": "walk", "manifold": "euclidean(2)", "alpha": 2, "t1": 0, "t2": 1})j"));
  EXPECT_NE(msg.find("alpha"), std::string::npos) << msg;
  EXPECT_NE(msg.find("schedule"), std::string::npos) << msg;
}

TEST(ParseConfig, RejectsUnknownAndMissingKeys) {
  EXPECT_NE(error_message(Json::parse(R"j({"kind": "walk", "manifold": "euclidean(2)", "alpha": 0.1, "alhpa": 1})j"))
                .find("alhpa: unknown key"),
            std::string::npos);
  EXPECT_NE(error_message(Json::parse(R"j({"kind": "walk", "alpha": 0.1})j")).find("manifold: missing"),
            std::string::npos);
  EXPECT_NE(error_message(Json::parse(R"j({"kind": "couple", "manifold": "euclidean(2)", "alpha": 0.1})j"))
                .find("start2"),
            std::string::npos);
  EXPECT_NE(error_message(Json::parse(R"j({"kind": "convergence", "manifold": "circle"})j")).find("alphas"),
            std::string::npos);
  EXPECT_NE(error_message(Json::parse(R"j({"kind": "walk", "manifold": "euclidean(2)", "alpha": 0.1, "n_paths": 0})j"))
                .find("n_paths"),
            std::string::npos);
  EXPECT_NE(error_message(Json::parse(R"j({"kind": "feller-test", "b": "quadratic"})j")).find("b: unknown"),
            std::string::npos);
  EXPECT_NE(error_message(Json::parse(R"j({"kind": "teleport"})j")).find("kind"), std::string::npos);
  EXPECT_NE(error_message(Json::parse(
                R"j({"kind": "verify-contraction", "manifold": "euclidean(2)", "alpha": 0.1, "d0": 1,
                    "coupling": "reflection"})j"))
                .find("coupling"),
            std::string::npos);
}

TEST(ParseConfig, DescriptorsAndPoints) {
  EXPECT_EQ(parse_manifold("flow_sphere(2, 1.5)", {0.0, 1.0})->dim(), 2);
  EXPECT_EQ(parse_manifold("scaled(euclidean(3), 0.5)", {0.0, 1.0})->kind(), ModelKind::ScaledMetric);
  EXPECT_EQ(parse_manifold(" hyperbolic( 2 ) ", {0.0, 1.0})->ambient_dim(), 3);
  EXPECT_THROW(parse_manifold("euclidean(2", {0.0, 1.0}), Error);
  EXPECT_THROW(parse_manifold("euclidean(0)", {0.0, 1.0}), Error);
  EXPECT_THROW(parse_manifold("sphere(2, 1, 3)", {0.0, 1.0}), Error);

  const auto c = parse_config(Json::parse(
      R"j({"kind": "couple", "manifold": "sphere(2)", "alpha": 0.1, "start1": {"exp": [0.3, 0, 0]},
          "d0": 0.4, "b": [[0, 0], [1, 2]]})j"))[0];
  const ModelPtr model = parse_manifold(c.manifold, {0.0, 1.0});
  const Point x = c.start1->resolve(*model, 0.0);
  EXPECT_NEAR(distance(*model, 0.0, model->origin(), x), 0.3, 1e-12);
  EXPECT_NEAR(c.b.value(0.5), 1.0, 1e-15);
}

TEST(ConfigHash, IndependentOfKeyOrder) {
  const Json a = Json::parse(R"j({"kind": "walk", "alpha": 0.1, "manifold": "circle"})j");
  const Json b = Json::parse(R"j({"manifold": "circle", "kind": "walk", "alpha": 0.1})j");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(Json::parse(R"j({"kind": "walk", "alpha": 0.2, "manifold": "circle"})j")));
  EXPECT_EQ(fnv1a(""), 14695981039346656037ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}

TEST(RunExperiment, ReportsDoNotDependOnThreadCount) {
  const char* docs[] = {
      R"j({"kind": "walk", "manifold": "sphere(2)", "alpha": 0.2, "n_paths": 40, "seed": 3})j",
      R"j({"kind": "couple", "manifold": "euclidean(2)", "alpha": 0.2, "d0": 1, "n_paths": 40, "seed": 3})j",
      R"j({"kind": "verify-coupling-bound", "manifold": "hyperbolic(2)", "alpha": 0.2, "d0": 1, "n_paths": 40})j",
      R"j({"kind": "verify-contraction", "manifold": "flow_sphere(2)", "alpha": 0.2, "d0": 0.5, "n_paths": 20})j",
      R"j({"kind": "verify-gradient", "manifold": "euclidean(2)", "alpha": 0.2, "d0": 0.3, "n_paths": 40})j",
      R"j({"kind": "convergence", "manifold": "circle", "alphas": [0.4, 0.2], "n_paths": 100, "bootstrap": 10})j",
      R"j({"kind": "ou-survival", "k": 1, "n_paths": 200, "h": 0.01})j",
      R"j({"kind": "radial-domination", "manifold": "flow_sphere(2)", "alpha": 0.2, "n_paths": 20})j",
      R"j({"kind": "chain-domination", "manifold": "flow_sphere(2)", "alpha": 0.2, "d0": 0.8, "n_paths": 20})j",
  };
  for (const char* text : docs) {
    const ExperimentConfig c = parse_config(Json::parse(text))[0];
    const std::string one = without_runtime(to_json(run_experiment(c, 1))).dump();
    const std::string four = without_runtime(to_json(run_experiment(c, 4))).dump();
    EXPECT_EQ(one, four) << text;
  }
}

TEST(RunExperiment, GradientReportCarriesTheExactGaussianValue) {
  const ExperimentConfig c = parse_config(Json::parse(
      R"j({"kind": "verify-gradient", "manifold": "euclidean(1)", "alpha": 0.1, "d0": 0.2, "n_paths": 10})j"))[0];
  const VerificationReport r = run_experiment(c, 1);
  // Half-line split at the midpoint: |Phi(0.1) - Phi(-0.1)|.
  EXPECT_NEAR(r.details["exact_difference"].get<double>(), 2.0 * normal_cdf(0.1) - 1.0, 1e-12);
}

TEST(RunExperiments, WritesReportsAndIsReproducible) {
  const fs::path dir = scratch_dir("run");
  Json doc = Json::parse(R"j({"experiments": [
      {"id": "w", "kind": "walk", "manifold": "euclidean(2)", "alpha": 0.2, "n_paths": 20, "dump_paths": 2},
      {"id": "f", "kind": "feller-test", "b": "linear", "expect": "survives"}]})j");
  for (auto& e : doc["experiments"]) e["out"] = dir.string();
  const auto configs = parse_config(doc);
  std::ostringstream log;
  RunManifest manifest;
  EXPECT_EQ(run_experiments(configs, doc, 1, log, &manifest), 2);
  ASSERT_EQ(manifest.entries.size(), 2u);
  EXPECT_TRUE(manifest.entries[0].pass);
  EXPECT_FALSE(manifest.entries[1].pass);
  EXPECT_TRUE(fs::exists(dir / "w.json"));
  EXPECT_TRUE(fs::exists(dir / "w.csv"));
  EXPECT_TRUE(fs::exists(dir / "w_paths.csv"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_NE(log.str().find("FAIL f"), std::string::npos);

  const Json first = without_runtime(Json::parse(slurp(dir / "w.json")));
  const std::string paths = slurp(dir / "w_paths.csv");
  run_experiments(configs, doc, 3, log);
  EXPECT_EQ(without_runtime(Json::parse(slurp(dir / "w.json"))), first);
  EXPECT_EQ(slurp(dir / "w_paths.csv"), paths);
  const Json m = Json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m["config_hash"], config_hash(doc));
  fs::remove_all(dir);
}

TEST(RunExperiments, IoErrorsNameThePath) {
  const fs::path dir = scratch_dir("io");
  const fs::path blocker = dir / "not_a_dir";
  std::ofstream(blocker) << "x";
  Json doc = Json::parse(R"j({"kind": "walk", "manifold": "euclidean(1)", "alpha": 0.2, "n_paths": 2})j");
  doc["out"] = (blocker / "sub").string();
  std::ostringstream log;
  try {
    run_experiments(parse_config(doc), doc, 1, log);
    FAIL() << "expected an I/O error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
    EXPECT_NE(std::string(e.what()).find("not_a_dir"), std::string::npos) << e.what();
  }
  fs::remove_all(dir);
}

#ifdef GTWALK_CLI
int run_cli(const std::string& args) {
  const std::string cmd = std::string(GTWALK_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("cli");
  const std::string out = " --out " + dir.string();
  EXPECT_EQ(run_cli("walk --manifold 'euclidean(2)' --alpha 0.2 --samples 10" + out), 0);
  EXPECT_EQ(run_cli("walk --manifold 'euclidean(2)' --alpha 0.2 --samples 0" + out), 1);
  EXPECT_EQ(run_cli("walk --manifold 'torus(2)' --alpha 0.2" + out), 1);
  EXPECT_EQ(run_cli("verify --check feller-test --set b=linear --set expect=explodes" + out), 0);
  EXPECT_EQ(run_cli("verify --check feller-test --set b=linear --set expect=survives" + out), 2);
  EXPECT_EQ(run_cli("run " + (dir / "missing.json").string()), 1);
  EXPECT_EQ(run_cli("no-such-command"), 1);
  EXPECT_EQ(run_cli("list-models"), 0);

  // Flags beat the file.
  const fs::path cfg = dir / "config.json";
  std::ofstream(cfg) << R"j({"kind": "walk", "manifold": "euclidean(2)", "alpha": 0.2, "n_paths": 5, "seed": 1})j";
  EXPECT_EQ(run_cli("run " + cfg.string() + " --seed 9 --samples 7" + out), 0);
  const Json report = Json::parse(slurp(dir / "walk.json"));
  EXPECT_EQ(report["seed"], 9);
  EXPECT_EQ(report["estimate"]["n"], 7);

  // Same seed, different worker counts: byte-identical apart from runtime_ms.
  EXPECT_EQ(run_cli("--threads 1 run " + cfg.string() + out), 0);
  const Json a = without_runtime(Json::parse(slurp(dir / "walk.json")));
  EXPECT_EQ(run_cli("--threads 3 run " + cfg.string() + out), 0);
  EXPECT_EQ(without_runtime(Json::parse(slurp(dir / "walk.json"))), a);
  fs::remove_all(dir);
}
#endif

}  // namespace
}  // namespace gtwalk
