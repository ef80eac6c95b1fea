#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gtwalk/stats.hpp"
#include "gtwalk/walk.hpp"
#include "test_util.hpp"

namespace gtwalk {
namespace {

using testing::vec;

WalkConfig basic_config(const ManifoldModel& model, double alpha, std::uint64_t seed = 1) {
  WalkConfig c;
  c.alpha = alpha;
  c.t1 = model.window().t1;
  c.t2 = model.window().t2;
  c.seed = seed;
  c.start = model.origin();
  return c;
}

TEST(Schedule, CountsIncludeFinalPartialStep) {
  const Schedule s = Schedule::make(0.0, 1.0, 0.3);
  EXPECT_EQ(s.steps, 12);  // ceil(1 / 0.09)
  EXPECT_EQ(s.times.size(), 13u);
  EXPECT_DOUBLE_EQ(s.times.back(), 1.0);
  EXPECT_NEAR(s.fraction(11), (1.0 - 11 * 0.09) / 0.09, 1e-12);
  for (int n = 0; n < 11; ++n) EXPECT_NEAR(s.fraction(n), 1.0, 1e-12);
  for (int n = 0; n < s.steps; ++n) EXPECT_LT(s.times[n], s.times[n + 1]);
}

TEST(Schedule, ExactMultipleHasNoSliverStep) {
  const Schedule s = Schedule::make(0.0, 1.0, 0.1);
  EXPECT_EQ(s.steps, 100);
  const Schedule s2 = Schedule::make(0.5, 1.5, 0.02);
  EXPECT_EQ(s2.steps, 2500);
  EXPECT_NEAR(s2.fraction(2499), 1.0, 1e-9);
  EXPECT_EQ(s2.index_at(0.5), 0);
  EXPECT_EQ(s2.index_at(1.5), 2499);
}

TEST(Step, ZeroNoiseStays) {
  auto model = make_round_sphere(2);
  const Point x = model->origin();
  const StepResult r = step(*model, 0.0, x, Vector::Zero(2), 0.1, false);
  EXPECT_EQ(r.point, x);
}

TEST(Step, EuclideanLineFormula) {
  auto model = make_euclidean(1);
  const StepResult r = step(*model, 0.0, vec({2.0}), vec({0.5}), 0.1, false);
  EXPECT_NEAR(r.point[0] - 2.0, 0.1 * std::sqrt(3.0) * 0.5, 1e-15);
  EXPECT_NEAR(r.point[0] - 2.0, 0.0866025, 1e-7);
}

TEST(Step, DriftIsAddedWithAlphaSquared) {
  auto model = make_euclidean(2)->with_drift([](double, const Point&) { return vec({1.0, -2.0}); });
  const StepResult r = step(*model, 0.0, vec({0, 0}), vec({0, 0}), 0.1, true);
  EXPECT_NEAR(r.point[0], 0.01, 1e-15);
  EXPECT_NEAR(r.point[1], -0.02, 1e-15);
  const StepResult off = step(*model, 0.0, vec({0, 0}), vec({0, 0}), 0.1, false);
  EXPECT_EQ(off.point.norm(), 0.0);
}

TEST(Step, NoiseScalingAndConstraint) {
  std::mt19937_64 rng(1);
  for (const auto& [label, model] : testing::all_models()) {
    for (int trial = 0; trial < 50; ++trial) {
      const double t = testing::random_time(*model, rng);
      const Point x = testing::random_point(*model, rng);
      RandomStream stream(3, trial, 0);
      const Vector xi = sample_unit_ball(model->dim(), stream);
      const StepResult r = step(*model, t, x, xi, 0.2, false);
      EXPECT_NEAR(model->norm(t, x, r.noise.xi_tilde.components), std::sqrt(model->dim() + 2.0) * xi.norm(), 1e-9)
          << label;
      EXPECT_LT(model->constraint_residual(r.point), 1e-9 * std::max(1.0, r.point.squaredNorm())) << label;
    }
  }
}

TEST(Step, RejectsNoiseOutsideBall) {
  auto model = make_euclidean(2);
  EXPECT_THROW(step(*model, 0.0, vec({0, 0}), vec({1.0, 0.5}), 0.1, false), Error);
}

TEST(RunWalk, LengthDeterminismAndReplay) {
  auto model = make_round_sphere(2, 1.0, true, {0.0, 1.0});
  const WalkConfig c = basic_config(*model, 0.15, 42);
  const WalkPath a = run_walk(*model, c, 3);
  const WalkPath b = run_walk(*model, c, 3);
  ASSERT_EQ(static_cast<int>(a.skeleton.size()), a.schedule.steps + 1);
  for (std::size_t n = 0; n < a.skeleton.size(); ++n) ASSERT_EQ(a.skeleton[n], b.skeleton[n]);
  const WalkPath other = run_walk(*model, c, 4);
  EXPECT_NE(a.skeleton.back(), other.skeleton.back());

  // Markov property: each step depends only on (X_n, t_n, xi_{n+1}).
  const WalkPath replayed = replay_walk(*model, c, a.noise_record);
  for (std::size_t n = 0; n < a.skeleton.size(); ++n) ASSERT_EQ(a.skeleton[n], replayed.skeleton[n]);
  for (int n = 0; n < a.schedule.steps; ++n) {
    const StepResult r = step(*model, a.schedule.times[n], a.skeleton[n], a.noise_record[n], c.alpha, false,
                              FrameOrder::Canonical, a.schedule.fraction(n));
    ASSERT_EQ(r.point, a.skeleton[n + 1]);
  }
}

TEST(RunWalk, ConfigValidation) {
  auto model = make_euclidean(2);
  WalkConfig c = basic_config(*model, 1.0);
  EXPECT_THROW(run_walk(*model, c), Error);  // alpha^2 = t2 - t1
  c.alpha = 0.1;
  c.start = vec({0, 0, 0});
  EXPECT_THROW(run_walk(*model, c), Error);
  auto sphere = make_round_sphere(2);
  WalkConfig off = basic_config(*sphere, 0.1);
  off.start = vec({0, 0, 2});
  EXPECT_THROW(run_walk(*sphere, off), Error);
}

TEST(RunWalk, EuclideanVarianceMatchesHeatKernel) {
  auto model = make_euclidean(1);
  const WalkConfig c = basic_config(*model, 0.1, 5);
  MeanAccumulator acc, squares;
  for (int p = 0; p < 100000; ++p) {
    const double x = run_walk(*model, c, p).skeleton.back()[0];
    acc.add(x);
    squares.add(x * x);
  }
  const McEstimate e = squares.estimate();
  EXPECT_NEAR(e.mean, 1.0, 3.0 * e.std_error);
  EXPECT_NEAR(acc.mean(), 0.0, 3.0 * acc.estimate().std_error);
}

TEST(RunWalk, EuclideanCoordinatesPassKolmogorovSmirnov) {
  auto model = make_euclidean(2);
  const WalkConfig c = basic_config(*model, 0.05, 6);
  std::vector<double> first, second;
  for (int p = 0; p < 10000; ++p) {
    const Point end = run_walk(*model, c, p).skeleton.back();
    first.push_back(end[0]);
    second.push_back(end[1]);
  }
  EXPECT_TRUE(ks_statistic(first, normal_cdf).pass_01);
  EXPECT_TRUE(ks_statistic(second, normal_cdf).pass_01);
}

TEST(RunWalk, FrameChoiceDoesNotChangeTheLaw) {
  // Same walk with the reversed frame section: compare endpoint laws.
  auto model = make_round_sphere(2, 1.0, false, {0.0, 1.0});
  WalkConfig canonical = basic_config(*model, 0.1, 7);
  WalkConfig reversed = canonical;
  reversed.frame_order = FrameOrder::Reversed;
  reversed.seed = 8;
  std::vector<double> a, b, az, bz;
  for (int p = 0; p < 4000; ++p) {
    const Point x = run_walk(*model, canonical, p).skeleton.back();
    const Point y = run_walk(*model, reversed, p).skeleton.back();
    a.push_back(x[0]);
    b.push_back(y[0]);
    az.push_back(x[2]);
    bz.push_back(y[2]);
  }
  EXPECT_TRUE(ks_two_sample(a, b).pass_01);
  EXPECT_TRUE(ks_two_sample(az, bz).pass_01);
}

TEST(Interpolate, ScheduleTimesAndMidpoints) {
  auto flat = make_euclidean(2);
  const WalkPath path = run_walk(*flat, basic_config(*flat, 0.3, 9));
  for (int n = 0; n <= path.schedule.steps; ++n)
    EXPECT_LT((interpolate(*flat, path, path.schedule.times[n]) - path.skeleton[n]).norm(), 1e-14);
  const double mid = 0.5 * (path.schedule.times[2] + path.schedule.times[3]);
  EXPECT_LT((interpolate(*flat, path, mid) - 0.5 * (path.skeleton[2] + path.skeleton[3])).norm(), 1e-14);
  // Final partial step: the midpoint in time is still the arithmetic midpoint.
  const int last = path.schedule.steps - 1;
  const double mid_last = 0.5 * (path.schedule.times[last] + path.schedule.times[last + 1]);
  EXPECT_LT((interpolate(*flat, path, mid_last) - 0.5 * (path.skeleton[last] + path.skeleton[last + 1])).norm(),
            1e-14);
  EXPECT_THROW(interpolate(*flat, path, 1.5), Error);
}

TEST(Interpolate, StaysOnTheManifold) {
  std::mt19937_64 rng(10);
  for (const auto& [label, model] : testing::all_models()) {
    const WalkPath path = run_walk(*model, basic_config(*model, 0.2, 11));
    for (const Point& x : path.skeleton) ASSERT_LT(model->constraint_residual(x), 1e-9) << label;
    for (int i = 0; i < 50; ++i) {
      const double t = testing::random_time(*model, rng);
      ASSERT_LT(model->constraint_residual(interpolate(*model, path, t)), 1e-9) << label;
    }
  }
}

TEST(ExitTime, ConfinedAndForcedPaths) {
  auto flat = make_euclidean(2);
  const WalkPath path = run_walk(*flat, basic_config(*flat, 0.1, 12));
  EXPECT_EQ(exit_time(path, *flat, flat->origin(), 100.0), kInfinity);

  WalkPath forced = path;
  for (int n = 0; n <= forced.schedule.steps; ++n) forced.skeleton[n] = vec({0.1 * n, 0.0});
  // d > R - 1 = 2 first at n = 21.
  EXPECT_DOUBLE_EQ(exit_time(forced, *flat, flat->origin(), 3.0), forced.schedule.times[21]);
  EXPECT_THROW(exit_time(forced, *flat, flat->origin(), 1.0), Error);

  auto chart = make_numeric_chart(2, [](double, const Point&) { return Matrix(Matrix::Identity(2, 2)); });
  const WalkPath chart_path = run_walk(*chart, basic_config(*chart, 0.3, 1));
  try {
    exit_time(chart_path, *chart, chart->origin(), 3.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unsupported);
  }
}

TEST(ExitTime, ProbabilityDecreasesWithRadius) {
  auto model = make_hyperbolic(2, {0.0, 2.0});
  WalkConfig c = basic_config(*model, 0.1, 13);
  const int n = 3000;
  std::vector<double> fractions;
  for (double R : {3.0, 5.0, 8.0}) {
    long exits = 0;
    for (int p = 0; p < n; ++p)
      if (exit_time(run_walk(*model, c, p), *model, model->origin(), R) <= c.t2) ++exits;
    fractions.push_back(static_cast<double>(exits) / n);
  }
  EXPECT_GT(fractions[0], fractions[1]);
  EXPECT_GE(fractions[1], fractions[2]);
}

TEST(Subordination, JumpCountMeanMatchesCappedPoisson) {
  const double alpha = 0.2, t1 = 0.0, t2 = 1.0;
  const int cap = Schedule::make(t1, t2, alpha).steps;  // 25
  const double lambda = (t2 - t1) / (alpha * alpha);
  // Oracle: E[min(Pois(lambda), cap)].
  double expected = 0.0, pk = std::exp(-lambda), below = 0.0;
  for (int k = 0; k < cap; ++k) {
    expected += k * pk;
    below += pk;
    pk *= lambda / (k + 1);
  }
  expected += cap * (1.0 - below);
  MeanAccumulator acc;
  int max_count = 0;
  for (int p = 0; p < 10000; ++p) {
    const int count = poisson_jump_count(14, p, t1, t2, alpha, cap);
    max_count = std::max(max_count, count);
    acc.add(count);
  }
  EXPECT_NEAR(acc.mean(), expected, 3.0 * acc.estimate().std_error);
  EXPECT_LE(max_count, cap);
}

TEST(Subordination, PiecewiseConstantBetweenJumps) {
  auto model = make_euclidean(1);
  WalkConfig c = basic_config(*model, 0.5, 15);
  const SubordinatedWalk w = subordinated_walk(*model, c, 0);
  EXPECT_LE(static_cast<int>(w.jump_times.size()), w.path.schedule.steps);
  EXPECT_EQ(w.at(c.t1), w.path.skeleton[0]);
  for (std::size_t j = 0; j < w.jump_times.size(); ++j) {
    const double before = j == 0 ? c.t1 : w.jump_times[j - 1];
    const double mid = 0.5 * (before + w.jump_times[j]);
    EXPECT_EQ(w.at(mid), w.path.skeleton[j]);
    EXPECT_EQ(w.at(w.jump_times[j]), w.path.skeleton[j + 1]);
  }
}

TEST(PathCsv, HeaderAndRowCount) {
  auto model = make_euclidean(2);
  const WalkPath path = run_walk(*model, basic_config(*model, 0.5, 1));
  std::ostringstream out;
  write_path_csv(out, path);
  const std::string text = out.str();
  EXPECT_EQ(text.rfind("n,t,coord_0,coord_1\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), path.schedule.steps + 2);
  std::ostringstream tagged;
  write_path_csv(tagged, path, true, 7);
  EXPECT_EQ(tagged.str().rfind("path,n,t,coord_0,coord_1\n7,0,0,", 0), 0u);
}

}  // namespace
}  // namespace gtwalk
