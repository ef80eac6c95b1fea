#pragma once

#include <random>
#include <vector>

#include "gtwalk/manifold.hpp"

namespace gtwalk::testing {

inline Vector gaussian_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline Vector random_tangent(const ManifoldModel& model, const Point& x, std::mt19937_64& rng,
                             double scale = 1.0) {
  return model.project(x, gaussian_vector(model.ambient_dim(), rng, scale));
}

/// exp of a Gaussian tangent vector at the origin: works uniformly for every
/// model. Chart models cap the length at 1 to stay away from the chart boundary.
inline Point random_point(const ManifoldModel& model, std::mt19937_64& rng, double spread = 1.0) {
  const Point o = model.origin();
  const double t = model.window().t1;
  Vector v = random_tangent(model, o, rng, spread);
  if (model.kind() == ModelKind::NumericChart && model.norm(t, o, v) > 1.0) v /= model.norm(t, o, v);
  return exp(model, t, o, v);
}

inline double random_time(const ManifoldModel& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(model.window().t1, model.window().t2);
  return u(rng);
}

inline Vector unit(int n, int i) {
  Vector e = Vector::Zero(n);
  e[i] = 1.0;
  return e;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

struct NamedModel {
  std::string label;
  ModelPtr model;
};

/// One instance of every model kind, all on the window [0, 1].
inline std::vector<NamedModel> all_models() {
  const TimeWindow w{0.0, 1.0};
  return {
      {"euclidean2", make_euclidean(2, w)},
      {"euclidean3", make_euclidean(3, w)},
      {"sphere2", make_round_sphere(2, 1.0, false, w)},
      {"sphere2_flow", make_round_sphere(2, 1.0, true, w)},
      {"sphere3_flow_c2", make_round_sphere(3, 2.0, true, w)},
      {"scaled_euclidean", make_scaled_metric(make_euclidean(2, w), 1.0)},
      {"scaled_sphere", make_scaled_metric(make_round_sphere(2, 1.0, false, w), 0.5)},
      {"hyperbolic2", make_hyperbolic(2, w)},
      {"hyperbolic3", make_hyperbolic(3, w)},
      {"numeric_sphere", make_numeric_chart(2, stereographic_sphere_metric(2, 1.0, true, w), w)},
  };
}

}  // namespace gtwalk::testing
