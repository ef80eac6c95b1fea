#pragma once

#include <iosfwd>
#include <vector>

#include "gtwalk/manifold.hpp"

namespace gtwalk {

/// Solution of G'' = -Ric(g', g') G / (m-1), G(0) = 0, G'(0) = 1 along a
/// unit-speed geodesic, tabulated on a uniform grid over [0, length].
struct GreenSolution {
  Geodesic geodesic;
  std::vector<double> grid;
  std::vector<double> g;
  std::vector<double> g_prime;
};

/// Vector field along a geodesic: values[i] is tangent at geodesic.sample(u[i]).
struct SampledField {
  std::vector<double> u;
  std::vector<Vector> values;
};

struct VariationTerms {
  double lambda = 0.0;
  double Lambda = 0.0;
  double dt_distance = 0.0;
  double drift_term = 0.0;
  double index_term = 0.0;
  /// -(k/2) d, the flat scaled-metric value of Lambda used in domination checks.
  double reference_bound = 0.0;
};

inline constexpr int kDefaultVariationGrid = 128;

GreenSolution solve_green(const ManifoldModel& model, const Geodesic& geodesic,
                          int n_grid = kDefaultVariationGrid);

/// Index form int (|nabla V|^2 - <R(V, g')g', V>) du of a field sampled on a
/// uniform grid, evaluated with g(t). Covariant derivatives come from
/// transporting every sample back to the start and differencing there.
double index_form(const ManifoldModel& model, double t, const Geodesic& geodesic,
                  const SampledField& field);

/// (G(u)/G(length)) times the parallel field through v; v is based at the end.
SampledField dagger_field(const GreenSolution& green, const ManifoldModel& model,
                          const TangentVector& v);

/// Parallel field along the geodesic through v (based at the start).
SampledField parallel_field(const ManifoldModel& model, const Geodesic& geodesic,
                            const TangentVector& v, int n_grid = kDefaultVariationGrid);

/// (1/2) int d/dt g(t)(g', g') du, the time derivative of the length.
double dt_distance(const ManifoldModel& model, double t, const Geodesic& geodesic,
                   int n_grid = kDefaultVariationGrid);

/// int g(nabla_{g'} Z, g') du.
double drift_integral(const ManifoldModel& model, double t, const Geodesic& geodesic,
                      int n_grid = kDefaultVariationGrid);

/// First and second variation of the distance under a reflection-coupled
/// step with noise xi1 at the start of the geodesic.
VariationTerms coupled_variation_terms(const ManifoldModel& model, double t, const Geodesic& geodesic,
                                       const TangentVector& xi1, double k,
                                       int n_grid = kDefaultVariationGrid);

/// CSV rows "u,G,G_prime".
void write_green_csv(std::ostream& out, const GreenSolution& green);

}  // namespace gtwalk
