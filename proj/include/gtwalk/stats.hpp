#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gtwalk/core.hpp"

namespace gtwalk {

struct McEstimate {
  long n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

/// Streaming mean/variance (Welford) with pairwise merging (Chan et al.).
class MeanAccumulator {
 public:
  void add(double x);
  void merge(const MeanAccumulator& other);

  long count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const { return n_ > 1 ? m2_ / (n_ - 1) : 0.0; }
  /// Mean with a normal-approximation 95% interval.
  McEstimate estimate() const;

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Proportion with binomial standard error and a Wilson 95% interval.
McEstimate proportion_estimate(long successes, long n);

double normal_cdf(double x);

/// CDF on (-pi, pi] of the wrapped normal law of an angle N(0, variance) mod 2 pi.
double wrapped_normal_cdf(double theta, double variance);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  /// Asymptotic critical value at level 0.01, 1.628 / sqrt(n_eff).
  double critical_01 = 0.0;
  bool pass_01 = true;
};

/// One-sample Kolmogorov-Smirnov test; the sample is sorted internally.
KsResult ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov test.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic Kolmogorov survival function P(K > lambda).
double kolmogorov_survival(double lambda);

/// W1 between two empirical laws: integral of |F_a - F_b|, which for equal
/// sizes is the mean absolute difference of sorted samples.
double wasserstein1_1d(std::vector<double> a, std::vector<double> b);

/// W1 between an empirical law and a continuous CDF supported in [lo, hi].
double wasserstein1_to_cdf(std::vector<double> samples, const std::function<double(double)>& cdf,
                           double lo, double hi);

/// Bootstrap standard error of a statistic of one sample; resampling draws come
/// from streams keyed by (seed, replicate).
double bootstrap_stderr(const std::vector<double>& samples,
                        const std::function<double(const std::vector<double>&)>& statistic,
                        int replicates, std::uint64_t seed);

}  // namespace gtwalk
