#include "gtwalk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gtwalk/rng.hpp"

namespace gtwalk {

namespace {

constexpr double kZ95 = 1.959963984540054;

}  // namespace

void MeanAccumulator::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void MeanAccumulator::merge(const MeanAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
  const double total = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ = (na * mean_ + nb * other.mean_) / total;
  m2_ += other.m2_ + delta * delta * na * nb / total;
  n_ += other.n_;
}

McEstimate MeanAccumulator::estimate() const {
  McEstimate e;
  e.n = n_;
  e.mean = mean_;
  e.std_error = n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  e.ci_lo = mean_ - kZ95 * e.std_error;
  e.ci_hi = mean_ + kZ95 * e.std_error;
  return e;
}

McEstimate proportion_estimate(long successes, long n) {
  if (n <= 0) fail(ErrorKind::InvalidInput, "proportion_estimate: no samples");
  if (successes < 0 || successes > n) fail(ErrorKind::InvalidInput, "proportion_estimate: bad count");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  McEstimate e;
  e.n = n;
  e.mean = p;
  e.std_error = std::sqrt(p * (1.0 - p) / nn);
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = kZ95 / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  e.ci_lo = std::clamp(std::min(center - half, p), 0.0, 1.0);
  e.ci_hi = std::clamp(std::max(center + half, p), 0.0, 1.0);
  return e;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double wrapped_normal_cdf(double theta, double variance) {
  constexpr double pi = std::numbers::pi;
  if (!(variance > 0.0)) fail(ErrorKind::InvalidInput, "wrapped_normal_cdf: variance must be positive");
  theta = std::clamp(theta, -pi, pi);
  if (variance < 4.0) {
    // Sum over images: P(-pi < X + 2 pi j <= theta).
    const double sigma = std::sqrt(variance);
    const int images = 2 + static_cast<int>(std::ceil(8.0 * sigma / (2.0 * pi)));
    double sum = 0.0;
    for (int j = -images; j <= images; ++j)
      sum += normal_cdf((theta + 2.0 * pi * j) / sigma) - normal_cdf((-pi + 2.0 * pi * j) / sigma);
    return std::clamp(sum, 0.0, 1.0);
  }
  // Fourier series of the wrapped density integrated from -pi.
  double sum = (theta + pi) / (2.0 * pi);
  for (int n = 1;; ++n) {
    const double weight = std::exp(-0.5 * n * n * variance);
    if (weight < 1e-18) break;
    sum += weight * std::sin(n * theta) / (n * pi);
  }
  return std::clamp(sum, 0.0, 1.0);
}

double kolmogorov_survival(double lambda) {
  constexpr double pi = std::numbers::pi;
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // P(K <= lambda) = sqrt(2 pi)/lambda sum_k exp(-(2k-1)^2 pi^2 / (8 lambda^2)).
    double cdf = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double a = (2 * k - 1) * pi / lambda;
      cdf += std::exp(-a * a / 8.0);
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

KsResult finish_ks(double statistic, double n_eff) {
  KsResult r;
  r.statistic = statistic;
  const double root = std::sqrt(n_eff);
  r.p_value = kolmogorov_survival((root + 0.12 + 0.11 / root) * statistic);
  r.critical_01 = 1.628 / root;
  r.pass_01 = r.p_value > 0.01;
  return r;
}

void require_samples(const std::vector<double>& v, const char* what) {
  if (v.empty()) fail(ErrorKind::InvalidInput, std::string(what) + ": empty sample");
  for (double x : v)
    if (std::isnan(x)) fail(ErrorKind::InvalidInput, std::string(what) + ": NaN sample");
}

}  // namespace

KsResult ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  require_samples(samples, "ks_statistic");
  if (samples.size() < 100) fail(ErrorKind::InvalidInput, "ks_statistic: needs at least 100 samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return finish_ks(d, n);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require_samples(a, "ks_two_sample");
  require_samples(b, "ks_two_sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    const double x = j == b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return finish_ks(d, na * nb / (na + nb));
}

double wasserstein1_1d(std::vector<double> a, std::vector<double> b) {
  require_samples(a, "wasserstein1_1d");
  require_samples(b, "wasserstein1_1d");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return sum / static_cast<double>(a.size());
  }
  // Integrate |F_a - F_b| between consecutive points of the merged sample.
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double total = 0.0, previous = std::min(a.front(), b.front());
  while (i < a.size() || j < b.size()) {
    const double x = j == b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
    total += std::abs(i / na - j / nb) * (x - previous);
    previous = x;
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
  }
  return total;
}

double wasserstein1_to_cdf(std::vector<double> samples, const std::function<double(double)>& cdf,
                           double lo, double hi) {
  require_samples(samples, "wasserstein1_to_cdf");
  if (!(lo < hi)) fail(ErrorKind::InvalidInput, "wasserstein1_to_cdf: empty support");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  const double max_piece = (hi - lo) / 2048.0;
  // Simpson's rule on |F_n - F| over pieces where F_n is constant. F is
  // nondecreasing, so level - F changes sign at most once per piece; split
  // there so the integrand is smooth on each side.
  auto simpson = [&](double a, double b, double level) {
    if (!(b > a)) return 0.0;
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / max_piece)));
    const double h = (b - a) / pieces;
    double sum = 0.0;
    double left = std::abs(level - cdf(a));
    for (int p = 0; p < pieces; ++p) {
      const double x0 = a + p * h;
      const double mid = std::abs(level - cdf(x0 + 0.5 * h));
      const double right = std::abs(level - cdf(x0 + h));
      sum += h / 6.0 * (left + 4.0 * mid + right);
      left = right;
    }
    return sum;
  };
  auto integrate = [&](double a, double b, double level) {
    if (!(b > a)) return 0.0;
    if (!(cdf(a) < level && cdf(b) > level)) return simpson(a, b, level);
    double x_lo = a, x_hi = b;
    for (int it = 0; it < 60 && x_hi - x_lo > 1e-15 * (1.0 + std::abs(x_lo)); ++it) {
      const double mid = 0.5 * (x_lo + x_hi);
      (cdf(mid) < level ? x_lo : x_hi) = mid;
    }
    const double cut = 0.5 * (x_lo + x_hi);
    return simpson(a, cut, level) + simpson(cut, b, level);
  };
  double total = 0.0, previous = lo;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = std::clamp(samples[i], lo, hi);
    total += integrate(previous, x, i / n);
    previous = x;
  }
  total += integrate(previous, hi, 1.0);
  return total;
}

double bootstrap_stderr(const std::vector<double>& samples,
                        const std::function<double(const std::vector<double>&)>& statistic,
                        int replicates, std::uint64_t seed) {
  require_samples(samples, "bootstrap_stderr");
  if (replicates < 2) fail(ErrorKind::InvalidInput, "bootstrap_stderr: needs at least 2 replicates");
  MeanAccumulator acc;
  std::vector<double> resample(samples.size());
  for (int r = 0; r < replicates; ++r) {
    RandomStream stream(seed, static_cast<std::uint64_t>(r), 0, StreamPurpose::Bootstrap);
    for (auto& x : resample) {
      auto index = static_cast<std::size_t>(stream.uniform() * static_cast<double>(samples.size()));
      x = samples[std::min(index, samples.size() - 1)];
    }
    acc.add(statistic(resample));
  }
  return std::sqrt(acc.variance());
}

}  // namespace gtwalk
