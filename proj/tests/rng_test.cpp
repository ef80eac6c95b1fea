#include <gtest/gtest.h>

#include <cmath>

#include "gtwalk/rng.hpp"

namespace gtwalk {
namespace {

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswers) {
  auto zero = philox4x32({0u, 0u, 0u, 0u}, {0u, 0u});
  EXPECT_EQ(zero[0], 0x6627e8d5u);
  EXPECT_EQ(zero[1], 0xe169c58du);
  EXPECT_EQ(zero[2], 0xbc57ac4cu);
  EXPECT_EQ(zero[3], 0x9b00dbd8u);

  auto ones = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                         {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(ones[0], 0x408f276du);
  EXPECT_EQ(ones[1], 0x41c83b0eu);
  EXPECT_EQ(ones[2], 0xa20bc7c6u);
  EXPECT_EQ(ones[3], 0x6d5451fdu);

  auto pi = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                       {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(pi[0], 0xd16cfe09u);
  EXPECT_EQ(pi[1], 0x94fdccebu);
  EXPECT_EQ(pi[2], 0x5001e420u);
  EXPECT_EQ(pi[3], 0x24126ea1u);
}

TEST(RandomStream, SameKeySameDraws) {
  RandomStream a(42, 7, 3), b(42, 7, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u32(), b.next_u32());
}

TEST(RandomStream, DistinctKeysDiffer) {
  RandomStream base(42, 7, 3);
  RandomStream other_path(42, 8, 3), other_step(42, 7, 4), other_seed(43, 7, 3),
      other_purpose(42, 7, 3, StreamPurpose::Poisson);
  const auto first = base.next_u32();
  EXPECT_NE(first, other_path.next_u32());
  EXPECT_NE(first, other_step.next_u32());
  EXPECT_NE(first, other_seed.next_u32());
  EXPECT_NE(first, other_purpose.next_u32());
}

TEST(RandomStream, UniformIsOpenInterval) {
  RandomStream s(1, 0, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n));
}

class UnitBall : public ::testing::TestWithParam<int> {};

TEST_P(UnitBall, SupportMeanAndCovariance) {
  const int m = GetParam();
  const int n = 1000000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd fourth = Eigen::MatrixXd::Zero(m, m);
  double max_norm = 0.0;
  for (int i = 0; i < n; ++i) {
    RandomStream stream(2024, 0, static_cast<std::uint64_t>(i));
    const Vector xi = sample_unit_ball(m, stream);
    max_norm = std::max(max_norm, xi.norm());
    for (int a = 0; a < m; ++a) {
      sum[a] += xi[a];
      for (int b = 0; b < m; ++b) {
        second(a, b) += xi[a] * xi[b];
        fourth(a, b) += xi[a] * xi[a] * xi[b] * xi[b];
      }
    }
  }
  EXPECT_LE(max_norm, 1.0);
  for (int a = 0; a < m; ++a) {
    const double var = second(a, a) / n;
    EXPECT_NEAR(sum[a] / n, 0.0, 3.0 * std::sqrt(var / n)) << "mean " << a;
    for (int b = 0; b < m; ++b) {
      const double mean = second(a, b) / n;
      const double sd = std::sqrt(fourth(a, b) / n - mean * mean);
      const double expected = a == b ? 1.0 / (m + 2) : 0.0;
      // 4 standard errors: up to nine entries are checked per dimension.
      EXPECT_NEAR(mean, expected, 4.0 * sd / std::sqrt(n)) << "cov " << a << "," << b;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Dimensions, UnitBall, ::testing::Values(1, 2, 3));

TEST(UnitBall, RadialLawIsUniformInVolume) {
  // P(|xi| <= r) = r^m; check the median radius 2^{-1/m}.
  const int m = 3, n = 200000;
  int below = 0;
  const double median = std::pow(0.5, 1.0 / m);
  for (int i = 0; i < n; ++i) {
    RandomStream stream(5, 1, static_cast<std::uint64_t>(i));
    if (sample_unit_ball(m, stream).norm() <= median) ++below;
  }
  EXPECT_NEAR(static_cast<double>(below) / n, 0.5, 3.0 * 0.5 / std::sqrt(n));
}

}  // namespace
}  // namespace gtwalk
