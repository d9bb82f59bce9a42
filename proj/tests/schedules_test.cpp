#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "clipvrg/error.hpp"
#include "clipvrg/schedules.hpp"

using namespace clipvrg;

TEST(Schedule, StepsizeAtZero) {
  const Schedule alpha{220.0, 0.82, 1};
  EXPECT_DOUBLE_EQ(alpha(0), 220.0);
  EXPECT_DOUBLE_EQ(eval(alpha, 0), 220.0);
}

TEST(Schedule, ZeroExponentIsConstant) {
  const Schedule s{1.0, 0.0, 3};
  for (std::size_t t : {0u, 1u, 17u, 100000u}) EXPECT_EQ(s(t), 1.0);
}

TEST(Schedule, ClippingThresholdMatchesLogSpace) {
  const Schedule gamma{600.0, 0.17, 1};
  const double want = std::exp(std::log(600.0) - 0.17 * std::log(100.0));
  EXPECT_NEAR(gamma(99), want, 1e-12 * want);
  EXPECT_DOUBLE_EQ(gamma(99), 600.0 * std::pow(100.0, -0.17));
}

TEST(Schedule, PositiveAndStrictlyDecreasing) {
  const Schedule s{3.0, 0.4, 5};
  double prev = s(0);
  for (std::size_t t = 1; t <= 10000; ++t) {
    const double v = s(t);
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, prev);
    prev = v;
  }
}

TEST(Schedule, EtaIsClampedToOne) {
  ScheduleSet s{{1, 0.82, 1}, {1, 0.17, 1}, {7.0, 0.66, 1}};
  EXPECT_EQ(s.eta_clamped(0), 1.0);
  EXPECT_LT(s.eta_clamped(1000), 1.0);
  EXPECT_DOUBLE_EQ(s.eta_clamped(1000), 7.0 * std::pow(1001.0, -0.66));
}

TEST(Exponents, OptimalAndReferencePass) {
  EXPECT_TRUE(validate_exponents(kOptimalTauAlpha, kOptimalTauGamma).empty());
  EXPECT_TRUE(validate_exponents(0.82, 0.17).empty());
}

TEST(Exponents, ViolationIsNamed) {
  const auto v = validate_exponents(0.5, 0.3);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], "2*tau_gamma < tau_alpha");
}

TEST(Exponents, UpperConstraints) {
  auto v = validate_exponents(1.0, 0.1);
  EXPECT_NE(std::find(v.begin(), v.end(), "tau_alpha < 1"), v.end());
  v = validate_exponents(0.85, 0.2);
  EXPECT_EQ(v, std::vector<std::string>{"tau_alpha <= 1 - tau_gamma"});
  EXPECT_TRUE(validate_exponents(0.7, 0.3 - 1e-15).empty());
}

TEST(Eta, Derivation) {
  EXPECT_NEAR(derive_eta(5.0 / 6.0, 1.0 / 6.0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(derive_eta(0.82, 0.17), 0.66, 1e-12);
  EXPECT_NEAR(derive_eta(0.6, 0.2), 8.0 / 15.0, 1e-15);
}

TEST(RateBound, Examples) {
  EXPECT_NEAR(rate_exponent_bound(5.0 / 6.0, 1.0 / 6.0), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(rate_exponent_bound(0.82, 0.17), 0.16, 1e-12);
  EXPECT_NEAR(rate_exponent_bound(0.9, 0.05), 0.05, 1e-15);
}

TEST(MinPhi, Examples) {
  EXPECT_EQ(min_phi(0.0, 0.5, 0.5), 1);
  EXPECT_EQ(min_phi(0.5, 0.8, 0.2), 2);
  EXPECT_EQ(min_phi(0.9, 0.8, 0.2), 10);
}

TEST(MinPhi, RejectsBetaOutOfRange) {
  for (double beta : {1.0, 1.5, -0.1}) {
    try {
      min_phi(beta, 0.8, 0.2);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::invalid_argument);
    }
  }
}

TEST(MinPhi, SmallestOffsetSatisfyingTheStrictBound) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ub(0.0, 0.999), ut(0.05, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double beta = ub(rng), ta = ut(rng), tg = ut(rng) * 0.5;
    const long phi = min_phi(beta, ta, tg);
    const double bound = 1.0 / (1.0 - std::pow(beta, 1.0 / (ta + tg))) - 1.0;
    EXPECT_GE(phi, 1);
    EXPECT_GT(static_cast<double>(phi), bound * (1.0 - 1e-12));
    if (phi > 1) {
      EXPECT_LE(static_cast<double>(phi - 1), bound * (1.0 + 1e-12));
    }
  }
}

TEST(ConsensusConstant, Examples) {
  EXPECT_EQ(lemma1_constant(0.0, 0.5, 0.5, 1), 0.0);
  EXPECT_NEAR(lemma1_constant(0.5, 0.8, 0.2, 2), 3.0, 1e-12);
  EXPECT_NEAR(lemma1_constant(2.0 / 3.0, 0.8, 0.2, 4), 5.0, 1e-12);
}

TEST(ConsensusConstant, BelowMinPhiIsRejected) {
  try {
    lemma1_constant(0.9, 0.8, 0.2, 5);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::precondition_violation);
  }
}

// alpha_{t+1} gamma_{t+1} > beta alpha_t gamma_t for all t when phi = min_phi.
TEST(ConsensusSchedule, ProductDecaysSlowerThanBeta) {
  for (double beta : {0.3, 0.6833408738, 0.8798391682, 0.95, 0.9948138218}) {
    for (auto [ta, tg] : {std::pair{5.0 / 6.0, 1.0 / 6.0}, std::pair{0.82, 0.17}, std::pair{0.6, 0.2}}) {
      const long phi = min_phi(beta, ta, tg);
      const Schedule a{1.0, ta, phi}, g{1.0, tg, phi};
      for (std::size_t t = 0; t <= 100000; ++t)
        ASSERT_GT(a(t + 1) * g(t + 1), beta * a(t) * g(t)) << "beta " << beta << " t " << t;
    }
  }
}

// sum_{s<t} beta^{t-s} alpha_s gamma_s <= c alpha_t gamma_t with c = lemma1_constant.
TEST(ConsensusSchedule, GeometricSumIsBounded) {
  for (double beta : {0.2, 2.0 / 3.0, 0.8798391682, 0.97}) {
    for (auto [ta, tg] : {std::pair{5.0 / 6.0, 1.0 / 6.0}, std::pair{0.82, 0.17}}) {
      const long phi = min_phi(beta, ta, tg);
      for (long extra : {0L, 3L}) {
        const Schedule a{2.0, ta, phi + extra}, g{5.0, tg, phi + extra};
        const double c = lemma1_constant(beta, ta, tg, phi + extra);
        double sum = 0.0;  // value at t
        for (std::size_t t = 0; t <= 10000; ++t) {
          const double bound = c * a(t) * g(t);
          ASSERT_LE(sum, bound * (1.0 + 1e-12)) << "beta " << beta << " t " << t;
          sum = beta * (sum + a(t) * g(t));
        }
      }
    }
  }
}
