#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace sjsr;

TEST(RegIncBeta, ArcsineClosedForm) {
  for (int i = 1; i <= 99; ++i) {
    const double x = i / 100.0;
    EXPECT_NEAR(reg_inc_beta(x, 0.5, 0.5), 2.0 / M_PI * std::asin(std::sqrt(x)), 1e-10) << "x = " << x;
  }
}

TEST(RegIncBeta, ClosedFormsForIntegerParameters) {
  // I_x(1, b) = 1 - (1-x)^b and I_x(a, 1) = x^a.
  for (double x : {0.05, 0.3, 0.77}) {
    EXPECT_NEAR(reg_inc_beta(x, 1.0, 4.0), 1.0 - std::pow(1.0 - x, 4.0), 1e-13);
    EXPECT_NEAR(reg_inc_beta(x, 3.0, 1.0), std::pow(x, 3.0), 1e-13);
  }
}

TEST(RegIncBeta, EndpointsAndErrors) {
  EXPECT_EQ(reg_inc_beta(0.0, 2.0, 3.0), 0.0);
  EXPECT_EQ(reg_inc_beta(1.0, 2.0, 3.0), 1.0);
  EXPECT_THROW(reg_inc_beta(1.5, 2.0, 3.0), ParameterError);
  EXPECT_THROW(reg_inc_beta(0.5, 0.0, 3.0), ParameterError);
  EXPECT_THROW(inv_reg_inc_beta(-0.1, 2.0, 3.0), ParameterError);
}

TEST(InvRegIncBeta, RoundTrip) {
  for (double a : {0.5, 1.0, 2.5, 13.5}) {
    for (double b : {0.5, 1.0, 3.0}) {
      for (double p : {1e-6, 0.01, 0.2, 0.5, 0.9, 0.999}) {
        const double x = inv_reg_inc_beta(p, a, b);
        EXPECT_NEAR(reg_inc_beta(x, a, b), p, 1e-8) << a << ' ' << b << ' ' << p;
      }
    }
  }
}

TEST(Phi, MatchesDirectSummation) {
  EXPECT_NEAR(phi(0.1, 1, 10), 0.7361, 1e-4);
  EXPECT_NEAR(phi(0.1, 1, 10), oracle::binomial_tail(0.1, 1, 10), 1e-13);
  for (int n : {5, 30, 200}) {
    for (int k : {0, 2, 4}) {
      for (double eps : {0.01, 0.1, 0.5}) {
        EXPECT_NEAR(phi(eps, k, n), oracle::binomial_tail(eps, k, n), 1e-12) << eps << ' ' << k << ' ' << n;
      }
    }
  }
  EXPECT_EQ(phi(0.0, 2, 10), 1.0);
  EXPECT_EQ(phi(0.3, 10, 10), 1.0);
  EXPECT_THROW(phi(0.3, 11, 10), ParameterError);
  EXPECT_THROW(phi(1.3, 1, 10), ParameterError);
}

TEST(EpsilonForConfidence, SolvesTheEquation) {
  for (long n : {30L, 100L, 5000L}) {
    for (long k : {0L, 2L, 27L}) {
      if (k >= n) continue;
      const double eps = epsilon_for_confidence({0.05, k, n});
      EXPECT_GT(eps, 0.0);
      EXPECT_LT(eps, 1.0);
      EXPECT_NEAR(oracle::binomial_tail(eps, static_cast<int>(k), static_cast<int>(n)), 0.05, 1e-10);
    }
  }
  // One fewer support constraint gives a strictly smaller eps.
  for (long n : {100L, 500L, 1000L, 5000L}) {
    EXPECT_LT(epsilon_for_confidence({0.05, 27, n}), epsilon_for_confidence({0.05, 28, n}));
  }
  EXPECT_THROW(epsilon_for_confidence({0.0, 1, 10}), ParameterError);
  EXPECT_THROW(epsilon_for_confidence({0.05, 10, 10}), ParameterError);
}

TEST(EpsilonForConfidence, DecreasesWithN) {
  double prev = 1.0;
  for (long n : {10L, 30L, 100L, 1000L}) {
    const double eps = epsilon_for_confidence({0.2, 2, n});
    EXPECT_LT(eps, prev);
    prev = eps;
  }
}
