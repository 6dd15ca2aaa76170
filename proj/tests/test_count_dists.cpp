#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "switchcount/count_dists.hpp"

using namespace switchcount;

TEST(NbLogPmf, ClosedFormValues) {
  EXPECT_NEAR(nb_log_pmf(0, 1.0, 1.0), std::log(0.5), 1e-15);
  EXPECT_NEAR(nb_log_pmf(1, 1.0, 1.0), std::log(0.25), 1e-15);
}

TEST(NbLogPmf, PoissonLimitAtTinyDispersion) {
  EXPECT_NEAR(nb_log_pmf(2, 2.0, 1e-8), std::log(2.0 * std::exp(-2.0)), 1e-6);
  // first-order gap is alpha/2 * ((a - lambda)^2 - a)
  const double alpha = 1e-8, lambda = 3.7;
  for (std::int64_t a = 0; a <= 50; ++a) {
    const double gap = nb_log_pmf(a, lambda, alpha) - poisson_log_pmf(a, lambda);
    const double first = 0.5 * alpha * ((a - lambda) * (a - lambda) - a);
    EXPECT_NEAR(gap, first, 1e-3 * std::abs(first) + 1e-12) << a;
  }
}

TEST(NbLogPmf, MatchesGammaFunctionForm) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lam(0.05, 30.0), alp(0.01, 5.0);
  std::uniform_int_distribution<int> cnt(0, 700);
  for (int i = 0; i < 2000; ++i) {
    const double l = lam(rng), al = alp(rng);
    const int a = cnt(rng);
    const double ref = oracle::nb_pmf(a, l, al);
    if (ref < 1e-250) continue;
    EXPECT_NEAR(nb_log_pmf(a, l, al), std::log(ref), 1e-9 * std::max(1.0, std::abs(std::log(ref))));
  }
}

TEST(NbLogPmf, NormalizesAndHasNbMoments) {
  for (double lambda : {0.3, 2.0, 9.0}) {
    for (double alpha : {0.05, 0.15, 1.0}) {
      double s = 0.0, m1 = 0.0, m2 = 0.0;
      for (std::int64_t a = 0; a < 20000; ++a) {
        const double p = std::exp(nb_log_pmf(a, lambda, alpha));
        s += p;
        m1 += p * static_cast<double>(a);
        m2 += p * static_cast<double>(a) * static_cast<double>(a);
        if (a > 10 * lambda + 50 && p < 1e-18) break;
      }
      EXPECT_GE(s, 1.0 - 1e-8);
      EXPECT_LE(s, 1.0 + 1e-12);
      EXPECT_NEAR(m1 / lambda, 1.0, 1e-6);
      const double var = m2 - m1 * m1;
      EXPECT_NEAR(var / count_variance(Family::NegativeBinomial, lambda, alpha), 1.0, 1e-6);
    }
  }
}

TEST(NbLogPmf, RejectsBadArguments) {
  EXPECT_THROW(nb_log_pmf(1, 0.0, 1.0), ParamDomainError);
  EXPECT_THROW(nb_log_pmf(1, -2.0, 1.0), ParamDomainError);
  EXPECT_THROW(nb_log_pmf(1, 1.0, 0.0), ParamDomainError);
  EXPECT_THROW(nb_log_pmf(-1, 1.0, 1.0), CountDomainError);
}

TEST(PoissonLogPmf, Values) {
  EXPECT_DOUBLE_EQ(poisson_log_pmf(0, 1.0), -1.0);
  EXPECT_DOUBLE_EQ(poisson_log_pmf(1, 1.0), -1.0);
  // 3^10 / 10! = 59049 / 3628800, both exact in binary floating point
  EXPECT_NEAR(poisson_log_pmf(10, 3.0), std::log(59049.0 / 3628800.0) - 3.0, 1e-12);
  EXPECT_THROW(poisson_log_pmf(2, 0.0), ParamDomainError);
}

TEST(PoissonLogPmf, MatchesProductForm) {
  for (std::int64_t a = 0; a < 60; ++a)
    EXPECT_NEAR(poisson_log_pmf(a, 7.5), std::log(oracle::poisson_pmf(a, 7.5)), 1e-11);
}

TEST(ZeroMass, IndicatorOfZero) {
  EXPECT_EQ(zero_mass(0), 1.0);
  EXPECT_EQ(zero_mass(3), 0.0);
  double s = 0.0;
  for (std::int64_t a = 0; a <= 100; ++a) s += zero_mass(a);
  EXPECT_EQ(s, 1.0);
}

TEST(Rate, LogLink) {
  const std::vector<double> zero(3, 0.0), x{1.0, 2.0, -1.0};
  EXPECT_EQ(rate(zero, x), 1.0);
  const std::vector<double> b{1.0, 0.0}, x2{1.0, 5.0};
  EXPECT_DOUBLE_EQ(rate(b, x2), std::exp(1.0));
  EXPECT_THROW(rate(b, x), SchemaError);
}

TEST(Rate, AgreesWithExtendedPrecision) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> b(6), x(6);
    for (int k = 0; k < 6; ++k) {
      b[k] = 0.3 * nd(rng);
      x[k] = nd(rng);
    }
    long double eta = 0.0L;
    for (int k = 0; k < 6; ++k) eta += static_cast<long double>(b[k]) * x[k];
    const long double ref = std::exp(eta);
    EXPECT_NEAR(rate(b, x) / static_cast<double>(ref), 1.0, 1e-14);
  }
}

TEST(Helpers, StableLogistics) {
  EXPECT_NEAR(log_sigmoid(0.0), std::log(0.5), 1e-15);
  EXPECT_NEAR(log_sigmoid(-800.0), -800.0, 1e-12);
  EXPECT_NEAR(log_sigmoid(800.0), 0.0, 1e-300);
  EXPECT_NEAR(sigmoid(2.0) + sigmoid(-2.0), 1.0, 1e-15);
  EXPECT_NEAR(log_add_exp(std::log(0.25), std::log(0.5)), std::log(0.75), 1e-15);
  EXPECT_EQ(log_add_exp(-INFINITY, -3.0), -3.0);
  EXPECT_NEAR(log_add_exp(1000.0, 1000.0), 1000.0 + std::log(2.0), 1e-12);
}

TEST(CountVariance, DispersionFormula) {
  EXPECT_DOUBLE_EQ(count_variance(Family::NegativeBinomial, 4.0, 0.25), 8.0);
  EXPECT_DOUBLE_EQ(count_variance(Family::Poisson, 4.0, 0.25), 4.0);
  EXPECT_DOUBLE_EQ(count_variance(Family::NegativeBinomial, 4.0, 0.0), 4.0);
}
