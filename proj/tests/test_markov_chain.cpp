#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "switchcount/markov_chain.hpp"

using namespace switchcount;

TEST(Stationary, ClosedForm) {
  const auto s = stationary({0.3, 0.6});
  EXPECT_NEAR(s.pbar0, 2.0 / 3.0, 2e-16);
  EXPECT_NEAR(s.pbar1, 1.0 / 3.0, 2e-16);
  const auto h = stationary({0.5, 0.5});
  EXPECT_EQ(h.pbar0, 0.5);
  EXPECT_EQ(h.pbar1, 0.5);
  const auto m = stationary({0.7, 0.2});
  EXPECT_GT(m.pbar1, m.pbar0);
}

TEST(Stationary, FixedPointResiduals) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-9, 1.0 - 1e-9);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const TransitionPair tp{u(rng), u(rng)};
    const auto sp = stationary(tp);
    const auto r = stationarity_residuals(tp, sp);
    worst = std::max({worst, std::abs(r[0]), std::abs(r[1]), std::abs(sp.pbar0 + sp.pbar1 - 1.0)});
  }
  EXPECT_LT(worst, 1e-14);
}

TEST(CheckTransition, RejectsBoundary) {
  EXPECT_THROW(check_transition({0.0, 0.5}), ParamDomainError);
  EXPECT_THROW(check_transition({0.5, 1.0}), ParamDomainError);
  EXPECT_THROW(check_transition({std::nan(""), 0.5}), ParamDomainError);
  EXPECT_NO_THROW(check_transition({1e-12, 1.0 - 1e-12}));
}

TEST(SegmentForward, SinglePeriodZero) {
  const TransitionPair tp{0.3, 0.4};
  const auto sp = stationary(tp);
  const std::vector<std::int64_t> a{0};
  const std::vector<double> r{2.0};
  const double expect = std::log(sp.pbar0 + sp.pbar1 * oracle::nb_pmf(0, 2.0, 0.5));
  EXPECT_NEAR(segment_forward_loglik(a, r, Family::NegativeBinomial, 0.5, tp), expect, 1e-14);
}

TEST(SegmentForward, AllPositiveCountsLeaveOnePath) {
  const TransitionPair tp{0.35, 0.15};
  const std::vector<std::int64_t> a{1, 4, 2, 7};
  const std::vector<double> r{1.5, 2.5, 0.7, 3.0};
  double expect = std::log(stationary(tp).pbar1) + 3.0 * std::log(1.0 - tp.p10);
  for (std::size_t t = 0; t < a.size(); ++t) expect += std::log(oracle::nb_pmf(a[t], r[t], 0.3));
  EXPECT_NEAR(segment_forward_loglik(a, r, Family::NegativeBinomial, 0.3, tp), expect, 1e-12);
}

TEST(SegmentForward, MatchesPathEnumeration) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.02, 0.98), lam(0.05, 6.0);
  std::bernoulli_distribution zero(0.5);
  std::poisson_distribution<int> pois(2.0);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t T = 1 + inst % 10;
    const TransitionPair tp{u(rng), u(rng)};
    const bool nb = inst % 2 == 0;
    const double alpha = 0.4;
    std::vector<std::int64_t> a(T);
    std::vector<double> r(T), e(T);
    for (std::size_t t = 0; t < T; ++t) {
      a[t] = zero(rng) ? 0 : pois(rng);
      r[t] = lam(rng);
      e[t] = nb ? oracle::nb_pmf(a[t], r[t], alpha) : oracle::poisson_pmf(a[t], r[t]);
    }
    const double ref = std::log(oracle::segment_likelihood_brute(a, e, tp.p01, tp.p10));
    const double got = segment_forward_loglik(
        a, r, nb ? Family::NegativeBinomial : Family::Poisson, alpha, tp);
    EXPECT_NEAR(got, ref, 1e-10 * std::abs(ref) + 1e-13) << "instance " << inst;
  }
}

TEST(SegmentForward, NearAbsorbingCountStateIsPureNb) {
  const TransitionPair tp{1.0 - 1e-9, 1e-9};
  const std::vector<std::int64_t> a{0, 3, 0, 1, 2};
  const std::vector<double> r{1.0, 2.0, 0.5, 1.5, 2.0};
  double pure = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) pure += std::log(oracle::nb_pmf(a[t], r[t], 0.2));
  EXPECT_NEAR(segment_forward_loglik(a, r, Family::NegativeBinomial, 0.2, tp), pure, 1e-7);
}

TEST(SegmentForward, AppendingPositivePeriodIsBounded) {
  const TransitionPair tp{0.4, 0.3};
  std::vector<std::int64_t> a{0, 2, 0};
  std::vector<double> r{1.0, 2.0, 1.5};
  const double base = segment_forward_loglik(a, r, Family::NegativeBinomial, 0.5, tp);
  a.push_back(3);
  r.push_back(2.5);
  const double ext = segment_forward_loglik(a, r, Family::NegativeBinomial, 0.5, tp);
  const double bound = std::log(std::max(1.0 - tp.p10, tp.p01) * oracle::nb_pmf(3, 2.5, 0.5));
  EXPECT_LE(ext - base, bound + 1e-12);
}

TEST(SegmentForward, LongSegmentDoesNotUnderflow) {
  std::vector<std::int64_t> a(5000, 0);
  std::vector<double> r(5000, 3.0);
  for (std::size_t t = 0; t < a.size(); t += 3) a[t] = 4;
  const double ll = segment_forward_loglik(a, r, Family::Poisson, 0.0, {0.5, 0.5});
  EXPECT_TRUE(std::isfinite(ll));
  EXPECT_LT(ll, -1000.0);
}

TEST(SegmentForward, Errors) {
  const std::vector<std::int64_t> a{1, 2};
  const std::vector<double> r{1.0};
  EXPECT_THROW(segment_forward_loglik(a, r, Family::Poisson, 0.0, {0.5, 0.5}), SchemaError);
  const std::vector<double> r2{1.0, 2.0};
  EXPECT_THROW(segment_forward_loglik(a, r2, Family::Poisson, 0.0, {0.0, 0.5}), ParamDomainError);
}

TEST(BackwardSample, ExactConditionalDistribution) {
  // Enumerate P(path | A) for T = 3 and compare with sampled frequencies.
  const TransitionPair tp{0.35, 0.25};
  const std::vector<std::int64_t> a{0, 0, 0};
  const std::vector<double> le{std::log(0.3), std::log(0.5), std::log(0.2)};
  const auto fp = forward_filter(a, le, tp);
  std::vector<double> expect(8);
  double total = 0.0;
  for (unsigned m = 0; m < 8; ++m) {
    std::vector<double> e(3);
    for (int t = 0; t < 3; ++t) e[t] = ((m >> t) & 1U) ? std::exp(le[t]) : 1.0;
    const auto sp = stationary(tp);
    double p = ((m & 1U) ? sp.pbar1 : sp.pbar0) * e[0];
    for (int t = 1; t < 3; ++t) {
      const int prev = (m >> (t - 1)) & 1U, s = (m >> t) & 1U;
      p *= (prev == 0 ? (s ? tp.p01 : 1 - tp.p01) : (s ? 1 - tp.p10 : tp.p10)) * e[t];
    }
    expect[m] = p;
    total += p;
  }
  EXPECT_NEAR(std::log(total), fp.loglik, 1e-13);
  Rng rng = make_rng(9);
  std::vector<double> freq(8, 0.0);
  const int draws = 200000;
  std::vector<std::uint8_t> s(3);
  for (int i = 0; i < draws; ++i) {
    backward_sample(fp, tp, rng, s);
    freq[s[0] | (s[1] << 1) | (s[2] << 2)] += 1.0 / draws;
  }
  for (unsigned m = 0; m < 8; ++m) {
    const double p = expect[m] / total;
    EXPECT_NEAR(freq[m], p, 5.0 * std::sqrt(p * (1 - p) / draws) + 1e-12) << "path " << m;
  }
}

TEST(BackwardSample, PositiveCountsForceCountState) {
  const TransitionPair tp{0.2, 0.7};
  const std::vector<std::int64_t> a{2, 0, 1, 0, 5};
  const std::vector<double> le{-1.0, -0.5, -2.0, -0.7, -3.0};
  const auto fp = forward_filter(a, le, tp);
  Rng rng = make_rng(4);
  std::vector<std::uint8_t> s(5);
  for (int i = 0; i < 1000; ++i) {
    backward_sample(fp, tp, rng, s);
    EXPECT_EQ(s[0], 1);
    EXPECT_EQ(s[2], 1);
    EXPECT_EQ(s[4], 1);
  }
}

TEST(StatePathPrior, MatchesDirectProduct) {
  const TransitionPair tp{0.3, 0.45};
  const std::vector<std::uint8_t> s{1, 1, 0, 0, 1};
  const double direct = std::log(0.3 / 0.75) + std::log(0.55) + std::log(0.45) + std::log(0.7) +
                        std::log(0.3);
  EXPECT_NEAR(log_state_path_prior(s, tp), direct, 1e-14);
  const auto c = transition_counts(s);
  EXPECT_EQ(c.n11, 1u);
  EXPECT_EQ(c.n10, 1u);
  EXPECT_EQ(c.n00, 1u);
  EXPECT_EQ(c.n01, 1u);
}

TEST(ConjugateTransitions, BetaPosteriorMoments) {
  const TransitionCounts c{6, 2, 3, 9};
  Rng rng = make_rng(21);
  const int n = 100000;
  double m01 = 0.0, m10 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto tp = draw_transitions_conjugate(c, {}, rng);
    ASSERT_GT(tp.p01, 0.0);
    ASSERT_LT(tp.p10, 1.0);
    m01 += tp.p01 / n;
    m10 += tp.p10 / n;
  }
  // Beta(1 + n01, 1 + n00) and Beta(1 + n10, 1 + n11) means
  EXPECT_NEAR(m01, 3.0 / 10.0, 0.004);
  EXPECT_NEAR(m10, 4.0 / 14.0, 0.004);
}
