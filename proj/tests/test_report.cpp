#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "switchcount/report.hpp"
#include "switchcount/simulate.hpp"

using namespace switchcount;

namespace {

const ModelSpec kMsnb{Family::NegativeBinomial, Structure::MarkovSwitching, {}};

McmcConfig small_config() {
  McmcConfig c;
  c.n_chains = 2;
  c.n_draws = 1200;
  c.n_burnin = 400;
  c.thin = 4;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(CredibleInterval, OrderStatistics) {
  std::vector<double> s(100);
  std::iota(s.begin(), s.end(), 1.0);
  const auto iv = credible_interval(s, 0.95);
  EXPECT_NEAR(iv.lo, 3.475, 1e-12);
  EXPECT_NEAR(iv.hi, 97.525, 1e-12);
  const auto c = credible_interval(std::vector<double>(10, 2.5));
  EXPECT_EQ(c.lo, 2.5);
  EXPECT_EQ(c.hi, 2.5);
  EXPECT_TRUE(c.degenerate);
  EXPECT_THROW(credible_interval({1.0}), DataError);
}

TEST(CredibleInterval, SymmetricSample) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  std::vector<double> s;
  for (int i = 0; i < 5000; ++i) {
    const double v = z(rng);
    s.push_back(v);
    s.push_back(-v);
  }
  const auto iv = credible_interval(s);
  EXPECT_NEAR(iv.lo, -iv.hi, 1e-12);
  EXPECT_NEAR(iv.hi, 1.96, 0.1);
}

TEST(RateSummaries, SingleCell) {
  const PanelData d(1, 1, {0}, {{1.0}}, {"intercept"});
  ParamSet p;
  p.beta = {std::log(4.0)};
  p.log_alpha = std::log(0.25);
  const auto r = rate_summaries({Family::NegativeBinomial, Structure::Standard, {}}, p, d);
  EXPECT_NEAR(r.mean_rate, 4.0, 1e-12);
  EXPECT_NEAR(r.mean_sd, std::sqrt(8.0), 1e-12);
  const auto q = rate_summaries({Family::Poisson, Structure::Standard, {}}, p, d);
  EXPECT_NEAR(q.mean_sd, 2.0, 1e-12);
}

TEST(Categories, FourWayTaxonomy) {
  const PanelData d(4, 3, {1, 2, 3, 0, 0, 0, 0, 0, 0, 0, 4, 0}, std::vector<std::vector<double>>(12, {1.0}),
                    {"intercept"});
  const std::vector<double> series{1, 1, 1, 0.05, 0.1, 0.15, 0.5, 0.45, 0.52, 0.3, 1.0, 0.1};
  const auto c = categorize_segments(d, series);
  EXPECT_EQ(c, (std::vector<std::string>{"always-count", "likely-zero", "undetermined", "mixed"}));
}

TEST(UnitHistogram, Bins) {
  const std::vector<double> v{0.0, 0.05, 0.1, 0.55, 0.99, 1.0};
  const auto h = unit_histogram(v, 10);
  EXPECT_EQ(h[0], 2u);
  EXPECT_EQ(h[1], 1u);
  EXPECT_EQ(h[5], 1u);
  EXPECT_EQ(h[9], 2u);
}

TEST(MleReport, ContentsAndJson) {
  const ModelSpec spec{Family::NegativeBinomial, Structure::ZeroInflatedTau, {}};
  ParamSet truth;
  truth.beta = {0.8, 0.3};
  truth.log_alpha = std::log(0.3);
  truth.tau = -1.0;
  const auto sim = simulate_panel(spec, truth, standard_normal_covariates(), 100, 5, 2);
  const auto fit = fit_mle(spec, sim.data);
  ReportOptions o;
  o.gof_replications = 99;
  const auto r = build_mle_report(sim.data, fit, o);
  EXPECT_EQ(r.interval_label, "confidence (MLE, symmetric)");
  ASSERT_TRUE(r.gof);
  bool saw_alpha = false;
  for (const auto& p : r.parameters) {
    EXPECT_LE(p.lo, p.estimate);
    EXPECT_GE(p.hi, p.estimate);
    if (p.name == "alpha") {
      saw_alpha = true;
      EXPECT_NEAR(p.estimate, fit.estimates.alpha(), 1e-12);
    }
  }
  EXPECT_TRUE(saw_alpha);
  const Json j = to_json(r);
  EXPECT_EQ(j.at("schema").get<int>(), 1);
  EXPECT_EQ(j.at("model").get<std::string>(), "zinb-tau");
  EXPECT_NEAR(j.at("aic").get<double>(), fit.aic, 1e-12);
  EXPECT_TRUE(spec_from_json(j) == spec);
  const ParamSet back = point_from_json(j.at("point"));
  EXPECT_EQ(back.beta, fit.estimates.beta);
  EXPECT_EQ(back.tau, fit.estimates.tau);
  EXPECT_FALSE(j.contains("state_series"));
}

TEST(McmcReport, SwitchingContents) {
  ParamSet truth;
  truth.beta = {0.5, 0.3};
  truth.log_alpha = std::log(0.15);
  truth.transitions.assign(25, {0.4, 0.3});
  const auto sim = simulate_panel(kMsnb, truth, standard_normal_covariates(), 25, 5, 6);
  const auto cfg = small_config();
  const auto draws = sample_posterior(kMsnb, sim.data, {}, cfg);
  ReportOptions o;
  o.gof_replications = 49;
  o.bootstrap = 100;
  const auto r = build_mcmc_report(sim.data, draws, {}, cfg, o);
  EXPECT_EQ(r.interval_label, "credible (quantile, possibly asymmetric)");
  ASSERT_TRUE(r.evidence && r.convergence);
  EXPECT_EQ(r.converged, r.convergence->converged);
  EXPECT_EQ(r.state_series.size(), sim.data.n_cells());
  for (std::size_t i = 0; i < r.state_series.size(); ++i) {
    EXPECT_GE(r.state_series[i], 0.0);
    EXPECT_LE(r.state_series[i], 1.0);
    if (sim.data.count_at(i) > 0) { EXPECT_EQ(r.state_series[i], 1.0); }
  }
  ASSERT_EQ(r.long_run_means.size(), 25u);
  for (double m : r.long_run_means) EXPECT_GT(m, 0.0);
  for (const auto& p : r.parameters) {
    EXPECT_LE(p.lo, p.hi);
  }
  // equal-tail intervals and posterior means of the same draws
  for (std::size_t j = 0; j < draws.n_params(); ++j) {
    const auto col = draws.column(j);
    const auto iv = credible_interval(col);
    EXPECT_LE(iv.lo, iv.hi);
  }
  const Json j = to_json(r);
  EXPECT_EQ(j.at("state_series").size(), 25u);
  EXPECT_EQ(j.at("state_series").at(0).size(), 5u);
  EXPECT_EQ(j.at("segment_categories").size(), 25u);
  EXPECT_EQ(j.at("metadata").at("dic_states").get<std::string>(), "integrated (forward likelihood)");
  EXPECT_EQ(point_from_json(j.at("point")).transitions.size(), 25u);
  for (std::size_t n = 0; n < 25; ++n) {
    const auto seg = sim.data.segment_counts(n);
    if (std::all_of(seg.begin(), seg.end(), [](auto a) { return a > 0; })) {
      EXPECT_EQ(r.segment_categories[n], "always-count");
    }
  }
}
