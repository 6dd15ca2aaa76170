#pragma once

// Posterior and MLE summaries assembled into a versioned JSON fit report,
// plus the per-segment extracts behind state-probability plots.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "switchcount/diagnostics.hpp"
#include "switchcount/evidence.hpp"
#include "switchcount/gof.hpp"
#include "switchcount/mcmc.hpp"
#include "switchcount/mle.hpp"
#include "switchcount/model.hpp"

namespace switchcount {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchema = 1;
inline constexpr const char* kCredibleLabel = "credible (quantile, possibly asymmetric)";
inline constexpr const char* kConfidenceLabel = "confidence (MLE, symmetric)";

/// Linear-interpolation quantile (h = (n - 1) q) of sorted values.
inline double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Equal-tail interval: a/2 posterior mass below and above, a = 1 - level.
inline Interval credible_interval(std::vector<double> samples, double level = 0.95) {
  if (samples.size() < 2) throw DataError("credible interval needs at least two samples");
  if (!(level > 0.0 && level < 1.0)) throw ParamDomainError("level must be in (0,1)");
  std::sort(samples.begin(), samples.end());
  const double a = 1.0 - level;
  Interval iv{sorted_quantile(samples, a / 2.0), sorted_quantile(samples, 1.0 - a / 2.0), false};
  iv.degenerate = iv.lo == iv.hi;
  return iv;
}

struct RateSummary {
  double mean_rate = 0.0;  // lambda averaged over all cells
  double mean_sd = 0.0;    // sqrt(lambda (1 + alpha lambda)) averaged over all cells
};

inline RateSummary rate_summaries(const ModelSpec& spec, const ParamSet& point, const PanelData& data) {
  RateSummary r;
  const double alpha = spec.has_dispersion() ? point.alpha() : 0.0;
  for (std::size_t i = 0; i < data.n_cells(); ++i) {
    const double lambda = rate(point.beta, data.x_at(i));
    r.mean_rate += lambda;
    r.mean_sd += std::sqrt(lambda * (1.0 + alpha * lambda));
  }
  r.mean_rate /= static_cast<double>(data.n_cells());
  r.mean_sd /= static_cast<double>(data.n_cells());
  return r;
}

/// Posterior-mean parameters applied per cell, then averaged.
inline RateSummary rate_summaries(const ChainDraws& draws, const PanelData& data) {
  if (draws.total_retained() == 0) throw DataError("no retained draws");
  const auto mean = draws.posterior_mean();
  return rate_summaries(draws.spec, draws.params_from_row(mean, data.n_vars()), data);
}

/// Segment taxonomy from state probabilities:
///  always-count  every period has a positive count (probabilities identically 1);
///  likely-zero   max_t P(s = 1 | Y) < 0.2;
///  undetermined  every period has 0.2 <= P < 1;
///  mixed         anything else.
inline std::vector<std::string> categorize_segments(const PanelData& data,
                                                    std::span<const double> state_series) {
  std::vector<std::string> out;
  const std::size_t T = data.n_periods();
  for (std::size_t n = 0; n < data.n_segments(); ++n) {
    const auto counts = data.segment_counts(n);
    const auto probs = state_series.subspan(n * T, T);
    const bool all_positive = std::all_of(counts.begin(), counts.end(), [](auto a) { return a > 0; });
    const double pmax = *std::max_element(probs.begin(), probs.end());
    const bool all_mid = std::all_of(probs.begin(), probs.end(), [](double p) { return p >= 0.2 && p < 1.0; });
    if (all_positive)
      out.emplace_back("always-count");
    else if (pmax < 0.2)
      out.emplace_back("likely-zero");
    else if (all_mid)
      out.emplace_back("undetermined");
    else
      out.emplace_back("mixed");
  }
  return out;
}

struct ParameterSummary {
  std::string name;
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::optional<double> std_error;
  std::optional<bool> significant;  // 5% two-tailed test (MLE only)
};

struct ReportOptions {
  std::size_t gof_replications = 10000;
  std::uint64_t seed = 1;
  double psrf_threshold = 1.1;
  std::size_t bootstrap = 1000;
};

struct FitReport {
  ModelSpec spec;
  std::string method;  // "mle" or "mcmc"
  Json config;
  std::string interval_label;
  std::vector<std::string> variables;
  std::vector<ParameterSummary> parameters;
  ParamSet point;
  std::optional<EvidenceReport> evidence;
  std::optional<double> max_loglik;  // MLE
  std::optional<double> aic;         // MLE
  bool converged = true;
  std::optional<GofResult> gof;
  std::optional<ConvergenceReport> convergence;
  RateSummary rates;
  std::vector<std::string> segment_ids;
  std::vector<std::string> period_ids;
  std::vector<double> state_series;             // segment-major, switching models
  std::vector<double> stationary_expectations;  // E[pbar1 | Y]
  std::vector<double> long_run_means;           // E[pbar1 | Y] * time-averaged lambda
  std::vector<std::string> segment_categories;
  std::vector<std::string> warnings;
};

inline Json to_json(const PriorConfig& p) {
  return Json{{"beta_sd", p.beta_sd},
              {"log_alpha_lo", p.log_alpha_lo},
              {"log_alpha_hi", p.log_alpha_hi},
              {"coef_sd", p.coef_sd},
              {"transition_a0", p.transition.a0},
              {"transition_b0", p.transition.b0}};
}

inline Json to_json(const McmcConfig& c) {
  return Json{{"n_chains", c.n_chains},
              {"n_draws", c.n_draws},
              {"n_burnin", c.n_burnin},
              {"thin", c.thin},
              {"seed", c.seed},
              {"adapt_window", c.adapt_window},
              {"target_accept", c.target_accept},
              {"store_states", c.store_states == StoreStates::Full ? "full" : "freq"}};
}

inline void from_json(const Json& j, PriorConfig& p) {
  p.beta_sd = j.value("beta_sd", p.beta_sd);
  p.log_alpha_lo = j.value("log_alpha_lo", p.log_alpha_lo);
  p.log_alpha_hi = j.value("log_alpha_hi", p.log_alpha_hi);
  p.coef_sd = j.value("coef_sd", p.coef_sd);
  p.transition.a0 = j.value("transition_a0", p.transition.a0);
  p.transition.b0 = j.value("transition_b0", p.transition.b0);
}

inline void from_json(const Json& j, McmcConfig& c) {
  c.n_chains = j.value("n_chains", c.n_chains);
  c.n_draws = j.value("n_draws", c.n_draws);
  c.n_burnin = j.value("n_burnin", c.n_burnin);
  c.thin = j.value("thin", c.thin);
  c.seed = j.value("seed", c.seed);
  c.adapt_window = j.value("adapt_window", c.adapt_window);
  c.target_accept = j.value("target_accept", c.target_accept);
  if (j.contains("store_states"))
    c.store_states = j.at("store_states").get<std::string>() == "full" ? StoreStates::Full : StoreStates::Frequency;
}

inline Json point_to_json(const ModelSpec& spec, const ParamSet& p) {
  Json j{{"beta", p.beta}};
  if (spec.has_dispersion()) j["log_alpha"] = p.log_alpha;
  if (spec.structure == Structure::ZeroInflatedTau) j["tau"] = p.tau;
  if (spec.structure == Structure::ZeroInflatedGamma) j["gamma"] = p.gamma;
  if (spec.switching()) {
    Json tr = Json::array();
    for (const auto& tp : p.transitions) tr.push_back({tp.p01, tp.p10});
    j["transitions"] = tr;
  }
  return j;
}

inline ParamSet point_from_json(const Json& j) {
  ParamSet p;
  p.beta = j.at("beta").get<std::vector<double>>();
  p.log_alpha = j.value("log_alpha", 0.0);
  p.tau = j.value("tau", 0.0);
  if (j.contains("gamma")) p.gamma = j.at("gamma").get<std::vector<double>>();
  if (j.contains("transitions"))
    for (const auto& tp : j.at("transitions")) p.transitions.push_back({tp.at(0).get<double>(), tp.at(1).get<double>()});
  return p;
}

inline ModelSpec spec_from_json(const Json& report) {
  ModelSpec s = parse_model_name(report.at("model").get<std::string>());
  if (report.contains("gamma_columns")) s.gamma_columns = report.at("gamma_columns").get<std::vector<std::size_t>>();
  return s;
}

inline Json to_json(const GofResult& g) {
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < g.cells.n_cells(); ++c) labels.push_back(g.cells.label(c));
  return Json{{"statistic", "pearson chi-square over pooled count categories, expected >= 5"},
              {"chi2_observed", g.chi2_observed},
              {"p_value", g.p_value},
              {"n_replications", g.n_replications},
              {"cells", labels},
              {"cell_edges", g.cells.lower},
              {"expected_cell_counts", g.cells.expected},
              {"observed_cell_counts", g.observed}};
}

inline Json to_json(const EvidenceReport& e) {
  return Json{{"log_ml", e.log_ml},
              {"log_ml_ci", {e.log_ml_ci.first, e.log_ml_ci.second}},
              {"dic", e.dic},
              {"posterior_mean_loglik", e.posterior_mean_loglik},
              {"max_observed_loglik", e.max_observed_loglik},
              {"unstable_log_ml", e.unstable}};
}

inline Json to_json(const ConvergenceReport& c) {
  Json per = Json::object();
  for (std::size_t i = 0; i < c.names.size(); ++i) per[c.names[i]] = c.psrf[i];
  return Json{{"n_chains", c.n_chains},
              {"n_draws_per_chain", c.n_draws_per_chain},
              {"max_psrf", c.max_psrf},
              {"mpsrf", c.mpsrf},
              {"mpsrf_regularized", c.mpsrf_regularized},
              {"threshold", c.threshold},
              {"converged", c.converged},
              {"psrf", per}};
}

inline Json to_json(const FitReport& r) {
  Json j;
  j["schema"] = kReportSchema;
  j["model"] = model_name(r.spec);
  if (!r.spec.gamma_columns.empty()) j["gamma_columns"] = r.spec.gamma_columns;
  j["method"] = r.method;
  j["config"] = r.config;
  j["variables"] = r.variables;
  j["interval"] = r.interval_label;
  Json params = Json::array();
  for (const auto& p : r.parameters) {
    Json e{{"name", p.name}, {"estimate", p.estimate}, {"lo", p.lo}, {"hi", p.hi}};
    if (p.std_error) e["std_error"] = *p.std_error;
    if (p.significant) e["significant_5pct"] = *p.significant;
    params.push_back(e);
  }
  j["parameters"] = params;
  j["point"] = point_to_json(r.spec, r.point);
  j["converged"] = r.converged;
  if (r.max_loglik) j["max_loglik"] = *r.max_loglik;
  if (r.aic) j["aic"] = *r.aic;
  if (r.evidence) j["evidence"] = to_json(*r.evidence);
  if (r.gof) j["gof"] = to_json(*r.gof);
  if (r.convergence) j["convergence"] = to_json(*r.convergence);
  j["mean_rate"] = r.rates.mean_rate;
  j["mean_rate_sd"] = r.rates.mean_sd;
  j["segment_ids"] = r.segment_ids;
  j["period_ids"] = r.period_ids;
  if (r.spec.switching()) {
    const std::size_t T = r.period_ids.size();
    Json series = Json::array();
    for (std::size_t n = 0; n < r.segment_ids.size(); ++n)
      series.push_back(std::vector<double>(r.state_series.begin() + static_cast<std::ptrdiff_t>(n * T),
                                           r.state_series.begin() + static_cast<std::ptrdiff_t>((n + 1) * T)));
    j["state_series"] = series;
    j["stationary_expectations"] = r.stationary_expectations;
    j["long_run_means"] = r.long_run_means;
    j["segment_categories"] = r.segment_categories;
  }
  j["metadata"] = {{"dic_states", r.spec.switching() ? "integrated (forward likelihood)" : "not applicable"},
                   {"gof_parameters", r.method == "mle" ? "maximum likelihood point" : "posterior means"}};
  j["warnings"] = r.warnings;
  return j;
}

namespace detail {

inline void attach_gof(FitReport& r, const PanelData& data, const ReportOptions& opts) {
  if (opts.gof_replications == 0) return;
  try {
    r.gof = gof_pvalue(data, r.spec, r.point, opts.gof_replications, opts.seed);
  } catch (const DegenerateCellsError& e) {
    r.warnings.push_back(std::string("goodness of fit skipped: ") + e.what());
  }
}

}  // namespace detail

inline FitReport build_mle_report(const PanelData& data, const MleResult& fit, const ReportOptions& opts = {}) {
  FitReport r;
  r.spec = fit.spec;
  r.method = "mle";
  r.interval_label = kConfidenceLabel;
  r.variables = data.variable_names();
  r.segment_ids = data.segment_ids();
  r.period_ids = data.period_ids();
  r.point = fit.estimates;
  r.max_loglik = fit.max_loglik;
  r.aic = fit.aic;
  r.converged = fit.converged;
  r.config = Json{{"n_free", fit.n_free}, {"iterations", fit.iterations}, {"evaluations", fit.evaluations},
                  {"hessian_ok", fit.hessian_ok}, {"seed", opts.seed}};
  std::optional<std::vector<Interval>> ci;
  std::optional<std::vector<bool>> sig;
  if (fit.std_errors) {
    ci = confidence_interval(fit);
    sig = t_test(fit);
  } else {
    r.warnings.emplace_back("Hessian not negative definite: standard errors unavailable");
  }
  for (std::size_t i = 0; i < fit.values.size(); ++i) {
    ParameterSummary s{fit.names[i], fit.values[i], fit.values[i], fit.values[i], std::nullopt, std::nullopt};
    if (ci) {
      s.lo = (*ci)[i].lo;
      s.hi = (*ci)[i].hi;
      s.std_error = (*fit.std_errors)[i];
      s.significant = (*sig)[i];
      if ((*ci)[i].degenerate) r.warnings.push_back("zero-width interval for " + fit.names[i]);
    }
    r.parameters.push_back(s);
    if (fit.names[i] == "log_alpha") {
      // delta method for alpha = exp(log alpha)
      ParameterSummary a{"alpha", std::exp(s.estimate), std::exp(s.estimate), std::exp(s.estimate),
                         std::nullopt, std::nullopt};
      if (s.std_error) {
        a.std_error = a.estimate * *s.std_error;
        const double z = normal_critical(0.05);
        a.lo = a.estimate - z * *a.std_error;
        a.hi = a.estimate + z * *a.std_error;
      }
      r.parameters.push_back(a);
    }
  }
  r.rates = rate_summaries(r.spec, r.point, data);
  if (!fit.converged) r.warnings.emplace_back("optimizer did not meet its convergence tolerances");
  detail::attach_gof(r, data, opts);
  return r;
}

inline FitReport build_mcmc_report(const PanelData& data, const ChainDraws& draws, const PriorConfig& priors,
                                   const McmcConfig& cfg, const ReportOptions& opts = {}) {
  FitReport r;
  r.spec = draws.spec;
  r.method = "mcmc";
  r.interval_label = kCredibleLabel;
  r.variables = data.variable_names();
  r.segment_ids = data.segment_ids();
  r.period_ids = data.period_ids();
  r.config = Json{{"priors", to_json(priors)}, {"mcmc", to_json(cfg)}};

  const auto mean = draws.posterior_mean();
  r.point = draws.params_from_row(mean, data.n_vars());
  for (std::size_t j = 0; j < draws.n_continuous; ++j) {
    const auto col = draws.column(j);
    const Interval iv = credible_interval(col);
    r.parameters.push_back({draws.param_names[j], mean[j], iv.lo, iv.hi, std::nullopt, std::nullopt});
    if (draws.param_names[j] == "log_alpha") {
      std::vector<double> alpha(col.size());
      double s = 0.0;
      for (std::size_t d = 0; d < col.size(); ++d) s += (alpha[d] = std::exp(col[d]));
      const Interval ia = credible_interval(alpha);
      r.parameters.push_back({"alpha", s / static_cast<double>(alpha.size()), ia.lo, ia.hi, std::nullopt, std::nullopt});
    }
  }

  for (std::size_t j = draws.n_continuous; j < draws.n_params(); ++j) {
    const Interval iv = credible_interval(draws.column(j));
    r.parameters.push_back({draws.param_names[j], mean[j], iv.lo, iv.hi, std::nullopt, std::nullopt});
  }

  const auto ll = draws.all_loglik();
  r.evidence = evidence_report(ll, loglik_integrated(r.spec, r.point, data), opts.bootstrap, opts.seed);
  if (r.evidence->unstable) r.warnings.emplace_back("harmonic-mean log marginal likelihood unstable: bootstrap 95% interval wider than 2 nats");
  r.convergence = convergence_report(draws, opts.psrf_threshold);
  r.converged = r.convergence->converged;
  if (!r.converged) r.warnings.emplace_back("chains not converged: PSRF or MPSRF above threshold");
  r.rates = rate_summaries(r.spec, r.point, data);

  if (r.spec.switching()) {
    r.state_series = state_posterior(draws);
    r.stationary_expectations = stationary_expectations(draws);
    const std::size_t T = data.n_periods();
    for (std::size_t n = 0; n < data.n_segments(); ++n) {
      double lam = 0.0;
      for (std::size_t t = 0; t < T; ++t) lam += rate(r.point.beta, data.x(t, n));
      r.long_run_means.push_back(r.stationary_expectations[n] * lam / static_cast<double>(T));
    }
    r.segment_categories = categorize_segments(data, r.state_series);
  }
  detail::attach_gof(r, data, opts);
  return r;
}

/// Histogram of values in [0,1] over equal-width bins; the last bin is closed.
inline std::vector<std::size_t> unit_histogram(std::span<const double> values, std::size_t bins = 10) {
  std::vector<std::size_t> h(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>(std::floor(std::clamp(v, 0.0, 1.0) * static_cast<double>(bins)));
    ++h[std::min(b, bins - 1)];
  }
  return h;
}

}  // namespace switchcount
