#pragma once

// Model comparison: harmonic-mean marginal likelihood, Bayes factors,
// bootstrap intervals for the log marginal likelihood, and DIC.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "switchcount/errors.hpp"
#include "switchcount/rng.hpp"

namespace switchcount {

/// log f(Y|M) from posterior log-likelihood draws via
/// 1/f(Y|M) = E[1/f(Y|Theta) | Y], i.e. -log(mean(exp(-ll))) with max-shift.
inline double log_marginal_harmonic(std::span<const double> loglik_draws) {
  if (loglik_draws.empty()) throw DataError("no log-likelihood draws");
  double shift = -INFINITY;
  for (double v : loglik_draws) {
    if (!std::isfinite(v)) throw DataError("non-finite log-likelihood draw");
    shift = std::max(shift, -v);
  }
  double s = 0.0;
  for (double v : loglik_draws) s += std::exp(-v - shift);
  return -(shift + std::log(s / static_cast<double>(loglik_draws.size())));
}

/// log Bayes factor of model 2 over model 1 under equal prior odds.
constexpr double bayes_log_factor(double log_ml_2, double log_ml_1) noexcept {
  return log_ml_2 - log_ml_1;
}

/// Percentile bootstrap interval of the harmonic-mean estimate.
inline std::pair<double, double> bootstrap_log_ml_ci(std::span<const double> loglik_draws,
                                                     std::size_t n_boot = 1000, double level = 0.95,
                                                     std::uint64_t seed = 1) {
  if (loglik_draws.empty()) throw DataError("no log-likelihood draws");
  if (n_boot == 0) throw DataError("bootstrap needs at least one resample");
  Rng rng = make_rng(seed, {0x626f6f74});
  std::uniform_int_distribution<std::size_t> pick(0, loglik_draws.size() - 1);
  std::vector<double> sample(loglik_draws.size());
  std::vector<double> stats(n_boot);
  for (std::size_t b = 0; b < n_boot; ++b) {
    for (auto& v : sample) v = loglik_draws[pick(rng)];
    stats[b] = log_marginal_harmonic(sample);
  }
  std::sort(stats.begin(), stats.end());
  auto quantile = [&stats](double q) {
    const double h = q * static_cast<double>(stats.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, stats.size() - 1);
    return stats[lo] + (h - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
  };
  const double a = 1.0 - level;
  return {quantile(a / 2.0), quantile(1.0 - a / 2.0)};
}

/// DIC = 2 E[D | Y] - D(E[Theta | Y]).
inline double dic(std::span<const double> deviance_draws, double deviance_at_posterior_mean) {
  if (deviance_draws.empty()) throw DataError("no deviance draws");
  double s = 0.0;
  for (double d : deviance_draws) s += d;
  return 2.0 * s / static_cast<double>(deviance_draws.size()) - deviance_at_posterior_mean;
}

struct EvidenceReport {
  double log_ml = 0.0;
  std::pair<double, double> log_ml_ci{0.0, 0.0};
  double dic = 0.0;
  double posterior_mean_loglik = 0.0;
  double max_observed_loglik = 0.0;
  bool unstable = false;  // bootstrap interval wider than 2 nats
};

/// Evidence summary from per-draw log-likelihoods and the log-likelihood at the
/// posterior mean of the parameters.
inline EvidenceReport evidence_report(std::span<const double> loglik_draws,
                                      double loglik_at_posterior_mean, std::size_t n_boot = 1000,
                                      std::uint64_t seed = 1) {
  EvidenceReport r;
  r.log_ml = log_marginal_harmonic(loglik_draws);
  r.log_ml_ci = bootstrap_log_ml_ci(loglik_draws, n_boot, 0.95, seed);
  r.unstable = r.log_ml_ci.second - r.log_ml_ci.first > 2.0;
  double s = 0.0, mx = -INFINITY;
  std::vector<double> dev(loglik_draws.size());
  for (std::size_t i = 0; i < loglik_draws.size(); ++i) {
    s += loglik_draws[i];
    mx = std::max(mx, loglik_draws[i]);
    dev[i] = -2.0 * loglik_draws[i];
  }
  r.posterior_mean_loglik = s / static_cast<double>(loglik_draws.size());
  r.max_observed_loglik = mx;
  r.dic = dic(dev, -2.0 * loglik_at_posterior_mean);
  return r;
}

}  // namespace switchcount
