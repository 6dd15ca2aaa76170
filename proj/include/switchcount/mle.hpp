#pragma once

// Maximum-likelihood fits of the non-switching models with Wald inference.

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "switchcount/model.hpp"
#include "switchcount/optimize.hpp"
#include "switchcount/rng.hpp"

namespace switchcount {

struct MleOptions {
  optim::Options optim;
  std::size_t multistart = 1;  // extra starts are jittered copies of the first
  std::uint64_t seed = 1;
};

struct MleResult {
  ModelSpec spec;
  ParamSet estimates;
  std::vector<std::string> names;             // continuous parameters, packing order
  std::vector<double> values;                 // packed estimates
  std::optional<std::vector<double>> std_errors;
  double max_loglik = 0.0;
  double init_loglik = 0.0;
  double aic = 0.0;
  std::size_t n_free = 0;
  bool converged = false;
  bool hessian_ok = false;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  double grad_inf_norm = 0.0;
};

/// AIC = 2K - 2LL.
constexpr double aic(std::size_t n_free, double loglik) noexcept {
  return 2.0 * static_cast<double>(n_free) - 2.0 * loglik;
}

/// Two-tailed standard-normal critical value, e.g. 1.959964 for level 0.05.
inline double normal_critical(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ParamDomainError("significance level must be in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - level / 2.0);
}

/// Intercept at log of the mean count, slopes at zero, log alpha = log 0.5,
/// tau = -1, gamma = 0.
inline ParamSet default_init(const ModelSpec& spec, const PanelData& data) {
  ParamSet p;
  double mean = 0.0;
  for (auto a : data.counts()) mean += static_cast<double>(a);
  mean /= static_cast<double>(data.n_cells());
  p.beta.assign(data.n_vars(), 0.0);
  p.beta[0] = std::log(std::max(mean, 0.05));
  p.log_alpha = std::log(0.5);
  p.tau = -1.0;
  if (spec.structure == Structure::ZeroInflatedGamma)
    p.gamma.assign(gamma_columns(spec, data.n_vars()).size(), 0.0);
  return p;
}

/// Typical magnitude per continuous parameter: 1 / rms of the covariate for
/// coefficients (capped at 1), 1 for log alpha and tau.
inline std::vector<double> typical_scales(const ModelSpec& spec, const PanelData& data) {
  auto coef_scale = [&data](std::size_t k) {
    double ss = 0.0;
    for (std::size_t i = 0; i < data.n_cells(); ++i) ss += data.x_at(i)[k] * data.x_at(i)[k];
    const double rms = std::sqrt(ss / static_cast<double>(data.n_cells()));
    return rms > 1.0 ? 1.0 / rms : 1.0;
  };
  std::vector<double> typ;
  for (std::size_t k = 0; k < data.n_vars(); ++k) typ.push_back(coef_scale(k));
  if (spec.has_dispersion()) typ.push_back(1.0);
  if (spec.structure == Structure::ZeroInflatedTau) typ.push_back(1.0);
  if (spec.structure == Structure::ZeroInflatedGamma)
    for (auto c : gamma_columns(spec, data.n_vars())) typ.push_back(coef_scale(c));
  return typ;
}

inline MleResult fit_mle(const ModelSpec& spec, const PanelData& data,
                         std::optional<ParamSet> init = std::nullopt, const MleOptions& opts = {}) {
  if (spec.switching())
    throw SpecError("maximum likelihood is not supported for Markov switching models; use MCMC");
  ParamSet start = init ? *init : default_init(spec, data);
  if (spec.structure == Structure::ZeroInflatedGamma && start.gamma.empty())
    start.gamma.assign(gamma_columns(spec, data.n_vars()).size(), 0.0);
  validate_params(spec, start, data, false);

  MleResult res;
  res.spec = spec;
  res.names = continuous_names(spec, data.variable_names());
  res.n_free = res.names.size();
  const std::size_t K = data.n_vars();

  auto loglik_at = [&](std::span<const double> v) {
    ParamSet p = start;
    unpack_continuous(spec, v, K, p);
    try {
      return loglik_integrated(spec, p, data);
    } catch (const ParamDomainError&) {  // overflowing rates
      return -std::numeric_limits<double>::infinity();
    }
  };
  const optim::Objective negll = [&](std::span<const double> v) { return -loglik_at(v); };

  const std::vector<double> x0 = pack_continuous(spec, start);
  res.init_loglik = loglik_at(x0);
  if (!std::isfinite(res.init_loglik)) throw InitError("log-likelihood is not finite at the starting point");
  const std::vector<double> typ = typical_scales(spec, data);

  optim::Result best;
  Rng rng = make_rng(opts.seed, {0x6d6c65});
  for (std::size_t s = 0; s < std::max<std::size_t>(1, opts.multistart); ++s) {
    std::vector<double> xs = x0;
    if (s > 0)
      for (std::size_t i = 0; i < xs.size(); ++i) xs[i] += 0.5 * typ[i] * standard_normal(rng);
    if (!std::isfinite(negll(xs))) continue;
    optim::Result r = optim::minimize(negll, xs, typ, opts.optim);
    res.evaluations += r.evaluations;
    res.iterations += r.iterations;
    if (s == 0 || r.fx < best.fx) best = std::move(r);
  }
  // keep the starting point if the optimizer somehow did worse
  if (!(best.fx <= -res.init_loglik)) {
    best.x = x0;
    best.fx = -res.init_loglik;
    best.converged = false;
  }

  res.values = best.x;
  res.max_loglik = -best.fx;
  res.aic = aic(res.n_free, res.max_loglik);
  res.converged = best.converged;
  res.grad_inf_norm = best.grad_inf_norm;
  res.estimates = start;
  unpack_continuous(spec, res.values, K, res.estimates);

  // Observed information from the finite-difference Hessian of -LL.
  const std::size_t p = res.values.size();
  const std::vector<double> H = optim::fd_hessian(negll, res.values, typ);
  Eigen::MatrixXd info(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) info(i, j) = H[i * p + j];
  bool ok = info.allFinite() && (info.diagonal().array() > 0.0).all();
  if (ok) {
    // judge definiteness on the unit-diagonal rescaling so parameter units do not matter
    const Eigen::VectorXd d = info.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd scaled = d.asDiagonal() * info * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
    ok = eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 1e-7;
    if (ok) {
      const Eigen::MatrixXd cov = d.asDiagonal() * scaled.inverse() * d.asDiagonal();
      std::vector<double> se(p);
      for (std::size_t i = 0; i < p; ++i) se[i] = std::sqrt(cov(i, i));
      ok = std::all_of(se.begin(), se.end(), [](double v) { return std::isfinite(v) && v > 0.0; });
      if (ok) res.std_errors = std::move(se);
    }
  }
  res.hessian_ok = ok;
  return res;
}

/// Per-parameter significance: |estimate / se| above the two-tailed normal critical value.
inline std::vector<bool> t_test(const MleResult& r, double level = 0.05) {
  if (!r.std_errors) throw DiagnosticsUnavailable("standard errors unavailable (singular Hessian)");
  const double z = normal_critical(level);
  std::vector<bool> sig(r.values.size());
  for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = std::abs(r.values[i] / (*r.std_errors)[i]) > z;
  return sig;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = false;  // zero width
};

/// estimate +- z * se, symmetric.
inline std::vector<Interval> confidence_interval(std::span<const double> estimates,
                                                 std::span<const double> std_errors,
                                                 double level = 0.95) {
  if (estimates.size() != std_errors.size()) throw SchemaError("estimate and se lengths differ");
  const double z = normal_critical(1.0 - level);
  std::vector<Interval> out;
  for (std::size_t i = 0; i < estimates.size(); ++i)
    out.push_back({estimates[i] - z * std_errors[i], estimates[i] + z * std_errors[i],
                   std_errors[i] == 0.0});
  return out;
}

inline std::vector<Interval> confidence_interval(const MleResult& r, double level = 0.95) {
  if (!r.std_errors) throw DiagnosticsUnavailable("standard errors unavailable (singular Hessian)");
  return confidence_interval(r.values, *r.std_errors, level);
}

}  // namespace switchcount
