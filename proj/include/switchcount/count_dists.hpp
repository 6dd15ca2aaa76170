#pragma once

// Elementary count distributions and the log-link rate.
//
// Everything here works in log space. The negative binomial is parametrized
// by its mean lambda and over-dispersion alpha, so that the variance is
// lambda * (1 + alpha * lambda) and alpha -> 0 recovers the Poisson.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "switchcount/errors.hpp"

namespace switchcount {

enum class Family { NegativeBinomial, Poisson };

namespace detail {

inline void check_count(std::int64_t a) {
  if (a < 0) throw CountDomainError("count must be non-negative, got " + std::to_string(a));
}

inline void check_rate(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ParamDomainError("rate must be positive and finite");
}

// sum_{j<a} log(1 + alpha*j) - log(a!), the alpha-dependent normalizer of the
// NB pmf once Gamma(a + 1/alpha) / Gamma(1/alpha) is expanded as a product.
// The product form stays accurate as alpha -> 0 where the lgamma difference
// cancels catastrophically.
inline double nb_count_term(std::int64_t a, double alpha) {
  if (a == 0) return 0.0;
  if (a <= 512) {
    double s = 0.0;
    for (std::int64_t j = 1; j < a; ++j) s += std::log1p(alpha * static_cast<double>(j));
    return s - std::lgamma(static_cast<double>(a) + 1.0);
  }
  const double r = 1.0 / alpha;
  const double ad = static_cast<double>(a);
  return ad * std::log(alpha) + std::lgamma(ad + r) - std::lgamma(r) - std::lgamma(ad + 1.0);
}

// log NB(a) given the precomputed count term and log(lambda).
inline double nb_log_pmf_fast(std::int64_t a, double count_term, double log_lambda,
                              double alpha) {
  const double lambda = std::exp(log_lambda);
  const double ad = static_cast<double>(a);
  return count_term + ad * log_lambda - (ad + 1.0 / alpha) * std::log1p(alpha * lambda);
}

inline double poisson_log_pmf_fast(std::int64_t a, double log_factorial, double log_lambda) {
  return static_cast<double>(a) * log_lambda - std::exp(log_lambda) - log_factorial;
}

}  // namespace detail

/// log NB(a; lambda, alpha). Requires alpha > 0; use poisson_log_pmf for alpha = 0.
inline double nb_log_pmf(std::int64_t a, double lambda, double alpha) {
  detail::check_count(a);
  detail::check_rate(lambda);
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ParamDomainError("over-dispersion must be positive and finite");
  return detail::nb_log_pmf_fast(a, detail::nb_count_term(a, alpha), std::log(lambda), alpha);
}

/// log(lambda^a e^{-lambda} / a!).
inline double poisson_log_pmf(std::int64_t a, double lambda) {
  detail::check_count(a);
  detail::check_rate(lambda);
  return detail::poisson_log_pmf_fast(a, std::lgamma(static_cast<double>(a) + 1.0),
                                      std::log(lambda));
}

/// Family dispatch. alpha is ignored for the Poisson family.
inline double count_log_pmf(Family family, std::int64_t a, double lambda, double alpha) {
  return family == Family::Poisson ? poisson_log_pmf(a, lambda) : nb_log_pmf(a, lambda, alpha);
}

/// Point mass at zero: the count distribution of the zero state.
constexpr double zero_mass(std::int64_t a) noexcept { return a == 0 ? 1.0 : 0.0; }

/// Inner product beta'x, the linear predictor of the log link.
inline double linear_predictor(std::span<const double> beta, std::span<const double> x) {
  if (beta.size() != x.size())
    throw SchemaError("coefficient and covariate dimensions differ (" +
                      std::to_string(beta.size()) + " vs " + std::to_string(x.size()) + ")");
  double eta = 0.0;
  for (std::size_t k = 0; k < beta.size(); ++k) eta += beta[k] * x[k];
  return eta;
}

/// lambda = exp(beta'x).
inline double rate(std::span<const double> beta, std::span<const double> x) {
  return std::exp(linear_predictor(beta, x));
}

/// Variance of the count distribution with mean lambda.
inline double count_variance(Family family, double lambda, double alpha) noexcept {
  return family == Family::Poisson ? lambda : lambda * (1.0 + alpha * lambda);
}

/// log(1 / (1 + e^{-z})), stable for both signs of z.
inline double log_sigmoid(double z) noexcept {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

inline double sigmoid(double z) noexcept {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

/// log(e^a + e^b) without overflow. Handles -inf arguments.
inline double log_add_exp(double a, double b) noexcept {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace switchcount
