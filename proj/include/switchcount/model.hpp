#pragma once

// Likelihoods of the eight model variants: {NB, Poisson} x {standard,
// zero-inflated with tau link, zero-inflated with gamma link, Markov switching
// with a zero state}.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "switchcount/count_dists.hpp"
#include "switchcount/errors.hpp"
#include "switchcount/markov_chain.hpp"
#include "switchcount/panel_data.hpp"

namespace switchcount {

enum class Structure { Standard, ZeroInflatedTau, ZeroInflatedGamma, MarkovSwitching };

struct ModelSpec {
  Family family = Family::NegativeBinomial;
  Structure structure = Structure::Standard;
  // Covariate columns (including the intercept at 0) entering the gamma link.
  // Empty means all columns.
  std::vector<std::size_t> gamma_columns;

  bool has_dispersion() const noexcept { return family == Family::NegativeBinomial; }
  bool zero_inflated() const noexcept {
    return structure == Structure::ZeroInflatedTau || structure == Structure::ZeroInflatedGamma;
  }
  bool switching() const noexcept { return structure == Structure::MarkovSwitching; }

  bool operator==(const ModelSpec&) const = default;
};

inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"nb",       "poisson",   "zinb-tau", "zinb-gamma",
                                              "zip-tau",  "zip-gamma", "msnb",     "msp"};
  return names;
}

inline std::string model_name(const ModelSpec& spec) {
  const bool nb = spec.family == Family::NegativeBinomial;
  switch (spec.structure) {
    case Structure::Standard: return nb ? "nb" : "poisson";
    case Structure::ZeroInflatedTau: return nb ? "zinb-tau" : "zip-tau";
    case Structure::ZeroInflatedGamma: return nb ? "zinb-gamma" : "zip-gamma";
    case Structure::MarkovSwitching: return nb ? "msnb" : "msp";
  }
  return "?";
}

inline ModelSpec parse_model_name(std::string_view name) {
  for (const auto& candidate : model_names()) {
    if (candidate != name) continue;
    ModelSpec s;
    s.family = (name == "poisson" || name.starts_with("zip") || name == "msp")
                   ? Family::Poisson
                   : Family::NegativeBinomial;
    if (name.ends_with("-tau"))
      s.structure = Structure::ZeroInflatedTau;
    else if (name.ends_with("-gamma"))
      s.structure = Structure::ZeroInflatedGamma;
    else if (name.starts_with("ms"))
      s.structure = Structure::MarkovSwitching;
    return s;
  }
  std::string valid;
  for (const auto& c : model_names()) valid += (valid.empty() ? "" : ", ") + c;
  throw SpecError("unknown model '" + std::string(name) + "'; valid models: " + valid);
}

/// Parameter vector Theta. Fields not used by a spec are ignored.
struct ParamSet {
  std::vector<double> beta;
  double log_alpha = 0.0;
  double tau = 0.0;
  std::vector<double> gamma;
  std::vector<TransitionPair> transitions;  // one per segment
  std::vector<std::uint8_t> states;         // segment-major n*T + t

  double alpha() const noexcept { return std::exp(log_alpha); }

  bool operator==(const ParamSet&) const = default;
};

inline std::vector<std::size_t> gamma_columns(const ModelSpec& spec, std::size_t n_vars) {
  if (spec.gamma_columns.empty()) {
    std::vector<std::size_t> all(n_vars);
    for (std::size_t k = 0; k < n_vars; ++k) all[k] = k;
    return all;
  }
  for (auto c : spec.gamma_columns)
    if (c >= n_vars) throw SchemaError("gamma column index out of range");
  return spec.gamma_columns;
}

// --- continuous parameter layout -------------------------------------------

/// Names of the continuous parameters in packing order: beta, log_alpha, tau | gamma.
inline std::vector<std::string> continuous_names(const ModelSpec& spec,
                                                 const std::vector<std::string>& variables) {
  std::vector<std::string> names;
  for (const auto& v : variables) names.push_back("beta:" + v);
  if (spec.has_dispersion()) names.emplace_back("log_alpha");
  if (spec.structure == Structure::ZeroInflatedTau) names.emplace_back("tau");
  if (spec.structure == Structure::ZeroInflatedGamma)
    for (auto c : gamma_columns(spec, variables.size())) names.push_back("gamma:" + variables[c]);
  return names;
}

inline std::size_t n_continuous(const ModelSpec& spec, std::size_t n_vars) {
  std::size_t p = n_vars;
  if (spec.has_dispersion()) ++p;
  if (spec.structure == Structure::ZeroInflatedTau) ++p;
  if (spec.structure == Structure::ZeroInflatedGamma) p += gamma_columns(spec, n_vars).size();
  return p;
}

inline std::vector<double> pack_continuous(const ModelSpec& spec, const ParamSet& p) {
  std::vector<double> v = p.beta;
  if (spec.has_dispersion()) v.push_back(p.log_alpha);
  if (spec.structure == Structure::ZeroInflatedTau) v.push_back(p.tau);
  if (spec.structure == Structure::ZeroInflatedGamma) v.insert(v.end(), p.gamma.begin(), p.gamma.end());
  return v;
}

inline void unpack_continuous(const ModelSpec& spec, std::span<const double> v,
                              std::size_t n_vars, ParamSet& p) {
  if (v.size() != n_continuous(spec, n_vars)) throw SchemaError("continuous vector has wrong size");
  std::size_t i = 0;
  p.beta.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_vars));
  i = n_vars;
  if (spec.has_dispersion()) p.log_alpha = v[i++];
  if (spec.structure == Structure::ZeroInflatedTau) p.tau = v[i++];
  if (spec.structure == Structure::ZeroInflatedGamma)
    p.gamma.assign(v.begin() + static_cast<std::ptrdiff_t>(i), v.end());
}

/// Checks that params carry what spec needs for this panel.
inline void validate_params(const ModelSpec& spec, const ParamSet& p, const PanelData& data,
                            bool need_states) {
  if (p.beta.size() != data.n_vars())
    throw SchemaError("beta has " + std::to_string(p.beta.size()) + " entries, panel has " +
                      std::to_string(data.n_vars()) + " covariates");
  if (spec.has_dispersion() && !std::isfinite(p.log_alpha))
    throw ParamDomainError("log_alpha must be finite");
  if (spec.structure == Structure::ZeroInflatedTau && !std::isfinite(p.tau))
    throw ParamDomainError("tau must be finite");
  if (spec.structure == Structure::ZeroInflatedGamma &&
      p.gamma.size() != gamma_columns(spec, data.n_vars()).size())
    throw ParamDomainError("gamma has wrong length");
  if (spec.switching()) {
    if (p.transitions.size() != data.n_segments())
      throw ParamDomainError("one transition pair per segment required");
    for (const auto& tp : p.transitions) check_transition(tp);
    if (need_states && p.states.size() != data.n_cells())
      throw ParamDomainError("state matrix must have N*T entries");
  }
}

// --- cell level ----------------------------------------------------------------

/// Logit of the zero-state probability q for ZI structures.
inline double zero_state_logit(const ModelSpec& spec, const ParamSet& p,
                               std::span<const double> x) {
  if (spec.structure == Structure::ZeroInflatedTau) return p.tau * linear_predictor(p.beta, x);
  if (spec.structure == Structure::ZeroInflatedGamma) {
    const auto cols = gamma_columns(spec, x.size());
    if (p.gamma.size() != cols.size()) throw ParamDomainError("gamma has wrong length");
    double z = 0.0;
    for (std::size_t j = 0; j < cols.size(); ++j) z += p.gamma[j] * x[cols[j]];
    return z;
  }
  throw SpecError("zero-state probability is defined only for zero-inflated models");
}

/// q = 1 / (1 + exp(-tau log lambda)) or 1 / (1 + exp(-gamma'x)).
inline double zero_state_prob(const ModelSpec& spec, const ParamSet& p,
                              std::span<const double> x) {
  return sigmoid(zero_state_logit(spec, p, x));
}

/// log P(A = a) for one cell of a zero-inflated model, given the count-state
/// log pmf and the zero-state logit.
inline double zero_inflated_cell(std::int64_t a, double log_pmf, double logit_q) {
  const double log_1mq = log_sigmoid(-logit_q);
  if (a > 0) return log_1mq + log_pmf;
  return log_add_exp(log_sigmoid(logit_q), log_1mq + log_pmf);
}

/// Log-likelihood that can be structurally impossible: a zero-state cell with
/// a positive count. The impossible marker is distinct from any finite value
/// and samplers reject it.
class LogLikelihood {
 public:
  explicit LogLikelihood(double value) : value_(value) {}
  static LogLikelihood impossible() {
    LogLikelihood l(-std::numeric_limits<double>::infinity());
    l.impossible_ = true;
    return l;
  }
  bool is_impossible() const noexcept { return impossible_; }
  double value() const noexcept { return value_; }

 private:
  double value_;
  bool impossible_ = false;
};

/// log f(Y | Theta) with the latent states taken as given (switching models).
/// For non-switching structures this equals loglik_integrated.
inline double loglik_integrated(const ModelSpec& spec, const ParamSet& p, const PanelData& data);

inline LogLikelihood loglik_complete(const ModelSpec& spec, const ParamSet& p,
                                     const PanelData& data) {
  if (!spec.switching()) return LogLikelihood(loglik_integrated(spec, p, data));
  validate_params(spec, p, data, true);
  const double alpha = p.alpha();
  bool impossible = false;
  double ll = 0.0;
  for (std::size_t cell = 0; cell < data.n_cells(); ++cell) {
    const auto a = data.count_at(cell);
    if (p.states[cell] == 0) {
      if (a > 0) impossible = true;
      continue;
    }
    ll += count_log_pmf(spec.family, a, rate(p.beta, data.x_at(cell)), alpha);
  }
  return impossible ? LogLikelihood::impossible() : LogLikelihood(ll);
}

/// log P(S | transitions) summed over segments.
inline double log_state_prior(const ParamSet& p, const PanelData& data) {
  double lp = 0.0;
  const std::size_t T = data.n_periods();
  for (std::size_t n = 0; n < data.n_segments(); ++n)
    lp += log_state_path_prior(std::span<const std::uint8_t>(p.states.data() + n * T, T),
                               p.transitions[n]);
  return lp;
}

/// log f(Y | Theta) with latent states integrated out: mixtures for the
/// zero-inflated structures, the forward recursion for switching models.
inline double loglik_integrated(const ModelSpec& spec, const ParamSet& p, const PanelData& data) {
  validate_params(spec, p, data, false);
  const double alpha = p.alpha();
  const std::size_t T = data.n_periods();
  double ll = 0.0;
  if (spec.switching()) {
    std::vector<double> rates(T);
    for (std::size_t n = 0; n < data.n_segments(); ++n) {
      for (std::size_t t = 0; t < T; ++t) rates[t] = rate(p.beta, data.x(t, n));
      ll += segment_forward_loglik(data.segment_counts(n), rates, spec.family, alpha,
                                   p.transitions[n]);
    }
    return ll;
  }
  for (std::size_t cell = 0; cell < data.n_cells(); ++cell) {
    const auto x = data.x_at(cell);
    const auto a = data.count_at(cell);
    const double lp = count_log_pmf(spec.family, a, rate(p.beta, x), alpha);
    ll += spec.zero_inflated() ? zero_inflated_cell(a, lp, zero_state_logit(spec, p, x)) : lp;
  }
  return ll;
}

/// Marginal log P(A_{t,n} = a) under the state-integrated model. For switching
/// models the period marginal of the state is the stationary pair.
inline double marginal_cell_log_prob(const ModelSpec& spec, const ParamSet& p,
                                     const PanelData& data, std::size_t t, std::size_t n,
                                     std::int64_t a) {
  const auto x = data.x(t, n);
  const double lp = count_log_pmf(spec.family, a, rate(p.beta, x), p.alpha());
  if (spec.zero_inflated()) return zero_inflated_cell(a, lp, zero_state_logit(spec, p, x));
  if (spec.switching()) {
    const StationaryPair sp = stationary(p.transitions[n]);
    const double l1 = std::log(sp.pbar1) + lp;
    return a == 0 ? log_add_exp(std::log(sp.pbar0), l1) : l1;
  }
  return lp;
}

}  // namespace switchcount
