#pragma once

// Posterior sampling for every model spec.
//
// One sweep updates each continuous coordinate (beta_k, log alpha, tau or
// gamma_j) by a scalar Gaussian random-walk Metropolis step. Zero-inflated and
// standard models target the state-integrated likelihood. Switching models
// target the complete-data likelihood given the current state matrix, then
// redraw the per-segment transition pairs and finally redraw each segment's
// state path exactly by forward filtering, backward sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "switchcount/mle.hpp"
#include "switchcount/model.hpp"
#include "switchcount/rng.hpp"

namespace switchcount {

/// Nearly flat priors.
struct PriorConfig {
  double beta_sd = 100.0;       // independent N(0, sd^2) on each beta
  double log_alpha_lo = -20.0;  // log alpha ~ Uniform[lo, hi]
  double log_alpha_hi = 5.0;
  double coef_sd = 100.0;       // N(0, sd^2) on tau and each gamma
  TransitionPrior transition;   // Beta(a0, b0) on p01 and on p10

  void validate() const {
    if (!(beta_sd > 0.0) || !(coef_sd > 0.0)) throw ParamDomainError("prior widths must be positive");
    if (!(log_alpha_lo < log_alpha_hi)) throw ParamDomainError("log_alpha prior bounds inverted");
    if (!(transition.a0 > 0.0) || !(transition.b0 > 0.0))
      throw ParamDomainError("Beta hyperparameters must be positive");
  }
};

enum class StoreStates { Frequency, Full };

struct McmcConfig {
  std::size_t n_chains = 4;
  std::size_t n_draws = 20000;  // total sweeps per chain, burn-in included
  std::size_t n_burnin = 5000;
  std::size_t thin = 5;
  std::uint64_t seed = 1;
  std::size_t adapt_window = 50;
  double target_accept = 0.3;
  StoreStates store_states = StoreStates::Frequency;
  std::size_t max_threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (n_chains < 2) throw ParamDomainError("at least two chains are required");
    if (n_draws <= n_burnin) throw ParamDomainError("n_draws must exceed n_burnin");
    if (thin < 1 || (n_draws - n_burnin) % thin != 0)
      throw ParamDomainError("thin must divide n_draws - n_burnin");
    if (adapt_window < 1) throw ParamDomainError("adapt_window must be positive");
    if (!(target_accept > 0.0 && target_accept < 1.0))
      throw ParamDomainError("target_accept must be in (0,1)");
  }
  std::size_t retained_per_chain() const { return (n_draws - n_burnin) / thin; }
};

/// Per-block random-walk scales and the acceptance tallies of the current window.
struct ProposalState {
  std::vector<double> scale;
  std::vector<std::size_t> accepted;
  std::vector<std::size_t> proposed;
  std::size_t adaptations = 0;

  explicit ProposalState(std::vector<double> initial = {})
      : scale(std::move(initial)), accepted(scale.size(), 0), proposed(scale.size(), 0) {}
};

/// scale *= exp(kappa * (rate - target)) with kappa = min(1, 10 / w) at the
/// w-th adaptation; tallies reset. Scales never drop below floor.
inline void adapt_proposals(ProposalState& s, double target_accept, double floor = 1e-8) {
  ++s.adaptations;
  const double kappa = std::min(1.0, 10.0 / static_cast<double>(s.adaptations));
  for (std::size_t i = 0; i < s.scale.size(); ++i) {
    if (s.proposed[i] > 0) {
      const double rate = static_cast<double>(s.accepted[i]) / static_cast<double>(s.proposed[i]);
      s.scale[i] = std::max(floor, s.scale[i] * std::exp(kappa * (rate - target_accept)));
    }
    s.accepted[i] = 0;
    s.proposed[i] = 0;
  }
}

struct ChainOutput {
  std::vector<double> draws;    // retained x n_params, row-major
  std::vector<double> loglik;   // state-integrated log-likelihood per retained draw
  std::vector<std::uint32_t> state_ones;  // per cell, retained draws with s = 1
  std::vector<double> pbar1_sum;          // per segment, sum of stationary pbar1
  std::vector<std::vector<std::uint8_t>> states;  // per retained draw, only with StoreStates::Full
  std::vector<double> final_scales;
  std::vector<double> acceptance;  // post-burn-in acceptance rate per block
};

struct ChainDraws {
  ModelSpec spec;
  std::vector<std::string> param_names;  // continuous, then p01:*, p10:* for switching models
  std::size_t n_continuous = 0;
  std::size_t n_segments = 0;
  std::size_t n_periods = 0;
  std::size_t retained_per_chain = 0;
  std::vector<ChainOutput> chains;

  std::size_t n_params() const noexcept { return param_names.size(); }
  std::size_t total_retained() const noexcept { return retained_per_chain * chains.size(); }
  double at(std::size_t chain, std::size_t draw, std::size_t param) const {
    return chains[chain].draws[draw * n_params() + param];
  }
  /// All retained draws of one parameter, chains concatenated.
  std::vector<double> column(std::size_t param) const {
    std::vector<double> v;
    v.reserve(total_retained());
    for (std::size_t c = 0; c < chains.size(); ++c)
      for (std::size_t d = 0; d < retained_per_chain; ++d) v.push_back(at(c, d, param));
    return v;
  }
  std::vector<double> all_loglik() const {
    std::vector<double> v;
    for (const auto& c : chains) v.insert(v.end(), c.loglik.begin(), c.loglik.end());
    return v;
  }
  /// Posterior mean of every parameter column.
  std::vector<double> posterior_mean() const {
    std::vector<double> m(n_params(), 0.0);
    for (const auto& c : chains)
      for (std::size_t d = 0; d < retained_per_chain; ++d)
        for (std::size_t j = 0; j < n_params(); ++j) m[j] += c.draws[d * n_params() + j];
    for (auto& v : m) v /= static_cast<double>(total_retained());
    return m;
  }
  /// ParamSet at a parameter row (transitions included, states left empty).
  ParamSet params_from_row(std::span<const double> row, std::size_t n_vars) const {
    ParamSet p;
    unpack_continuous(spec, row.first(n_continuous), n_vars, p);
    if (spec.switching()) {
      p.transitions.resize(n_segments);
      for (std::size_t n = 0; n < n_segments; ++n)
        p.transitions[n] = {row[n_continuous + n], row[n_continuous + n_segments + n]};
    }
    return p;
  }
};

/// Independence Metropolis-Hastings update of one segment's transition pair.
/// The proposal is the Beta conditional given the path's transition counts; the
/// acceptance ratio restores the stationary start factor pbar(s_1).
inline TransitionPair update_transition_pair(std::span<const std::uint8_t> states,
                                             const TransitionPair& current,
                                             const TransitionPrior& prior, Rng& rng) {
  const TransitionPair proposal = draw_transitions_conjugate(transition_counts(states), prior, rng);
  const auto start_prob = [&states](const TransitionPair& tp) {
    const StationaryPair sp = stationary(tp);
    return states[0] ? sp.pbar1 : sp.pbar0;
  };
  const double ratio = start_prob(proposal) / start_prob(current);
  return uniform01(rng) < ratio ? proposal : current;
}

namespace detail {

struct ChainStart {
  ParamSet params;
  std::vector<double> scales;
};

class ChainSampler {
 public:
  ChainSampler(const ModelSpec& spec, const PanelData& data, const PriorConfig& priors,
               const McmcConfig& cfg, std::size_t chain_index, const ChainStart& start)
      : spec_(spec),
        data_(data),
        priors_(priors),
        cfg_(cfg),
        rng_(make_rng(cfg.seed, {0x6d636d63, chain_index})),
        p_(start.params),
        prop_(start.scales),
        cells_(data.n_cells()),
        K_(data.n_vars()) {
    if (spec_.structure == Structure::ZeroInflatedGamma) gcols_ = gamma_columns(spec_, K_);
    eta_.resize(cells_);
    lp_.resize(cells_);
    z_.assign(cells_, 0.0);
    count_term_.resize(cells_);
    log_fact_.resize(cells_);
    for (std::size_t i = 0; i < cells_; ++i) {
      eta_[i] = linear_predictor(p_.beta, data_.x_at(i));
      log_fact_[i] = std::lgamma(static_cast<double>(data_.count_at(i)) + 1.0);
    }
    refresh_count_terms(p_.alpha(), count_term_);
    for (std::size_t i = 0; i < cells_; ++i) lp_[i] = cell_lp(i, eta_[i], count_term_[i], p_.alpha());
    refresh_logits();
    current_ = total_contribution(lp_, z_);
    if (!std::isfinite(current_) || !std::isfinite(log_prior()))
      throw InitError("log posterior is not finite at the chain's starting point");
    new_eta_.resize(cells_);
    new_lp_.resize(cells_);
    new_z_.resize(cells_);
    new_count_term_.resize(cells_);
  }

  ChainOutput run(std::size_t n_params) {
    ChainOutput out;
    const std::size_t N = data_.n_segments();
    if (spec_.switching()) {
      out.state_ones.assign(cells_, 0);
      out.pbar1_sum.assign(N, 0.0);
    }
    std::vector<std::size_t> acc(prop_.scale.size(), 0), tried(prop_.scale.size(), 0);
    std::vector<double> row(n_params);
    for (std::size_t sweep = 1; sweep <= cfg_.n_draws; ++sweep) {
      const bool burn = sweep <= cfg_.n_burnin;
      continuous_sweep(burn ? nullptr : &acc, burn ? nullptr : &tried);
      double ll = current_;
      if (spec_.switching()) {
        update_transitions();
        ll = update_states();
      }
      if (burn) {
        if (sweep % cfg_.adapt_window == 0) adapt_proposals(prop_, cfg_.target_accept);
        continue;
      }
      if ((sweep - cfg_.n_burnin) % cfg_.thin != 0) continue;
      const std::vector<double> cont = pack_continuous(spec_, p_);
      std::copy(cont.begin(), cont.end(), row.begin());
      if (spec_.switching()) {
        for (std::size_t n = 0; n < N; ++n) {
          row[cont.size() + n] = p_.transitions[n].p01;
          row[cont.size() + N + n] = p_.transitions[n].p10;
          out.pbar1_sum[n] += stationary(p_.transitions[n]).pbar1;
        }
        for (std::size_t i = 0; i < cells_; ++i) out.state_ones[i] += p_.states[i];
        if (cfg_.store_states == StoreStates::Full) out.states.push_back(p_.states);
      }
      out.draws.insert(out.draws.end(), row.begin(), row.end());
      out.loglik.push_back(ll);
    }
    out.final_scales = prop_.scale;
    for (std::size_t b = 0; b < acc.size(); ++b)
      out.acceptance.push_back(tried[b] ? static_cast<double>(acc[b]) / static_cast<double>(tried[b]) : 0.0);
    return out;
  }

 private:
  double cell_lp(std::size_t i, double eta, double count_term, double alpha) const {
    const auto a = data_.count_at(i);
    if (spec_.family == Family::Poisson) return detail::poisson_log_pmf_fast(a, log_fact_[i], eta);
    return detail::nb_log_pmf_fast(a, count_term, eta, alpha);
  }

  void refresh_count_terms(double alpha, std::vector<double>& terms) const {
    if (spec_.family != Family::NegativeBinomial) return;
    for (std::size_t i = 0; i < cells_; ++i) terms[i] = detail::nb_count_term(data_.count_at(i), alpha);
  }

  void refresh_logits() {
    if (spec_.structure == Structure::ZeroInflatedTau)
      for (std::size_t i = 0; i < cells_; ++i) z_[i] = p_.tau * eta_[i];
    if (spec_.structure == Structure::ZeroInflatedGamma)
      for (std::size_t i = 0; i < cells_; ++i) {
        const auto x = data_.x_at(i);
        double z = 0.0;
        for (std::size_t j = 0; j < gcols_.size(); ++j) z += p_.gamma[j] * x[gcols_[j]];
        z_[i] = z;
      }
  }

  // Target log-likelihood: state-integrated for non-switching structures,
  // complete-data (sum over count-state cells) for switching ones.
  double total_contribution(const std::vector<double>& lp, const std::vector<double>& z) const {
    double s = 0.0;
    if (spec_.switching()) {
      for (std::size_t i = 0; i < cells_; ++i)
        if (p_.states[i]) s += lp[i];
    } else if (spec_.zero_inflated()) {
      for (std::size_t i = 0; i < cells_; ++i) s += zero_inflated_cell(data_.count_at(i), lp[i], z[i]);
    } else {
      for (std::size_t i = 0; i < cells_; ++i) s += lp[i];
    }
    return s;
  }

  double log_prior() const {
    double lp = 0.0;
    for (double b : p_.beta) lp -= 0.5 * b * b / (priors_.beta_sd * priors_.beta_sd);
    if (spec_.has_dispersion() &&
        (p_.log_alpha < priors_.log_alpha_lo || p_.log_alpha > priors_.log_alpha_hi))
      return -INFINITY;
    const double c2 = priors_.coef_sd * priors_.coef_sd;
    if (spec_.structure == Structure::ZeroInflatedTau) lp -= 0.5 * p_.tau * p_.tau / c2;
    for (double g : p_.gamma) lp -= 0.5 * g * g / c2;
    return lp;
  }

  bool metropolis(std::size_t block, double delta_loglik, double delta_prior,
                  std::vector<std::size_t>* acc, std::vector<std::size_t>* tried) {
    ++prop_.proposed[block];
    if (tried) ++(*tried)[block];
    const double d = delta_loglik + delta_prior;
    const bool ok = std::log(uniform01(rng_)) < d;  // NaN and -inf reject
    if (ok) {
      ++prop_.accepted[block];
      if (acc) ++(*acc)[block];
    }
    return ok;
  }

  void continuous_sweep(std::vector<std::size_t>* acc, std::vector<std::size_t>* tried) {
    std::size_t block = 0;
    const double alpha = p_.alpha();
    const double bsd2 = priors_.beta_sd * priors_.beta_sd;
    for (std::size_t k = 0; k < K_; ++k, ++block) {
      const double step = prop_.scale[block] * standard_normal(rng_);
      for (std::size_t i = 0; i < cells_; ++i) {
        new_eta_[i] = eta_[i] + step * data_.x_at(i)[k];
        new_lp_[i] = cell_lp(i, new_eta_[i], count_term_[i], alpha);
        if (spec_.structure == Structure::ZeroInflatedTau) new_z_[i] = p_.tau * new_eta_[i];
      }
      const auto& zref = spec_.structure == Structure::ZeroInflatedTau ? new_z_ : z_;
      const double proposed = total_contribution(new_lp_, zref);
      const double b0 = p_.beta[k], b1 = b0 + step;
      const double dprior = -0.5 * (b1 * b1 - b0 * b0) / bsd2;
      if (metropolis(block, proposed - current_, dprior, acc, tried)) {
        p_.beta[k] = b1;
        eta_.swap(new_eta_);
        lp_.swap(new_lp_);
        if (spec_.structure == Structure::ZeroInflatedTau) z_.swap(new_z_);
        current_ = proposed;
      }
    }
    if (spec_.has_dispersion()) {
      const double la1 = p_.log_alpha + prop_.scale[block] * standard_normal(rng_);
      if (la1 >= priors_.log_alpha_lo && la1 <= priors_.log_alpha_hi) {
        const double a1 = std::exp(la1);
        refresh_count_terms(a1, new_count_term_);
        for (std::size_t i = 0; i < cells_; ++i) new_lp_[i] = cell_lp(i, eta_[i], new_count_term_[i], a1);
        const double proposed = total_contribution(new_lp_, z_);
        if (metropolis(block, proposed - current_, 0.0, acc, tried)) {
          p_.log_alpha = la1;
          count_term_.swap(new_count_term_);
          lp_.swap(new_lp_);
          current_ = proposed;
        }
      } else {
        metropolis(block, -INFINITY, 0.0, acc, tried);
      }
      ++block;
    }
    const double c2 = priors_.coef_sd * priors_.coef_sd;
    if (spec_.structure == Structure::ZeroInflatedTau) {
      const double t1 = p_.tau + prop_.scale[block] * standard_normal(rng_);
      for (std::size_t i = 0; i < cells_; ++i) new_z_[i] = t1 * eta_[i];
      const double proposed = total_contribution(lp_, new_z_);
      if (metropolis(block, proposed - current_, -0.5 * (t1 * t1 - p_.tau * p_.tau) / c2, acc, tried)) {
        p_.tau = t1;
        z_.swap(new_z_);
        current_ = proposed;
      }
      ++block;
    }
    if (spec_.structure == Structure::ZeroInflatedGamma) {
      for (std::size_t j = 0; j < gcols_.size(); ++j, ++block) {
        const double step = prop_.scale[block] * standard_normal(rng_);
        for (std::size_t i = 0; i < cells_; ++i) new_z_[i] = z_[i] + step * data_.x_at(i)[gcols_[j]];
        const double proposed = total_contribution(lp_, new_z_);
        const double g0 = p_.gamma[j], g1 = g0 + step;
        if (metropolis(block, proposed - current_, -0.5 * (g1 * g1 - g0 * g0) / c2, acc, tried)) {
          p_.gamma[j] = g1;
          z_.swap(new_z_);
          current_ = proposed;
        }
      }
    }
  }

  void update_transitions() {
    const std::size_t T = data_.n_periods();
    for (std::size_t n = 0; n < data_.n_segments(); ++n)
      p_.transitions[n] = update_transition_pair(
          std::span<const std::uint8_t>(p_.states.data() + n * T, T), p_.transitions[n],
          priors_.transition, rng_);
  }

  // Redraws every state path; returns the state-integrated log-likelihood at
  // the current continuous parameters and transitions.
  double update_states() {
    const std::size_t T = data_.n_periods();
    double ll = 0.0;
    for (std::size_t n = 0; n < data_.n_segments(); ++n) {
      const std::size_t off = n * T;
      forward_filter_into(data_.segment_counts(n), std::span<const double>(lp_.data() + off, T),
                          p_.transitions[n], fp_);
      ll += fp_.loglik;
      backward_sample(fp_, p_.transitions[n], rng_, std::span<std::uint8_t>(p_.states.data() + off, T));
    }
    current_ = total_contribution(lp_, z_);
    return ll;
  }

  const ModelSpec& spec_;
  const PanelData& data_;
  const PriorConfig& priors_;
  const McmcConfig& cfg_;
  Rng rng_;
  ParamSet p_;
  ProposalState prop_;
  std::size_t cells_;
  std::size_t K_;
  std::vector<std::size_t> gcols_;
  std::vector<double> eta_, lp_, z_, count_term_, log_fact_;
  std::vector<double> new_eta_, new_lp_, new_z_, new_count_term_;
  double current_ = 0.0;
  ForwardPass fp_;
};

inline std::size_t thread_budget(std::size_t requested, std::size_t jobs) {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  std::size_t n = requested > 0 ? requested : hw;
  return std::max<std::size_t>(1, std::min(n, jobs));
}

}  // namespace detail

/// Runs cfg.n_chains independent chains (in parallel up to cfg.max_threads).
/// Chains start from the standard-model MLE of the same family with beta and
/// log alpha jittered by twice their standard errors. Deterministic given
/// cfg.seed regardless of the thread count.
inline ChainDraws sample_posterior(const ModelSpec& spec, const PanelData& data,
                                   const PriorConfig& priors = {}, const McmcConfig& cfg = {}) {
  priors.validate();
  cfg.validate();
  const std::size_t K = data.n_vars();
  const std::size_t N = data.n_segments();

  // zero-inflated and standard chains start around their own MLE; switching
  // chains around the plain count model
  const ModelSpec base_spec = spec.switching() ? ModelSpec{spec.family, Structure::Standard, {}} : spec;
  std::optional<MleResult> base;
  try {
    base = fit_mle(base_spec, data);
  } catch (const InitError&) {
    base.reset();
  }
  const ParamSet defaults = default_init(spec, data);
  const std::vector<double> typ = typical_scales(spec, data);

  ChainDraws out;
  out.spec = spec;
  out.param_names = continuous_names(spec, data.variable_names());
  out.n_continuous = out.param_names.size();
  out.n_segments = N;
  out.n_periods = data.n_periods();
  out.retained_per_chain = cfg.retained_per_chain();
  if (spec.switching()) {
    for (const auto& id : data.segment_ids()) out.param_names.push_back("p01:" + id);
    for (const auto& id : data.segment_ids()) out.param_names.push_back("p10:" + id);
  }

  std::vector<detail::ChainStart> starts(cfg.n_chains);
  for (std::size_t c = 0; c < cfg.n_chains; ++c) {
    Rng rng = make_rng(cfg.seed, {0x696e6974, c});
    detail::ChainStart& s = starts[c];
    s.params = defaults;
    s.scales = typ;
    for (auto& v : s.scales) v *= 0.1;
    if (base) {
      for (std::size_t k = 0; k < K; ++k) s.params.beta[k] = base->estimates.beta[k];
      if (spec.has_dispersion()) s.params.log_alpha = base->estimates.log_alpha;
      if (!spec.switching()) {
        s.params.tau = base->estimates.tau;
        s.params.gamma = base->estimates.gamma;
      }
      if (base->std_errors)
        for (std::size_t k = 0; k < base->std_errors->size(); ++k)
          s.scales[k] = std::min((*base->std_errors)[k], typ[k]);
    }
    std::size_t j = 0;
    for (std::size_t k = 0; k < K; ++k) s.params.beta[k] += 2.0 * s.scales[j++] * standard_normal(rng);
    if (spec.has_dispersion()) {
      s.params.log_alpha += 2.0 * s.scales[j++] * standard_normal(rng);
      s.params.log_alpha = std::clamp(s.params.log_alpha, priors.log_alpha_lo, priors.log_alpha_hi);
    }
    if (spec.structure == Structure::ZeroInflatedTau) s.params.tau += 2.0 * s.scales[j++] * standard_normal(rng);
    for (auto& g : s.params.gamma) g += 2.0 * s.scales[j++] * standard_normal(rng);
    if (spec.switching()) {
      s.params.transitions.assign(N, TransitionPair{0.5, 0.5});
      s.params.states.resize(data.n_cells());
      for (std::size_t i = 0; i < data.n_cells(); ++i)
        s.params.states[i] = data.count_at(i) > 0 ? 1 : static_cast<std::uint8_t>(uniform01(rng) < 0.5);
    }
  }

  out.chains.resize(cfg.n_chains);
  std::vector<std::exception_ptr> errors(cfg.n_chains);
  auto run_chain = [&](std::size_t c) {
    try {
      detail::ChainSampler sampler(spec, data, priors, cfg, c, starts[c]);
      out.chains[c] = sampler.run(out.n_params());
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  const std::size_t workers = detail::thread_budget(cfg.max_threads, cfg.n_chains);
  if (workers == 1) {
    for (std::size_t c = 0; c < cfg.n_chains; ++c) run_chain(c);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < cfg.n_chains; c += workers) run_chain(c);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

/// P(s_{t,n} = 1 | Y) pooled over chains, segment-major.
inline std::vector<double> state_posterior(const ChainDraws& draws) {
  if (!draws.spec.switching()) throw SpecError("state posterior exists only for switching models");
  if (draws.total_retained() == 0) throw DataError("no retained draws");
  const std::size_t cells = draws.n_segments * draws.n_periods;
  std::vector<double> p(cells, 0.0);
  for (const auto& c : draws.chains)
    for (std::size_t i = 0; i < cells; ++i) p[i] += c.state_ones[i];
  for (auto& v : p) v /= static_cast<double>(draws.total_retained());
  return p;
}

/// E[pbar1 | Y] per segment.
inline std::vector<double> stationary_expectations(const ChainDraws& draws) {
  if (!draws.spec.switching()) throw SpecError("stationary probabilities exist only for switching models");
  std::vector<double> e(draws.n_segments, 0.0);
  for (const auto& c : draws.chains)
    for (std::size_t n = 0; n < draws.n_segments; ++n) e[n] += c.pbar1_sum[n];
  for (auto& v : e) v /= static_cast<double>(draws.total_retained());
  return e;
}

}  // namespace switchcount
