#pragma once

// Two-state latent chain: state 0 emits only zeros, state 1 emits counts from
// the NB or Poisson family. Each segment owns its own transition pair and
// starts from the stationary distribution.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "switchcount/count_dists.hpp"
#include "switchcount/errors.hpp"
#include "switchcount/rng.hpp"

namespace switchcount {

struct TransitionPair {
  double p01 = 0.5;  // P(s' = 1 | s = 0)
  double p10 = 0.5;  // P(s' = 0 | s = 1)

  bool operator==(const TransitionPair&) const = default;
};

struct StationaryPair {
  double pbar0 = 0.5;
  double pbar1 = 0.5;
};

/// Rejects transition probabilities on or outside the boundary of (0,1).
inline void check_transition(const TransitionPair& tp) {
  if (!(tp.p01 > 0.0 && tp.p01 < 1.0 && tp.p10 > 0.0 && tp.p10 < 1.0))
    throw ParamDomainError("transition probabilities must lie strictly inside (0,1)");
}

/// pbar0 = p10 / (p01 + p10), pbar1 = p01 / (p01 + p10).
inline StationaryPair stationary(const TransitionPair& tp) {
  const double s = tp.p01 + tp.p10;
  if (!(s > 0.0)) throw ParamDomainError("stationary distribution undefined for p01 = p10 = 0");
  return {tp.p10 / s, tp.p01 / s};
}

/// Residuals of the two fixed-point conditions of the stationary pair.
inline std::array<double, 2> stationarity_residuals(const TransitionPair& tp,
                                                    const StationaryPair& sp) {
  return {(1.0 - tp.p01) * sp.pbar0 + tp.p10 * sp.pbar1 - sp.pbar0,
          tp.p01 * sp.pbar0 + (1.0 - tp.p10) * sp.pbar1 - sp.pbar1};
}

/// Scaled forward pass over one segment. filtered1[t] = P(s_t = 1 | A_1..A_t).
struct ForwardPass {
  double loglik = 0.0;
  std::vector<double> filtered1;
};

/// Forward recursion given log emission densities of the count state, written
/// into a reusable buffer. The zero state emits with probability one iff the
/// count is zero.
inline void forward_filter_into(std::span<const std::int64_t> counts,
                                std::span<const double> log_emission1, const TransitionPair& tp,
                                ForwardPass& out) {
  const std::size_t T = counts.size();
  out.loglik = 0.0;
  out.filtered1.resize(T);
  const StationaryPair sp = stationary(tp);
  double pred0 = sp.pbar0;
  double pred1 = sp.pbar1;
  for (std::size_t t = 0; t < T; ++t) {
    const double l1 = std::log(pred1) + log_emission1[t];
    double f1 = 1.0;
    if (counts[t] == 0) {
      const double l0 = std::log(pred0);
      const double c = log_add_exp(l0, l1);
      out.loglik += c;
      f1 = std::exp(l1 - c);
    } else {
      out.loglik += l1;
    }
    out.filtered1[t] = f1;
    pred1 = (1.0 - f1) * tp.p01 + f1 * (1.0 - tp.p10);
    pred0 = (1.0 - f1) * (1.0 - tp.p01) + f1 * tp.p10;
  }
}

inline ForwardPass forward_filter(std::span<const std::int64_t> counts,
                                  std::span<const double> log_emission1,
                                  const TransitionPair& tp) {
  ForwardPass out;
  forward_filter_into(counts, log_emission1, tp, out);
  return out;
}

/// Exact draw of the state path from its conditional distribution given the
/// forward pass (backward sampling).
inline void backward_sample(const ForwardPass& fp, const TransitionPair& tp, Rng& rng,
                            std::span<std::uint8_t> states) {
  const std::size_t T = fp.filtered1.size();
  if (T == 0) return;
  std::uint8_t next = uniform01(rng) < fp.filtered1[T - 1] ? 1 : 0;
  states[T - 1] = next;
  for (std::size_t t = T - 1; t-- > 0;) {
    const double f1 = fp.filtered1[t];
    // weight of s_t = i is filtered(i) * P(i -> next)
    const double w1 = f1 * (next == 1 ? 1.0 - tp.p10 : tp.p10);
    const double w0 = (1.0 - f1) * (next == 1 ? tp.p01 : 1.0 - tp.p01);
    next = uniform01(rng) * (w0 + w1) < w1 ? 1 : 0;
    states[t] = next;
  }
}

/// log of the summed likelihood over all 2^T state paths of one segment.
/// alpha is ignored for the Poisson family.
inline double segment_forward_loglik(std::span<const std::int64_t> counts,
                                     std::span<const double> rates, Family family,
                                     double alpha, const TransitionPair& tp) {
  if (counts.size() != rates.size())
    throw SchemaError("counts and rates must have the same length");
  if (counts.empty()) throw SchemaError("segment must have at least one period");
  check_transition(tp);
  std::vector<double> le(counts.size());
  for (std::size_t t = 0; t < counts.size(); ++t)
    le[t] = count_log_pmf(family, counts[t], rates[t], alpha);
  return forward_filter(counts, le, tp).loglik;
}

struct TransitionCounts {
  std::size_t n00 = 0, n01 = 0, n10 = 0, n11 = 0;
};

inline TransitionCounts transition_counts(std::span<const std::uint8_t> states) {
  TransitionCounts c;
  for (std::size_t t = 1; t < states.size(); ++t) {
    const int from = states[t - 1], to = states[t];
    if (from == 0)
      (to == 0 ? c.n00 : c.n01)++;
    else
      (to == 0 ? c.n10 : c.n11)++;
  }
  return c;
}

/// log P(state path | transitions), stationary start.
inline double log_state_path_prior(std::span<const std::uint8_t> states,
                                   const TransitionPair& tp) {
  if (states.empty()) return 0.0;
  const StationaryPair sp = stationary(tp);
  double lp = std::log(states[0] ? sp.pbar1 : sp.pbar0);
  const TransitionCounts c = transition_counts(states);
  lp += static_cast<double>(c.n00) * std::log1p(-tp.p01) +
        static_cast<double>(c.n01) * std::log(tp.p01) +
        static_cast<double>(c.n10) * std::log(tp.p10) +
        static_cast<double>(c.n11) * std::log1p(-tp.p10);
  return lp;
}

/// Beta prior hyperparameters shared by both transition directions.
struct TransitionPrior {
  double a0 = 1.0;
  double b0 = 1.0;
};

/// Draw from Beta(a0 + n01, b0 + n00) x Beta(a0 + n10, b0 + n11), the
/// conditional of the transition pair given the path's transition counts
/// (the stationary start factor excluded). Boundary draws are redrawn.
inline TransitionPair draw_transitions_conjugate(const TransitionCounts& c,
                                                 const TransitionPrior& prior, Rng& rng) {
  auto draw = [&rng](double a, double b) {
    for (;;) {
      const double p = beta_draw(rng, a, b);
      if (p > 0.0 && p < 1.0) return p;
    }
  };
  TransitionPair tp;
  tp.p01 = draw(prior.a0 + static_cast<double>(c.n01), prior.b0 + static_cast<double>(c.n00));
  tp.p10 = draw(prior.a0 + static_cast<double>(c.n10), prior.b0 + static_cast<double>(c.n11));
  return tp;
}

}  // namespace switchcount
