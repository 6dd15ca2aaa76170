#pragma once

// Generative side of the models: synthetic panels and replicated datasets.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "switchcount/model.hpp"
#include "switchcount/rng.hpp"

namespace switchcount {

/// Fills the non-intercept covariates of cell (t, n).
using CovariateRule = std::function<void(std::size_t t, std::size_t n, Rng& rng, std::span<double> out)>;

/// Independent standard-normal covariates.
inline CovariateRule standard_normal_covariates() {
  return [](std::size_t, std::size_t, Rng& rng, std::span<double> out) {
    for (auto& v : out) v = standard_normal(rng);
  };
}

struct SimulationOptions {
  // Overrides the stationary draw of every segment's first state.
  std::optional<std::uint8_t> initial_state;
};

struct SimulatedPanel {
  PanelData data;
  std::vector<std::uint8_t> states;  // segment-major; 1 = count state
};

inline std::int64_t draw_count(Family family, double lambda, double alpha, Rng& rng) {
  double mean = lambda;
  if (family == Family::NegativeBinomial)
    mean = std::gamma_distribution<double>(1.0 / alpha, alpha * lambda)(rng);
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

namespace detail {

inline void check_simulation_truth(const ModelSpec& spec, const ParamSet& truth,
                                   const PanelData& design, const SimulationOptions& opts) {
  if (truth.beta.size() != design.n_vars()) throw SchemaError("beta length differs from covariates");
  if (spec.has_dispersion() && !std::isfinite(truth.log_alpha))
    throw ParamDomainError("log_alpha must be finite");
  if (spec.switching()) {
    if (truth.transitions.size() != design.n_segments())
      throw ParamDomainError("one transition pair per segment required");
    for (const auto& tp : truth.transitions) {
      if (!(tp.p01 >= 0.0 && tp.p01 <= 1.0 && tp.p10 >= 0.0 && tp.p10 <= 1.0))
        throw ParamDomainError("transition probabilities must lie in [0,1]");
      if (!opts.initial_state && tp.p01 + tp.p10 <= 0.0)
        throw ParamDomainError("stationary start undefined for p01 = p10 = 0");
    }
  }
  if (spec.structure == Structure::ZeroInflatedGamma &&
      truth.gamma.size() != gamma_columns(spec, design.n_vars()).size())
    throw ParamDomainError("gamma has wrong length");
}

}  // namespace detail

/// Counts (and latent states) for a fixed design under params.
inline SimulatedPanel simulate_counts(const ModelSpec& spec, const ParamSet& params,
                                      const PanelData& design, Rng& rng,
                                      const SimulationOptions& opts = {}) {
  detail::check_simulation_truth(spec, params, design, opts);
  const std::size_t T = design.n_periods();
  std::vector<std::int64_t> counts(design.n_cells());
  std::vector<std::uint8_t> states(design.n_cells(), 1);
  const double alpha = params.alpha();
  for (std::size_t n = 0; n < design.n_segments(); ++n) {
    std::uint8_t s = 1;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t cell = design.index(t, n);
      const auto x = design.x_at(cell);
      if (spec.switching()) {
        const TransitionPair& tp = params.transitions[n];
        if (t == 0)
          s = opts.initial_state ? *opts.initial_state
                                 : static_cast<std::uint8_t>(uniform01(rng) < stationary(tp).pbar1);
        else
          s = static_cast<std::uint8_t>(s == 0 ? uniform01(rng) < tp.p01 : uniform01(rng) >= tp.p10);
      } else if (spec.zero_inflated()) {
        s = static_cast<std::uint8_t>(uniform01(rng) >= zero_state_prob(spec, params, x));
      }
      states[cell] = s;
      counts[cell] = s == 0 ? 0 : draw_count(spec.family, rate(params.beta, x), alpha, rng);
    }
  }
  return {design.with_counts(std::move(counts)), std::move(states)};
}

/// Synthetic panel: covariates from the rule (intercept prepended), then
/// states and counts from the model. Deterministic given seed.
inline SimulatedPanel simulate_panel(const ModelSpec& spec, const ParamSet& truth,
                                     const CovariateRule& covgen, std::size_t n_segments,
                                     std::size_t n_periods, std::uint64_t seed,
                                     const SimulationOptions& opts = {}) {
  if (n_segments == 0 || n_periods == 0) throw SchemaError("N and T must be positive");
  if (truth.beta.empty()) throw SchemaError("beta must contain at least the intercept");
  const std::size_t K = truth.beta.size();
  Rng rng = make_rng(seed);
  std::vector<std::vector<double>> xs(n_segments * n_periods, std::vector<double>(K, 1.0));
  for (std::size_t n = 0; n < n_segments; ++n)
    for (std::size_t t = 0; t < n_periods; ++t)
      covgen(t, n, rng, std::span<double>(xs[n * n_periods + t]).subspan(1));
  std::vector<std::string> names{"intercept"};
  for (std::size_t k = 1; k < K; ++k) names.push_back("x" + std::to_string(k));
  PanelData design(n_segments, n_periods, std::vector<std::int64_t>(n_segments * n_periods, 0),
                   std::move(xs), std::move(names));
  return simulate_counts(spec, truth, design, rng, opts);
}

}  // namespace switchcount
