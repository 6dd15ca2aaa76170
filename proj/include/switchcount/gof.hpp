#pragma once

// Pearson chi-square goodness of fit with a Monte Carlo reference
// distribution from datasets replicated under the fitted parameters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "switchcount/model.hpp"
#include "switchcount/simulate.hpp"

namespace switchcount {

/// Contiguous count categories [lower[c], lower[c+1]) with the last one
/// open-ended, and their model-expected occupancies. When every small count
/// reaches the bound on its own the cells are {0}, {1}, ..., {c*}, {> c*}.
struct CountCells {
  std::vector<std::int64_t> lower;  // lower[0] == 0, strictly increasing
  std::vector<double> expected;     // same size as lower

  std::size_t n_cells() const noexcept { return expected.size(); }
  std::size_t cell_of(std::int64_t a) const noexcept {
    const auto it = std::upper_bound(lower.begin(), lower.end(), a);
    return static_cast<std::size_t>(it - lower.begin()) - 1;
  }
  std::string label(std::size_t c) const {
    if (c + 1 == lower.size()) return ">=" + std::to_string(lower[c]);
    const std::int64_t hi = lower[c + 1] - 1;
    return hi == lower[c] ? std::to_string(hi) : std::to_string(lower[c]) + "-" + std::to_string(hi);
  }
};

struct GofResult {
  double chi2_observed = 0.0;
  double p_value = 1.0;
  std::size_t n_replications = 0;
  CountCells cells;
  std::vector<double> observed;
};

/// Expected occupancy of count categories, merging adjacent counts so that
/// every category expects at least min_expected observations.
inline CountCells make_count_cells(const ModelSpec& spec, const ParamSet& params,
                                   const PanelData& data, double min_expected = 5.0) {
  validate_params(spec, params, data, false);
  const double total = static_cast<double>(data.n_cells());
  CountCells cells;
  double closed = 0.0, open = 0.0;
  std::int64_t start = 0;
  for (std::int64_t a = 0; a < 1000000; ++a) {
    double ea = 0.0;
    for (std::size_t n = 0; n < data.n_segments(); ++n)
      for (std::size_t t = 0; t < data.n_periods(); ++t)
        ea += std::exp(marginal_cell_log_prob(spec, params, data, t, n, a));
    open += ea;
    if (total - closed - open < min_expected) break;
    if (open >= min_expected) {
      cells.lower.push_back(start);
      cells.expected.push_back(open);
      closed += open;
      open = 0.0;
      start = a + 1;
    }
  }
  // the open-ended tail takes whatever mass is left and must meet the same bound
  double tail = total - closed;
  while (!cells.expected.empty() && tail < min_expected) {
    tail += cells.expected.back();
    start = cells.lower.back();
    cells.expected.pop_back();
    cells.lower.pop_back();
  }
  if (cells.expected.empty())
    throw DegenerateCellsError("fewer than two count categories with expected occupancy >= " +
                               std::to_string(min_expected));
  cells.lower.push_back(start);
  cells.expected.push_back(tail);
  return cells;
}

inline std::vector<double> observed_cells(const CountCells& cells, std::span<const std::int64_t> counts) {
  std::vector<double> o(cells.n_cells(), 0.0);
  for (auto a : counts) o[cells.cell_of(a)] += 1.0;
  return o;
}

/// sum_c (O_c - E_c)^2 / E_c.
inline double pearson_statistic(std::span<const double> observed, std::span<const double> expected) {
  if (observed.size() != expected.size()) throw SchemaError("cell vectors differ in length");
  double x = 0.0;
  for (std::size_t c = 0; c < observed.size(); ++c) {
    const double d = observed[c] - expected[c];
    x += d * d / expected[c];
  }
  return x;
}

inline double chi2_statistic(const PanelData& data, const ModelSpec& spec, const ParamSet& params) {
  const CountCells cells = make_count_cells(spec, params, data);
  return pearson_statistic(observed_cells(cells, data.counts()), cells.expected);
}

/// Add-one Monte Carlo p-value: (#{chi2_rep >= chi2_obs} + 1) / (R + 1).
/// Cell edges come from the observed fit and are reused for every replicate;
/// switching models regenerate states from the transition pairs.
inline GofResult gof_pvalue(const PanelData& data, const ModelSpec& spec, const ParamSet& params,
                            std::size_t replications = 10000, std::uint64_t seed = 1) {
  if (replications == 0) throw DataError("at least one replication is required");
  GofResult r;
  r.cells = make_count_cells(spec, params, data);
  r.observed = observed_cells(r.cells, data.counts());
  r.chi2_observed = pearson_statistic(r.observed, r.cells.expected);
  r.n_replications = replications;
  std::size_t exceed = 0;
  for (std::size_t rep = 0; rep < replications; ++rep) {
    Rng rng = make_rng(seed, {0x676f66, rep});
    const SimulatedPanel sim = simulate_counts(spec, params, data, rng);
    const double x = pearson_statistic(observed_cells(r.cells, sim.data.counts()), r.cells.expected);
    if (x >= r.chi2_observed) ++exceed;
  }
  r.p_value = static_cast<double>(exceed + 1) / static_cast<double>(replications + 1);
  return r;
}

}  // namespace switchcount
