#pragma once

// Gelman-Rubin potential scale reduction factor and the Brooks-Gelman
// multivariate version, over continuous parameters.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "switchcount/errors.hpp"
#include "switchcount/mcmc.hpp"

namespace switchcount {

/// chains[j][i] is draw i of chain j. sqrt(((n-1)/n W + B/n) / W).
inline double psrf(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw DataError("PSRF needs at least two chains");
  const std::size_t n = chains[0].size();
  if (n < 10) throw DataError("PSRF needs at least ten draws per chain");
  for (const auto& c : chains)
    if (c.size() != n) throw DataError("chains differ in length");
  std::vector<double> means(m);
  double W = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (double v : chains[j]) s += v;
    means[j] = s / static_cast<double>(n);
    double ss = 0.0;
    for (double v : chains[j]) ss += (v - means[j]) * (v - means[j]);
    W += ss / static_cast<double>(n - 1);
  }
  W /= static_cast<double>(m);
  double grand = 0.0;
  for (double v : means) grand += v;
  grand /= static_cast<double>(m);
  double b_over_n = 0.0;
  for (double v : means) b_over_n += (v - grand) * (v - grand);
  b_over_n /= static_cast<double>(m - 1);
  if (!(W > 0.0)) throw DegenerateVarianceError("within-chain variance is zero");
  const double nd = static_cast<double>(n);
  return std::sqrt(((nd - 1.0) / nd * W + b_over_n) / W);
}

struct MpsrfResult {
  double value = 0.0;
  bool regularized = false;  // W was singular and a ridge was added
};

/// chains[j] is an n x p matrix of draws. sqrt((n-1)/n + (m+1)/m * lambda_max)
/// with lambda_max the largest eigenvalue of W^{-1} B/n.
inline MpsrfResult mpsrf(const std::vector<Eigen::MatrixXd>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw DataError("MPSRF needs at least two chains");
  const auto n = chains[0].rows();
  const auto p = chains[0].cols();
  if (n <= p) throw DataError("MPSRF needs more draws per chain than parameters");
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd means(static_cast<Eigen::Index>(m), p);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& c = chains[j];
    if (c.rows() != n || c.cols() != p) throw DataError("chains differ in shape");
    const Eigen::RowVectorXd mu = c.colwise().mean();
    means.row(static_cast<Eigen::Index>(j)) = mu;
    const Eigen::MatrixXd centered = c.rowwise() - mu;
    W += centered.transpose() * centered / static_cast<double>(n - 1);
  }
  W /= static_cast<double>(m);
  const Eigen::MatrixXd mc = means.rowwise() - means.colwise().mean();
  const Eigen::MatrixXd b_over_n = mc.transpose() * mc / static_cast<double>(m - 1);

  MpsrfResult r;
  Eigen::LLT<Eigen::MatrixXd> llt(W);
  if (llt.info() != Eigen::Success) {
    W.diagonal().array() += 1e-10 * W.trace() / static_cast<double>(p);
    llt.compute(W);
    r.regularized = true;
    if (llt.info() != Eigen::Success) throw DegenerateVarianceError("within-chain covariance is singular");
  }
  // eigenvalues of W^{-1} B/n equal those of L^{-1} B/n L^{-T}
  const Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd tmp = L.triangularView<Eigen::Lower>().solve(b_over_n);
  Eigen::MatrixXd sym = L.triangularView<Eigen::Lower>().solve(tmp.transpose()).transpose();
  sym = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  const double lambda = std::max(0.0, eig.eigenvalues().maxCoeff());
  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  r.value = std::sqrt((nd - 1.0) / nd + (md + 1.0) / md * lambda);
  return r;
}

struct ConvergenceReport {
  std::vector<std::string> names;
  std::vector<double> psrf;
  double max_psrf = 0.0;
  double mpsrf = 0.0;
  bool mpsrf_regularized = false;
  std::size_t n_chains = 0;
  std::size_t n_draws_per_chain = 0;
  double threshold = 1.1;
  bool converged = true;
};

/// Diagnostics for named parameters; chains[j] is an n x p draw matrix.
/// MPSRF is NaN when draws per chain do not exceed the parameter count.
inline ConvergenceReport convergence_report(const std::vector<std::string>& names,
                                            const std::vector<Eigen::MatrixXd>& chains,
                                            double threshold = 1.1) {
  if (chains.empty()) throw DataError("no chains");
  ConvergenceReport r;
  r.names = names;
  r.n_chains = chains.size();
  r.n_draws_per_chain = static_cast<std::size_t>(chains[0].rows());
  r.threshold = threshold;
  const auto p = chains[0].cols();
  if (static_cast<std::size_t>(p) != names.size()) throw DataError("parameter names do not match draws");
  std::vector<std::vector<double>> per_chain(r.n_chains);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (std::size_t c = 0; c < r.n_chains; ++c) {
      const auto col = chains[c].col(j);
      per_chain[c].assign(col.data(), col.data() + col.size());
    }
    r.psrf.push_back(psrf(per_chain));
  }
  r.max_psrf = *std::max_element(r.psrf.begin(), r.psrf.end());
  if (r.n_draws_per_chain > static_cast<std::size_t>(p)) {
    const MpsrfResult mr = mpsrf(chains);
    r.mpsrf = mr.value;
    r.mpsrf_regularized = mr.regularized;
  } else {
    r.mpsrf = std::nan("");
  }
  r.converged = r.max_psrf <= threshold && !(r.mpsrf > threshold);
  return r;
}

/// Diagnostics over every stored continuous parameter (latent states excluded).
inline ConvergenceReport convergence_report(const ChainDraws& draws, double threshold = 1.1) {
  std::vector<Eigen::MatrixXd> mats;
  const auto n = static_cast<Eigen::Index>(draws.retained_per_chain);
  const auto p = static_cast<Eigen::Index>(draws.n_params());
  for (const auto& c : draws.chains)
    mats.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        c.draws.data(), n, p));
  return convergence_report(draws.param_names, mats, threshold);
}

}  // namespace switchcount
