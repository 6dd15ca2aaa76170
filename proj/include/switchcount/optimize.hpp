#pragma once

// Unconstrained minimization: a Nelder-Mead warm start followed by BFGS on
// central finite-difference gradients, plus a finite-difference Hessian.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace switchcount::optim {

using Objective = std::function<double(std::span<const double>)>;

struct Options {
  double grad_tol = 1e-5;       // gradient inf-norm bound, scaled by max(1, |f|)
  double step_tol = 1e-8;       // relative step bound
  std::size_t max_evals = 10000;
  double simplex_ftol = 1e-9;   // relative spread of simplex values
  std::size_t simplex_evals_per_dim = 300;
};

struct Result {
  std::vector<double> x;
  double fx = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  double grad_inf_norm = std::numeric_limits<double>::infinity();
};

namespace detail {

class Counted {
 public:
  explicit Counted(const Objective& f) : f_(f) {}
  double operator()(std::span<const double> x) {
    ++evals;
    const double v = f_(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }
  std::size_t evals = 0;

 private:
  const Objective& f_;
};

inline double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

}  // namespace detail

inline double scale_of(std::span<const double> typical, std::size_t i, double xi) {
  const double typ = typical.empty() ? 1.0 : typical[i];
  return std::max(typ, std::abs(xi));
}

/// Central differences with step cbrt(eps) * max(typical_i, |x_i|).
inline std::vector<double> fd_gradient(const Objective& f, std::span<const double> x,
                                       std::span<const double> typical = {},
                                       std::size_t* evals = nullptr) {
  static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  std::vector<double> g(x.size());
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = h0 * scale_of(typical, i, x[i]);
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  if (evals) *evals += 2 * x.size();
  return g;
}

/// Symmetric finite-difference Hessian, row-major p x p.
inline std::vector<double> fd_hessian(const Objective& f, std::span<const double> x,
                                      std::span<const double> typical = {}) {
  static const double h0 = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  const std::size_t p = x.size();
  std::vector<double> H(p * p);
  std::vector<double> h(p);
  for (std::size_t i = 0; i < p; ++i) h[i] = h0 * scale_of(typical, i, x[i]);
  std::vector<double> xp(x.begin(), x.end());
  const double f0 = f(x);
  for (std::size_t i = 0; i < p; ++i) {
    xp[i] = x[i] + h[i];
    const double fp = f(xp);
    xp[i] = x[i] - h[i];
    const double fm = f(xp);
    xp[i] = x[i];
    H[i * p + i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (std::size_t j = 0; j < i; ++j) {
      auto at = [&](double si, double sj) {
        xp[i] = x[i] + si * h[i];
        xp[j] = x[j] + sj * h[j];
        const double v = f(xp);
        xp[i] = x[i];
        xp[j] = x[j];
        return v;
      };
      const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h[i] * h[j]);
      H[i * p + j] = v;
      H[j * p + i] = v;
    }
  }
  return H;
}

/// Nelder-Mead with standard coefficients (1, 2, 0.5, 0.5).
inline Result nelder_mead(const Objective& objective, std::vector<double> x0,
                          std::span<const double> typical = {}, const Options& opts = {}) {
  detail::Counted f(objective);
  const std::size_t p = x0.size();
  const std::size_t budget = std::min(opts.max_evals, opts.simplex_evals_per_dim * (p + 1));
  std::vector<std::vector<double>> simplex(p + 1, x0);
  std::vector<double> fv(p + 1);
  for (std::size_t i = 0; i < p; ++i) simplex[i + 1][i] += 0.25 * scale_of(typical, i, x0[i]);
  for (std::size_t i = 0; i <= p; ++i) fv[i] = f(simplex[i]);

  Result r;
  std::vector<std::size_t> order(p + 1);
  std::vector<double> centroid(p), trial(p), trial2(p);
  auto point = [&](double coef, std::vector<double>& out) {
    for (std::size_t k = 0; k < p; ++k)
      out[k] = centroid[k] + coef * (simplex[order[p]][k] - centroid[k]);
  };
  while (f.evals < budget) {
    ++r.iterations;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const double best = fv[order[0]], worst = fv[order[p]];
    if (std::isfinite(worst) && worst - best <= opts.simplex_ftol * (1.0 + std::abs(best))) {
      r.converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t k = 0; k < p; ++k) centroid[k] += simplex[order[i]][k] / static_cast<double>(p);
    point(-1.0, trial);
    const double fr = f(trial);
    if (fr < best) {
      point(-2.0, trial2);
      const double fe = f(trial2);
      if (fe < fr) {
        simplex[order[p]] = trial2;
        fv[order[p]] = fe;
      } else {
        simplex[order[p]] = trial;
        fv[order[p]] = fr;
      }
      continue;
    }
    if (fr < fv[order[p - 1]]) {
      simplex[order[p]] = trial;
      fv[order[p]] = fr;
      continue;
    }
    const bool outside = fr < worst;
    point(outside ? -0.5 : 0.5, trial2);
    const double fc = f(trial2);
    if (fc < (outside ? fr : worst)) {
      simplex[order[p]] = trial2;
      fv[order[p]] = fc;
      continue;
    }
    for (std::size_t i = 1; i <= p; ++i) {
      auto& v = simplex[order[i]];
      for (std::size_t k = 0; k < p; ++k) v[k] = simplex[order[0]][k] + 0.5 * (v[k] - simplex[order[0]][k]);
      fv[order[i]] = f(v);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  r.x = simplex[best];
  r.fx = fv[best];
  r.evaluations = f.evals;
  return r;
}

/// BFGS on the inverse Hessian with backtracking Armijo line search.
inline Result bfgs(const Objective& objective, std::vector<double> x,
                   std::span<const double> typical = {}, const Options& opts = {}) {
  detail::Counted f(objective);
  const std::size_t p = x.size();
  Result r;
  double fx = f(x);
  auto grad = [&](std::span<const double> at) {
    return fd_gradient([&f](std::span<const double> z) { return f(z); }, at, typical);
  };
  std::vector<double> g = grad(x);
  auto identity_scaled = [&](double s) {
    std::vector<double> H(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
      const double typ = typical.empty() ? 1.0 : typical[i];
      H[i * p + i] = s * typ * typ;
    }
    return H;
  };
  std::vector<double> Hinv = identity_scaled(1.0 / std::max(1.0, detail::inf_norm(g)));
  bool fresh = true;
  std::vector<double> d(p), xn(p), s(p), y(p), Hy(p);
  while (f.evals < opts.max_evals) {
    r.grad_inf_norm = detail::inf_norm(g);
    if (r.grad_inf_norm < opts.grad_tol * std::max(1.0, std::abs(fx))) {
      r.converged = true;
      break;
    }
    ++r.iterations;
    double gd = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      d[i] = 0.0;
      for (std::size_t j = 0; j < p; ++j) d[i] -= Hinv[i * p + j] * g[j];
      gd += g[i] * d[i];
    }
    if (!(gd < 0.0)) {
      Hinv = identity_scaled(1.0 / std::max(1.0, r.grad_inf_norm));
      fresh = true;
      continue;
    }
    double step = 1.0, fn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60 && f.evals < opts.max_evals; ++ls, step *= 0.5) {
      for (std::size_t i = 0; i < p; ++i) xn[i] = x[i] + step * d[i];
      fn = f(xn);
      if (fn <= fx + 1e-4 * step * gd) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (fresh) break;
      Hinv = identity_scaled(1.0 / std::max(1.0, r.grad_inf_norm));
      fresh = true;
      continue;
    }
    double rel_step = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      s[i] = xn[i] - x[i];
      rel_step = std::max(rel_step, std::abs(s[i]) / scale_of(typical, i, x[i]));
    }
    std::vector<double> gn = grad(xn);
    x = xn;
    fx = fn;
    double sy = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      y[i] = gn[i] - g[i];
      sy += s[i] * y[i];
    }
    g = std::move(gn);
    if (rel_step < opts.step_tol) {
      r.grad_inf_norm = detail::inf_norm(g);
      r.converged = true;
      break;
    }
    if (sy > 1e-12 * detail::inf_norm(s) * detail::inf_norm(y)) {
      if (fresh) {
        // rescale the initial inverse Hessian to the observed curvature
        double yy = 0.0;
        for (double e : y) yy += e * e;
        Hinv = identity_scaled(0.0);
        for (std::size_t i = 0; i < p; ++i) Hinv[i * p + i] = sy / yy;
      }
      for (std::size_t i = 0; i < p; ++i) {
        Hy[i] = 0.0;
        for (std::size_t j = 0; j < p; ++j) Hy[i] += Hinv[i * p + j] * y[j];
      }
      double yHy = 0.0;
      for (std::size_t i = 0; i < p; ++i) yHy += y[i] * Hy[i];
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
          Hinv[i * p + j] += rho * ((1.0 + rho * yHy) * s[i] * s[j] - Hy[i] * s[j] - s[i] * Hy[j]);
      fresh = false;
    }
  }
  r.x = std::move(x);
  r.fx = fx;
  r.evaluations = f.evals;
  if (!std::isfinite(r.grad_inf_norm)) r.grad_inf_norm = detail::inf_norm(g);
  return r;
}

/// Nelder-Mead warm start, then BFGS refinement from the best simplex vertex.
inline Result minimize(const Objective& f, std::vector<double> x0,
                       std::span<const double> typical = {}, const Options& opts = {}) {
  Result warm = nelder_mead(f, std::move(x0), typical, opts);
  Options rest = opts;
  rest.max_evals = opts.max_evals > warm.evaluations ? opts.max_evals - warm.evaluations : 0;
  Result r = bfgs(f, warm.x, typical, rest);
  if (r.fx > warm.fx) {  // never hand back something worse than the warm start
    r.x = warm.x;
    r.fx = warm.fx;
  }
  r.iterations += warm.iterations;
  r.evaluations += warm.evaluations;
  return r;
}

}  // namespace switchcount::optim
