#pragma once

// Command-line front end: simulate, fit, gof, compare, diagnose, report.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "switchcount/report.hpp"
#include "switchcount/simulate.hpp"

namespace switchcount {

struct UsageError : Error {
  using Error::Error;
};

namespace cli {

inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

inline std::filesystem::path out_file(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return std::filesystem::path(dir) / name;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write " + p.string());
  return f;
}

inline void write_json(const std::filesystem::path& p, const Json& j) {
  auto f = open_out(p);
  f << j.dump(2) << '\n';
}

inline PanelData read_panel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return load_panel(in);
}

inline ModelSpec model_or_usage(const std::string& name) {
  try {
    return parse_model_name(name);
  } catch (const SpecError& e) {
    throw UsageError(e.what());
  }
}

inline std::size_t env_threads() {
  const char* v = std::getenv("SWITCHCOUNT_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (*end != '\0') throw UsageError("SWITCHCOUNT_THREADS must be a non-negative integer");
  return n;
}

/// Truth used by `simulate` when no --truth file is given.
inline ParamSet default_truth(const ModelSpec& spec, std::size_t n_covariates, std::size_t n_segments) {
  ParamSet p;
  p.beta = {0.5};
  for (std::size_t k = 1; k <= n_covariates; ++k) p.beta.push_back(k % 2 ? 0.3 : -0.2);
  p.log_alpha = std::log(0.15);
  p.tau = -1.0;
  if (spec.structure == Structure::ZeroInflatedGamma)
    p.gamma.assign(gamma_columns(spec, n_covariates + 1).size(), 0.0);
  if (spec.switching()) p.transitions.assign(n_segments, TransitionPair{0.3, 0.2});
  return p;
}

inline void write_draws(std::ostream& out, const ChainDraws& d) {
  out << "chain,draw";
  for (const auto& n : d.param_names) out << ',' << n;
  out << ",loglik\n";
  for (std::size_t c = 0; c < d.chains.size(); ++c)
    for (std::size_t i = 0; i < d.retained_per_chain; ++i) {
      out << c << ',' << i;
      for (std::size_t j = 0; j < d.n_params(); ++j) out << ',' << detail::format_double(d.at(c, i, j));
      out << ',' << detail::format_double(d.chains[c].loglik[i]) << '\n';
    }
}

inline void write_state_freq(std::ostream& out, const PanelData& data, std::span<const double> probs) {
  out << "segment_id,period,count,p_state1\n";
  for (std::size_t n = 0; n < data.n_segments(); ++n)
    for (std::size_t t = 0; t < data.n_periods(); ++t)
      out << data.segment_ids()[n] << ',' << data.period_ids()[t] << ',' << data.count(t, n) << ','
          << detail::format_double(probs[data.index(t, n)]) << '\n';
}

inline void write_state_full(std::ostream& out, const PanelData& data, const ChainDraws& d) {
  out << "chain,draw";
  for (std::size_t n = 0; n < data.n_segments(); ++n)
    for (std::size_t t = 0; t < data.n_periods(); ++t)
      out << ",s:" << data.segment_ids()[n] << ':' << data.period_ids()[t];
  out << '\n';
  for (std::size_t c = 0; c < d.chains.size(); ++c)
    for (std::size_t i = 0; i < d.chains[c].states.size(); ++i) {
      out << c << ',' << i;
      for (auto s : d.chains[c].states[i]) out << ',' << static_cast<int>(s);
      out << '\n';
    }
}

/// Reads a draws CSV written by `fit` back into per-chain matrices.
inline std::pair<std::vector<std::string>, std::vector<Eigen::MatrixXd>> read_draws(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("draws file is empty");
  auto header = detail::split_csv_line(line);
  if (header.size() < 4 || header[0] != "chain" || header[1] != "draw" || header.back() != "loglik")
    throw SchemaError("draws header must be chain,draw,<params...>,loglik");
  const std::size_t p = header.size() - 3;
  std::vector<std::string> names(header.begin() + 2, header.end() - 1);
  std::vector<std::vector<std::vector<double>>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) throw SchemaError("ragged draws row at line " + std::to_string(line_no));
    const auto chain = detail::parse_double(f[0]);
    if (!chain || *chain < 0) throw SchemaError("bad chain index at line " + std::to_string(line_no));
    const auto c = static_cast<std::size_t>(*chain);
    if (rows.size() <= c) rows.resize(c + 1);
    std::vector<double> r(p);
    for (std::size_t j = 0; j < p; ++j) {
      const auto v = detail::parse_double(f[j + 2]);
      if (!v) throw SchemaError("bad value at line " + std::to_string(line_no));
      r[j] = *v;
    }
    rows[c].push_back(std::move(r));
  }
  std::vector<Eigen::MatrixXd> mats;
  for (const auto& chain : rows) {
    if (chain.size() != rows.front().size()) throw SchemaError("chains have unequal lengths");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(chain.size()), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < chain.size(); ++i)
      for (std::size_t j = 0; j < p; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = chain[i][j];
    mats.push_back(std::move(m));
  }
  return {std::move(names), std::move(mats)};
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Markov switching and zero-inflated count models for panel data"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a synthetic panel");
  std::string sim_model = "msnb", sim_truth, sim_out = ".";
  std::size_t sim_n = 100, sim_t = 5, sim_k = 2;
  std::uint64_t sim_seed = 1;
  sim->add_option("--model", sim_model, "Model to simulate from")->capture_default_str();
  sim->add_option("--segments,-N", sim_n, "Number of segments")->capture_default_str();
  sim->add_option("--periods,-T", sim_t, "Number of periods")->capture_default_str();
  sim->add_option("--covariates,-K", sim_k, "Number of covariates besides the intercept")->capture_default_str();
  sim->add_option("--truth", sim_truth, "JSON file with true parameters (point format of a fit report)");
  sim->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  sim->add_option("--out", sim_out, "Output directory")->capture_default_str();

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model by maximum likelihood or MCMC");
  std::string fit_data, fit_model, fit_method = "mcmc", fit_config, fit_store = "freq", fit_out = ".";
  std::size_t fit_gof = 10000;
  double fit_psrf = 1.1;
  std::uint64_t fit_seed = 1;
  bool fit_seed_given = false;
  fit->add_option("--data", fit_data, "Panel CSV")->required();
  fit->add_option("--model", fit_model, "One of: nb, poisson, zinb-tau, zinb-gamma, zip-tau, zip-gamma, msnb, msp")
      ->required();
  fit->add_option("--method", fit_method, "mle or mcmc")->check(CLI::IsMember({"mle", "mcmc"}))->capture_default_str();
  fit->add_option("--config", fit_config, "JSON with optional priors, mcmc, mle and gamma_columns objects");
  fit->add_option("--gof-reps", fit_gof, "Goodness-of-fit replications (0 skips)")->capture_default_str();
  fit->add_option("--psrf-threshold", fit_psrf, "Convergence threshold for PSRF and MPSRF")->capture_default_str();
  fit->add_option("--store-states", fit_store, "freq or full")->check(CLI::IsMember({"freq", "full"}))
      ->capture_default_str();
  fit->add_option("--seed", fit_seed, "Random seed (overrides the config)")
      ->each([&fit_seed_given](const std::string&) { fit_seed_given = true; });
  fit->add_option("--out", fit_out, "Output directory")->capture_default_str();

  // gof
  auto* gof = app.add_subcommand("gof", "Goodness of fit of a fitted report against a panel");
  std::string gof_data, gof_report, gof_out;
  std::size_t gof_reps = 10000;
  std::uint64_t gof_seed = 1;
  gof->add_option("--data", gof_data, "Panel CSV")->required();
  gof->add_option("--report", gof_report, "Fit report JSON")->required();
  gof->add_option("--reps", gof_reps, "Monte Carlo replications")->capture_default_str();
  gof->add_option("--seed", gof_seed, "Random seed")->capture_default_str();
  gof->add_option("--out", gof_out, "Output directory for gof.json");

  // compare
  auto* cmp = app.add_subcommand("compare", "Bayes log-factor of the second report over the first");
  std::string cmp_a, cmp_b;
  cmp->add_option("first", cmp_a, "Baseline fit report")->required();
  cmp->add_option("second", cmp_b, "Competing fit report")->required();

  // diagnose
  auto* dia = app.add_subcommand("diagnose", "Convergence diagnostics for a draws CSV");
  std::string dia_draws, dia_out;
  double dia_psrf = 1.1;
  dia->add_option("--draws", dia_draws, "Draws CSV written by fit")->required();
  dia->add_option("--psrf-threshold", dia_psrf, "Convergence threshold")->capture_default_str();
  dia->add_option("--out", dia_out, "Output directory for convergence.json");

  // report
  auto* rep = app.add_subcommand("report", "CSV extracts of a switching fit report");
  std::string rep_report, rep_out = ".";
  std::size_t rep_bins = 10;
  rep->add_option("--report", rep_report, "Fit report JSON")->required();
  rep->add_option("--bins", rep_bins, "Histogram bins over [0,1)")->capture_default_str()->check(CLI::PositiveNumber);
  rep->add_option("--out", rep_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  if (*sim) {
    const ModelSpec spec = model_or_usage(sim_model);
    ParamSet truth = default_truth(spec, sim_k, sim_n);
    if (!sim_truth.empty()) truth = point_from_json(read_json(sim_truth));
    const auto s = simulate_panel(spec, truth, standard_normal_covariates(), sim_n, sim_t, sim_seed);
    {
      auto f = open_out(out_file(sim_out, "panel.csv"));
      write_panel(f, s.data);
    }
    {
      auto f = open_out(out_file(sim_out, "states.csv"));
      f << "segment_id,period,state\n";
      for (std::size_t n = 0; n < sim_n; ++n)
        for (std::size_t t = 0; t < sim_t; ++t)
          f << s.data.segment_ids()[n] << ',' << s.data.period_ids()[t] << ','
            << static_cast<int>(s.states[s.data.index(t, n)]) << '\n';
    }
    write_json(out_file(sim_out, "truth.json"),
               Json{{"model", model_name(spec)}, {"seed", sim_seed}, {"point", point_to_json(spec, truth)}});
    out << "wrote " << sim_n * sim_t << " cells to " << sim_out << '\n';
    return 0;
  }

  if (*fit) {
    ModelSpec spec = model_or_usage(fit_model);
    if (fit_method == "mle" && spec.switching())
      throw UsageError("maximum likelihood is not supported for switching models (" + fit_model +
                       "); use --method mcmc");
    Json config = fit_config.empty() ? Json::object() : read_json(fit_config);
    PriorConfig priors;
    McmcConfig mcfg;
    MleOptions mopts;
    try {
      if (config.contains("priors")) from_json(config.at("priors"), priors);
      if (config.contains("mcmc")) from_json(config.at("mcmc"), mcfg);
      if (config.contains("mle")) mopts.multistart = config.at("mle").value("multistart", mopts.multistart);
      if (config.contains("gamma_columns")) spec.gamma_columns = config.at("gamma_columns").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("invalid config: ") + e.what());
    }
    if (fit_seed_given) mcfg.seed = fit_seed;
    mopts.seed = mcfg.seed;
    mcfg.store_states = fit_store == "full" ? StoreStates::Full : StoreStates::Frequency;
    mcfg.max_threads = env_threads();

    const PanelData data = read_panel(fit_data);
    ReportOptions ropts{fit_gof, mcfg.seed, fit_psrf, 1000};
    FitReport report;
    if (fit_method == "mle") {
      report = build_mle_report(data, fit_mle(spec, data, std::nullopt, mopts), ropts);
    } else {
      const ChainDraws draws = sample_posterior(spec, data, priors, mcfg);
      report = build_mcmc_report(data, draws, priors, mcfg, ropts);
      {
        auto f = open_out(out_file(fit_out, "draws.csv"));
        write_draws(f, draws);
      }
      if (spec.switching()) {
        if (mcfg.store_states == StoreStates::Full) {
          auto f = open_out(out_file(fit_out, "states_full.csv"));
          write_state_full(f, data, draws);
        } else {
          auto f = open_out(out_file(fit_out, "states_freq.csv"));
          write_state_freq(f, data, report.state_series);
        }
      }
    }
    write_json(out_file(fit_out, "report.json"), to_json(report));
    out << model_name(spec) << " (" << fit_method << ")";
    if (report.max_loglik) out << " max loglik " << detail::format_double(*report.max_loglik);
    if (report.evidence) out << " log ML " << detail::format_double(report.evidence->log_ml);
    out << (report.converged ? "" : " [not converged]") << '\n';
    for (const auto& w : report.warnings) out << "warning: " << w << '\n';
    return 0;
  }

  if (*gof) {
    const Json rj = read_json(gof_report);
    const ModelSpec spec = spec_from_json(rj);
    const PanelData data = read_panel(gof_data);
    ParamSet point = point_from_json(rj.at("point"));
    const GofResult g = gof_pvalue(data, spec, point, gof_reps, gof_seed);
    if (!gof_out.empty()) write_json(out_file(gof_out, "gof.json"), to_json(g));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", g.p_value);
    out << "chi2 " << detail::format_double(g.chi2_observed) << " p " << buf << '\n';
    return 0;
  }

  if (*cmp) {
    auto log_ml = [](const std::string& path) {
      const Json j = read_json(path);
      if (!j.contains("evidence")) throw DataError(path + " has no marginal likelihood; compare needs MCMC fit reports");
      return j.at("evidence").at("log_ml").get<double>();
    };
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", bayes_log_factor(log_ml(cmp_b), log_ml(cmp_a)));
    out << buf << '\n';
    return 0;
  }

  if (*dia) {
    std::ifstream in(dia_draws);
    if (!in) throw DataError("cannot open " + dia_draws);
    auto [names, chains] = read_draws(in);
    const auto r = convergence_report(names, chains, dia_psrf);
    if (!dia_out.empty()) write_json(out_file(dia_out, "convergence.json"), to_json(r));
    out << "max PSRF " << detail::format_double(r.max_psrf) << " MPSRF " << detail::format_double(r.mpsrf)
        << (r.converged ? " converged" : " not converged") << '\n';
    return 0;
  }

  if (*rep) {
    const Json rj = read_json(rep_report);
    if (!rj.contains("state_series")) throw DataError("report has no state series (switching models only)");
    const auto segs = rj.at("segment_ids").get<std::vector<std::string>>();
    const auto pers = rj.at("period_ids").get<std::vector<std::string>>();
    const auto series = rj.at("state_series").get<std::vector<std::vector<double>>>();
    const auto expect = rj.at("stationary_expectations").get<std::vector<double>>();
    const auto lrm = rj.at("long_run_means").get<std::vector<double>>();
    const auto cats = rj.at("segment_categories").get<std::vector<std::string>>();
    std::vector<double> below_one;
    std::size_t exact_one = 0;
    {
      auto f = open_out(out_file(rep_out, "state_series.csv"));
      f << "segment_id,period,p_state1\n";
      for (std::size_t n = 0; n < segs.size(); ++n)
        for (std::size_t t = 0; t < pers.size(); ++t) {
          const double p = series.at(n).at(t);
          f << segs[n] << ',' << pers[t] << ',' << detail::format_double(p) << '\n';
          if (p == 1.0)
            ++exact_one;
          else
            below_one.push_back(p);
        }
    }
    {
      auto f = open_out(out_file(rep_out, "histogram.csv"));
      f << "bin_lo,bin_hi,cells\n";
      const auto h = unit_histogram(below_one, rep_bins);
      for (std::size_t b = 0; b < rep_bins; ++b)
        f << detail::format_double(static_cast<double>(b) / static_cast<double>(rep_bins)) << ','
          << detail::format_double(static_cast<double>(b + 1) / static_cast<double>(rep_bins)) << ',' << h[b] << '\n';
      f << "1,1," << exact_one << '\n';
    }
    {
      auto f = open_out(out_file(rep_out, "segments.csv"));
      f << "segment_id,category,stationary_p1,long_run_mean\n";
      for (std::size_t n = 0; n < segs.size(); ++n)
        f << segs[n] << ',' << cats.at(n) << ',' << detail::format_double(expect.at(n)) << ','
          << detail::format_double(lrm.at(n)) << '\n';
    }
    out << "wrote state_series.csv, histogram.csv, segments.csv to " << rep_out << '\n';
    return 0;
  }
  return 0;
}

}  // namespace cli

/// Runs the command line; never throws.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    return cli::run(argc, argv, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace switchcount
