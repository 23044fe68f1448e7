#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hcv/errors.hpp"
#include "hcv/fluctuations.hpp"
#include "hcv/io.hpp"
#include "hcv/meanfield.hpp"
#include "hcv/model.hpp"
#include "hcv/odesys.hpp"
#include "hcv/sensitivity.hpp"
#include "hcv/ssa.hpp"
#include "hcv/stationary.hpp"

namespace hcv::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Fully resolved settings of one invocation. Zero or negative values of
/// N, T, paths, samples, burn_in and horizon mean "use the command default"
/// until resolve() runs.
struct RunConfig {
  std::string command;
  ModelParams params{1.0, 5.0, 0.8, 1.0, 0.5, 0.1, 0.2};
  std::string x0 = "0.5,0.5";  // densities, or "equilibrium"
  std::int64_t N = 0;
  double T = 0.0;
  std::size_t paths = 0;
  std::uint64_t seed = 1;
  std::string out;
  unsigned threads = 0;
  std::string format = "csv";
  double tol = 1e-9;
  std::int64_t K = 30;
  double burn_in = -1.0;
  double horizon = -1.0;
  std::size_t samples = 0;
  double step = 1e-5;
  std::string form = "covariance";
  std::string functional = "terminal_prevalence";
  std::vector<double> p_list;
  std::vector<std::int64_t> n_list;
};

[[nodiscard]] inline std::vector<double> default_p_sweep() {
  std::vector<double> ps;
  for (int i = 1; i <= 20; ++i) ps.push_back(0.05 * i);
  return ps;
}

/// Fills every unset field with the default of cfg.command.
inline void resolve(RunConfig& cfg) {
  const ModelParams& p = cfg.params;
  const double mu_min = std::min(p.mu1, p.mu2);
  const std::string& c = cfg.command;
  const bool sweep = c == "prevalence-sweep" || c == "greek";
  if (cfg.N <= 0) cfg.N = c == "clt" ? 1000 : (c == "oracle" || c == "ode" || c == "equilibrium") ? 1 : 100;
  if (cfg.T <= 0.0) cfg.T = sweep ? 20.0 / mu_min : c == "clt" ? 5.0 : 10.0;
  if (cfg.paths == 0) cfg.paths = c == "lln" ? 500 : c == "simulate" ? 1 : 10000;
  if (c == "stationary") {
    if (cfg.samples == 0) cfg.samples = 10000;
    if (cfg.burn_in < 0.0) cfg.burn_in = default_burn_in(p);
    if (cfg.horizon <= 0.0) cfg.horizon = cfg.burn_in + static_cast<double>(cfg.samples) * default_spacing(p);
  }
  if (c == "ode" && cfg.samples == 0) cfg.samples = 101;
  if (c == "prevalence-sweep" && cfg.p_list.empty()) cfg.p_list = default_p_sweep();
  if (c == "greek" && cfg.p_list.empty()) cfg.p_list = {p.p};
  if (c == "lln" && cfg.n_list.empty()) cfg.n_list = {cfg.N};
}

/// Key/value echo of the resolved configuration.
[[nodiscard]] inline std::vector<std::pair<std::string, std::string>> echo(const RunConfig& cfg) {
  auto list = [](const auto& xs) {
    std::string s;
    for (const auto& x : xs) {
      if (!s.empty()) s += ',';
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(x)>>) {
        s += io::fmt(x);
      } else {
        s += std::to_string(x);
      }
    }
    return s;
  };
  const ModelParams& p = cfg.params;
  std::vector<std::pair<std::string, std::string>> kv = {
      {"command", cfg.command}, {"r", io::fmt(p.r)},       {"lambda", io::fmt(p.lambda)}, {"p-i", io::fmt(p.p_I)},
      {"alpha", io::fmt(p.alpha)}, {"p", io::fmt(p.p)},     {"mu1", io::fmt(p.mu1)},       {"mu2", io::fmt(p.mu2)},
      {"x0", cfg.x0},           {"N", std::to_string(cfg.N)}, {"T", io::fmt(cfg.T)},
      {"paths", std::to_string(cfg.paths)}, {"seed", std::to_string(cfg.seed)}, {"tol", io::fmt(cfg.tol)}};
  const std::string& c = cfg.command;
  if (c == "oracle") kv.emplace_back("K", std::to_string(cfg.K));
  if (c == "stationary") {
    kv.emplace_back("burn-in", io::fmt(cfg.burn_in));
    kv.emplace_back("horizon", io::fmt(cfg.horizon));
  }
  if (c == "stationary" || c == "ode") kv.emplace_back("samples", std::to_string(cfg.samples));
  if (c == "greek") {
    kv.emplace_back("step", io::fmt(cfg.step));
    kv.emplace_back("form", cfg.form);
    kv.emplace_back("functional", cfg.functional);
  }
  if (!cfg.p_list.empty()) kv.emplace_back("p-list", list(cfg.p_list));
  if (!cfg.n_list.empty()) kv.emplace_back("N-list", list(cfg.n_list));
  return kv;
}

/// Tabular or structured result of one command.
struct Output {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> notes;  // extra comment lines in CSV
  nlohmann::ordered_json json;
};

inline void write_output(std::ostream& os, const RunConfig& cfg, const Output& o) {
  if (cfg.format == "csv") {
    os << "# hcvsim " << kVersion << '\n';
    for (const auto& [k, v] : echo(cfg)) os << "# " << k << '=' << v << '\n';
    for (const auto& [k, v] : o.notes) os << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < o.header.size(); ++i) os << (i ? "," : "") << o.header[i];
    os << '\n';
    for (const auto& row : o.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << '\n';
    }
  } else {
    nlohmann::ordered_json doc;
    doc["version"] = std::string("hcvsim ") + kVersion;
    nlohmann::ordered_json conf = nlohmann::ordered_json::object();
    for (const auto& [k, v] : echo(cfg)) conf[k] = v;
    doc["config"] = conf;
    doc["result"] = o.json;
    os << doc.dump(2) << '\n';
  }
}

namespace detail {

[[nodiscard]] inline PsiState parse_pair(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("--x0 expects 'x1,x2' or 'equilibrium'");
  std::size_t used1 = 0, used2 = 0;
  PsiState x;
  try {
    x.psi1 = std::stod(s.substr(0, comma), &used1);
    x.psi2 = std::stod(s.substr(comma + 1), &used2);
  } catch (const std::exception&) {
    throw std::invalid_argument("--x0 expects 'x1,x2' or 'equilibrium'");
  }
  if (used1 != comma || used2 != s.size() - comma - 1) throw std::invalid_argument("--x0 expects 'x1,x2' or 'equilibrium'");
  validate(x);
  return x;
}

/// Start density for parameters p.
[[nodiscard]] inline PsiState start_density(const RunConfig& cfg, const ModelParams& p) {
  if (cfg.x0 == "equilibrium") return equilibrium(p).point();
  return parse_pair(cfg.x0);
}

[[nodiscard]] inline std::string s(double x) { return io::fmt(x); }
[[nodiscard]] inline std::string s(std::int64_t x) { return std::to_string(x); }
[[nodiscard]] inline std::string s(std::size_t x) { return std::to_string(x); }

[[nodiscard]] inline Output cmd_simulate(const RunConfig& cfg) {
  const ModelParams scaled = scale(cfg.params, cfg.N);
  const State x0 = discretize(start_density(cfg, cfg.params), cfg.N);
  const Trajectory traj = simulate(scaled, x0, cfg.T, cfg.seed);
  Output o;
  o.header = {"time", "jump_type", "n1", "n2"};
  o.rows.push_back({s(0.0), "0", s(x0.n1), s(x0.n2)});
  for (const auto& e : traj.events)
    o.rows.push_back({s(e.time), std::to_string(rate_index(e.jump)), s(e.state.n1), s(e.state.n2)});
  const auto counts = count_all_jumps(traj, cfg.T);
  const State xT = traj.final_state();
  o.json = {{"initial_state", {x0.n1, x0.n2}},
            {"final_state", {xT.n1, xT.n2}},
            {"events", traj.events.size()},
            {"jump_counts", counts},
            {"integrated_rates", integrated_rates(traj, scaled, cfg.T)}};
  return o;
}

[[nodiscard]] inline Output cmd_ode(const RunConfig& cfg) {
  const PsiState x0 = start_density(cfg, cfg.params);
  const PsiPath path = integrate(cfg.params, x0, cfg.T, cfg.tol);
  Output o;
  o.header = {"t", "psi1", "psi2"};
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  const std::size_t n = std::max<std::size_t>(cfg.samples, 2);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = k + 1 == n ? cfg.T : cfg.T * static_cast<double>(k) / static_cast<double>(n - 1);
    const PsiState y = path.at(t);
    o.rows.push_back({s(t), s(y.psi1), s(y.psi2)});
    pts.push_back({t, y.psi1, y.psi2});
  }
  o.json = {{"steps", path.steps()}, {"samples", pts}};
  return o;
}

[[nodiscard]] inline Output cmd_equilibrium(const RunConfig& cfg) {
  const EquilibriumPoint e = equilibrium(cfg.params);
  const auto f = rhs(cfg.params, e.point());
  const double prev = prevalence(e);
  Output o;
  o.header = {"xi1", "xi2", "prevalence", "branch", "rho", "residual"};
  const double res = std::abs(f[0]) + std::abs(f[1]);
  o.rows.push_back({s(e.xi1), s(e.xi2), s(prev), to_string(e.branch), s(e.rho), s(res)});
  o.json = {{"xi1", e.xi1}, {"xi2", e.xi2}, {"prevalence", prev}, {"branch", to_string(e.branch)},
            {"rho", e.rho}, {"residual", res}};
  return o;
}

[[nodiscard]] inline Output cmd_lln(const RunConfig& cfg) {
  const PsiState x0 = start_density(cfg, cfg.params);
  Output o;
  o.header = {"N", "T", "paths", "sup_err_sq_mean", "sup_err_sq_se", "bound", "bound_respected", "ratio_to_previous"};
  o.json = nlohmann::ordered_json::array();
  double prev = std::nan("");
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    const auto N = cfg.n_list[i];
    const LLNReport rep = lln_experiment(cfg.params, x0, N, cfg.T, cfg.paths, stream_seed(cfg.seed, i), cfg.threads);
    const double ratio = prev / rep.sup_err_sq_mean;
    o.rows.push_back({s(N), s(cfg.T), s(cfg.paths), s(rep.sup_err_sq_mean), s(rep.sup_err_sq_se), s(rep.bound),
                      rep.bound_respected() ? "1" : "0", std::isnan(ratio) ? "" : s(ratio)});
    o.json.push_back({{"N", N}, {"sup_err_sq_mean", rep.sup_err_sq_mean}, {"sup_err_sq_se", rep.sup_err_sq_se},
                      {"bound", rep.bound}, {"bound_respected", rep.bound_respected()},
                      {"sup_err_median", rep.sup_error_quantile(0.5)}});
    prev = rep.sup_err_sq_mean;
  }
  return o;
}

[[nodiscard]] inline Output cmd_clt(const RunConfig& cfg) {
  const PsiState x0 = start_density(cfg, cfg.params);
  const CltReport rep = clt_experiment(cfg.params, x0, cfg.N, cfg.T, cfg.paths, cfg.seed, cfg.threads, cfg.tol);
  Output o;
  o.header = {"entry", "empirical", "gamma", "rel_err"};
  const std::array<const char*, 3> names = {"g11", "g12", "g22"};
  const std::array<double, 3> emp = {rep.empirical.g11, rep.empirical.g12, rep.empirical.g22};
  const std::array<double, 3> th = {rep.theoretical.g11, rep.theoretical.g12, rep.theoretical.g22};
  nlohmann::ordered_json entries = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < 3; ++k) {
    o.rows.push_back({names[k], s(emp[k]), s(th[k]), s(rep.rel_err[k])});
    entries[names[k]] = {{"empirical", emp[k]}, {"gamma", th[k]}, {"rel_err", rep.rel_err[k]}};
  }
  o.notes = {{"mean_w", s(rep.mean_w[0]) + "," + s(rep.mean_w[1])},
             {"mean_w_se", s(rep.mean_w_se[0]) + "," + s(rep.mean_w_se[1])}};
  o.json = {{"covariance", entries},
            {"mean_w", rep.mean_w},
            {"mean_w_se", rep.mean_w_se},
            {"skewness", {rep.moments[0].skewness, rep.moments[1].skewness}},
            {"kurtosis", {rep.moments[0].kurtosis, rep.moments[1].kurtosis}}};
  return o;
}

[[nodiscard]] inline Output cmd_stationary(const RunConfig& cfg) {
  const PsiState x0 = start_density(cfg, cfg.params);
  const StationaryEstimate est =
      estimate_stationary(cfg.params, cfg.N, x0, cfg.burn_in, cfg.horizon, cfg.samples, cfg.seed);
  const EquilibriumPoint lim = limit_point(cfg.params, x0);
  const auto mi = moment_identity_estimate(est.samples, scale(cfg.params, cfg.N));
  const double det_prev = lim.xi1 + lim.xi2 > 0.0 ? prevalence(lim) : 0.0;
  const double dist = l1(est.mean_y1 - lim.xi1, est.mean_y2 - lim.xi2);
  Output o;
  o.header = {"N", "mean_y1", "mean_y2", "prevalence", "prevalence_se", "deterministic_prevalence", "distance_to_limit",
              "moment_residual", "moment_residual_se", "n_samples"};
  o.rows.push_back({s(est.N), s(est.mean_y1), s(est.mean_y2), s(est.prevalence), s(est.prevalence_se), s(det_prev),
                    s(dist), s(mi.mean), s(mi.std_error), s(est.n_samples)});
  o.json = {{"N", est.N},
            {"mean_y", {est.mean_y1, est.mean_y2}},
            {"prevalence", est.prevalence},
            {"prevalence_se", est.prevalence_se},
            {"limit_point", {lim.xi1, lim.xi2}},
            {"deterministic_prevalence", det_prev},
            {"distance_to_limit", dist},
            {"moment_residual", mi.mean},
            {"moment_residual_se", mi.std_error},
            {"n_samples", est.n_samples},
            {"burn_in", est.burn_in},
            {"horizon", est.horizon}};
  return o;
}

[[nodiscard]] inline Output cmd_oracle(const RunConfig& cfg) {
  const ModelParams scaled = scale(cfg.params, cfg.N);
  const TruncatedSolve ts = truncated_solve(scaled, cfg.K);
  Output o;
  o.header = {"n1", "n2", "prob"};
  ts.for_each([&](const State& x, double w) { o.rows.push_back({s(x.n1), s(x.n2), s(w)}); });
  const double mi = moment_identity_exact(ts, scaled);
  o.notes = {{"residual", s(ts.residual)}, {"mass_bound", s(ts.mass_bound)}, {"moment_identity", s(mi)}};
  o.json = {{"K", ts.K}, {"states", ts.prob.size()}, {"residual", ts.residual}, {"mass_bound", ts.mass_bound},
            {"moment_identity", mi}, {"prob", ts.prob}};
  return o;
}

[[nodiscard]] inline Output cmd_greek(const RunConfig& cfg) {
  const PathFunctional F = functional_by_name(cfg.functional);
  const GreekForm form = greek_form_from_string(cfg.form);
  Output o;
  o.header = {"p", "deterministic_greek", "estimate", "std_error", "ci_low", "ci_high", "form", "functional", "paths"};
  o.json = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cfg.p_list.size(); ++i) {
    const ModelParams p = with_infection_probability(cfg.params, cfg.p_list[i]);
    const State x0 = discretize(start_density(cfg, p), cfg.N);
    const double det = deterministic_greek(p, std::min(cfg.step, 0.5 * p.p));
    const GreekEstimate g =
        greek(scale(p, cfg.N), x0, F, cfg.T, cfg.paths, stream_seed(cfg.seed, i), form, cfg.threads);
    o.rows.push_back({s(cfg.p_list[i]), s(det), s(g.estimate), s(g.std_error), s(g.ci_low()), s(g.ci_high()), g.form,
                      g.functional, s(g.n_paths)});
    o.json.push_back({{"p", cfg.p_list[i]}, {"deterministic_greek", det}, {"estimate", g.estimate},
                      {"std_error", g.std_error}, {"ci", {g.ci_low(), g.ci_high()}}, {"form", g.form},
                      {"functional", g.functional}, {"n_paths", g.n_paths}, {"seed", g.seed}});
  }
  return o;
}

[[nodiscard]] inline Output cmd_prevalence_sweep(const RunConfig& cfg) {
  Output o;
  o.header = {"p", "deterministic_prevalence", "simulated_prevalence", "std_error", "ci_low", "ci_high"};
  o.json = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cfg.p_list.size(); ++i) {
    const ModelParams p = with_infection_probability(cfg.params, cfg.p_list[i]);
    const PsiState x0 = start_density(cfg, p);
    const double det = prevalence(limit_point(p, x0));
    const auto sim = ensemble_prevalence(p, cfg.N, discretize(x0, cfg.N), cfg.T, cfg.paths, stream_seed(cfg.seed, i),
                                         cfg.threads);
    o.rows.push_back({s(cfg.p_list[i]), s(det), s(sim.mean), s(sim.std_error), s(sim.ci_low()), s(sim.ci_high())});
    o.json.push_back({{"p", cfg.p_list[i]}, {"deterministic_prevalence", det}, {"simulated_prevalence", sim.mean},
                      {"std_error", sim.std_error}, {"ci", {sim.ci_low(), sim.ci_high()}}});
  }
  return o;
}

[[nodiscard]] inline std::string env_name(std::string flag) {
  for (char& ch : flag) ch = ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return "HCV_" + flag;
}

}  // namespace detail

[[nodiscard]] inline Output execute(const RunConfig& cfg) {
  using Fn = Output (*)(const RunConfig&);
  static const std::map<std::string, Fn> table = {
      {"simulate", detail::cmd_simulate}, {"ode", detail::cmd_ode},
      {"equilibrium", detail::cmd_equilibrium}, {"lln", detail::cmd_lln},
      {"clt", detail::cmd_clt},           {"stationary", detail::cmd_stationary},
      {"oracle", detail::cmd_oracle},     {"greek", detail::cmd_greek},
      {"prevalence-sweep", detail::cmd_prevalence_sweep}};
  const auto it = table.find(cfg.command);
  if (it == table.end()) throw std::invalid_argument("unknown command '" + cfg.command + "'");
  validate(cfg.params);
  if (cfg.format != "csv" && cfg.format != "text") throw std::invalid_argument("--format must be csv or text");
  return it->second(cfg);
}

/// Entry point of the hcvsim binary. Exit codes: 0 success, 1 usage or
/// invalid input, 2 numerical failure.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Stochastic and mean-field simulation of HCV spread among injecting drug users", "hcvsim"};
  app.set_version_flag("--version", std::string("hcvsim ") + kVersion);
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  auto opt = [&](const std::string& name, auto& target, const std::string& desc) {
    return app.add_option("--" + name, target, desc)->envname(detail::env_name(name));
  };
  opt("r", cfg.params.r, "exogenous antibody-positive arrival rate");
  opt("lambda", cfg.params.lambda, "susceptible arrival rate");
  opt("p-i", cfg.params.p_I, "probability of being infected at initiation");
  opt("alpha", cfg.params.alpha, "injection rate");
  opt("p", cfg.params.p, "infection probability per injection");
  opt("mu1", cfg.params.mu1, "exit rate of antibody-positive users");
  opt("mu2", cfg.params.mu2, "exit rate of antibody-negative users");
  opt("x0", cfg.x0, "initial densities 'x1,x2' (state = round(N x0)) or 'equilibrium'");
  opt("N", cfg.N, "population scale");
  opt("T", cfg.T, "time horizon");
  opt("paths", cfg.paths, "number of Monte-Carlo paths");
  opt("seed", cfg.seed, "base random seed");
  opt("out", cfg.out, "output file (default stdout)");
  opt("threads", cfg.threads, "worker threads (0 = all cores)");
  opt("format", cfg.format, "csv or text (structured JSON)")->check(CLI::IsMember({"csv", "text"}));
  opt("tol", cfg.tol, "ODE tolerance (absolute and relative)");
  opt("K", cfg.K, "truncation level for the oracle");
  opt("burn-in", cfg.burn_in, "stationary burn-in time");
  opt("horizon", cfg.horizon, "stationary sampling horizon");
  opt("samples", cfg.samples, "stationary samples or ODE output points");
  opt("step", cfg.step, "finite-difference step of the deterministic greek");
  opt("form", cfg.form, "greek estimator: covariance or product")->check(CLI::IsMember({"covariance", "product"}));
  opt("functional", cfg.functional, "terminal_prevalence, time_averaged_prevalence or terminal_n1");
  opt("p-list", cfg.p_list, "comma-separated p values for sweeps")->delimiter(',');
  opt("N-list", cfg.n_list, "comma-separated population scales for lln")->delimiter(',');

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "one exact path; CSV of events"},
      {"ode", "integrate the mean-field system"},
      {"equilibrium", "closed-form fixed point and prevalence"},
      {"lln", "sup-norm deviation from the mean-field limit vs. the error bound"},
      {"clt", "fluctuation covariance vs. its limit"},
      {"stationary", "long-path stationary estimate"},
      {"oracle", "exact stationary law of the truncated chain"},
      {"greek", "likelihood-ratio derivative of prevalence in p"},
      {"prevalence-sweep", "simulated vs. deterministic prevalence over p"}};
  for (const auto& [name, desc] : commands) {
    app.add_subcommand(name, desc)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    resolve(cfg);
    const Output o = execute(cfg);
    if (cfg.out.empty()) {
      write_output(out, cfg, o);
    } else {
      std::ofstream f(cfg.out, std::ios::binary);
      if (!f) throw std::invalid_argument("cannot open output file '" + cfg.out + "'");
      write_output(f, cfg, o);
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace hcv::cli
