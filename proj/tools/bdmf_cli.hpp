#pragma once

// Command-line front end. Exit codes: 0 all checks passed, 1 a check failed,
// 2 bad arguments or run file, 3 numerical abort.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "CLI11.hpp"
#include "bdmf/bdmf.hpp"

namespace bdmf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> list{"master", "meanfield", "moments", "truncated", "signs",
                                             "defect", "ssa",       "theorem1", "theorem2"};
  return list;
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Context {
  std::string command;
  std::filesystem::path out_dir;
  std::string prefix;  // prepended to every output file name
  std::ostream& log;
  std::vector<ExperimentReport>& reports;

  [[nodiscard]] std::string path(const std::string& file) const { return (out_dir / (prefix + file)).string(); }
};

namespace detail {

inline std::string fmt(double v) { return format_number(v); }

inline std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

inline std::vector<DistributionState> master_run(const RunSettings& s, const ChainSpec& spec,
                                                 std::vector<double>& grid) {
  grid = uniform_grid(s.t0, s.grid);
  MasterOptions mo;
  mo.tol = s.tol;
  return integrate_kolmogorov(build_generator(spec), point_mass(spec.N(), initial_index(s.x0, spec.N())), grid, mo);
}

}  // namespace detail

inline Outcome cmd_master(const RunSettings& s, Context& ctx) {
  const auto spec = s.model.build(s.N);
  std::vector<double> grid;
  const auto traj = detail::master_run(s, spec, grid);
  CsvWriter csv(ctx.path("master.csv"));
  auto cols = indexed_columns("p_", 0, spec.N());
  cols.insert(cols.begin(), "t");
  csv.header(cols);
  double worst_mass = 0.0, min_p = 1.0;
  for (const auto& d : traj) {
    std::vector<double> row{d.t};
    row.insert(row.end(), d.p.begin(), d.p.end());
    csv.write_numbers(row);
    CompensatedSum sum;
    for (double v : d.p) {
      sum.add(v);
      min_p = std::min(min_p, v);
    }
    worst_mass = std::max(worst_mass, std::abs(sum.value() - 1.0));
  }
  const bool pass = worst_mass <= kMassTolerance && min_p >= -kPositivityTolerance;
  return {pass, "N=" + std::to_string(spec.N()) + " mass_error=" + detail::fmt(worst_mass) + " min_p=" + detail::fmt(min_p)};
}

inline Outcome cmd_meanfield(const RunSettings& s, Context& ctx) {
  const auto spec = s.model.build(s.N);
  const auto& law = spec.law();
  const auto grid = uniform_grid(s.t0, s.grid);
  const auto traj = solve_mean_field(law, s.x0, grid, s.tol);
  CsvWriter csv(ctx.path("meanfield.csv"));
  csv.header(std::vector<std::string>{"t", "x"});
  double lo = traj.x.front(), hi = traj.x.front();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    csv.write_numbers(std::vector<double>{traj.t[i], traj.x[i]});
    lo = std::min(lo, traj.x[i]);
    hi = std::max(hi, traj.x[i]);
  }
  const bool invariant_region = law.drift(0.0) >= 0.0 && law.drift(1.0) <= 0.0;
  const bool inside = lo >= -1e-9 && hi <= 1.0 + 1e-9;
  const bool pass = !invariant_region || (s.x0 < 0.0 || s.x0 > 1.0) || inside;
  return {pass, "x(t0)=" + detail::fmt(traj.x.back())};
}

inline Outcome cmd_moments(const RunSettings& s, Context& ctx) {
  const auto spec = s.model.build(s.N);
  std::vector<double> grid;
  const auto traj = detail::master_run(s, spec, grid);
  const auto rows = moment_table(spec, traj, s.M);
  CsvWriter csv(ctx.path("moments.csv"));
  auto cols = indexed_columns("y_", 1, s.M);
  const auto dcols = indexed_columns("d_", 1, s.M);
  cols.insert(cols.begin(), "t");
  cols.insert(cols.end(), dcols.begin(), dcols.end());
  csv.header(cols);
  bool pass = true;
  std::size_t violations = 0;
  for (const auto& row : rows) {
    std::vector<double> out{row.t};
    out.insert(out.end(), row.y.begin(), row.y.end());
    out.insert(out.end(), row.d.begin(), row.d.end());
    csv.write_numbers(out);
    for (std::size_t n = 2; n <= s.M; ++n) {
      const double d = row.d[n - 1];
      const double bound = defect_bound(spec, n);
      if (d < -1e-12 || d > bound * (1.0 + 1e-12) + 1e-12) {
        pass = false;
        ++violations;
      }
    }
  }
  return {pass, "defect_bound_violations=" + std::to_string(violations) + " c=" + detail::fmt(spec.rate_bound())};
}

inline Outcome cmd_truncated(const RunSettings& s, Context& ctx) {
  const auto q = s.model.drift_coefficients();
  const TruncatedMomentSystem sys{q, s.M, s.closure, s.r};
  sys.validate();
  const auto grid = uniform_grid(s.t0, s.grid);
  std::vector<double> f0(s.M);
  double pw = 1.0;
  for (auto& v : f0) v = (pw *= s.x0);
  const auto traj = solve_truncated(sys, f0, grid, s.tol);
  CsvWriter csv(ctx.path("truncated.csv"));
  auto cols = indexed_columns("f_", 1, s.M);
  cols.insert(cols.begin(), "t");
  csv.header(cols);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> row{grid[i]};
    row.insert(row.end(), traj.f[i].begin(), traj.f[i].end());
    csv.write_numbers(row);
  }
  if (s.closure != Closure::PowerOfFirst) return {true, "closure=freeze_last"};
  // f_n = x^n solves the limit system exactly when x follows the mean-field flow
  DensityLaw drift_law;
  drift_law.beta = [q](double x) { return PolynomialLaw::horner(q, x); };
  drift_law.delta = [](double) { return 0.0; };
  const auto mf = solve_mean_field(drift_law, s.x0, grid, s.tol);
  double worst = 0.0;
  const std::size_t trusted = s.M - sys.degree();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double xp = 1.0;
    for (std::size_t n = 1; n <= trusted; ++n) {
      xp *= mf.x[i];
      worst = std::max(worst, std::abs(traj.f[i][n - 1] - xp));
    }
  }
  return {worst <= 1e-4, "max_power_gap=" + detail::fmt(worst)};
}

inline Outcome cmd_signs(const RunSettings& s, Context& ctx) {
  const auto q = s.model.drift_coefficients();
  const auto rep = check_sign_conditions(q);
  std::vector<std::string> qs;
  for (double v : q) qs.push_back(detail::fmt(v));
  std::string detail = "q=(" + detail::join(qs, ",") + ")";
  if (!rep.pass) detail += " violated: " + detail::join(rep.violations(), "; ");
  if (!rep.displayed_condition_ok) detail += " [closed-form condition q_0 - sum (j-1) q_j <= 0 fails]";
  (void)ctx;
  return {rep.pass, detail};
}

inline constexpr double kDefectHorizon = 1.0;

inline Outcome cmd_defect(const RunSettings& s, Context& ctx) {
  CsvWriter gen_csv(ctx.path("generator_defect.csv"));
  CsvWriter sg_csv(ctx.path("semigroup_defect.csv"));
  const std::vector<std::string> header{"N", "t", "f_label", "defect", "bound"};
  gen_csv.header(header);
  sg_csv.header(header);
  // over long horizons the near-absorbing low states dominate before 1/N sets in
  const double t = s.t0_given ? s.t0 : kDefectHorizon;
  bool pass = true;
  std::map<std::string, std::vector<double>> semigroup;
  for (std::size_t N : s.N_list) {
    const auto spec = s.model.build(N);
    for (const auto& label : s.functions) {
      const auto fn = TestFunction::by_label(label);
      const auto g = generator_defect(spec, fn);
      pass = pass && g.pass;
      gen_csv.write_row(std::vector<std::string>{std::to_string(N), detail::fmt(0.0), label, detail::fmt(g.sup_defect),
                                                 detail::fmt(g.bound)});
      const auto sg = semigroup_defect(spec, fn, t, s.tol);
      semigroup[label].push_back(sg.sup_defect);
      sg_csv.write_row(std::vector<std::string>{std::to_string(N), detail::fmt(t), label,
                                                detail::fmt(sg.sup_defect), detail::fmt(sg.bound)});
    }
  }
  std::string detail = "generator_bounds=" + std::string(pass ? "ok" : "violated");
  for (const auto& [label, errs] : semigroup) {
    if (label == "constant") continue;
    const auto fit = fit_loglog(s.N_list, errs);
    if (!fit.defined) continue;
    detail += " slope[" + label + "]=" + detail::fmt(fit.slope);
    if (label == "identity" && !SlopeWindow{}.contains(fit.slope)) pass = false;
  }
  return {pass, detail};
}

inline Outcome cmd_ssa(const RunSettings& s, Context& ctx) {
  const auto spec = s.model.build(s.N);
  const std::size_t k0 = initial_index(s.x0, spec.N());
  std::vector<double> grid;
  const auto traj = detail::master_run(s, spec, grid);
  const auto est = ensemble_moments(spec, k0, grid, s.runs, s.seed);
  CsvWriter csv(ctx.path("ssa.csv"));
  csv.header(std::vector<std::string>{"t", "y1_hat", "y1_se", "y2_hat", "y2_se"});
  // Bonferroni over the grid at family-wise level 1e-3
  const boost::math::normal unit;
  const double z = boost::math::quantile(boost::math::complement(unit, 1e-3 / (2.0 * static_cast<double>(grid.size()))));
  double worst_z = 0.0;
  bool pass = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& e = est[i];
    csv.write_numbers(std::vector<double>{e.t, e.y1, e.y1_se, e.y2, e.y2_se});
    const double diff = std::abs(e.y1 - moments_of(traj[i], 1).y[0]);
    if (e.y1_se > 0.0) {
      worst_z = std::max(worst_z, diff / e.y1_se);
      if (diff > z * e.y1_se) pass = false;
    } else if (diff > 1e-9) {
      pass = false;
    }
  }
  return {pass, "runs=" + std::to_string(s.runs) + " max_z=" + detail::fmt(worst_z) + " z_crit=" + detail::fmt(z)};
}

inline void write_errors(const ExperimentReport& rep, Context& ctx, const std::string& file) {
  CsvWriter csv(ctx.path(file));
  csv.header(std::vector<std::string>{"N", "error"});
  for (std::size_t i = 0; i < rep.N_list.size(); ++i) {
    csv.write_row(std::vector<std::string>{std::to_string(rep.N_list[i]), detail::fmt(rep.errors[i])});
  }
}

inline std::string describe(const ExperimentReport& rep) {
  std::string d = "slope=" + detail::fmt(rep.slope) + " slope_ci=" + detail::fmt(rep.slope_ci);
  if (rep.degenerate_fit) d += " [degenerate fit: all errors below 1e-13]";
  else if (rep.slope_undefined) d += " [slope undefined]";
  if (rep.sign_warning) d += " [warning: sign conditions do not hold for this model]";
  return d;
}

inline Outcome cmd_theorem1(const RunSettings& s, Context& ctx) {
  SweepOptions so;
  so.x0 = s.x0;
  so.t0 = s.t0;
  so.grid = s.grid;
  so.tol = s.tol;
  auto rep = run_theorem1(s.model, s.N_list, so);
  rep.experiment = s.name.empty() ? "theorem1" : s.name;
  write_errors(rep, ctx, "theorem1.csv");
  ctx.reports.push_back(rep);
  return {rep.pass, describe(rep)};
}

inline Outcome cmd_theorem2(const RunSettings& s, Context& ctx) {
  Theorem2Options o;
  o.sweep.x0 = s.x0;
  o.sweep.t0 = s.t0;
  o.sweep.grid = s.grid;
  o.sweep.tol = s.tol;
  o.M = s.M;
  o.r = s.r;
  o.closure = s.closure;
  auto rep = run_theorem2(s.model, s.N_list, o);
  rep.experiment = s.name.empty() ? "theorem2" : s.name;
  write_errors(rep, ctx, "theorem2.csv");
  ctx.reports.push_back(rep);
  return {rep.pass, describe(rep)};
}

inline Outcome dispatch(const RunSettings& s, Context& ctx) {
  const auto& c = ctx.command;
  if (c == "master") return cmd_master(s, ctx);
  if (c == "meanfield") return cmd_meanfield(s, ctx);
  if (c == "moments") return cmd_moments(s, ctx);
  if (c == "truncated") return cmd_truncated(s, ctx);
  if (c == "signs") return cmd_signs(s, ctx);
  if (c == "defect") return cmd_defect(s, ctx);
  if (c == "ssa") return cmd_ssa(s, ctx);
  if (c == "theorem1") return cmd_theorem1(s, ctx);
  if (c == "theorem2") return cmd_theorem2(s, ctx);
  throw std::invalid_argument("unknown subcommand '" + c + "'");
}

/// Entry point; args excludes the program name.
inline int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Birth-death chains: master equation, mean-field and moment approximations"};
  app.set_help_flag("--help", "Print this help message and exit");  // -h is taken by the death polynomial
  std::string command;
  std::string config;
  std::string out_dir = ".";
  app.add_option("command", command, "Subcommand")->required()->check(CLI::IsMember(commands()));
  app.add_option("--config", config, "Run file with [experiment] blocks");
  app.add_option("--out", out_dir, "Output directory for CSV files");

  // key -> flag value; applied on top of every run-file block
  const std::vector<std::pair<std::string, std::string>> keyed{
      {"model", "Model: sis, rlad or poly"},
      {"N", "Chain size"},
      {"N-list", "Comma-separated chain sizes for sweeps"},
      {"beta", "SIS infection rate"},
      {"gamma", "SIS recovery rate"},
      {"alpha", "RLAD activation rate"},
      {"omega", "RLAD deletion rate"},
      {"k1max", "RLAD capacity (absolute)"},
      {"kappa", "RLAD capacity relative to N"},
      {"g", "Birth polynomial coefficients g_0..g_l"},
      {"h", "Death polynomial coefficients h_0..h_l"},
      {"x0", "Initial density"},
      {"t0", "Time horizon"},
      {"grid", "Output grid step"},
      {"tol", "Solver tolerance"},
      {"M", "Moment truncation order"},
      {"r", "Weight of the weighted l1 norm"},
      {"runs", "Number of SSA paths"},
      {"seed", "SSA seed"},
      {"closure", "power_of_first or freeze_last"},
      {"functions", "Test functions for defect: identity,square,sin,constant"},
      {"name", "Run label"}};
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_opts;
  for (const auto& [key, help] : keyed) {
    flag_opts[key] = app.add_option("--" + key, flag_values[key], help);
  }

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::vector<RunBlock> blocks;
  try {
    if (!config.empty()) blocks = parse_run_file(config);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (blocks.empty()) blocks.push_back(RunBlock{});

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    err << "error: cannot create output directory '" << out_dir << "': " << ec.message() << '\n';
    return kExitUsage;
  }

  std::vector<ExperimentReport> reports;
  bool all_pass = true;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    RunSettings s;
    try {
      apply_block(s, blocks[b]);
      for (const auto& [key, opt] : flag_opts) {
        if (opt->count() > 0) apply_setting(s, key, flag_values[key]);
      }
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
    std::string prefix;
    if (!s.name.empty()) prefix = s.name + "_";
    else if (blocks.size() > 1) prefix = "run" + std::to_string(b + 1) + "_";
    Context ctx{command, out_dir, prefix, out, reports};
    const std::string label = s.name.empty() ? command : command + "[" + s.name + "]";
    try {
      const auto outcome = dispatch(s, ctx);
      out << (outcome.pass ? "PASS " : "FAIL ") << label << " model=" << s.model.model << ' ' << outcome.detail << '\n';
      all_pass = all_pass && outcome.pass;
    } catch (const NumericalError& e) {
      err << "numerical abort in " << label << ": " << e.what() << '\n';
      return kExitNumerical;
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::invalid_argument& e) {
      err << "error in " << label << ": " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::runtime_error& e) {
      err << "error in " << label << ": " << e.what() << '\n';
      return kExitUsage;
    }
  }

  if (!reports.empty()) {
    CsvWriter summary((std::filesystem::path(out_dir) / "summary.csv").string());
    summary.header(std::vector<std::string>{"experiment", "slope", "slope_ci", "pass"});
    for (const auto& r : reports) {
      summary.write_row(std::vector<std::string>{r.experiment, detail::fmt(r.slope), detail::fmt(r.slope_ci),
                                                 r.pass ? "true" : "false"});
    }
  }
  return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace bdmf::cli
