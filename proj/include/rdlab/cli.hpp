#pragma once

// Subcommands of the rdlab tool. Exit codes: 0 pass, 1 verdict or runtime
// failure, 2 usage or configuration error.

#include "rdlab/analysis.hpp"
#include "rdlab/config.hpp"
#include "rdlab/diffusion.hpp"
#include "rdlab/kinetics_ode.hpp"
#include "rdlab/network.hpp"
#include "rdlab/rd_sim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace rdlab {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

struct CommandOptions {
  std::optional<std::string> out_dir;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool quiet = false;
  bool dump_generator = false;
};

// ---------------------------------------------------------------------------
// Building domain objects from a validated config.

inline DiscreteDiffusion make_diffusion(const DiffusionConfig& d) {
  const auto psi = parse_expression(d.psi);
  const auto a = parse_expression(d.diffusivity);
  return build_generator(d.n, d.length, psi.function(), a.function());
}

inline ReactionNetwork make_network(const ScenarioConfig& c) {
  return ReactionNetwork(c.network.alpha, c.network.beta, c.network.l, c.network.k);
}

inline RDScenario make_rd_scenario(const ScenarioConfig& c) {
  auto D = make_diffusion(c.diffusion);
  std::vector<ScalarField> fns;
  for (const auto& src : c.initial) fns.push_back(parse_expression(src).function());
  Field v0 = sample_initial(D, fns);
  return RDScenario{make_network(c), std::move(D), std::move(v0), c.numerics.dt, c.numerics.t_end,
                    c.numerics.sample_every, c.numerics.reaction};
}

inline std::vector<double> ode_initial(const ScenarioConfig& c) {
  std::vector<double> v;
  for (const auto& src : c.initial) v.push_back(parse_expression(src)(0.0));
  return v;
}

/// The scenario with one sweep parameter replaced.
inline ScenarioConfig apply_sweep_value(ScenarioConfig c, double value) {
  switch (c.sweep.parameter) {
    case SweepParameter::mass_scale: {
      std::ostringstream os;
      os.precision(17);
      os << value;
      for (auto& src : c.initial) src = "(" + src + ")*" + os.str();
      break;
    }
    case SweepParameter::length: c.diffusion.length = value; break;
    case SweepParameter::n: c.diffusion.n = static_cast<std::size_t>(std::llround(value)); break;
  }
  c.kind = ScenarioKind::rd;
  return c;
}

// ---------------------------------------------------------------------------

namespace detail::cli {

namespace fs = std::filesystem;

struct Context {
  const ScenarioConfig& cfg;
  const CommandOptions& opt;
  std::ostream& out;
  std::ostream& err;

  fs::path dir() const { return fs::path(opt.out_dir.value_or(cfg.output.directory)); }

  std::ofstream open(const std::string& name) const {
    fs::create_directories(dir());
    std::ofstream f(dir() / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir() / name).string());
    return f;
  }

  void note(const std::string& line) const {
    if (!opt.quiet) out << line << '\n';
  }
};

struct VerdictLog {
  std::vector<Verdict> verdicts;

  void add(Verdict v) { verdicts.push_back(std::move(v)); }
  void add(const DecayReport& rep) {
    for (const auto& v : rep.verdicts) verdicts.push_back({rep.scenario_id + "." + v.name, v.pass, v.detail});
  }
  bool passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  }
  void print(std::ostream& os) const {
    for (const auto& v : verdicts) os << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
  }
};

inline std::string sci(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

inline FitSettings fit_settings(const ScenarioConfig& c) {
  return {c.numerics.fit_window, c.numerics.fit_floor};
}

inline void write_refinement(std::ostream& os, const RefinementStudy& st) {
  os.precision(17);
  os << "n,lambda1,c_sg,observed_order\n";
  for (std::size_t k = 0; k < st.rows.size(); ++k) {
    os << st.rows[k].n << ',' << st.rows[k].lambda1 << ',' << st.rows[k].c_sg << ',';
    if (k >= 2) os << st.observed_order[k - 2];
    os << '\n';
  }
}

inline RefinementStudy refinement(const ScenarioConfig& c) {
  const auto psi = parse_expression(c.diffusion.psi);
  const auto a = parse_expression(c.diffusion.diffusivity);
  return refine_spectral_gap(c.gap.sizes, c.diffusion.length, psi.function(), a.function());
}

inline int gap(const Context& ctx, VerdictLog* log) {
  const auto st = refinement(ctx.cfg);
  const auto D = make_diffusion(ctx.cfg.diffusion);
  {
    auto f = ctx.open("gap.csv");
    write_refinement(f, st);
  }
  if (!ctx.opt.quiet) {
    ctx.out << std::setw(8) << "n" << std::setw(22) << "lambda1" << std::setw(22) << "C_SG"
            << std::setw(12) << "order" << '\n';
    ctx.out << std::setprecision(12);
    for (std::size_t k = 0; k < st.rows.size(); ++k) {
      ctx.out << std::setw(8) << st.rows[k].n << std::setw(22) << st.rows[k].lambda1 << std::setw(22)
              << st.rows[k].c_sg << std::setw(12);
      if (k >= 2)
        ctx.out << std::setprecision(4) << st.observed_order[k - 2] << std::setprecision(12);
      else
        ctx.out << "-";
      ctx.out << '\n';
    }
    ctx.out << "extrapolated lambda1 = " << st.lambda1_extrapolated
            << ", C_SG = " << st.c_sg_extrapolated << '\n';
    ctx.out << "C_SG at n = " << D.size() << ": " << D.C_SG() << '\n';
  }
  if (ctx.opt.dump_generator) {
    auto f = ctx.open("generator.csv");
    write_matrix_csv(f, D.generator());
  }
  if (log) {
    const double rel = std::abs(D.C_SG() - st.c_sg_extrapolated) / st.c_sg_extrapolated;
    log->add({ctx.cfg.id + ".c_sg_converged", rel <= 1e-3,
              "C_SG(n=" + std::to_string(D.size()) + ") = " + sci(D.C_SG()) + ", extrapolated " +
                  sci(st.c_sg_extrapolated) + " (rel " + sci(rel) + ")"});
    if (!st.observed_order.empty()) {
      const double p = st.observed_order.back();
      log->add({ctx.cfg.id + ".refinement_order", std::abs(p - 2.0) <= 0.2, "observed order " + sci(p)});
    }
  }
  return kExitPass;
}

inline void rd_outputs(const Context& ctx, const RDScenario& sc, const RunResult& res) {
  if (ctx.cfg.output.series) {
    auto f = ctx.open("series.csv");
    write_series_csv(f, res);
  }
  for (const auto& s : res.snapshots) {
    std::ostringstream name;
    name << "snapshot_t" << std::setprecision(6) << s.t << ".csv";
    auto f = ctx.open(name.str());
    write_snapshot_csv(f, sc.diffusion, s);
  }
  auto f = ctx.open("final.csv");
  write_snapshot_csv(f, sc.diffusion, res.final_state);
  if (ctx.opt.dump_generator) {
    auto g = ctx.open("generator.csv");
    write_matrix_csv(g, sc.diffusion.generator());
  }
}

inline std::vector<Verdict> rd_health(const ScenarioConfig& c, const RunResult& res) {
  double cons = 0.0, minc = std::numeric_limits<double>::infinity(), clamp = 0.0;
  double bound = std::numeric_limits<double>::infinity();
  for (const auto& r : res.samples) {
    cons = std::max(cons, r.conservation_residual);
    minc = std::min(minc, r.min_concentration);
    clamp = std::max(clamp, r.clamp_l1);
    bound = std::min(bound, r.bound_margin);
  }
  const auto& nm = c.numerics;
  return {{c.id + ".conservation", cons <= nm.conservation_tol, "max residual " + sci(cons)},
          {c.id + ".positivity", minc >= -nm.positivity_tol, "min concentration " + sci(minc)},
          {c.id + ".clamping", clamp <= nm.clamp_tol, "clamp_l1 " + sci(clamp)},
          {c.id + ".upper_bounds", bound >= -nm.bound_tol, "min bound margin " + sci(bound)}};
}

/// Decay analysis appropriate to the network, if any theorem applies.
inline std::optional<DecayReport> rd_decay(const ScenarioConfig& c, const RDScenario& sc,
                                           const RunResult& res) {
  if (!sc.reaction) return std::nullopt;
  bool unit = true;
  for (double k : sc.network.k_norm()) unit = unit && std::abs(k - 1.0) <= 1e-12;
  if (sc.network.is_two_by_two() && unit)
    return analyze_two_by_two(c.id, sc, res, c.rate_tolerance(), fit_settings(c));
  if (sc.network.has_disjoint_sides())
    return general_decay_check(c.id, sc, res, c.numerics.min_r2, fit_settings(c));
  return std::nullopt;
}

inline L4Check l4_sweep(const DiscreteDiffusion& D, std::uint64_t seed, std::size_t count,
                        bool& all_pass) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<double> ts{0.01, 0.1, 1.0};
  L4Check worst;
  all_pass = true;
  for (std::size_t k = 0; k < count; ++k) {
    GridFunction f(static_cast<Eigen::Index>(D.size()));
    const double spike = 1.0 + 49.0 * u(rng);
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      const double base = std::pow(u(rng), 3);
      f[i] = u(rng) < 0.05 ? base * spike : base;
    }
    const auto chk = l4_decay_check(D, f, ts);
    all_pass = all_pass && chk.pass;
    if (k == 0 || chk.min_margin < worst.min_margin) worst = chk;
  }
  return worst;
}

inline int rd(const Context& ctx, VerdictLog* log) {
  const auto& c = ctx.cfg;
  const auto sc = make_rd_scenario(c);
  RunOptions ro;
  ro.snapshot_times = c.output.snapshots;
  const auto res = run(sc, ro);
  rd_outputs(ctx, sc, res);
  ctx.note("run " + c.id + ": " + std::to_string(res.samples.size()) + " samples to t = " +
           sci(res.final_state.t) + " written to " + ctx.dir().string());
  if (!log) return kExitPass;

  for (auto& v : rd_health(c, res)) log->add(std::move(v));
  if (const auto rep = rd_decay(c, sc, res)) {
    log->add(*rep);
    if (c.output.report) {
      auto t = ctx.open("report.txt");
      write_report_text(t, *rep);
      auto csv = ctx.open("report.csv");
      write_report_csv_header(csv);
      write_report_csv_row(csv, *rep);
    }
  } else {
    ctx.note("note: no decay theorem applies to " + sc.network.describe() + "; decay not assessed");
  }
  bool l4_ok = true;
  const auto worst = l4_sweep(sc.diffusion, ctx.opt.seed, 50, l4_ok);
  log->add({c.id + ".l4_decay", l4_ok,
            "50 random functions, seed " + std::to_string(ctx.opt.seed) + ", min margin " +
                sci(worst.min_margin)});
  return kExitPass;
}

inline int ode(const Context& ctx, VerdictLog* log) {
  const auto& c = ctx.cfg;
  const auto net = make_network(c);
  const auto v0 = ode_initial(c);
  const auto r = reduce(net, v0);
  const auto traj = integrate(r, c.numerics.t_end, {c.numerics.tol, c.numerics.samples});
  if (c.output.series) {
    auto f = ctx.open("trajectory.csv");
    write_trajectory_csv(f, traj);
  }
  ctx.note("run " + c.id + ": " + std::to_string(traj.t.size()) + " samples to t = " +
           sci(traj.t.back()) + " written to " + ctx.dir().string());
  if (!log) return kExitPass;

  const auto rep = analyze_ode(c.id, net, r, traj, c.rate_tolerance());
  log->add(rep);
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    const double dev = std::abs(traj.pivot_deviation[k]);
    if (!(dev > 0.0)) continue;
    const double cf = closed_form_deviation(r, traj.pivot_deviation[k], traj.t[k]);
    worst = std::max(worst, std::abs(cf - dev) / dev);
  }
  log->add({c.id + ".closed_form", worst <= 1e-6, "max relative mismatch " + sci(worst)});
  if (c.output.report) {
    auto t = ctx.open("report.txt");
    write_report_text(t, rep);
    auto csv = ctx.open("report.csv");
    write_report_csv_header(csv);
    write_report_csv_row(csv, rep);
  }
  return kExitPass;
}

struct SweepRow {
  double value = 0.0;
  double M = 0.0;
  double threshold = 0.0;
  std::optional<DecayReport> report;
  std::vector<Verdict> health;
  std::string error;
};

inline int sweep(const Context& ctx, VerdictLog* log) {
  const auto& c = ctx.cfg;
  if (c.sweep.values.empty()) throw std::runtime_error("sweep needs [sweep] values");
  std::vector<SweepRow> rows(c.sweep.values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < rows.size();) {
      SweepRow& row = rows[k];
      row.value = c.sweep.values[k];
      try {
        ScenarioConfig pc = apply_sweep_value(c, row.value);
        std::ostringstream id;
        id << c.id << '@' << std::setprecision(6) << row.value;
        pc.id = id.str();
        const auto sc = make_rd_scenario(pc);
        const auto res = run(sc);
        const Eigen::VectorXd total = sc.v0.colwise().sum().transpose();
        row.M = sc.diffusion.mean(total);
        row.threshold = 1.0 / (8.0 * sc.diffusion.C_SG());
        row.report = rd_decay(pc, sc, res);
        row.health = rd_health(pc, res);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const unsigned n = std::max(1U, std::min<unsigned>(ctx.opt.workers, static_cast<unsigned>(rows.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  auto f = ctx.open("sweep.csv");
  f.precision(17);
  f << "parameter,value,M,threshold,regime,rate_theory,rate_fit,fit_r2,envelope_margin,verdict\n";
  for (const auto& row : rows) {
    const bool ok = row.error.empty() && (!row.report || row.report->passed()) &&
                    std::all_of(row.health.begin(), row.health.end(), [](const Verdict& v) { return v.pass; });
    f << to_string(c.sweep.parameter) << ',' << row.value << ',' << row.M << ',' << row.threshold << ',';
    if (row.report)
      f << to_string(row.report->regime) << ',' << row.report->rate_theory << ',' << row.report->rate_fit
        << ',' << row.report->fit_r2 << ',' << row.report->envelope_margin;
    else
      f << "none,nan,nan,nan,nan";
    f << ',' << (ok ? "pass" : "fail") << '\n';
    if (log) {
      if (!row.error.empty()) log->add({c.id + "@" + sci(row.value), false, row.error});
      for (const auto& v : row.health) log->add(v);
      if (row.report) log->add(*row.report);
    }
  }
  ctx.note("sweep " + c.id + ": " + std::to_string(rows.size()) + " scenarios written to " +
           (ctx.dir() / "sweep.csv").string());
  return kExitPass;
}

inline int dispatch(const Context& ctx, VerdictLog* log) {
  switch (ctx.cfg.kind) {
    case ScenarioKind::ode: return ode(ctx, log);
    case ScenarioKind::rd: return rd(ctx, log);
    case ScenarioKind::spectral_gap: return gap(ctx, log);
    case ScenarioKind::sweep: return sweep(ctx, log);
  }
  return kExitUsage;
}

}  // namespace detail::cli

/// Entry point shared by the tool and the tests; args excludes the program name.
inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reaction-diffusion decay experiments", "rdlab"};
  app.require_subcommand(1);
  CommandOptions opt;
  opt.workers = std::max(1U, std::thread::hardware_concurrency());
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "scenario file")->required();
    sub->add_option("--out", opt.out_dir, "output directory (overrides [output] directory)");
    sub->add_option("--seed", opt.seed, "seed for randomized checks");
    sub->add_option("--workers", opt.workers, "concurrent scenarios for sweep")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", opt.quiet, "suppress progress output");
    sub->add_flag("--dump-generator", opt.dump_generator, "write the diffusion generator as CSV");
  };
  auto* run_cmd = app.add_subcommand("run", "simulate and write CSV outputs");
  auto* gap_cmd = app.add_subcommand("gap", "spectral gap with refinement table");
  auto* verify_cmd = app.add_subcommand("verify", "simulate and evaluate all verdicts");
  auto* sweep_cmd = app.add_subcommand("sweep", "vary one parameter across [sweep] values");
  for (auto* s : {run_cmd, gap_cmd, verify_cmd, sweep_cmd}) add_common(s);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  ScenarioConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "configuration error in " << config_path << ":\n" << e.what() << '\n';
    return kExitUsage;
  }

  const detail::cli::Context ctx{cfg, opt, out, err};
  try {
    if (*gap_cmd) {
      detail::cli::gap(ctx, nullptr);
      return kExitPass;
    }
    if (*sweep_cmd) {
      if (cfg.sweep.values.empty()) {
        err << "configuration error in " << config_path << ":\nE_MISSING_FIELD sweep.values: required\n";
        return kExitUsage;
      }
      detail::cli::VerdictLog log;
      detail::cli::sweep(ctx, &log);
      if (!opt.quiet) log.print(out);
      out << "verdict: " << (log.passed() ? "pass" : "fail") << '\n';
      return log.passed() ? kExitPass : kExitFail;
    }
    if (*run_cmd) return detail::cli::dispatch(ctx, nullptr);

    detail::cli::VerdictLog log;
    detail::cli::dispatch(ctx, &log);
    log.print(out);
    out << "verdict: " << (log.passed() ? "pass" : "fail") << '\n';
    return log.passed() ? kExitPass : kExitFail;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFail;
  }
}

}  // namespace rdlab
