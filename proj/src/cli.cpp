#include "ruinlab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "ruinlab/csv.hpp"
#include "ruinlab/errors.hpp"
#include "ruinlab/ide.hpp"
#include "ruinlab/model.hpp"
#include "ruinlab/ode_exp.hpp"
#include "ruinlab/path_sim.hpp"
#include "ruinlab/pipeline.hpp"
#include "ruinlab/validation.hpp"

namespace ruinlab::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

/// Config file values with command-line overrides applied, then validated.
struct ConfigOverrides {
  std::string path;
  std::optional<std::int64_t> paths;
  std::optional<double> horizon;
  std::optional<double> step;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* app, bool with_mc) {
    app->add_option("--config", path, "model config (JSON)")->required()->check(CLI::ExistingFile);
    if (!with_mc) return;
    app->add_option("--paths", paths, "Monte Carlo paths (overrides numerics.n_paths)");
    app->add_option("--horizon", horizon, "time horizon (overrides numerics.horizon)");
    app->add_option("--step", step, "time step (overrides numerics.mc_step)");
    app->add_option("--seed", seed, "master seed (overrides seed)");
  }

  ModelConfig load() const {
    Json raw = read_config_json(path);
    if (!raw.is_object()) throw ConfigError(ConfigErrorKind::ParseError, "config must be an object");
    if (paths || horizon || step) {
      if (!raw.contains("numerics")) raw["numerics"] = Json::object();
      if (paths) raw["numerics"]["n_paths"] = *paths;
      if (horizon) raw["numerics"]["horizon"] = *horizon;
      if (step) raw["numerics"]["mc_step"] = *step;
    }
    if (seed) raw["seed"] = *seed;
    return validate_config(raw);
  }
};

struct Output {
  std::string path;
  Clock::time_point start = Clock::now();
  std::string started_at = utc_now();

  /// Writes atomically with a manifest, or to `out` when no path was given.
  void emit(const std::string& text, std::ostream& out, const ModelConfig* config, const std::string& command,
            const nlohmann::json& parameters, std::uint64_t seed) const {
    if (path.empty()) {
      out << text;
      return;
    }
    write_to(path, text, config, command, parameters, seed);
  }

  void write_to(const fs::path& file, const std::string& text, const ModelConfig* config, const std::string& command,
                const nlohmann::json& parameters, std::uint64_t seed) const {
    write_file_atomic(file, text);
    RunManifest m;
    m.config_hash = config ? hex64(fnv1a64(to_json(*config).dump())) : "";
    m.seed = seed;
    m.command = command;
    m.parameters = parameters;
    m.version = version();
    m.started_at = started_at;
    m.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    write_manifest(file, m);
  }
};

void check_regime(int i, const ModelConfig& cfg) {
  if (i < 0 || i >= cfg.regime_count())
    throw std::invalid_argument("regime " + std::to_string(i) + " out of range for K = " +
                                std::to_string(cfg.regime_count()));
}

int regime_column(const CsvTable& t) {
  const int r = t.column("regime");
  return r >= 0 ? r : t.require("i");
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  ConfigOverrides config;
  std::vector<double> u;
  int i = 0;
  std::vector<double> horizons;
  Output output;
};

int do_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const ModelConfig cfg = a.config.load();
  check_regime(a.i, cfg);
  std::vector<double> horizons = a.horizons;
  if (horizons.empty()) horizons.push_back(cfg.numerics.horizon);
  for (std::size_t k = 1; k < horizons.size(); ++k)
    if (!(horizons[k] > horizons[k - 1])) throw std::invalid_argument("--horizons must be strictly increasing");
  if (!(horizons.front() > 0.0)) throw std::invalid_argument("horizons must be positive");

  std::vector<double> positive;
  for (double u : a.u)
    if (u > 0.0) positive.push_back(u);
  RuinTable table;
  if (!positive.empty())
    table = simulate_ruin_table(cfg, positive, a.i, horizons, cfg.numerics.n_paths, cfg.seed, default_workers());

  CsvBuilder csv({"u", "i", "horizon", "n_paths", "psi_hat", "std_err", "h"});
  std::size_t next = 0;
  for (double u : a.u) {
    std::vector<RuinEstimate> by_h;
    for (std::size_t j = 0; j < horizons.size(); ++j) {
      const std::int64_t ruined = u > 0.0 ? table.ruined[next][j] : cfg.numerics.n_paths;
      by_h.push_back(make_estimate(u, a.i, horizons[j], cfg.numerics.n_paths, ruined, cfg.numerics.mc_step));
    }
    if (u > 0.0) ++next;
    for (const auto& e : by_h)
      csv.cell(e.u).cell(e.i).cell(e.horizon).cell(static_cast<long long>(e.n_paths)).cell(e.psi_hat).cell(e.std_err)
          .cell(e.h)
          .end_row();
    if (horizons.size() > 1)
      err << "u=" << format_number(u) << " horizon "
          << (horizon_converged(by_h) ? "converged" : "not converged") << "\n";
  }
  nlohmann::json params = {{"u", a.u}, {"i", a.i}, {"horizons", horizons}, {"n_paths", cfg.numerics.n_paths},
                           {"h", cfg.numerics.mc_step}};
  a.output.emit(csv.text(), out, &cfg, "simulate", params, cfg.seed);
  return kExitOk;
}

// ---- solve ----------------------------------------------------------------

struct SolveArgs {
  ConfigOverrides config;
  std::string anchors;
  std::optional<int> points;
  std::optional<double> stretch;
  Output output;
};

std::string solution_csv(const SolutionGrid& g) {
  CsvBuilder csv({"u", "regime", "psi", "psi_p", "psi_pp"});
  for (std::size_t n = 0; n < g.u.size(); ++n)
    for (std::size_t i = 0; i < g.psi.size(); ++i)
      csv.cell(g.u[n]).cell(static_cast<int>(i)).cell(g.psi[i][n]).cell(g.psi_p[i][n]).cell(g.psi_pp[i][n]).end_row();
  return csv.text();
}

int do_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  const ModelConfig cfg = a.config.load();
  const CsvTable t = read_csv(a.anchors);
  const int K = cfg.regime_count();
  const int c_reg = regime_column(t), c_umin = t.require("u_min"), c_pmin = t.require("psi_min"),
            c_dmin = t.require("dpsi_min"), c_umax = t.require("u_max"), c_pmax = t.require("psi_max");
  std::vector<std::optional<BvpAnchor>> found(K);
  std::optional<double> u_min, u_max;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const long i = t.integer(r, c_reg);
    check_regime(static_cast<int>(i), cfg);
    if (found[i]) throw std::invalid_argument("anchors: regime " + std::to_string(i) + " listed twice");
    found[i] = BvpAnchor{t.number(r, c_pmin), t.number(r, c_dmin), t.number(r, c_pmax)};
    const double lo = t.number(r, c_umin), hi = t.number(r, c_umax);
    if ((u_min && *u_min != lo) || (u_max && *u_max != hi))
      throw std::invalid_argument("anchors: all regimes must share u_min and u_max");
    u_min = lo;
    u_max = hi;
  }
  std::vector<BvpAnchor> anchors;
  for (int i = 0; i < K; ++i) {
    if (!found[i]) throw std::invalid_argument("anchors: regime " + std::to_string(i) + " missing");
    anchors.push_back(*found[i]);
  }
  BvpOptions opts = bvp_options(cfg);
  if (a.points) opts.points = *a.points;
  if (a.stretch) opts.stretch = *a.stretch;
  const SolutionGrid g = solve_bvp(cfg, *u_min, *u_max, anchors, opts);
  err << "max_residual=" << format_number(g.max_residual) << " monotone=" << (g.monotone ? "true" : "false") << "\n";
  if (!g.monotone) err << "warning: solution is not non-increasing in u\n";
  nlohmann::json params = {{"anchors", a.anchors}, {"u_min", *u_min},      {"u_max", *u_max},
                           {"points", opts.points}, {"stretch", opts.stretch}};
  a.output.emit(solution_csv(g), out, &cfg, "solve", params, cfg.seed);
  return kExitOk;
}

// ---- residual -------------------------------------------------------------

struct ResidualArgs {
  ConfigOverrides config;
  std::string grid;
  std::string kind = "auto";
  Output output;
};

int do_residual(const ResidualArgs& a, std::ostream& out, std::ostream&) {
  const ModelConfig cfg = a.config.load();
  const CsvTable t = read_csv(a.grid);
  std::string kind = a.kind;
  if (kind == "auto") {
    if (t.column("phi") >= 0) kind = "phi";
    else if (t.column("psi") >= 0) kind = "psi";
    else throw ConfigError(ConfigErrorKind::ParseError, "grid CSV needs phi or psi columns");
  }
  const double below = kind == "psi" ? 1.0 : 0.0;
  const int c_u = t.require("u"), c_reg = regime_column(t), c_v = t.require(kind), c_d = t.require(kind + "_p"),
            c_dd = t.require(kind + "_pp");
  const int K = cfg.regime_count();
  std::vector<std::vector<double>> u(K), v(K), d(K), dd(K);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int i = static_cast<int>(t.integer(r, c_reg));
    check_regime(i, cfg);
    u[i].push_back(t.number(r, c_u));
    v[i].push_back(t.number(r, c_v));
    d[i].push_back(t.number(r, c_d));
    dd[i].push_back(t.number(r, c_dd));
  }
  for (int i = 1; i < K; ++i)
    if (u[i] != u[0]) throw std::invalid_argument("grid: every regime must use the same u values");
  SmoothCandidate cand;
  for (int i = 0; i < K; ++i) cand.push_back(candidate_from_grid(u[i], v[i], d[i], dd[i], below));
  QuadratureOptions q;
  q.nodes = cfg.numerics.quad_nodes;
  CsvBuilder csv({"u", "regime", "residual"});
  for (double x : u[0]) {
    if (!(x > 0.0)) continue;
    const auto res = ide_residual(cand, x, cfg, q);
    for (int i = 0; i < K; ++i) csv.cell(x).cell(i).cell(res[i]).end_row();
  }
  nlohmann::json params = {{"grid", a.grid}, {"kind", kind}};
  a.output.emit(csv.text(), out, &cfg, "residual", params, cfg.seed);
  return kExitOk;
}

// ---- compare --------------------------------------------------------------

struct CompareArgs {
  std::string a, b, points;
  double threshold = 3.0;
  Output output;
};

std::vector<ComparePoint> read_points(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c_u = t.require("u"), c_reg = regime_column(t);
  std::vector<ComparePoint> pts;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    pts.push_back({t.number(r, c_u), static_cast<int>(t.integer(r, c_reg))});
  return pts;
}

// Monte Carlo tables (psi_hat, largest horizon wins), solution grids
// (interpolated at the points) or plain value/std_err tables.
std::vector<PointValue> read_values(const std::string& path, const std::vector<ComparePoint>& points) {
  const CsvTable t = read_csv(path);
  const int c_u = t.require("u"), c_reg = regime_column(t);
  std::vector<PointValue> values;
  if (t.column("psi_hat") >= 0) {
    const int c_v = t.require("psi_hat"), c_se = t.require("std_err"), c_h = t.column("horizon");
    std::map<std::pair<int, double>, std::pair<double, PointValue>> best;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      PointValue p{t.number(r, c_u), static_cast<int>(t.integer(r, c_reg)), t.number(r, c_v), t.number(r, c_se)};
      const double h = c_h >= 0 ? t.number(r, c_h) : 0.0;
      auto key = std::make_pair(p.regime, p.u);
      auto it = best.find(key);
      if (it == best.end() || h > it->second.first) best[key] = {h, p};
    }
    for (const auto& [key, entry] : best) values.push_back(entry.second);
    return values;
  }
  for (const char* name : {"psi", "phi"}) {
    if (t.column(name) < 0) continue;
    const std::string col = name;
    const int c_v = t.require(col), c_d = t.require(col + "_p");
    SolutionGrid g;
    std::map<int, std::vector<std::pair<double, std::pair<double, double>>>> by_regime;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      by_regime[static_cast<int>(t.integer(r, c_reg))].push_back(
          {t.number(r, c_u), {t.number(r, c_v), t.number(r, c_d)}});
    for (const auto& p : points) {
      auto it = by_regime.find(p.regime);
      if (it == by_regime.end()) continue;
      auto rows = it->second;
      std::sort(rows.begin(), rows.end());
      SolutionGrid one;
      one.psi.resize(1);
      one.psi_p.resize(1);
      for (const auto& [x, vd] : rows) {
        one.u.push_back(x);
        one.psi[0].push_back(vd.first);
        one.psi_p[0].push_back(vd.second);
      }
      if (p.u < one.u.front() || p.u > one.u.back()) continue;
      values.push_back({p.u, p.regime, solution_value(one, 0, p.u), 0.0});
    }
    return values;
  }
  const int c_v = t.require("value"), c_se = t.column("std_err");
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    values.push_back({t.number(r, c_u), static_cast<int>(t.integer(r, c_reg)), t.number(r, c_v),
                      c_se >= 0 ? t.number(r, c_se) : 0.0});
  return values;
}

std::string comparison_csv(const ComparisonReport& rep) {
  CsvBuilder csv({"u", "regime", "a", "b", "diff", "abs_diff", "z"});
  for (const auto& r : rep.rows) csv.cell(r.u).cell(r.regime).cell(r.a).cell(r.b).cell(r.diff).cell(r.abs_diff).cell(r.z).end_row();
  return csv.text();
}

int do_compare(const CompareArgs& a, std::ostream& out, std::ostream&) {
  const auto points = read_points(a.points);
  const ComparisonReport rep = compare(read_values(a.a, points), read_values(a.b, points), points);
  nlohmann::json params = {{"a", a.a}, {"b", a.b}, {"points", a.points}, {"threshold", a.threshold}};
  a.output.emit(comparison_csv(rep), out, nullptr, "compare", params, 0);
  const bool ok = rep.pass(a.threshold);
  out << (ok ? "PASS" : "FAIL") << " max_z=" << format_number(rep.max_abs_z) << " threshold=" << format_number(a.threshold)
      << "\n";
  return ok ? kExitOk : kExitCompareFail;
}

// ---- report ---------------------------------------------------------------

struct ReportArgs {
  ConfigOverrides config;
  std::string out_dir = "report";
  CrossValidationOptions cv;
};

int do_report(ReportArgs a, std::ostream& out, std::ostream&) {
  const ModelConfig cfg = a.config.load();
  Output sink;
  a.cv.anchor_seed = cfg.seed;
  a.cv.check_seed = cfg.seed + 1;
  a.cv.bvp = bvp_options(cfg);
  a.cv.workers = default_workers();
  if (a.config.paths) a.cv.anchor_paths = a.cv.check_paths = *a.config.paths;
  const CrossValidationResult r = cross_validate(cfg, a.cv);
  const int K = cfg.regime_count();

  fs::create_directories(a.out_dir);
  const fs::path dir = a.out_dir;
  nlohmann::json params = {{"u_min", a.cv.u_min},         {"u_max", a.cv.u_max},
                           {"slope_step", a.cv.slope_step}, {"anchor_paths", a.cv.anchor_paths},
                           {"check_paths", a.cv.check_paths}, {"check_u", a.cv.check_u},
                           {"horizons", a.cv.horizons},     {"smooth_start", a.cv.smooth_start},
                           {"smooth_spacing", a.cv.smooth_spacing}, {"smooth_points", a.cv.smooth_points},
                           {"h", cfg.numerics.mc_step}};

  CsvBuilder anchors({"regime", "u_min", "psi_min", "psi_min_se", "dpsi_min", "u_max", "psi_max", "psi_max_se"});
  for (int i = 0; i < K; ++i)
    anchors.cell(i).cell(a.cv.u_min).cell(r.anchors[i].psi_min).cell(r.anchor_err_min[i]).cell(r.anchors[i].dpsi_min)
        .cell(a.cv.u_max).cell(r.anchors[i].psi_max).cell(r.anchor_err_max[i]).end_row();
  sink.write_to(dir / "anchors.csv", anchors.text(), &cfg, "report", params, cfg.seed);
  sink.write_to(dir / "solution.csv", solution_csv(r.solution), &cfg, "report", params, cfg.seed);

  CsvBuilder cmp({"u", "regime", "mc", "bvp", "diff", "z", "std_err", "horizon", "horizon_converged"});
  std::size_t row = 0;
  for (int i = 0; i < K; ++i)
    for (std::size_t k = 0; k < r.check[i].size(); ++k, ++row) {
      const auto& c = r.comparison.rows[row];
      const auto& e = r.check[i][k];
      cmp.cell(c.u).cell(c.regime).cell(c.a).cell(c.b).cell(c.diff).cell(c.z).cell(e.std_err).cell(e.horizon)
          .cell(std::string(r.converged[i][k] ? "true" : "false")).end_row();
    }
  sink.write_to(dir / "comparison.csv", cmp.text(), &cfg, "report", params, cfg.seed);

  CsvBuilder sm({"regime", "u", "d2_fine", "d2_coarse", "z"});
  for (std::size_t i = 0; i < r.smoothness.size(); ++i) {
    const auto& s = r.smoothness[i];
    for (std::size_t k = 0; k < s.u_common.size(); ++k) {
      const auto pos = std::find(s.u_fine.begin(), s.u_fine.end(), s.u_common[k]) - s.u_fine.begin();
      sm.cell(static_cast<int>(i)).cell(s.u_common[k]).cell(s.d2_fine[pos]).cell(s.d2_coarse[k]).cell(s.z[k]).end_row();
    }
  }
  if (!r.smoothness.empty()) sink.write_to(dir / "smoothness.csv", sm.text(), &cfg, "report", params, cfg.seed);

  std::string summary;
  summary += "bvp max_residual=" + format_number(r.solution.max_residual) +
             " monotone=" + (r.solution.monotone ? "true" : "false") + "\n";
  for (std::size_t i = 0; i < r.smoothness.size(); ++i)
    summary += "regime " + std::to_string(i) + " smoothness: " + r.smoothness[i].summary + "\n";
  const bool ok = r.comparison.pass();
  summary += std::string(ok ? "PASS" : "FAIL") + " max_z=" + format_number(r.comparison.max_abs_z) + "\n";
  sink.write_to(dir / "summary.txt", summary, &cfg, "report", params, cfg.seed);
  out << summary;
  return ok ? kExitOk : kExitCompareFail;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ruin probabilities under regime-switching investment: Monte Carlo and ODE tools", "ruinlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Monte Carlo ruin estimates");
  sim.config.add_to(s, true);
  s->add_option("--u", sim.u, "initial capitals")->required()->delimiter(',');
  s->add_option("--i", sim.i, "initial regime");
  s->add_option("--horizons", sim.horizons, "increasing horizons (overrides --horizon)")->delimiter(',');
  s->add_option("--out", sim.output.path, "output CSV (default stdout)");

  SolveArgs sol;
  auto* v = app.add_subcommand("solve", "solve the third-order BVP from anchor data");
  sol.config.add_to(v, false);
  v->add_option("--anchors", sol.anchors, "anchor CSV")->required()->check(CLI::ExistingFile);
  v->add_option("--points", sol.points, "grid points (overrides numerics.bvp_points)");
  v->add_option("--stretch", sol.stretch, "grid clustering towards u_min (overrides numerics.bvp_stretch)");
  v->add_option("--out", sol.output.path, "output CSV (default stdout)");

  ResidualArgs res;
  auto* r = app.add_subcommand("residual", "integro-differential residual of a solution grid");
  res.config.add_to(r, false);
  r->add_option("--grid", res.grid, "solution grid CSV")->required()->check(CLI::ExistingFile);
  r->add_option("--kind", res.kind, "phi (zero below 0), psi (one below 0) or auto")
      ->check(CLI::IsMember({"auto", "phi", "psi"}));
  r->add_option("--out", res.output.path, "output CSV (default stdout)");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "z-scores between two result files");
  c->add_option("--a", cmp.a, "first CSV")->required()->check(CLI::ExistingFile);
  c->add_option("--b", cmp.b, "second CSV")->required()->check(CLI::ExistingFile);
  c->add_option("--points", cmp.points, "CSV with u,regime")->required()->check(CLI::ExistingFile);
  c->add_option("--threshold", cmp.threshold, "largest accepted |z|");
  c->add_option("--out", cmp.output.path, "report CSV (default stdout)");

  ReportArgs rep;
  auto* p = app.add_subcommand("report", "MC-anchored BVP solve checked against fresh Monte Carlo");
  rep.config.add_to(p, true);
  p->add_option("--out-dir", rep.out_dir, "output directory");
  p->add_option("--u-min", rep.cv.u_min);
  p->add_option("--u-max", rep.cv.u_max);
  p->add_option("--slope-step", rep.cv.slope_step);
  p->add_option("--anchor-paths", rep.cv.anchor_paths);
  p->add_option("--check-paths", rep.cv.check_paths);
  p->add_option("--check-u", rep.cv.check_u)->delimiter(',');
  p->add_option("--horizons", rep.cv.horizons)->delimiter(',');
  p->add_option("--smooth-start", rep.cv.smooth_start);
  p->add_option("--smooth-spacing", rep.cv.smooth_spacing);
  p->add_option("--smooth-points", rep.cv.smooth_points);

  std::vector<std::string> argv_store{"ruinlab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*s) return do_simulate(sim, out, err);
    if (*v) return do_solve(sol, out, err);
    if (*r) return do_residual(res, out, err);
    if (*c) return do_compare(cmp, out, err);
    if (*p) return do_report(rep, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace ruinlab::cli
