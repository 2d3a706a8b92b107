// nls3: command-line front end. One subcommand per computation; every run writes
// report.json / report.txt (plus CSVs and snapshots) into its own folder
// <output_dir>/<subcommand>-<hash of the config echo>.
//
// Exit codes: 0 all claims pass, 1 config/model error, 2 solver did not converge,
// 3 a claim failed, 4 I/O error.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "nls3/errors.hpp"
#include "nls3/experiments.hpp"
#include "nls3/io.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using namespace nls3;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kConvergence = 2, kClaims = 3, kIo = 4 };

const std::vector<std::string> kSubcommands = {
    "gn-constant", "groundstate", "excited",     "limit-system", "fiber",       "evolve",
    "dichotomy",   "stability",   "mass-collapse", "alpha-limits", "semitrivial", "report"};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string keys_help() {
  std::ostringstream os;
  os << "Config keys (file lines or key=value overrides):\n";
  for (const auto& k : config_keys()) {
    os << "  " << k.name;
    for (std::size_t n = std::string(k.name).size(); n < 18; ++n) os << ' ';
    os << "[" << k.symbol << "] " << k.meaning << "\n";
  }
  os << "\nEnvironment: NLS3_OUTPUT_DIR sets the default output_dir.\n"
        "Exit codes: 0 pass, 1 config error, 2 no convergence, 3 claim failed, 4 I/O error.\n";
  return os.str();
}

struct Invocation {
  std::string subcommand;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string resume;
  std::string report_path;
};

RunConfig build_config(const Invocation& inv) {
  RunConfig base;
  if (const char* env = std::getenv("NLS3_OUTPUT_DIR"); env && *env) base.output_dir = env;
  RunConfig cfg = inv.config_path.empty() ? base : load_config(inv.config_path, base);
  for (const auto& o : inv.overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "': expected 'key = value'");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_config_value(cfg, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  cfg.experiment = inv.subcommand;
  validate_config(cfg);
  return cfg;
}

struct Run {
  RunConfig cfg;
  fs::path dir;
  std::unique_ptr<GnCache> cache;
};

Run open_run(const Invocation& inv, const RunConfig& cfg) {
  Run run;
  run.cfg = cfg;
  if (!inv.resume.empty())
    run.dir = fs::path(inv.resume).parent_path();
  else
    run.dir = fs::path(cfg.output_dir) / (inv.subcommand + "-" + hex16(fnv1a(config_text(cfg))));
  std::error_code ec;
  fs::create_directories(run.dir, ec);
  if (ec) throw IoError("cannot create run folder " + run.dir.string() + ": " + ec.message());
  fs::create_directories(cfg.output_dir, ec);
  run.cache = std::make_unique<GnCache>((fs::path(cfg.output_dir) / "gn_cache.txt").string());
  write_file((run.dir / "config.txt").string(), config_text(cfg));
  return run;
}

ExperimentSetup setup_for(const Run& run) {
  ExperimentSetup s = make_setup(run.cfg, run.cache.get());
  s.output_dir = run.dir.string();
  return s;
}

Field positive_bumps(const SpectralGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f(g.size(), cplx(0.0, 0.0));
  for (int b = 0; b < 3; ++b) {
    std::array<double, 3> c{1.5 * u(rng), 1.5 * u(rng), 1.5 * u(rng)};
    const double w = 1.0 + 0.5 * u(rng), amp = 1.0 + 0.5 * u(rng);
    auto bump = sample(g, [&](const std::array<double, 3>& x) {
      double r2 = 0.0;
      for (int a = 0; a < g.dim(); ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
      return cplx(amp * std::exp(-r2 / (w * w)), 0.0);
    });
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += bump[i];
  }
  return f;
}

Field complex_bumps(const SpectralGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f(g.size(), cplx(0.0, 0.0));
  for (int b = 0; b < 3; ++b) {
    std::array<double, 3> c{2.0 * u(rng), 2.0 * u(rng), 2.0 * u(rng)};
    const double w = std::exp(1.5 * u(rng));
    const cplx amp(u(rng), u(rng));
    auto bump = sample(g, [&](const std::array<double, 3>& x) {
      double r2 = 0.0;
      for (int a = 0; a < g.dim(); ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
      return amp * std::exp(-r2 / (w * w));
    });
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += bump[i];
  }
  return f;
}

void add_stationary_claims(ExperimentReport& r, const ModelParams& m, const StationaryResult& s,
                           double grad_tol) {
  const auto& d = s.diagnostics;
  r.add("converged", s.residual, grad_tol, s.residual <= grad_tol,
        std::to_string(s.iterations) + " iterations");
  const double P = s.kind == StationaryKind::limit_system ? limit_pohozaev(s.fields) : d.pohozaev;
  r.add("pohozaev-residual", std::abs(P), 1e-6 * (1.0 + d.kinetic),
        std::abs(P) < 1e-6 * (1.0 + d.kinetic));
  const double defect = multiplier_identity_defect(m, s);
  r.add("multiplier-identity", std::abs(defect), 1e-6, std::abs(defect) < 1e-6);
  if (!s.warning.empty()) r.flags.push_back(s.warning);
  if (s.boundary_ratio > 1e-6)
    r.flags.push_back("profile does not decay at the box edge (boundary ratio " +
                      format_double(s.boundary_ratio) + "); enlarge box_half_length");
  r.inputs.push_back({"lambda1", format_double(s.lambda1)});
  r.inputs.push_back({"lambda2", format_double(s.lambda2)});
  r.inputs.push_back({"level", format_double(s.level)});
  r.inputs.push_back({"kinetic", format_double(d.kinetic)});
  r.inputs.push_back({"boundary_ratio", format_double(s.boundary_ratio)});
}

std::string save_state(const Run& run, const std::string& name, const ModelParams& m,
                       const FieldTriple& u) {
  EvolutionState s;
  s.fields = u;
  const std::string path = (run.dir / name).string();
  save_snapshot(path, m, s);
  return path;
}

ExperimentReport cmd_gn_constant(const Run& run) {
  const RunConfig& c = run.cfg;
  ExperimentSetup setup = setup_for(run);
  const GridPtr& grid = setup.grid;
  ExperimentReport r;
  r.name = "gn-constant";
  r.inputs = setup.inputs;
  auto w = solve_scalar_ground_state(grid, c.p);
  const double C = gn_constant_of(w);
  r.inputs.push_back({"C(N,p)", format_double(C)});
  r.inputs.push_back({"C(N,3)", format_double(setup.gn.c3)});
  r.inputs.push_back({"D", format_double(threshold_D(setup.params, setup.gn))});
  r.inputs.push_back({"rho_star", format_double(rho_star(setup.params, setup.gn))});
  r.add("scalar-residual", w.residual, 1e-8, w.residual < 1e-8);
  std::mt19937_64 rng(c.seed);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k)
    worst = std::max(worst, gn_quotient(*grid, complex_bumps(*grid, rng), c.p) / C);
  r.add("gn-bound-random", worst, 1.0 + 1e-10, worst <= 1.0 + 1e-10,
        "largest quotient over 1000 random fields, relative to C");
  std::cout << "C(N,p) = " << format_double(C) << "\nC(N,3) = " << format_double(setup.gn.c3)
            << "\n";
  return r;
}

ExperimentReport cmd_groundstate(const Run& run) {
  ExperimentSetup s = setup_for(run);
  require_ground_state_masses(s.params, s.gn);
  auto res = solve_ground_state(s.params, s.grid, s.gn, s.solver);
  ExperimentReport r;
  r.name = "groundstate";
  r.inputs = s.inputs;
  add_stationary_claims(r, s.params, res, s.solver.grad_tol);
  const auto& d = res.diagnostics;
  r.add("level-negative", res.level, 0.0, res.level < 0.0);
  r.add("multipliers-positive", std::min(res.lambda1, res.lambda2), 0.0,
        res.lambda1 > 0.0 && res.lambda2 > 0.0);
  r.add("interaction-positive", d.interaction, 0.0, d.interaction > 0.0);
  if (!s.params.mass_critical()) {
    const double rho = rho_star(s.params, s.gn);
    r.add("kinetic-below-barrier", d.kinetic, rho * rho, d.kinetic < rho * rho);
  }
  r.artifacts.push_back(save_state(run, "ground.bin", s.params, res.fields));
  return r;
}

ExperimentReport cmd_excited(const Run& run) {
  ExperimentSetup s = setup_for(run);
  require_ground_state_masses(s.params, s.gn);
  auto ground = solve_ground_state(s.params, s.grid, s.gn, s.solver);
  auto res = solve_excited_state(s.params, s.grid, s.gn, s.solver);
  ExperimentReport r;
  r.name = "excited";
  r.inputs = s.inputs;
  add_stationary_claims(r, s.params, res, s.solver.grad_tol);
  r.add("level-above-ground", res.level - ground.level, 0.0, res.level > ground.level,
        "ground level " + format_double(ground.level));
  auto n = field_norms(s.params.p, res.fields);
  const double d2 = fiber_derivatives(s.params, n, 1.0).second;
  r.add("fiber-maximum", d2, 0.0, d2 < 0.0, "second derivative of the fiber map at s = 1");
  r.artifacts.push_back(save_state(run, "excited.bin", s.params, res.fields));
  return r;
}

ExperimentReport cmd_limit_system(const Run& run) {
  ExperimentSetup s = setup_for(run);
  auto res = solve_limit_system(s.grid, s.params.a1, s.params.a2, s.solver);
  ExperimentReport r;
  r.name = "limit-system";
  r.inputs = s.inputs;
  add_stationary_claims(r, s.params, res, s.solver.grad_tol);
  r.add("level-negative", res.level, 0.0, res.level < 0.0);
  r.artifacts.push_back(save_state(run, "limit.bin", s.params, res.fields));
  return r;
}

ExperimentReport cmd_fiber(const Run& run) {
  ExperimentSetup s = setup_for(run);
  const ModelParams& m = s.params;
  std::mt19937_64 rng(s.seed);
  FieldTriple u(s.grid);
  for (int c = 0; c < 3; ++c) u[c] = positive_bumps(*s.grid, rng);
  u = project_masses(u, m.a1, m.a2);
  auto n = field_norms(m.p, u);
  ExperimentReport r;
  r.name = "fiber";
  r.inputs = s.inputs;
  r.add("in-M", n.interaction, 0.0, n.interaction > 0.0);
  auto cps = fiber_stationary_points(m, n);
  const int dense = fiber_root_count_dense(m, n, 1e-8, 1e8, 400000);
  r.add("dense-oracle-agrees", dense, static_cast<double>(cps.size()),
        dense == static_cast<int>(cps.size()));
  if (m.mass_critical()) {
    r.add("single-critical-point", static_cast<double>(cps.size()), 1.0, cps.size() == 1);
    if (!cps.empty()) std::cout << "s_u = " << format_double(cps[0]) << "\n";
    return r;
  }
  r.add("two-critical-points", static_cast<double>(cps.size()), 2.0, cps.size() == 2);
  auto zeros = fiber_zeros(m, n);
  r.add("two-zeros", static_cast<double>(zeros.size()), 2.0, zeros.size() == 2);
  if (cps.size() != 2 || zeros.size() != 2) return r;
  const double su = cps[0], sig = cps[1], cu = zeros[0], du = zeros[1];
  std::cout << "s_u = " << format_double(su) << "\nc_u = " << format_double(cu)
            << "\nsigma_u = " << format_double(sig) << "\nd_u = " << format_double(du) << "\n";
  r.inputs.push_back({"s_u", format_double(su)});
  r.inputs.push_back({"c_u", format_double(cu)});
  r.inputs.push_back({"sigma_u", format_double(sig)});
  r.inputs.push_back({"d_u", format_double(du)});
  const bool ordered = su < cu && cu < sig && sig < du;
  r.add("zero-ordering", ordered ? 1.0 : 0.0, 1.0, ordered, "s_u < c_u < sigma_u < d_u");
  const double lo = fiber_derivatives(m, n, su).second, hi = fiber_derivatives(m, n, sig).second;
  r.add("local-minimum-at-s_u", lo, 0.0, lo > 0.0);
  r.add("local-maximum-at-sigma_u", hi, 0.0, hi < 0.0);
  return r;
}

std::string snapshot_name(std::int64_t steps) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "snap_%010lld.bin", static_cast<long long>(steps));
  return buf;
}

FieldTriple initial_data(const ExperimentSetup& s, const std::string& kind) {
  if (kind == "gaussian") {
    FieldTriple u(s.grid);
    for (int c = 0; c < 3; ++c)
      u[c] = sample(*s.grid, [&](const std::array<double, 3>& x) {
        double r2 = 0.0;
        for (int a = 0; a < s.grid->dim(); ++a) r2 += x[a] * x[a];
        return cplx(std::exp(-0.5 * r2), 0.0);
      });
    return project_masses(u, s.params.a1, s.params.a2);
  }
  require_ground_state_masses(s.params, s.gn);
  if (kind == "excited") return solve_excited_state(s.params, s.grid, s.gn, s.solver).fields;
  return solve_ground_state(s.params, s.grid, s.gn, s.solver).fields;
}

ExperimentReport cmd_evolve(const Run& run, const std::string& resume) {
  const RunConfig& c = run.cfg;
  ExperimentSetup s = setup_for(run);
  if (c.snapshot_every > 0 && c.snapshot_every % c.sample_every != 0)
    throw ConfigError("snapshot_every = " + std::to_string(c.snapshot_every) +
                      ": out of range, must be a multiple of sample_every");
  const fs::path csv = run.dir / "history.csv";
  EvolutionState st;
  st.dt = s.dt;
  auto w = quadratic_weights(s.grid);
  if (!resume.empty()) {
    Snapshot snap = load_snapshot(resume);
    const ModelParams& q = snap.params;
    if (q.dim != s.params.dim || q.p != s.params.p || q.alpha != s.params.alpha ||
        q.a1 != s.params.a1 || q.a2 != s.params.a2 || !snap.fields.g().same_as(*s.grid))
      throw ConfigError("resume: snapshot " + resume + " does not match the configuration");
    st.fields = snap.fields;
    st.steps = std::llround(snap.time / s.dt);
    st.time = static_cast<double>(st.steps) * s.dt;
    if (fs::exists(csv))
      for (const auto& h : read_history_csv(csv.string()))
        if (h.t < st.time) st.history.push_back(h);
    diagnostics_now(s.params, st, w);
  } else {
    st.fields = initial_data(s, c.initial);
    if (c.dilation != 1.0) st.fields = dilate(c.dilation, st.fields);
  }
  EvolveOptions opt;
  opt.horizon = c.horizon;
  opt.sample_every = c.sample_every;
  std::vector<std::string> snaps;
  auto report = evolve(s.params, st, w, opt, [&](const EvolutionState& e) {
    if (c.snapshot_every > 0 && e.steps > 0 && e.steps % c.snapshot_every == 0) {
      snaps.push_back((run.dir / snapshot_name(e.steps)).string());
      save_snapshot(snaps.back(), s.params, e);
    }
    return true;
  });
  write_history_csv(csv.string(), st.history);

  ExperimentReport r;
  r.name = "evolve";
  r.inputs = s.inputs;
  if (!resume.empty()) r.inputs.push_back({"resumed_from", resume});
  r.inputs.push_back({"verdict", verdict_name(report.verdict)});
  r.inputs.push_back({"final_time", format_double(st.time)});
  const HistorySample& h0 = st.history.front();
  double dq = 0.0, de = 0.0;
  for (const auto& h : st.history) {
    if (!std::isfinite(h.energy) || !std::isfinite(h.mass1) || !std::isfinite(h.mass2)) continue;
    dq = std::max({dq, std::abs(h.mass1 - h0.mass1) / h0.mass1,
                   std::abs(h.mass2 - h0.mass2) / h0.mass2});
    de = std::max(de, std::abs(h.energy - h0.energy) / std::max(std::abs(h0.energy), 1e-300));
  }
  r.add("mass-conserved", dq, 1e-10, dq < 1e-10, "largest relative drift of Q1, Q2");
  if (report.verdict == BlowupVerdict::global_so_far)
    r.add("energy-conserved", de, 1e-6, de < 1e-6, "largest relative drift of E");
  else
    r.flags.push_back("blow-up detected: " + report.reason);
  r.artifacts.push_back(csv.string());
  for (auto& p : snaps) r.artifacts.push_back(p);
  return r;
}

std::vector<double> sequence_or(const RunConfig& c, std::vector<double> fallback) {
  return c.sequence.empty() ? fallback : c.sequence;
}

ExperimentReport cmd_experiment(const Run& run, const std::string& sub) {
  const RunConfig& c = run.cfg;
  ExperimentSetup s = setup_for(run);
  if (sub == "dichotomy") {
    DichotomyOptions opt;
    opt.dilations = c.dilations;
    opt.horizon = c.horizon;
    return run_dichotomy(s, opt);
  }
  if (sub == "stability") {
    StabilityOptions opt;
    opt.reference = c.initial == "excited" ? StabilityReference::excited : StabilityReference::ground;
    opt.epsilon = c.epsilon;
    opt.dilation = c.dilation;
    opt.horizon = c.horizon;
    return run_stability(s, opt);
  }
  if (sub == "mass-collapse") return run_mass_collapse(s, sequence_or(c, {0.4, 0.2, 0.1}));
  if (sub == "alpha-limits") return run_alpha_limits(s, sequence_or(c, {1.0, 0.5, 0.25}));
  return run_semitrivial_limit(s, sequence_or(c, {0.3, 0.15, 0.075}));
}

// Renders an existing report: text plus one SVG per history column. Nothing is recomputed.
int cmd_report(const Invocation& inv) {
  fs::path src = inv.report_path;
  if (fs::is_directory(src)) src /= "report.json";
  const std::string json = read_file(src.string());
  ExperimentReport r = parse_report_json(json);
  std::string out_root = "out";
  if (const char* env = std::getenv("NLS3_OUTPUT_DIR"); env && *env) out_root = env;
  if (!inv.config_path.empty() || !inv.overrides.empty()) {
    Invocation cfg_inv = inv;
    out_root = build_config(cfg_inv).output_dir;
  }
  const fs::path dir = fs::path(out_root) / ("report-" + hex16(fnv1a(json)));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::string text = report_text(r);

  static const char* kColumns[] = {"E", "Q1", "Q2", "P", "kinetic", "I", "Iprime", "Isecond"};
  for (const auto& a : r.artifacts) {
    fs::path csv = a;
    if (csv.extension() != ".csv") continue;
    if (!fs::exists(csv)) csv = src.parent_path() / csv.filename();
    if (!fs::exists(csv)) throw IoError("report artifact not found: " + a);
    auto rows = read_history_csv(csv.string());
    std::vector<double> t;
    std::array<std::vector<double>, 8> cols;
    for (const auto& h : rows) {
      t.push_back(h.t);
      const double v[8] = {h.energy, h.mass1,  h.mass2,        h.pohozaev,
                           h.kinetic, h.virial, h.virial_prime, h.virial_second};
      for (int k = 0; k < 8; ++k) cols[k].push_back(v[k]);
    }
    for (int k = 0; k < 8; ++k) {
      const fs::path svg = dir / (csv.stem().string() + "_" + kColumns[k] + ".svg");
      write_file(svg.string(), tools::svg_line_plot(t, cols[k], "t", kColumns[k],
                                                    csv.stem().string() + ": " + kColumns[k]));
      text += "plot: " + svg.string() + "\n";
    }
  }
  write_file((dir / "report.txt").string(), text);
  std::cout << text;
  return r.all_pass() ? kOk : kClaims;
}

int dispatch(const Invocation& inv) {
  if (inv.subcommand == "report") return cmd_report(inv);
  const RunConfig cfg = build_config(inv);
  if (!inv.resume.empty() && inv.subcommand != "evolve")
    throw ConfigError("--resume only applies to evolve");
  Run run = open_run(inv, cfg);
  ExperimentReport r;
  const std::string& sub = inv.subcommand;
  if (sub == "gn-constant") r = cmd_gn_constant(run);
  else if (sub == "groundstate") r = cmd_groundstate(run);
  else if (sub == "excited") r = cmd_excited(run);
  else if (sub == "limit-system") r = cmd_limit_system(run);
  else if (sub == "fiber") r = cmd_fiber(run);
  else if (sub == "evolve") r = cmd_evolve(run, inv.resume);
  else r = cmd_experiment(run, sub);
  write_report((run.dir / "report.json").string(), r);
  const std::string text = report_text(r);
  write_file((run.dir / "report.txt").string(), text);
  std::cout << text << "run folder: " << run.dir.string() << "\n";
  return r.all_pass() ? kOk : kClaims;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for a three-wave coupled NLS system"};
  app.footer(keys_help());
  app.require_subcommand(1, 1);
  Invocation inv;
  for (const auto& name : kSubcommands) {
    auto* sub = app.add_subcommand(name);
    sub->footer(keys_help());
    sub->add_option("-c,--config", inv.config_path, "config file (key = value lines)");
    if (name == "report") {
      sub->add_option("path", inv.report_path, "report.json or the run folder holding it")
          ->required();
      sub->add_option("overrides", inv.overrides, "key=value assignments (output_dir)");
    } else {
      sub->add_option("overrides", inv.overrides, "key=value assignments applied after the file");
    }
    if (name == "evolve")
      sub->add_option("--resume", inv.resume, "snapshot to resume from; the run continues in its folder");
    sub->callback([&inv, name] { inv.subcommand = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  try {
    return dispatch(inv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kConfig;
  } catch (const GridError& e) {
    std::cerr << "grid error: " << e.what() << "\n";
    return kConfig;
  } catch (const ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return kConvergence;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  }
}
