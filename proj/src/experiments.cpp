#include "nls3/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <limits>
#include <random>

namespace nls3 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Last distance of a limit sequence, as a fraction of the limit profile's H1 norm.
constexpr double kFinalDistanceFraction = 0.1;

void add_final_distance(ExperimentReport& r, const std::string& claim,
                        const std::vector<double>& dist, double ref_norm) {
  const double last = dist.empty() ? NAN : dist.back();
  r.add(claim, last, kFinalDistanceFraction * ref_norm, last < kFinalDistanceFraction * ref_norm,
        "last distance of the sequence against a tenth of the limit profile's H1 norm");
}

std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string artifact_path(const ExperimentSetup& s, const std::string& name) {
  return (std::filesystem::path(s.output_dir) / name).string();
}

ExperimentReport start_report(const std::string& name, const ExperimentSetup& s) {
  ExperimentReport r;
  r.name = name;
  r.inputs = s.inputs;
  return r;
}

// Runs fn(k) for every k concurrently and returns the results in order.
template <class F>
auto run_points(std::size_t n, F&& fn) {
  using T = decltype(fn(std::size_t{0}));
  std::vector<std::future<T>> jobs;
  for (std::size_t k = 0; k < n; ++k) jobs.push_back(std::async(std::launch::async, fn, k));
  std::vector<T> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

double rms_radius(const FieldTriple& u) {
  const SpectralGrid& g = u.g();
  double num = 0.0, den = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = g.radius(i), rho = std::norm(u[c][i]);
      num += r * r * rho;
      den += rho;
    }
  return den > 0.0 ? std::sqrt(num / den) : 1.0;
}

// Sum of three complex Gaussian bumps of size ~width, made even under x -> -x so the
// perturbation carries no momentum and the solution cannot drift off the gauge orbit by translation.
Field even_bumps(const SpectralGrid& g, std::mt19937_64& rng, double width) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f(g.size(), cplx(0.0, 0.0));
  for (int b = 0; b < 3; ++b) {
    std::array<double, 3> c{0.5 * width * u(rng), 0.5 * width * u(rng), 0.5 * width * u(rng)};
    const double w = width * (1.0 + 0.5 * u(rng));
    const cplx amp(u(rng), u(rng));
    auto bump = sample(g, [&](const std::array<double, 3>& x) {
      double r2 = 0.0;
      for (int a = 0; a < g.dim(); ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
      return amp * std::exp(-r2 / (w * w));
    });
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += bump[i];
  }
  const int M = g.points();
  Field even(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto idx = g.unflatten(i);
    std::size_t j = 0;
    for (int a = 0; a < g.dim(); ++a) j = j * M + static_cast<std::size_t>((M - idx[a]) % M);
    even[i] = 0.5 * (f[i] + f[j]);
  }
  return even;
}

struct Trajectory {
  EvolutionState state;
  BlowupReport verdict;
  double sup_distance = 0.0;
  double final_time = 0.0;
  std::string csv;
};

Trajectory evolve_from(const ExperimentSetup& setup, const ModelParams& m, const FieldTriple& u0,
                       double horizon, const BlowupThresholds& th, const std::string& csv_name,
                       const FieldTriple* reference) {
  Trajectory t;
  t.state.fields = u0;
  t.state.dt = setup.dt;
  EvolveOptions opt;
  opt.horizon = horizon;
  opt.sample_every = setup.sample_every;
  opt.thresholds = th;
  auto w = quadratic_weights(u0.grid);
  t.verdict = evolve(m, t.state, w, opt, [&](const EvolutionState& s) {
    if (reference) {
      const double d = gauge_distance(s.fields, *reference).distance;
      t.sup_distance = std::isfinite(d) ? std::max(t.sup_distance, d) : kInf;
    }
    return true;
  });
  t.final_time = t.state.time;
  if (!setup.output_dir.empty()) {
    t.csv = artifact_path(setup, csv_name);
    write_history_csv(t.csv, t.state.history);
  }
  return t;
}

double ratio_or_inf(double a, double b) { return b > 0.0 ? a / b : kInf; }

}  // namespace

ExperimentSetup make_setup(const RunConfig& cfg, const GnCache* cache) {
  validate_config(cfg);
  ExperimentSetup s;
  s.grid = make_grid(cfg.dim, cfg.points, cfg.box_half_length);
  s.gn = gn_constants(s.grid, cfg.p, cache);
  s.params = resolve_params(cfg, s.gn);
  try {
    s.params.validate();
  } catch (const ModelError& e) {
    throw ConfigError(std::string("out of range: ") + e.what());
  }
  s.solver.step_size = cfg.solver_step_size;
  s.solver.grad_tol = cfg.solver_grad_tol;
  s.solver.max_iters = cfg.solver_max_iters;
  s.solver.seed = cfg.seed;
  s.dt = cfg.dt;
  s.sample_every = cfg.sample_every;
  s.seed = cfg.seed;
  s.inputs = config_echo(cfg);
  s.output_dir = cfg.output_dir;
  return s;
}

double global_kinetic_bound(const ModelParams& m, const GnConstants& gn, double energy) {
  if (m.mass_critical()) return kInf;
  const double N = m.dim, pg = m.p * m.gamma_p();
  // P >= 0 gives c K <= E + alpha (1 - 1/(p-2)) Re int u1 u2 conj(u3), and
  // Re int u1 u2 conj(u3) <= (1/3) sum ||u_i||_3^3 <= B K^{N/4}.
  const double c = 0.5 * (1.0 - 2.0 / pg);
  const double B = std::pow(gn.c3, 3) * std::pow(m.max_mass(), 0.5 * (6.0 - N)) *
                   std::pow(3.0, -N / 4.0);
  const double b = m.alpha * (1.0 - 1.0 / (m.p - 2.0)) * B;
  auto f = [&](double K) { return c * K - energy - b * std::pow(K, 0.25 * N); };
  const double kmin = std::pow(b * N / (4.0 * c), 1.0 / (1.0 - 0.25 * N));
  if (f(kmin) > 0.0) return 0.0;
  double hi = 2.0 * kmin + 1.0;
  while (f(hi) <= 0.0) hi *= 2.0;
  return bisect(f, kmin, hi, 1e-12 * hi);
}

ExperimentReport run_stability(const ExperimentSetup& setup, const StabilityOptions& opt) {
  const bool ground = opt.reference == StabilityReference::ground;
  ExperimentReport r = start_report(ground ? "stability" : "instability", setup);
  const ModelParams& m = setup.params;
  StationaryResult ref = ground ? solve_ground_state(m, setup.grid, setup.gn, setup.solver)
                                : solve_excited_state(m, setup.grid, setup.gn, setup.solver);
  FieldTriple u0 = ref.fields;
  double eps = 0.0;
  if (opt.dilation != 1.0) {
    u0 = dilate(opt.dilation, ref.fields);
    eps = h1_distance(u0, ref.fields);
  } else if (opt.epsilon > 0.0) {
    std::mt19937_64 rng(setup.seed);
    const double width = rms_radius(ref.fields);
    FieldTriple d(setup.grid);
    for (int c = 0; c < 3; ++c) d[c] = even_bumps(*setup.grid, rng, width);
    const double scale = opt.epsilon / std::sqrt(h1_norm_sq(d));
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < d[c].size(); ++i) u0[c][i] += scale * d[c][i];
    eps = h1_distance(u0, ref.fields);
  }
  r.inputs.emplace_back("perturbation_h1", format_double(eps));

  BlowupThresholds th;
  Trajectory t = evolve_from(setup, m, u0, opt.horizon, th, "history.csv", &ref.fields);
  if (!t.csv.empty()) r.artifacts.push_back(t.csv);
  const bool blew_up = t.verdict.verdict == BlowupVerdict::blowup_detected;
  const double bound = std::max(opt.bound_factor * eps, opt.absolute_floor);
  if (ground) {
    r.add("orbital-stability", t.sup_distance, bound, !blew_up && t.sup_distance < bound,
          blew_up ? "blow-up during a stability run: " + t.verdict.reason
                  : "sup over t <= " + tag(t.final_time) + " of the gauge-orbit H1 distance");
  } else {
    r.add("strong-instability", ratio_or_inf(t.sup_distance, eps), opt.bound_factor,
          blew_up || t.sup_distance > opt.bound_factor * eps,
          blew_up ? "blow-up detected at t = " + tag(t.final_time) + ": " + t.verdict.reason
                  : "sup distance over initial distance");
  }
  return r;
}

ExperimentReport run_dichotomy(const ExperimentSetup& setup, const DichotomyOptions& opt) {
  ExperimentReport r = start_report("dichotomy", setup);
  const ModelParams& m = setup.params;
  StationaryResult v;
  try {
    v = solve_excited_state(m, setup.grid, setup.gn, setup.solver);
  } catch (const ModelError& e) {
    r.add("excited-state-exists", NAN, 0.0, false, e.what());
    return r;
  }
  auto wp = solve_scalar_ground_state(setup.grid, m.p);
  const double semi = std::min(scalar_level_m(wp, m.dim, m.a1), scalar_level_m(wp, m.dim, m.a2));
  r.add("excited-below-semitrivial", v.level - semi, 0.0, v.level < semi,
        "m- minus min(m(a1), m(a2))");

  const double Ev = v.level;
  auto runs = run_points(opt.dilations.size(), [&](std::size_t k) {
    const double s = opt.dilations[k];
    FieldTriple u0 = s == 1.0 ? v.fields : dilate(s, v.fields);
    if (s == 1.0) return Trajectory{};
    ExperimentSetup run = setup;
    if (s > 1.0) run.dt = setup.dt / opt.collapse_refine;
    return evolve_from(run, m, u0, opt.horizon, opt.thresholds, "history_s" + tag(s) + ".csv",
                       nullptr);
  });

  for (std::size_t k = 0; k < opt.dilations.size(); ++k) {
    const double s = opt.dilations[k];
    const std::string at = "[s=" + tag(s) + "]";
    if (s == 1.0) {
      const auto d = v.diagnostics;
      r.add("standing-wave-neutral" + at, std::abs(d.pohozaev), 1e-6 * (1.0 + d.kinetic),
            std::abs(d.pohozaev) <= 1e-6 * (1.0 + d.kinetic), "|P(v)|: on neither branch");
      continue;
    }
    const Trajectory& t = runs[k];
    if (!t.csv.empty()) r.artifacts.push_back(t.csv);
    const HistorySample& h0 = t.state.history.front();
    r.add("energy-below-excited" + at, h0.energy - Ev, 0.0, h0.energy < Ev, "E(s*v) - E(v)");
    double pmax = -kInf, pmin = kInf, kmax = 0.0, floor = kInf, curv = -kInf;
    for (const auto& h : t.state.history) {
      if (!std::isfinite(h.pohozaev) || !std::isfinite(h.kinetic)) continue;
      pmax = std::max(pmax, h.pohozaev);
      pmin = std::min(pmin, h.pohozaev);
      kmax = std::max(kmax, h.kinetic);
      floor = std::min(floor, -h.pohozaev / h.kinetic);
      if (std::isfinite(h.virial_second)) curv = std::max(curv, h.virial_second);
    }
    const bool blew_up = t.verdict.verdict == BlowupVerdict::blowup_detected;
    if (s < 1.0) {
      r.add("pohozaev-positive" + at, h0.pohozaev, 0.0, h0.pohozaev > 0.0);
      r.add("global-existence" + at, t.final_time, opt.horizon,
            !blew_up && t.final_time >= opt.horizon - 0.5 * setup.dt,
            blew_up ? t.verdict.reason : "global_so_far");
      r.add("pohozaev-stays-positive" + at, pmin, 0.0, pmin > 0.0, "min over t of P");
      const double kbar = global_kinetic_bound(m, setup.gn, h0.energy);
      r.add("kinetic-bounded" + at, kmax, kbar, kmax <= kbar,
            "max over t of the kinetic energy against the P >= 0 barrier");
    } else {
      const double eta = Ev - h0.energy;
      r.add("pohozaev-negative" + at, h0.pohozaev, 0.0, h0.pohozaev < 0.0);
      r.add("blowup-detected" + at, t.final_time, opt.horizon, blew_up,
            blew_up ? t.verdict.reason : "global_so_far at the horizon");
      r.add("pohozaev-below-minus-eta" + at, pmax + eta, 0.0, pmax + eta <= 0.0,
            "max over t of P plus eta, eta = E(v) - E(s*v) = " + format_double(eta));
      r.add("pohozaev-kinetic-floor" + at, floor, 0.0, floor > 0.0, "min over t of -P/kinetic");
      r.add("virial-concave" + at, curv, 0.0, curv < 0.0, "max over t of I''");
    }
  }
  return r;
}

double collapse_kappa(int dim, double alpha, double a, double w_norm_sq) {
  if (!(alpha > 0.0) || !(a > 0.0) || !(w_norm_sq > 0.0))
    throw ModelError("collapse_kappa: alpha, a and ||w||^2 must be positive");
  return std::pow(alpha * a / std::sqrt(2.0 * w_norm_sq), 4.0 / (4.0 - dim));
}

ExperimentReport run_mass_collapse(const ExperimentSetup& setup,
                                   const std::vector<double>& a_fractions) {
  ExperimentReport r = start_report("mass-collapse", setup);
  const ModelParams base = setup.params;
  const int N = base.dim;
  const SpectralGrid& g0 = *setup.grid;
  const double cap =
      base.mass_critical() ? mass_critical_threshold(base, setup.gn) : threshold_D(base, setup.gn);
  for (double f : a_fractions)
    if (!(f > 0.0) || !(f < 1.0))
      throw ConfigError("out of range: mass-collapse fractions must lie in (0, 1), got " + tag(f));
  const double w2 = solve_scalar_ground_state(setup.grid, 3.0).l2_norm_sq;
  const double target = std::sqrt(2.0 * w2);
  const StationaryResult v0 = solve_limit_system(setup.grid, target, target, setup.solver);

  struct Point {
    double kappa, level, mass_defect, distance;
  };
  auto points = run_points(a_fractions.size(), [&](std::size_t k) {
    ModelParams m = base;
    m.a1 = m.a2 = a_fractions[k] * cap;
    const double kappa = collapse_kappa(N, m.alpha, m.a1, w2);
    // On a box scaled by kappa^{-1/2} the rescaled samples sit on the reference grid.
    auto grid = make_grid(N, g0.points(), g0.half_length() / std::sqrt(kappa));
    auto u = solve_ground_state(m, grid, setup.gn, setup.solver);
    FieldTriple va(setup.grid);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < g0.size(); ++i) va[c][i] = (m.alpha / kappa) * u.fields[c][i];
    auto [q1, q2] = masses(va);
    return Point{kappa, u.level, std::max(std::abs(q1 - 2.0 * w2), std::abs(q2 - 2.0 * w2)),
                 gauge_distance(va, v0.fields).distance};
  });

  std::vector<double> dist;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const std::string at = "[a=" + tag(a_fractions[k]) + "D]";
    r.add("rescaled-mass" + at, points[k].mass_defect, 1e-6, points[k].mass_defect < 1e-6,
          "max_j |Q_j(v_a) - 2||w||^2|, kappa = " + format_double(points[k].kappa));
    r.add("collapse-distance" + at, points[k].distance, kInf, std::isfinite(points[k].distance),
          "gauge-minimized H1 distance to the limit minimizer");
    dist.push_back(points[k].distance);
  }
  const int bad = monotone_violations(dist);
  r.add("collapse-distance-decreasing", bad, 0.0, true,
        bad ? "non-monotone sequence (flagged)" : "strictly decreasing");
  if (bad) r.flags.push_back("mass-collapse distances are not strictly decreasing");
  add_final_distance(r, "collapse-final-distance", dist, std::sqrt(h1_norm_sq(v0.fields)));
  return r;
}

ExperimentReport run_alpha_limits(const ExperimentSetup& setup, const std::vector<double>& alphas) {
  ExperimentReport r = start_report("alpha-limits", setup);
  const ModelParams base = setup.params;
  const int N = base.dim;
  const SpectralGrid& g0 = *setup.grid;
  if (alphas.size() < 2) throw ConfigError("out of range: alpha-limits needs at least two alphas");
  for (double a : alphas) {
    ModelParams m = base;
    m.alpha = a;
    try {
      m.validate();
    } catch (const ModelError& e) {
      throw ConfigError(std::string("out of range: ") + e.what());
    }
    const double cap =
        m.mass_critical() ? mass_critical_threshold(m, setup.gn) : threshold_D(m, setup.gn);
    if (!(m.max_mass() < cap))
      throw ConfigError("out of range: max(a1, a2) = " + format_double(m.max_mass()) +
                        " is not below D(alpha = " + format_double(a) + ") = " + format_double(cap));
  }
  const StationaryResult ref = solve_limit_system(setup.grid, base.a1, base.a2, setup.solver);

  struct Point {
    double level, kinetic, distance;
  };
  auto points = run_points(alphas.size(), [&](std::size_t k) {
    ModelParams m = base;
    m.alpha = alphas[k];
    const double s = std::pow(m.alpha, -2.0 / (4.0 - N));
    auto grid = make_grid(N, g0.points(), g0.half_length() * s);
    auto u = solve_ground_state(m, grid, setup.gn, setup.solver);
    const double amp = std::pow(m.alpha, -double(N) / (4.0 - N));
    FieldTriple v(setup.grid);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < g0.size(); ++i) v[c][i] = amp * u.fields[c][i];
    return Point{u.level, u.diagnostics.kinetic, gauge_distance(v, ref.fields).distance};
  });

  std::vector<double> levels, kinetic, dist;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const std::string at = "[alpha=" + tag(alphas[k]) + "]";
    r.add("ground-level" + at, points[k].level, 0.0, points[k].level < 0.0, "m+(a1, a2)");
    levels.push_back(points[k].level);
    kinetic.push_back(points[k].kinetic);
    dist.push_back(points[k].distance);
    r.add("rescaled-distance" + at, points[k].distance, kInf, std::isfinite(points[k].distance),
          "gauge-minimized H1 distance to the m0(a1, a2) minimizer");
  }
  // The sequences are ordered by decreasing alpha.
  if (monotone_violations(alphas) != 0) r.flags.push_back("alpha sequence is not decreasing");
  const int kin_bad = monotone_violations(kinetic);
  r.add("kinetic-decreasing", kin_bad, 0.0, kin_bad == 0, "violations of strict decrease");
  const double slope = log_log_slope(alphas, levels), expect = 4.0 / (4.0 - N);
  r.add("level-slope", slope, expect, std::abs(slope - expect) <= 0.05 * expect,
        "log|m+| against log alpha, within 5% of 4/(4-N); m0 = " + format_double(ref.level));
  const int bad = monotone_violations(dist);
  r.add("rescaled-distance-decreasing", bad, 0.0, true,
        bad ? "non-monotone sequence (flagged)" : "strictly decreasing");
  if (bad) r.flags.push_back("alpha-limit distances are not strictly decreasing");
  add_final_distance(r, "rescaled-final-distance", dist, std::sqrt(h1_norm_sq(ref.fields)));
  return r;
}

double semitrivial_kappa(int dim, double p, double a1, double wp_norm_sq) {
  ModelParams m{dim, p, 1.0, a1, a1};
  const double denom = 2.0 - p * m.gamma_p();
  if (std::abs(denom) < 1e-12) throw ModelError("semitrivial_kappa: p = 2_* makes the exponent singular");
  return std::pow(a1 * a1 / wp_norm_sq, (p - 2.0) / denom);
}

ExperimentReport run_semitrivial_limit(const ExperimentSetup& setup,
                                       const std::vector<double>& a2_fractions) {
  ExperimentReport r = start_report("semitrivial", setup);
  const ModelParams base = setup.params;
  const SpectralGrid& g0 = *setup.grid;
  const double a1 = base.a1;
  auto wp0 = solve_scalar_ground_state(setup.grid, base.p);
  const double kt = semitrivial_kappa(base.dim, base.p, a1, wp0.l2_norm_sq);
  // w_p on the box where kappa~^{-1/(p-2)} v1(kappa~^{-1/2} x) is sampled by relabeling.
  auto wgrid = make_grid(base.dim, g0.points(), g0.half_length() * std::sqrt(kt));
  auto wp = solve_scalar_ground_state(wgrid, base.p);
  const double m_a1 = scalar_level_m(wp0, base.dim, a1);
  r.inputs.emplace_back("kappa_tilde", format_double(kt));

  // Cold start at a2 = a1, then continuation along the sequence.
  SolverConfig cfg = setup.solver;
  std::vector<double> dist, tails, gaps;
  try {
    ModelParams m = base;
    m.a2 = a1;
    cfg.initial = solve_excited_state(m, setup.grid, setup.gn, cfg).fields;
  } catch (const std::exception& e) {
    r.add("excited-state-exists", NAN, 0.0, false, e.what());
    return r;
  }
  for (double f : a2_fractions) {
    const std::string at = "[a2=" + tag(f) + "a1]";
    ModelParams m = base;
    m.a2 = f * a1;
    StationaryResult v;
    try {
      v = solve_excited_state(m, setup.grid, setup.gn, cfg);
    } catch (const std::exception& e) {
      r.add("excited-state" + at, NAN, 0.0, false, e.what());
      continue;
    }
    cfg.initial = v.fields;
    const double semi = std::min(m_a1, scalar_level_m(wp0, base.dim, m.a2));
    r.add("excited-below-semitrivial" + at, v.level - semi, 0.0, v.level < semi);
    Field r1(g0.size());
    const double amp = std::pow(kt, -1.0 / (base.p - 2.0));
    for (std::size_t i = 0; i < g0.size(); ++i) r1[i] = amp * v.fields[0][i];
    const double d1 = phase_distance(*wgrid, r1, wp.field);
    const double n2 = h1_inner(g0, v.fields[1], v.fields[1]).real();
    const double n3 = h1_inner(g0, v.fields[2], v.fields[2]).real();
    const double d = std::sqrt(d1 * d1 + n2 + n3);
    const double tail = std::sqrt(n2) + std::sqrt(n3);
    r.add("semitrivial-distance" + at, d, kInf, std::isfinite(d),
          "H1 distance of the rescaled state to (w_p, 0, 0)");
    r.add("partner-h1" + at, tail, kInf, std::isfinite(tail), "||v2||_H1 + ||v3||_H1");
    r.add("level-gap" + at, m_a1 - v.level, 0.0, m_a1 - v.level > 0.0, "m(a1) - m-(a1, a2)");
    dist.push_back(d);
    tails.push_back(tail);
    gaps.push_back(m_a1 - v.level);
  }
  if (dist.size() != a2_fractions.size()) return r;
  const int bad = monotone_violations(dist);
  r.add("semitrivial-distance-decreasing", bad, 0.0, true,
        bad ? "non-monotone sequence (flagged)" : "strictly decreasing");
  if (bad) r.flags.push_back("semi-trivial distances are not strictly decreasing");
  add_final_distance(r, "semitrivial-final-distance", dist,
                     std::sqrt(h1_inner(*wgrid, wp.field, wp.field).real()));
  const int tail_bad = monotone_violations(tails);
  r.add("partner-h1-decreasing", tail_bad, 0.0, tail_bad == 0, "violations of strict decrease");
  const int gap_bad = monotone_violations(gaps);
  r.add("level-gap-decreasing", gap_bad, 0.0, gap_bad == 0, "violations of strict decrease");
  return r;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ModelError("log_log_slope needs matching sizes >= 2");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lx = std::log(std::abs(x[k])), ly = std::log(std::abs(y[k]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int monotone_violations(const std::vector<double>& values) {
  int bad = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (!(values[k] < values[k - 1])) ++bad;
  return bad;
}

}  // namespace nls3
