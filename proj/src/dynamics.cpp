#include "nls3/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nls3 {

namespace {

// Plain complex product; std::complex operator* takes a slow path to get inf/nan cases right.
inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

const Field& half_step_phase(const SpectralGrid& g, double dt) {
  thread_local const SpectralGrid* grid = nullptr;
  thread_local std::size_t size = 0;
  thread_local double step = 0.0;
  thread_local Field phase;
  if (grid != &g || size != g.size() || step != dt) {
    const RealField& k2 = g.k_squared();
    phase.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double a = -0.5 * dt * k2[i];
      phase[i] = cplx(std::cos(a), std::sin(a));
    }
    grid = &g;
    size = g.size();
    step = dt;
  }
  return phase;
}

void linear_half_step(const SpectralGrid& g, FieldTriple& u, double dt) {
  const Field& phase = half_step_phase(g, dt);
  for (int c = 0; c < 3; ++c) {
    g.forward(u[c]);
    for (std::size_t i = 0; i < g.size(); ++i) u[c][i] = mul(u[c][i], phase[i]);
    g.inverse(u[c]);
  }
}

struct Point {
  cplx z[3];
};

// rho^e, with repeated multiplication when e is a small integer (p = 4, 6, 8, 10).
inline double power_of(double rho, double e, int int_e) {
  if (int_e < 0) return std::pow(rho, e);
  double out = 1.0;
  for (int k = 0; k < int_e; ++k) out *= rho;
  return out;
}

// d/dt z = i (|z_j|^{p-2} z_j + alpha * coupling_j).
inline Point rhs(const Point& s, double half_pm2, int int_e, double alpha, FlowTerms terms) {
  Point out;
  for (int j = 0; j < 3; ++j)
    out.z[j] = terms.power ? power_of(std::norm(s.z[j]), half_pm2, int_e) * s.z[j] : cplx(0.0, 0.0);
  if (terms.coupling) {
    out.z[0] += alpha * mul(s.z[2], std::conj(s.z[1]));
    out.z[1] += alpha * mul(s.z[2], std::conj(s.z[0]));
    out.z[2] += alpha * mul(s.z[0], s.z[1]);
  }
  for (auto& z : out.z) z = cplx(-z.imag(), z.real());
  return out;
}

inline Point axpy(const Point& a, double h, const Point& b) {
  Point out;
  for (int j = 0; j < 3; ++j) out.z[j] = a.z[j] + h * b.z[j];
  return out;
}

void nonlinear_step(const ModelParams& m, FieldTriple& u, double dt, FlowTerms terms) {
  const double half_pm2 = 0.5 * (m.p - 2.0);
  const int int_e = half_pm2 == std::floor(half_pm2) && half_pm2 <= 8.0 ? static_cast<int>(half_pm2) : -1;
  const std::size_t n = u.g().size();
  for (std::size_t i = 0; i < n; ++i) {
    Point y{{u[0][i], u[1][i], u[2][i]}};
    Point k1 = rhs(y, half_pm2, int_e, m.alpha, terms);
    Point k2 = rhs(axpy(y, 0.5 * dt, k1), half_pm2, int_e, m.alpha, terms);
    Point k3 = rhs(axpy(y, 0.5 * dt, k2), half_pm2, int_e, m.alpha, terms);
    Point k4 = rhs(axpy(y, dt, k3), half_pm2, int_e, m.alpha, terms);
    for (int j = 0; j < 3; ++j)
      u[j][i] = y.z[j] + (dt / 6.0) * (k1.z[j] + 2.0 * k2.z[j] + 2.0 * k3.z[j] + k4.z[j]);
  }
}

bool finite_fields(const FieldTriple& u) {
  for (int c = 0; c < 3; ++c)
    for (const auto& z : u[c])
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

bool finite_sample(const HistorySample& h) {
  return std::isfinite(h.energy) && std::isfinite(h.kinetic) && std::isfinite(h.mass1) &&
         std::isfinite(h.mass2) && std::isfinite(h.pohozaev);
}

}  // namespace

void step_strang(const ModelParams& m, EvolutionState& s, FlowTerms terms, double dt_cap) {
  if (!(s.dt > 0.0) || s.dt > dt_cap)
    throw ModelError("time step " + std::to_string(s.dt) + " outside (0, " +
                     std::to_string(dt_cap) + "]");
  const SpectralGrid& g = s.fields.g();
  linear_half_step(g, s.fields, s.dt);
  if (terms.power || terms.coupling) nonlinear_step(m, s.fields, s.dt, terms);
  linear_half_step(g, s.fields, s.dt);
  ++s.steps;
  s.time = static_cast<double>(s.steps) * s.dt;
}

Diagnostics diagnostics_now(const ModelParams& m, EvolutionState& s, const VirialWeights& w,
                            FlowTerms terms) {
  Diagnostics d;
  VirialValues v;
  if (finite_fields(s.fields)) {
    d = diagnostics(m, s.fields);
    v = virial(m, s.fields, w, terms);
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    d.energy = d.limit_energy = d.mass1 = d.mass2 = d.pohozaev = d.kinetic = nan;
    d.power_potential = d.interaction = nan;
    v.I = v.I_prime = v.I_second = v.I_second_flux = v.exchange = v.exchange_rate = nan;
  }
  HistorySample h;
  h.t = s.time;
  h.energy = d.energy;
  h.mass1 = d.mass1;
  h.mass2 = d.mass2;
  h.pohozaev = d.pohozaev;
  h.kinetic = d.kinetic;
  h.virial = v.I;
  h.virial_prime = v.I_prime;
  h.virial_second = v.I_second;
  if (!s.history.empty() && !(h.t > s.history.back().t)) {
    // Re-sampling the same instant replaces the earlier sample.
    if (h.t == s.history.back().t)
      s.history.back() = h;
    else
      throw ModelError("history timestamps must increase");
  } else {
    s.history.push_back(h);
    if (s.history_capacity > 0 && s.history.size() > s.history_capacity) s.history.pop_front();
  }
  return d;
}

const char* verdict_name(BlowupVerdict v) {
  return v == BlowupVerdict::blowup_detected ? "blowup_detected" : "global_so_far";
}

BlowupReport detect_blowup(const EvolutionState& s, const BlowupThresholds& th,
                           VirialMode mode) {
  if (s.history.empty()) throw ModelError("detect_blowup needs at least one history sample");
  BlowupReport r;
  r.convexity_time = std::numeric_limits<double>::infinity();
  const HistorySample& first = s.history.front();
  const HistorySample& last = s.history.back();
  double pmax = -std::numeric_limits<double>::infinity();
  double curvature = -std::numeric_limits<double>::infinity();
  for (const auto& h : s.history) {
    if (h.t > first.t + th.eta_window) break;
    if (std::isfinite(h.pohozaev)) pmax = std::max(pmax, h.pohozaev);
    if (std::isfinite(h.virial_second)) curvature = std::max(curvature, h.virial_second);
  }
  r.eta = std::isfinite(pmax) ? -pmax : 0.0;

  if (!finite_sample(last)) {
    r.verdict = BlowupVerdict::blowup_detected;
    r.reason = "non-finite fields at t = " + std::to_string(last.t);
    return r;
  }
  if (last.kinetic > th.growth_factor * first.kinetic) {
    r.verdict = BlowupVerdict::blowup_detected;
    r.reason = "kinetic energy grew by more than " + std::to_string(th.growth_factor);
    return r;
  }
  if (th.convexity_test && mode == VirialMode::quadratic && curvature < 0.0) {
    // 0 <= I(t) <= I(0) + I'(0) t + curvature t^2 / 2 cannot hold past the positive root.
    const double a = -0.5 * curvature, b = first.virial_prime, c = first.virial;
    r.convexity_time = (b + std::sqrt(b * b + 4.0 * a * c)) / (2.0 * a);
    if (last.t - first.t >= r.convexity_time) {
      r.verdict = BlowupVerdict::blowup_detected;
      r.reason = "run outlived the virial convexity bound T = " + std::to_string(r.convexity_time);
    }
  }
  return r;
}

BlowupReport evolve(const ModelParams& m, EvolutionState& s, const VirialWeights& w,
                    const EvolveOptions& opt, const EvolveObserver& observer) {
  if (opt.sample_every < 1) throw ModelError("sample_every must be at least 1");
  if (!(s.dt > 0.0)) throw ModelError("time step must be positive");
  const std::int64_t end = std::llround(opt.horizon / s.dt);
  if (s.history.empty()) {
    diagnostics_now(m, s, w, opt.terms);
    if (observer && !observer(s)) return detect_blowup(s, opt.thresholds, w.mode);
  }
  BlowupReport report = detect_blowup(s, opt.thresholds, w.mode);
  while (s.steps < end) {
    if (opt.stop_on_blowup && report.verdict == BlowupVerdict::blowup_detected) break;
    step_strang(m, s, opt.terms, opt.dt_cap);
    if (s.steps % opt.sample_every == 0 || s.steps == end) {
      diagnostics_now(m, s, w, opt.terms);
      report = detect_blowup(s, opt.thresholds, w.mode);
      if (observer && !observer(s)) break;
    }
  }
  return report;
}

double radial_asymmetry(const Field& f, const SpectralGrid& g) {
  const int N = g.dim(), M = g.points();
  double top = 0.0;
  for (const auto& v : f) top = std::max(top, std::abs(v));
  if (top == 0.0) return 0.0;
  std::array<int, 3> perm{0, 1, 2};
  double worst = 0.0;
  std::array<int, 3> strides{1, 1, 1};
  for (int a = N - 2; a >= 0; --a) strides[a] = strides[a + 1] * M;
  do {
    for (int mask = 0; mask < (1 << N); ++mask) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        auto idx = g.unflatten(i);
        std::size_t j = 0;
        for (int a = 0; a < N; ++a) {
          int v = idx[perm[a]];
          if (mask & (1 << a)) v = (M - v) % M;
          j += static_cast<std::size_t>(v) * strides[a];
        }
        worst = std::max(worst, std::abs(std::abs(f[i]) - std::abs(f[j])));
      }
    }
  } while (std::next_permutation(perm.begin(), perm.begin() + N));
  return worst / top;
}

double radial_tail_rhs(int dim, double p, double R, double grad_norm, double l2_norm) {
  const double pi = std::acos(-1.0);
  const double sphere = dim == 1 ? 2.0 : dim == 2 ? 2.0 * pi : 4.0 * pi;
  const double sup_sq = (2.0 / sphere) * std::pow(R, -(dim - 1.0)) * grad_norm * l2_norm;
  return std::pow(sup_sq, 0.5 * (p - 2.0)) * l2_norm * l2_norm;
}

TailBound radial_tail_bound(const ModelParams& m, const EvolutionState& s, double R) {
  const SpectralGrid& g = s.fields.g();
  TailBound out;
  for (int c = 0; c < 3; ++c) {
    const Field& f = s.fields[c];
    if (radial_asymmetry(f, g) > 1e-6)
      throw ModelError("radial_tail_bound: component " + std::to_string(c + 1) +
                       " is not radially symmetric");
    double tail = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.radius(i) >= R) tail += std::pow(std::norm(f[i]), 0.5 * m.p);
    out.measured[c] = tail * g.cell_volume();
    out.bound[c] = radial_tail_rhs(g.dim(), m.p, R, std::sqrt(gradient_norm_sq(g, f)),
                                   std::sqrt(norm_sq(g, f)));
    double ratio = 0.0;
    if (out.bound[c] > 0.0)
      ratio = out.measured[c] / out.bound[c];
    else if (out.measured[c] > 0.0)
      ratio = std::numeric_limits<double>::infinity();
    out.ratio = std::max(out.ratio, ratio);
  }
  return out;
}

}  // namespace nls3
