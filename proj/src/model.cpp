#include "nls3/model.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace nls3 {

bool ModelParams::mass_critical() const {
  return std::abs(p - critical_exponent()) <= 1e-12 * critical_exponent();
}

void ModelParams::validate() const {
  if (dim < 1 || dim > 3) throw ModelError("dim must be 1, 2 or 3");
  if (!std::isfinite(p)) throw ModelError("p must be finite");
  double lo = critical_exponent();
  if (p < lo && !mass_critical())
    throw ModelError("p = " + std::to_string(p) + " is below 2_* = 2+4/N = " +
                     std::to_string(lo) + " for N = " + std::to_string(dim));
  if (dim == 3 && p >= 6.0) throw ModelError("p must be below 6 for N = 3");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ModelError("alpha must be positive");
  if (!(a1 > 0.0) || !(a2 > 0.0) || !std::isfinite(a1) || !std::isfinite(a2))
    throw ModelError("a1 and a2 must be positive");
}

double threshold_D(const ModelParams& m, const GnConstants& gn) {
  const double p = m.p, N = m.dim;
  if (std::abs(p - 3.0) < 1e-12) throw ModelError("threshold_D: p = 3 is outside the formula domain");
  const double pg = p * m.gamma_p();
  double first = 1.0;
  if (!m.mass_critical()) {
    double base = 3.0 / (m.alpha * std::pow(gn.c3, 3)) * (pg - 2.0) / (2.0 * pg - N);
    first = std::pow(base, (N * (p - 2.0) - 4.0) / (4.0 * (p - 3.0)));
  }
  double base2 = p * (4.0 - N) / (2.0 * (2.0 * pg - N) * std::pow(gn.cp, p));
  return first * std::pow(base2, (4.0 - N) / (4.0 * (p - 3.0)));
}

double rho_star(const ModelParams& m, const GnConstants& gn) {
  if (m.mass_critical()) return std::numeric_limits<double>::infinity();
  const double p = m.p, N = m.dim, g = m.gamma_p(), pg = p * g;
  double base = p * (4.0 - N) / (2.0 * (2.0 * pg - N) * std::pow(gn.cp, p));
  double D = threshold_D(m, gn);
  return std::pow(base, 1.0 / (pg - 2.0)) * std::pow(D, -p * (1.0 - g) / (pg - 2.0));
}

double geometry_h(const ModelParams& m, const DerivedConstants& c, double rho) {
  if (rho <= 0.0) return 0.0;
  const double pg = m.p * c.gamma_p;
  return 0.5 * rho * rho - c.A1 * std::pow(rho, pg) - c.A2 * std::pow(rho, 0.5 * m.dim);
}

std::vector<double> geometry_h_roots(const ModelParams& m, const DerivedConstants& c) {
  // h(rho) / rho^{N/2} = rho^{2-N/2}/2 - A1 rho^{p gamma - N/2} - A2 is unimodal with an
  // explicit maximizer, so the zeros are bracketed on either side of it.
  const double N = m.dim, pg = m.p * c.gamma_p;
  if (pg <= 2.0) return {};
  const double e1 = 2.0 - 0.5 * N, e2 = pg - 0.5 * N;
  auto ht = [&](double r) { return 0.5 * std::pow(r, e1) - c.A1 * std::pow(r, e2) - c.A2; };
  double rmax = std::pow(e1 / (2.0 * c.A1 * e2), 1.0 / (pg - 2.0));
  double top = ht(rmax);
  if (std::abs(top) <= 1e-12 * c.A2) return {rmax, rmax};
  if (top < 0.0) return {};
  double lo = rmax;
  while (ht(lo) > 0.0) lo *= 0.5;
  double hi = rmax;
  while (ht(hi) > 0.0) hi *= 2.0;
  double r0 = bisect(ht, lo, rmax, 1e-15 * rmax);
  double r1 = bisect(ht, rmax, hi, 1e-15 * hi);
  return {r0, r1};
}

DerivedConstants derive_constants(const ModelParams& m, const GnConstants& gn) {
  DerivedConstants c;
  const double p = m.p, N = m.dim, amax = m.max_mass();
  c.gamma_p = m.gamma_p();
  c.gn_constant_p = gn.cp;
  c.gn_constant_3 = gn.c3;
  c.A1 = std::pow(gn.cp, p) / p * std::pow(amax, p * (1.0 - c.gamma_p));
  c.A2 = m.alpha / 3.0 * std::pow(gn.c3, 3) * std::pow(amax, (6.0 - N) / 2.0);
  c.D = threshold_D(m, gn);
  c.rho_star = rho_star(m, gn);
  if (!m.mass_critical() && amax < c.D) {
    auto r = geometry_h_roots(m, c);
    if (r.size() == 2) {
      c.R0 = r[0];
      c.R1 = r[1];
    }
  }
  return c;
}

double mass_critical_threshold(const ModelParams& m, const GnConstants& gn) {
  if (!m.mass_critical()) throw ModelError("mass_critical_threshold requires p = 2_*");
  const double N = m.dim;
  return std::pow((N + 2.0) / N, N / 4.0) * std::pow(gn.cp, -(N + 2.0) / 2.0);
}

double coercivity_coefficient(const ModelParams& m, const GnConstants& gn) {
  const double N = m.dim;
  return 1.0 - N * std::pow(gn.cp, 2.0 + 4.0 / N) / (N + 2.0) * std::pow(m.max_mass(), 4.0 / N);
}

FieldTriple::FieldTriple(GridPtr g) : grid(std::move(g)) {
  for (auto& f : c) f.assign(grid->size(), cplx(0.0, 0.0));
}

void require_same_grid(const FieldTriple& a, const FieldTriple& b) {
  if (!a.grid || !b.grid || !a.grid->same_as(*b.grid))
    throw GridError("field triples live on different grids");
}

namespace {

void check_triple(const FieldTriple& u) {
  if (!u.grid) throw GridError("field triple has no grid");
  for (const auto& f : u.c)
    if (f.size() != u.grid->size()) throw GridError("field size does not match grid");
}

double interaction_of(const FieldTriple& u) {
  double s = 0.0;
  const auto &u1 = u[0], &u2 = u[1], &u3 = u[2];
  for (std::size_t i = 0; i < u1.size(); ++i) s += (u1[i] * u2[i] * std::conj(u3[i])).real();
  return s * u.g().cell_volume();
}

}  // namespace

FieldNorms field_norms(double p, const FieldTriple& u) {
  check_triple(u);
  FieldNorms n;
  for (int i = 0; i < 3; ++i) {
    n.l2[i] = norm_sq(u.g(), u[i]);
    n.grad[i] = gradient_norm_sq_parseval(u.g(), u[i]);
    n.power[i] = lp_norm_p(u.g(), u[i], p);
    n.kinetic += n.grad[i];
    n.potential += n.power[i];
  }
  n.interaction = interaction_of(u);
  return n;
}

Diagnostics diagnostics_from_norms(const ModelParams& m, const FieldNorms& n) {
  Diagnostics d;
  d.kinetic = n.kinetic;
  d.power_potential = n.potential;
  d.interaction = n.interaction;
  d.energy = 0.5 * n.kinetic - n.potential / m.p - m.alpha * n.interaction;
  d.limit_energy = 0.5 * n.kinetic - n.interaction;
  d.mass1 = n.l2[0] + n.l2[2];
  d.mass2 = n.l2[1] + n.l2[2];
  d.pohozaev = n.kinetic - m.gamma_p() * n.potential - 0.5 * m.dim * m.alpha * n.interaction;
  return d;
}

Diagnostics diagnostics(const ModelParams& m, const FieldTriple& u) {
  return diagnostics_from_norms(m, field_norms(m.p, u));
}

double energy(const ModelParams& m, const FieldTriple& u) { return diagnostics(m, u).energy; }

double limit_energy(const FieldTriple& u) {
  check_triple(u);
  double k = 0.0;
  for (int i = 0; i < 3; ++i) k += gradient_norm_sq_parseval(u.g(), u[i]);
  return 0.5 * k - interaction_of(u);
}

std::pair<double, double> masses(const FieldTriple& u) {
  check_triple(u);
  double n1 = norm_sq(u.g(), u[0]), n2 = norm_sq(u.g(), u[1]), n3 = norm_sq(u.g(), u[2]);
  return {n1 + n3, n2 + n3};
}

double pohozaev(const ModelParams& m, const FieldTriple& u) { return diagnostics(m, u).pohozaev; }

double limit_pohozaev(const FieldTriple& u) {
  check_triple(u);
  double k = 0.0;
  for (int i = 0; i < 3; ++i) k += gradient_norm_sq_parseval(u.g(), u[i]);
  return k - 0.5 * u.g().dim() * interaction_of(u);
}

double restriction_indicator(const FieldTriple& u) {
  check_triple(u);
  return interaction_of(u);
}

namespace {

FieldTriple minus_laplacian(const FieldTriple& u) {
  FieldTriple g(u.grid);
  for (int i = 0; i < 3; ++i) {
    g[i] = laplacian(u.g(), u[i]);
    for (auto& v : g[i]) v = -v;
  }
  return g;
}

}  // namespace

FieldTriple energy_gradient(const ModelParams& m, const FieldTriple& u) {
  check_triple(u);
  FieldTriple g = minus_laplacian(u);
  const double q = m.p - 2.0;
  for (std::size_t i = 0; i < u.g().size(); ++i) {
    cplx a = u[0][i], b = u[1][i], c = u[2][i];
    g[0][i] -= std::pow(std::abs(a), q) * a + m.alpha * c * std::conj(b);
    g[1][i] -= std::pow(std::abs(b), q) * b + m.alpha * c * std::conj(a);
    g[2][i] -= std::pow(std::abs(c), q) * c + m.alpha * a * b;
  }
  return g;
}

FieldTriple limit_energy_gradient(const FieldTriple& u) {
  check_triple(u);
  FieldTriple g = minus_laplacian(u);
  for (std::size_t i = 0; i < u.g().size(); ++i) {
    cplx a = u[0][i], b = u[1][i], c = u[2][i];
    g[0][i] -= c * std::conj(b);
    g[1][i] -= c * std::conj(a);
    g[2][i] -= a * b;
  }
  return g;
}

FieldTriple gauge(const FieldTriple& u, double theta1, double theta2) {
  FieldTriple v = u;
  cplx e1 = std::polar(1.0, theta1), e2 = std::polar(1.0, theta2), e3 = e1 * e2;
  for (auto& x : v[0]) x *= e1;
  for (auto& x : v[1]) x *= e2;
  for (auto& x : v[2]) x *= e3;
  return v;
}

double fiber_map(const ModelParams& m, const FieldNorms& n, double s) {
  if (!(s > 0.0)) throw ModelError("fiber_map: s must be positive");
  const double pg = m.p * m.gamma_p();
  return 0.5 * s * s * n.kinetic - std::pow(s, pg) / m.p * n.potential -
         std::pow(s, 0.5 * m.dim) * m.alpha * n.interaction;
}

std::pair<double, double> fiber_derivatives(const ModelParams& m, const FieldNorms& n,
                                            double s) {
  if (!(s > 0.0)) throw ModelError("fiber_derivatives: s must be positive");
  const double g = m.gamma_p(), pg = m.p * g, h = 0.5 * m.dim;
  const double aI = m.alpha * n.interaction;
  double d1 = s * n.kinetic - g * std::pow(s, pg - 1.0) * n.potential - h * std::pow(s, h - 1.0) * aI;
  double d2 = n.kinetic - g * (pg - 1.0) * std::pow(s, pg - 2.0) * n.potential -
              h * (h - 1.0) * std::pow(s, h - 2.0) * aI;
  return {d1, d2};
}

namespace {

template <class F>
std::vector<double> sign_change_roots(F&& f, double smin, double smax, int samples) {
  std::vector<double> roots;
  double lmin = std::log(smin), lmax = std::log(smax);
  double prev_s = smin, prev_f = f(smin);
  for (int k = 1; k < samples; ++k) {
    double s = std::exp(lmin + (lmax - lmin) * k / (samples - 1));
    double fs = f(s);
    if (prev_f == 0.0) {
      roots.push_back(prev_s);
    } else if ((fs < 0.0) != (prev_f < 0.0) && fs != 0.0) {
      double tol = std::max(1e-12, 4e-16 * s);
      roots.push_back(bisect(f, prev_s, s, tol));
    }
    prev_s = s;
    prev_f = fs;
  }
  return roots;
}

}  // namespace

std::vector<double> fiber_stationary_points(const ModelParams& m, const FieldNorms& n,
                                            double smin, double smax) {
  return sign_change_roots([&](double s) { return fiber_derivatives(m, n, s).first; }, smin,
                           smax, 4001);
}

std::vector<double> fiber_zeros(const ModelParams& m, const FieldNorms& n, double smin,
                                double smax) {
  return sign_change_roots([&](double s) { return fiber_map(m, n, s); }, smin, smax, 4001);
}

int fiber_root_count_dense(const ModelParams& m, const FieldNorms& n, double smin, double smax,
                           int samples) {
  int count = 0;
  double lmin = std::log(smin), lmax = std::log(smax);
  double prev = fiber_derivatives(m, n, smin).first;
  for (int k = 1; k < samples; ++k) {
    double s = std::exp(lmin + (lmax - lmin) * k / (samples - 1));
    double f = fiber_derivatives(m, n, s).first;
    if ((f < 0.0) != (prev < 0.0)) ++count;
    prev = f;
  }
  return count;
}

}  // namespace nls3
