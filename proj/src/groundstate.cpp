#include "nls3/groundstate.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "nls3/scalar.hpp"

namespace nls3 {

const char* kind_name(StationaryKind k) {
  switch (k) {
    case StationaryKind::ground: return "ground";
    case StationaryKind::excited: return "excited";
    case StationaryKind::limit_system: return "limit_system";
  }
  return "?";
}

ProjectionFactors projection_factors(const FieldTriple& u, double a1, double a2) {
  const SpectralGrid& g = u.g();
  const double n1 = norm_sq(g, u[0]), n2 = norm_sq(g, u[1]), n3 = norm_sq(g, u[2]);
  const double A1 = a1 * a1, A2 = a2 * a2;
  ProjectionFactors f;
  auto infeasible = [] { return ModelError("project_masses: degenerate input cannot reach S(a1,a2)"); };
  if (n3 == 0.0) {
    if (n1 == 0.0 || n2 == 0.0) throw infeasible();
    f.c1 = a1 / std::sqrt(n1);
    f.c2 = a2 / std::sqrt(n2);
    f.c3 = std::sqrt(f.c1 * f.c2);
    return f;
  }
  if (n1 == 0.0 || n2 == 0.0) {
    // One constraint fixes c3 on its own; the other must absorb the rest.
    const bool first = n1 == 0.0;
    const double own = first ? A1 : A2, other = first ? A2 : A1, nother = first ? n2 : n1;
    f.c3 = std::sqrt(own / n3);
    double rest = other - own;
    if (rest < 0.0 || (rest > 0.0 && nother == 0.0)) throw infeasible();
    double c = nother > 0.0 ? std::sqrt(rest / nother) : 1.0;
    (first ? f.c2 : f.c1) = c;
    return f;
  }
  auto c1_of = [&](double c3) { return std::sqrt(std::max(0.0, (A1 - c3 * c3 * n3) / n1)); };
  auto c2_of = [&](double c3) { return std::sqrt(std::max(0.0, (A2 - c3 * c3 * n3) / n2)); };
  auto tie = [&](double c3) { return c3 * c3 - c1_of(c3) * c2_of(c3); };
  const double cmax = std::sqrt(std::min(A1, A2) / n3);
  double c3 = bisect(tie, 0.0, cmax, 0.0);
  f.c3 = c3;
  f.c1 = c1_of(c3);
  f.c2 = c2_of(c3);
  return f;
}

FieldTriple project_masses(const FieldTriple& u, double a1, double a2) {
  auto f = projection_factors(u, a1, a2);
  FieldTriple v = u;
  const double c[3] = {f.c1, f.c2, f.c3};
  for (int i = 0; i < 3; ++i)
    for (auto& x : v[i]) x *= c[i];
  return v;
}

namespace {

ConstrainedGradient constrain(const FieldTriple& u, FieldTriple eg) {
  const SpectralGrid& g = u.g();
  const double n1 = norm_sq(g, u[0]), n2 = norm_sq(g, u[1]), n3 = norm_sq(g, u[2]);
  const double Q1 = n1 + n3, Q2 = n2 + n3;
  const double b1 = -(inner(g, eg[0], u[0]) + inner(g, eg[2], u[2]));
  const double b2 = -(inner(g, eg[1], u[1]) + inner(g, eg[2], u[2]));
  const double det = Q1 * Q2 - n3 * n3;
  if (!(det > 1e-14 * Q1 * Q2)) throw ConvergenceError("constrained gradient: singular multiplier system");
  ConstrainedGradient cg;
  cg.lambda1 = (b1 * Q2 - n3 * b2) / det;
  cg.lambda2 = (Q1 * b2 - n3 * b1) / det;
  const double lam[3] = {cg.lambda1, cg.lambda2, cg.lambda1 + cg.lambda2};
  for (int i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < u[i].size(); ++k) eg[i][k] += lam[i] * u[i][k];
  cg.g = std::move(eg);
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += norm_sq(g, cg.g[i]);
  cg.norm = std::sqrt(s);
  return cg;
}

}  // namespace

ConstrainedGradient constrained_gradient(const ModelParams& m, const FieldTriple& u) {
  return constrain(u, energy_gradient(m, u));
}

ConstrainedGradient constrained_limit_gradient(const FieldTriple& u) {
  return constrain(u, limit_energy_gradient(u));
}

FieldTriple fix_gauge(const FieldTriple& u) {
  double th[2] = {0.0, 0.0};
  for (int i = 0; i < 2; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < u[i].size(); ++k)
      if (std::abs(u[i][k]) > std::abs(u[i][best])) best = k;
    if (std::abs(u[i][best]) > 0.0) th[i] = -std::arg(u[i][best]);
  }
  return gauge(u, th[0], th[1]);
}

double multiplier_identity_defect(const ModelParams& m, const StationaryResult& r) {
  const SpectralGrid& g = r.fields.g();
  const double lam[3] = {r.lambda1, r.lambda2, r.lambda1 + r.lambda2};
  double mass_term = 0.0;
  for (int i = 0; i < 3; ++i) mass_term += lam[i] * norm_sq(g, r.fields[i]);
  const auto& d = r.diagnostics;
  if (r.kind == StationaryKind::limit_system) return d.kinetic + mass_term - 3.0 * d.interaction;
  return d.kinetic + mass_term - d.power_potential - 3.0 * m.alpha * d.interaction;
}

namespace {

double boundary_ratio(const FieldTriple& u) {
  const SpectralGrid& g = u.g();
  double edge = 0.0, top = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    auto idx = g.unflatten(k);
    bool outer = false;
    for (int a = 0; a < g.dim(); ++a) outer = outer || idx[a] == 0 || idx[a] == g.points() - 1;
    for (int i = 0; i < 3; ++i) {
      double v = std::abs(u[i][k]);
      top = std::max(top, v);
      if (outer) edge = std::max(edge, v);
    }
  }
  return top > 0.0 ? edge / top : 0.0;
}

FieldTriple gaussian_start(GridPtr grid, double width) {
  FieldTriple u(grid);
  // Slightly different widths keep the three components from being exactly proportional.
  const double scale[3] = {1.0, 0.95, 1.05};
  for (int i = 0; i < 3; ++i) {
    double w = width * scale[i];
    u[i] = sample(*grid, [&](const std::array<double, 3>& x) {
      return cplx(std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (w * w)), 0.0);
    });
  }
  return u;
}

// Cold start for the excited state: the computed states put almost all of the larger
// mass into one concentrated component, with a wide partner and a small u3.
FieldTriple excited_start(GridPtr grid, double width, bool first_heavy) {
  FieldTriple u(grid);
  const double w[3] = {width, 4.0 * width, width}, amp[3] = {1.0, 0.5, 0.1};
  for (int i = 0; i < 3; ++i)
    u[i] = sample(*grid, [&](const std::array<double, 3>& x) {
      return cplx(amp[i] * std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (w[i] * w[i])), 0.0);
    });
  if (!first_heavy) std::swap(u[0], u[1]);
  return u;
}

FieldTriple initial_guess(const SolverConfig& cfg, const GridPtr& grid, double width) {
  if (!cfg.initial) return gaussian_start(grid, width);
  if (!cfg.initial->g().same_as(*grid)) throw ModelError("initial guess lives on a different grid");
  return *cfg.initial;
}

// Width of the small-mass profile, from the limit-system collapse scaling.
double auto_width(const SpectralGrid& g, double alpha, double a) {
  const double N = g.dim();
  const double w_norm_sq[3] = {6.0, 11.7, 31.0};
  double kappa = std::pow(alpha * a / std::sqrt(2.0 * w_norm_sq[g.dim() - 1]), 4.0 / (4.0 - N));
  double w = 2.0 / std::sqrt(kappa);
  return std::clamp(w, 0.5, g.half_length() / 6.0);
}

// wk (-Lap u) - wv |u|^{p-2} u - wi alpha (u3 conj(u2), u3 conj(u1), u1 u2).
FieldTriple weighted_gradient(const ModelParams& m, const FieldTriple& u, double wk, double wv,
                              double wi) {
  const SpectralGrid& g = u.g();
  FieldTriple out(u.grid);
  for (int i = 0; i < 3; ++i) out[i] = laplacian(g, u[i]);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const cplx a = u[0][k], b = u[1][k], c = u[2][k];
    const cplx t[3] = {c * std::conj(b), c * std::conj(a), a * b};
    const cplx v[3] = {a, b, c};
    for (int i = 0; i < 3; ++i) {
      double mod = std::abs(v[i]);
      out[i][k] = -wk * out[i][k] - wv * std::pow(mod, m.p - 2.0) * v[i] - wi * m.alpha * t[i];
    }
  }
  return out;
}


// Derivative of weighted_gradient at u in the direction v (real-linear in v).
FieldTriple weighted_hessian(const ModelParams& m, const FieldTriple& u, const FieldTriple& v,
                             double wk, double wv, double wi) {
  const SpectralGrid& g = u.g();
  FieldTriple out(u.grid);
  for (int i = 0; i < 3; ++i) out[i] = laplacian(g, v[i]);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const cplx a = u[0][k], b = u[1][k], c = u[2][k];
    const cplx va = v[0][k], vb = v[1][k], vc = v[2][k];
    const cplx t[3] = {vc * std::conj(b) + c * std::conj(vb), vc * std::conj(a) + c * std::conj(va),
                       va * b + a * vb};
    const cplx uu[3] = {a, b, c}, vv[3] = {va, vb, vc};
    for (int i = 0; i < 3; ++i) {
      double mod2 = std::norm(uu[i]);
      cplx pw = 0.0;
      if (mod2 > 0.0) {
        double q = std::pow(mod2, 0.5 * (m.p - 2.0));
        pw = q * vv[i] + (m.p - 2.0) * q / mod2 * std::real(std::conj(uu[i]) * vv[i]) * uu[i];
      }
      out[i][k] = -wk * out[i][k] - wv * pw - wi * m.alpha * t[i];
    }
  }
  return out;
}

struct Descent {
  std::function<FieldTriple(const FieldTriple&)> gradient;  // unconstrained L2 gradient
  std::function<FieldTriple(const FieldTriple&)> retract;
  std::function<double(const FieldTriple&)> value;
  // Called after every accepted iterate; may throw to abort.
  std::function<void(const FieldTriple&)> monitor;
  // Optional re-parametrization of an accepted iterate along a level set of value.
  std::function<bool(FieldTriple&)> normalize;
};

struct DescentOutcome {
  FieldTriple u;
  ConstrainedGradient cg;
  int iterations = 0;
  bool converged = false;
  std::vector<double> values;
};

double dot(const FieldTriple& a, const FieldTriple& b) {
  const SpectralGrid& g = a.g();
  return inner(g, a[0], b[0]) + inner(g, a[1], b[1]) + inner(g, a[2], b[2]);
}

void axpy(double t, const FieldTriple& x, FieldTriple& y) {
  for (int i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < y[i].size(); ++k) y[i][k] += t * x[i][k];
}

// L2 projection onto the tangent space of S(a1,a2) at u, whose normals are
// n1 = (u1, 0, u3) and n2 = (0, u2, u3).
void project_tangent(const FieldTriple& u, FieldTriple& v) {
  const SpectralGrid& g = u.g();
  const double n1 = norm_sq(g, u[0]), n2 = norm_sq(g, u[1]), n3 = norm_sq(g, u[2]);
  const double r1 = inner(g, v[0], u[0]) + inner(g, v[2], u[2]);
  const double r2 = inner(g, v[1], u[1]) + inner(g, v[2], u[2]);
  const double Q1 = n1 + n3, Q2 = n2 + n3, det = Q1 * Q2 - n3 * n3;
  const double m1 = (r1 * Q2 - n3 * r2) / det, m2 = (Q1 * r2 - n3 * r1) / det;
  const double m[3] = {m1, m2, m1 + m2};
  for (int i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < v[i].size(); ++k) v[i][k] -= m[i] * u[i][k];
}

// r -> P^{-1}(r + mu1 n1 + mu2 n2) with P_i = c_i - Lap and mu chosen so that the
// result is tangent. Normal components of r are irrelevant.
struct Preconditioner {
  const FieldTriple* u = nullptr;
  double c[3] = {1.0, 1.0, 1.0};
  FieldTriple b;  // P^{-1} u
  double M11 = 0, M12 = 0, M22 = 0;

  Preconditioner(const FieldTriple& at, const ConstrainedGradient& cg) : u(&at), b(at.grid) {
    const double lam[3] = {cg.lambda1, cg.lambda2, cg.lambda1 + cg.lambda2};
    const double big = std::max(std::abs(cg.lambda1), std::abs(cg.lambda2));
    for (int i = 0; i < 3; ++i) c[i] = std::max({lam[i], 0.1 * big, 1e-8});
    for (int i = 0; i < 3; ++i) b[i] = solve(i, at[i]);
    const SpectralGrid& g = at.g();
    const double bu1 = inner(g, b[0], at[0]), bu2 = inner(g, b[1], at[1]), bu3 = inner(g, b[2], at[2]);
    M11 = bu1 + bu3;
    M12 = bu3;
    M22 = bu2 + bu3;
  }

  Field solve(int i, const Field& f) const {
    const SpectralGrid& g = u->g();
    const auto& k2 = g.k_squared();
    Field out = f;
    g.forward(out);
    for (std::size_t k = 0; k < g.size(); ++k) out[k] /= c[i] + k2[k];
    g.inverse(out);
    return out;
  }

  FieldTriple apply(const FieldTriple& r) const {
    const SpectralGrid& g = u->g();
    FieldTriple a(u->grid);
    for (int i = 0; i < 3; ++i) a[i] = solve(i, r[i]);
    const double au1 = inner(g, a[0], (*u)[0]), au2 = inner(g, a[1], (*u)[1]),
                 au3 = inner(g, a[2], (*u)[2]);
    const double r1 = -(au1 + au3), r2 = -(au2 + au3);
    const double det = M11 * M22 - M12 * M12;
    const double mu1 = (r1 * M22 - M12 * r2) / det, mu2 = (M11 * r2 - M12 * r1) / det;
    const double mu[3] = {mu1, mu2, mu1 + mu2};
    for (int i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < g.size(); ++k) a[i][k] += mu[i] * b[i][k];
    return a;
  }
};

// Riemannian L-BFGS on S(a1,a2): projection retraction, vector transport by tangent
// projection, the shifted-Laplacian preconditioner as initial inverse Hessian, and
// Armijo backtracking. Falls back to the preconditioned gradient when the quasi-Newton
// direction is not a descent direction.
DescentOutcome run_descent(const Descent& d, FieldTriple u, const SolverConfig& cfg) {
  constexpr int kMemory = 8;
  struct Pair {
    FieldTriple s, y;
    double rho;
  };
  std::vector<Pair> mem;
  u = d.retract(u);
  double f = d.value(u);
  auto cg = constrain(u, d.gradient(u));
  DescentOutcome out;
  out.values.push_back(f);
  bool first = true;
  for (int it = 0; it < cfg.max_iters; ++it) {
    out.iterations = it;
    if (cg.norm < cfg.grad_tol) {
      out.u = std::move(u);
      out.cg = std::move(cg);
      out.converged = true;
      return out;
    }
    Preconditioner H0(u, cg);
    for (auto& pr : mem) {
      project_tangent(u, pr.s);
      project_tangent(u, pr.y);
    }

    bool accepted = false;
    FieldTriple next;
    double fnext = f;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const bool quasi_newton = attempt == 0 && !mem.empty();
      if (attempt == 1 && mem.empty() && !first) break;
      FieldTriple dir;
      if (quasi_newton) {
        FieldTriple q = cg.g;
        std::vector<double> alpha(mem.size());
        for (int k = static_cast<int>(mem.size()) - 1; k >= 0; --k) {
          alpha[k] = mem[k].rho * dot(mem[k].s, q);
          axpy(-alpha[k], mem[k].y, q);
        }
        dir = H0.apply(q);
        const auto& last = mem.back();
        FieldTriple hy = H0.apply(last.y);
        double scale = 1.0 / (last.rho * dot(last.y, hy));
        if (std::isfinite(scale) && scale > 0.0)
          for (int i = 0; i < 3; ++i)
            for (auto& x : dir[i]) x *= scale;
        for (std::size_t k = 0; k < mem.size(); ++k) {
          double beta = mem[k].rho * dot(mem[k].y, dir);
          axpy(alpha[k] - beta, mem[k].s, dir);
        }
        project_tangent(u, dir);
      } else {
        mem.clear();
        dir = H0.apply(cg.g);
      }
      const double slope = dot(cg.g, dir);
      if (!(slope > 0.0)) continue;
      double tau = quasi_newton ? 1.0 : cfg.step_size;
      const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(f);
      for (int bt = 0; bt < 40; ++bt, tau *= 0.5) {
        FieldTriple trial = u;
        axpy(-tau, dir, trial);
        double ft;
        try {
          trial = d.retract(trial);
          ft = d.value(trial);
        } catch (const std::invalid_argument&) {
          continue;
        } catch (const ConvergenceError&) {
          // A trial that cannot be retracted (e.g. leaves M) counts as a failed step.
          continue;
        }
        if (ft <= f - 1e-4 * tau * slope + slack) {
          next = std::move(trial);
          fnext = ft;
          accepted = true;
          break;
        }
      }
      if (!accepted && !quasi_newton) break;
    }
    first = false;
    if (!accepted) {
      out.u = std::move(u);
      out.cg = std::move(cg);
      return out;
    }
    if (d.monitor) d.monitor(next);
    bool reset = d.normalize && d.normalize(next);
    if (reset) fnext = d.value(next);
    auto cg_next = constrain(next, d.gradient(next));
    if (reset) {
      mem.clear();
    } else {
      Pair pr{next, cg_next.g, 0.0};
      axpy(-1.0, u, pr.s);
      project_tangent(next, pr.s);
      FieldTriple gold = cg.g;
      project_tangent(next, gold);
      axpy(-1.0, gold, pr.y);
      double sy = dot(pr.s, pr.y);
      if (sy > 1e-12 * std::sqrt(dot(pr.s, pr.s) * dot(pr.y, pr.y))) {
        pr.rho = 1.0 / sy;
        mem.push_back(std::move(pr));
        if (mem.size() > kMemory) mem.erase(mem.begin());
      }
    }
    u = std::move(next);
    f = fnext;
    out.values.push_back(f);
    cg = std::move(cg_next);
  }
  out.u = std::move(u);
  out.cg = std::move(cg);
  out.iterations = cfg.max_iters;
  out.converged = out.cg.norm < cfg.grad_tol;
  return out;
}

// Newton-Krylov polish of the stationary system
//   G(u) + (l1 u1, l2 u2, (l1+l2) u3) = 0,  Q1(u) = a1^2,  Q2(u) = a2^2,
// with G = weighted_gradient(., 1, wv, 1). Each step solves the bordered Jacobian system
// by restarted GMRES, right-preconditioned with the shifted Laplacian, then re-projects
// the masses. Converges to whatever critical point is nearby, saddles included.
struct Bordered {
  FieldTriple v;
  double l1 = 0.0, l2 = 0.0;
};

double bdot(const Bordered& a, const Bordered& b) { return dot(a.v, b.v) + a.l1 * b.l1 + a.l2 * b.l2; }

void baxpy(double t, const Bordered& x, Bordered& y) {
  axpy(t, x.v, y.v);
  y.l1 += t * x.l1;
  y.l2 += t * x.l2;
}

void bscale(double t, Bordered& x) {
  for (int i = 0; i < 3; ++i)
    for (auto& z : x.v[i]) z *= t;
  x.l1 *= t;
  x.l2 *= t;
}

// Restarted GMRES for A x = b with right preconditioner Minv, from x = 0.
template <class Op, class Prec>
Bordered gmres(const Op& A, const Prec& Minv, const Bordered& b, double rtol, int restart,
               int max_iters) {
  Bordered x{FieldTriple(b.v.grid), 0.0, 0.0};
  const double bnorm = std::sqrt(bdot(b, b));
  if (bnorm == 0.0) return x;
  int total = 0;
  while (total < max_iters) {
    Bordered r = b;
    if (total > 0) baxpy(-1.0, A(x), r);
    double beta = std::sqrt(bdot(r, r));
    if (beta <= rtol * bnorm) break;
    std::vector<Bordered> V;
    std::vector<std::vector<double>> H(restart + 1, std::vector<double>(restart, 0.0));
    std::vector<double> cs(restart), sn(restart), e(restart + 1, 0.0);
    bscale(1.0 / beta, r);
    V.push_back(std::move(r));
    e[0] = beta;
    int k = 0;
    for (; k < restart && total < max_iters; ++k, ++total) {
      Bordered w = A(Minv(V[k]));
      for (int j = 0; j <= k; ++j) {
        H[j][k] = bdot(w, V[j]);
        baxpy(-H[j][k], V[j], w);
      }
      const double hnext = std::sqrt(bdot(w, w));
      H[k + 1][k] = hnext;
      for (int j = 0; j < k; ++j) {
        double t = cs[j] * H[j][k] + sn[j] * H[j + 1][k];
        H[j + 1][k] = -sn[j] * H[j][k] + cs[j] * H[j + 1][k];
        H[j][k] = t;
      }
      double den = std::hypot(H[k][k], H[k + 1][k]);
      cs[k] = H[k][k] / den;
      sn[k] = H[k + 1][k] / den;
      H[k][k] = den;
      H[k + 1][k] = 0.0;
      e[k + 1] = -sn[k] * e[k];
      e[k] *= cs[k];
      bool done = std::abs(e[k + 1]) <= rtol * bnorm || !(hnext > 0.0);
      if (!done && k + 1 < restart) {
        bscale(1.0 / hnext, w);
        V.push_back(std::move(w));
      }
      if (done) {
        ++k;
        ++total;
        break;
      }
    }
    std::vector<double> y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      double acc = e[i];
      for (int j = i + 1; j < k; ++j) acc -= H[i][j] * y[j];
      y[i] = acc / H[i][i];
    }
    Bordered z{FieldTriple(b.v.grid), 0.0, 0.0};
    for (int j = 0; j < k; ++j) baxpy(y[j], V[j], z);
    baxpy(1.0, Minv(z), x);
    if (std::abs(e[k]) <= rtol * bnorm) break;
  }
  return x;
}

struct PolishResult {
  FieldTriple u;
  ConstrainedGradient cg;
  int iterations = 0;
  bool converged = false;
};

PolishResult newton_polish(const ModelParams& m, double wv, FieldTriple u, double a1, double a2,
                           double tol, int max_newton = 25) {
  const SpectralGrid& g = u.g();
  auto grad = [&](const FieldTriple& x) { return weighted_gradient(m, x, 1.0, wv, 1.0); };
  PolishResult out;
  u = project_masses(u, a1, a2);
  auto cg = constrain(u, grad(u));
  for (int it = 0; it < max_newton; ++it) {
    out.iterations = it;
    if (cg.norm < tol) {
      out.converged = true;
      break;
    }
    const double lam[3] = {cg.lambda1, cg.lambda2, cg.lambda1 + cg.lambda2};
    auto A = [&](const Bordered& x) {
      Bordered y{weighted_hessian(m, u, x.v, 1.0, wv, 1.0), 0.0, 0.0};
      const double dl[3] = {x.l1, x.l2, x.l1 + x.l2};
      for (int i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < g.size(); ++k) y.v[i][k] += lam[i] * x.v[i][k] + dl[i] * u[i][k];
      const double r3 = inner(g, u[2], x.v[2]);
      y.l1 = inner(g, u[0], x.v[0]) + r3;
      y.l2 = inner(g, u[1], x.v[1]) + r3;
      return y;
    };
    Preconditioner P(u, cg);
    auto Minv = [&](const Bordered& x) {
      Bordered y{FieldTriple(u.grid), x.l1, x.l2};
      for (int i = 0; i < 3; ++i) y.v[i] = P.solve(i, x.v[i]);
      return y;
    };
    Bordered rhs{cg.g, 0.0, 0.0};
    bscale(-1.0, rhs);
    Bordered step = gmres(A, Minv, rhs, 1e-6, 80, 2000);
    // Damped update: halve until the residual drops.
    double t = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 12; ++ls, t *= 0.5) {
      FieldTriple trial = u;
      axpy(t, step.v, trial);
      try {
        trial = project_masses(trial, a1, a2);
      } catch (const ModelError&) {
        continue;
      }
      auto tcg = constrain(trial, grad(trial));
      if (tcg.norm < cg.norm) {
        u = std::move(trial);
        cg = std::move(tcg);
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  out.converged = cg.norm < tol;
  out.u = std::move(u);
  out.cg = std::move(cg);
  return out;
}

StationaryResult finish(const ModelParams& m, DescentOutcome&& o, StationaryKind kind) {
  StationaryResult r;
  r.fields = fix_gauge(o.u);
  r.kind = kind;
  r.iterations = o.iterations;
  r.value_history = std::move(o.values);
  auto cg = kind == StationaryKind::limit_system ? constrained_limit_gradient(r.fields)
                                                 : constrained_gradient(m, r.fields);
  r.lambda1 = cg.lambda1;
  r.lambda2 = cg.lambda2;
  r.residual = cg.norm;
  r.diagnostics = diagnostics(m, r.fields);
  r.level = kind == StationaryKind::limit_system ? r.diagnostics.limit_energy : r.diagnostics.energy;
  r.boundary_ratio = boundary_ratio(r.fields);
  return r;
}

[[noreturn]] void not_converged(const char* what, const DescentOutcome& o, const SolverConfig& cfg) {
  std::ostringstream os;
  os << what << ": no convergence after " << o.iterations << " iterations (residual "
     << o.cg.norm << ", grad_tol " << cfg.grad_tol << ")";
  throw ConvergenceError(os.str());
}

// A stalled descent close to a solution is finished by Newton.
void polish_or_fail(const char* what, const ModelParams& m, double wv, DescentOutcome& o,
                    const SolverConfig& cfg) {
  if (o.cg.norm < 1e-3) {
    auto pol = newton_polish(m, wv, o.u, m.a1, m.a2, cfg.grad_tol);
    if (pol.converged) {
      o.u = std::move(pol.u);
      o.cg = std::move(pol.cg);
      o.iterations += pol.iterations;
      o.converged = true;
      return;
    }
  }
  not_converged(what, o, cfg);
}

}  // namespace

StationaryResult solve_ground_state(const ModelParams& m, GridPtr grid, const GnConstants& gn,
                                    const SolverConfig& cfg) {
  m.validate();
  if (grid->dim() != m.dim) throw ModelError("grid dimension does not match N");
  const double amax = m.max_mass();
  double barrier_sq = std::numeric_limits<double>::infinity();
  if (m.mass_critical()) {
    double thr = mass_critical_threshold(m, gn);
    if (amax >= thr) {
      std::ostringstream os;
      os << "ground state needs max(a1,a2) < " << thr << " (mass-critical threshold)";
      throw ModelError(os.str());
    }
  } else {
    double D = threshold_D(m, gn);
    if (amax >= D) {
      std::ostringstream os;
      os << "ground state needs max(a1,a2) < D = " << D;
      throw ModelError(os.str());
    }
    double rs = rho_star(m, gn);
    barrier_sq = rs * rs;
  }
  double width = cfg.init_width > 0 ? cfg.init_width : auto_width(*grid, m.alpha, amax);
  Descent d;
  d.gradient = [&](const FieldTriple& u) { return energy_gradient(m, u); };
  d.retract = [&](const FieldTriple& u) { return project_masses(u, m.a1, m.a2); };
  d.value = [&](const FieldTriple& u) { return energy(m, u); };
  d.monitor = [&](const FieldTriple& u) {
    double k = field_norms(m.p, u).kinetic;
    if (k >= barrier_sq) {
      std::ostringstream os;
      os << "ground state: iterate left the local well (kinetic " << k << " >= rho*^2 = "
         << barrier_sq << ")";
      throw ConvergenceError(os.str());
    }
  };
  auto o = run_descent(d, initial_guess(cfg, grid, width), cfg);
  if (!o.converged) polish_or_fail("ground state", m, 1.0, o, cfg);
  d.monitor(o.u);
  return finish(m, std::move(o), StationaryKind::ground);
}

StationaryResult solve_limit_system(GridPtr grid, double a1, double a2, const SolverConfig& cfg) {
  if (!(a1 > 0.0) || !(a2 > 0.0)) throw ModelError("limit system needs a1, a2 > 0");
  ModelParams m{grid->dim(), 3.0, 1.0, a1, a2};
  double width = cfg.init_width > 0 ? cfg.init_width : auto_width(*grid, 1.0, std::max(a1, a2));
  Descent d;
  d.gradient = [](const FieldTriple& u) { return limit_energy_gradient(u); };
  d.retract = [&](const FieldTriple& u) { return project_masses(u, a1, a2); };
  d.value = [](const FieldTriple& u) { return limit_energy(u); };
  auto o = run_descent(d, initial_guess(cfg, grid, width), cfg);
  if (!o.converged) polish_or_fail("limit system", m, 0.0, o, cfg);
  return finish(m, std::move(o), StationaryKind::limit_system);
}

std::pair<double, double> fiber_critical_points(const ModelParams& m, const FieldTriple& u) {
  auto n = field_norms(m.p, u);
  if (!(n.interaction > 0.0)) throw ModelError("fiber_critical_points: u is not in M");
  if (m.mass_critical()) throw ModelError("fiber_critical_points: needs p > 2_*");
  auto cps = fiber_stationary_points(m, n);
  if (cps.size() != 2) {
    std::ostringstream os;
    os << "fiber_critical_points: bracketing found " << cps.size() << " critical points, expected 2";
    throw ConvergenceError(os.str());
  }
  return {cps[0], cps[1]};
}


StationaryResult solve_excited_state(const ModelParams& m, GridPtr grid, const GnConstants& gn,
                                     const SolverConfig& cfg) {
  m.validate();
  if (grid->dim() != m.dim) throw ModelError("grid dimension does not match N");
  if (m.mass_critical())
    throw ModelError("excited state needs p > 2_*: at p = 2_* the fiber map has no local maximum");
  double D = threshold_D(m, gn);
  if (m.max_mass() >= D) {
    std::ostringstream os;
    os << "excited state needs max(a1,a2) < D = " << D;
    throw ModelError(os.str());
  }
  const double pg = m.p * m.gamma_p(), half = 0.5 * m.dim;
  auto sigma_of = [&](const FieldTriple& u) { return fiber_critical_points(m, u).second; };
  // J(u) = max_s E(s * u) = Psi_u(sigma_u). By the envelope theorem its gradient is the
  // energy gradient with the three terms weighted by sigma^2, sigma^{p gamma}, sigma^{N/2},
  // so the descent never has to resample the field.
  Descent d;
  d.gradient = [&](const FieldTriple& u) {
    double s = sigma_of(u);
    return weighted_gradient(m, u, s * s, std::pow(s, pg), std::pow(s, half));
  };
  d.retract = [&](const FieldTriple& u) {
    FieldTriple v = project_masses(u, m.a1, m.a2);
    if (!(restriction_indicator(v) > 0.0))
      throw ConvergenceError("excited state: iterate left M (interaction <= 0)");
    return v;
  };
  d.value = [&](const FieldTriple& u) {
    auto n = field_norms(m.p, u);
    auto cps = fiber_stationary_points(m, n);
    if (cps.size() != 2) throw ConvergenceError("excited state: sigma_u bracketing failed");
    return fiber_map(m, n, cps[1]);
  };

  // The descent direction is not exactly orthogonal to dilations, so the scale drifts;
  // pull it back onto P-minus before it leaves the resolved band.
  d.normalize = [&](FieldTriple& u) {
    double s = sigma_of(u);
    if (std::abs(s - 1.0) < 0.05) return false;
    // Tail truncation is tolerated here; the projection restores the masses.
    u = project_masses(dilate(s, u, 1e-2), m.a1, m.a2);
    return true;
  };

  double width = cfg.init_width > 0 ? cfg.init_width : 1.0;
  const bool first_heavy = m.a1 >= m.a2;
  FieldTriple start = project_masses(
      cfg.initial ? initial_guess(cfg, grid, width) : excited_start(grid, width, first_heavy), m.a1, m.a2);
  if (!cfg.initial && cfg.init_width <= 0) {
    // J is dilation invariant; pick the seed width so that it already sits near P-minus.
    width /= sigma_of(start);
    if (width < 2.0 * grid->spacing() || width > grid->half_length() / 12.0) {
      std::ostringstream os;
      os << "excited state: profile width " << width << " is not resolved by the grid (dx "
         << grid->spacing() << ", L " << grid->half_length() << ")";
      throw ConvergenceError(os.str());
    }
    start = project_masses(excited_start(grid, width, first_heavy), m.a1, m.a2);
  }

  // The reduced descent is only run to a moderate residual: near-semi-trivial states mix
  // very stiff and very soft modes, and Newton finishes the job far more cheaply.
  SolverConfig coarse = cfg;
  coarse.grad_tol = std::max(cfg.grad_tol, 1e-3);
  coarse.max_iters = std::min(cfg.max_iters, 5000);
  auto o = run_descent(d, start, coarse);
  double s = sigma_of(o.u);
  FieldTriple onto = std::abs(s - 1.0) < 1e-12 ? o.u : project_masses(dilate(s, o.u), m.a1, m.a2);
  auto pol = newton_polish(m, 1.0, std::move(onto), m.a1, m.a2, cfg.grad_tol);
  if (!pol.converged) {
    std::ostringstream os;
    os << "excited state: no convergence (descent residual " << o.cg.norm << " after "
       << o.iterations << " iterations, Newton residual " << pol.cg.norm << ")";
    throw ConvergenceError(os.str());
  }
  auto fn = field_norms(m.p, pol.u);
  const double d2psi = fiber_derivatives(m, fn, 1.0).second;
  const double sig = sigma_of(pol.u);
  if (!(d2psi < 0.0) || std::abs(sig - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "excited state: Newton polish ended off P-minus (sigma = " << sig << ", Psi''(1) = "
       << d2psi << "); the grid may be too coarse";
    throw ConvergenceError(os.str());
  }
  o.u = std::move(pol.u);
  o.cg = std::move(pol.cg);
  o.iterations += pol.iterations;
  auto r = finish(m, std::move(o), StationaryKind::excited);

  auto wp = solve_scalar_ground_state(grid, m.p);
  double bound = std::min(scalar_level_m(wp, m.dim, m.a1), scalar_level_m(wp, m.dim, m.a2));
  if (!(r.level < bound)) {
    std::ostringstream os;
    os << "level " << r.level << " is not below min(m(a1), m(a2)) = " << bound
       << "; semi-trivial collapse suspected (alpha may be below the existence threshold)";
    r.warning = os.str();
  }
  return r;
}

}  // namespace nls3
