#include <cmath>
#include <string>

#include "nls3/dynamics.hpp"

namespace nls3 {

namespace {

// chi' on [1,2] in t = r - 1: (1-t)^5 (2 + 12t + 40t^2 + 100t^3 + 210t^4), expanded.
// It agrees with 2r to fourth order at r = 1 and vanishes to fourth order at r = 2,
// so chi is C^5 and the bilaplacian of phi_R is continuous.
constexpr int kDegree = 9;
constexpr double kSlope[kDegree + 1] = {2.0,    2.0,     0.0,   0.0,    0.0,
                                        -392.0, 1288.0, -1640.0, 950.0, -210.0};
// chi(2) = 1 + int_0^1 chi'.
constexpr double kPlateau = 20.0 / 9.0;

RealField zeros(const SpectralGrid& g) { return RealField(g.size(), 0.0); }

void require_weights_grid(const VirialWeights& w, const SpectralGrid& g) {
  if (w.phi.size() != g.size()) throw GridError("virial weights were built on another grid");
}

}  // namespace

std::array<double, 5> cutoff_profile(double r) {
  if (r < 0.0) throw ModelError("cutoff_profile: negative radius");
  if (r <= 1.0) return {r * r, 2.0 * r, 2.0, 0.0, 0.0};
  if (r >= 2.0) return {kPlateau, 0.0, 0.0, 0.0, 0.0};
  const double t = r - 1.0;
  // Horner for the slope polynomial and its first three derivatives, and the
  // antiderivative for chi itself.
  double d0 = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0, prim = 0.0;
  for (int k = kDegree; k >= 0; --k) {
    d3 = d3 * t + 3.0 * d2;
    d2 = d2 * t + 2.0 * d1;
    d1 = d1 * t + d0;
    d0 = d0 * t + kSlope[k];
    prim = prim * t + kSlope[k] / (k + 1);
  }
  return {1.0 + prim * t, d0, d1, d2, d3};
}

VirialWeights quadratic_weights(GridPtr grid) {
  const SpectralGrid& g = *grid;
  const int N = g.dim();
  VirialWeights w;
  w.mode = VirialMode::quadratic;
  w.phi = zeros(g);
  w.lap = RealField(g.size(), 2.0 * N);
  w.bilap = zeros(g);
  for (int j = 0; j < 3; ++j) {
    w.grad[j] = zeros(g);
    for (int k = 0; k < 3; ++k) w.hess[j][k] = RealField(g.size(), (j == k && j < N) ? 2.0 : 0.0);
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto idx = g.unflatten(i);
    double r2 = 0.0;
    for (int a = 0; a < N; ++a) {
      double x = g.coordinate(idx[a]);
      r2 += x * x;
      w.grad[a][i] = 2.0 * x;
    }
    w.phi[i] = r2;
  }
  return w;
}

VirialWeights localized_weights(GridPtr grid, double R) {
  const SpectralGrid& g = *grid;
  if (!(R > 0.0) || 2.0 * R > g.half_length())
    throw ModelError("localized virial radius R = " + std::to_string(R) +
                     " needs 0 < 2R <= L = " + std::to_string(g.half_length()));
  const int N = g.dim();
  VirialWeights w;
  w.mode = VirialMode::localized;
  w.R = R;
  w.phi = zeros(g);
  w.lap = zeros(g);
  w.bilap = zeros(g);
  for (int j = 0; j < 3; ++j) {
    w.grad[j] = zeros(g);
    for (int k = 0; k < 3; ++k) w.hess[j][k] = zeros(g);
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto idx = g.unflatten(i);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    double r2 = 0.0;
    for (int a = 0; a < N; ++a) {
      x[a] = g.coordinate(idx[a]);
      r2 += x[a] * x[a];
    }
    const double r = std::sqrt(r2);
    auto c = cutoff_profile(r / R);
    w.phi[i] = R * R * c[0];
    if (r <= R) {
      // phi_R = |x|^2 exactly here, which also covers r = 0.
      for (int a = 0; a < N; ++a) {
        w.grad[a][i] = 2.0 * x[a];
        w.hess[a][a][i] = 2.0;
      }
      w.lap[i] = 2.0 * N;
      continue;
    }
    // Radial derivatives of phi_R.
    const double f1 = R * c[1], f2 = c[2], f3 = c[3] / R, f4 = c[4] / (R * R);
    for (int a = 0; a < N; ++a) {
      const double xa = x[a] / r;
      w.grad[a][i] = f1 * xa;
      for (int b = 0; b < N; ++b) {
        const double xb = x[b] / r;
        w.hess[a][b][i] = f2 * xa * xb + (f1 / r) * ((a == b ? 1.0 : 0.0) - xa * xb);
      }
    }
    const double n1 = N - 1.0;
    const double l0 = f2 + n1 * f1 / r;
    const double l1 = f3 + n1 * (f2 / r - f1 / (r * r));
    const double l2 = f4 + n1 * (f3 / r - 2.0 * f2 / (r * r) + 2.0 * f1 / (r * r * r));
    w.lap[i] = l0;
    w.bilap[i] = l2 + n1 * l1 / r;
  }
  return w;
}

VirialValues virial(const ModelParams& m, const FieldTriple& u, const VirialWeights& w,
                    FlowTerms terms) {
  const SpectralGrid& g = u.g();
  require_weights_grid(w, g);
  const int N = g.dim();
  const double dv = g.cell_volume();
  VirialValues out;
  double moment = 0.0, flux = 0.0, hess_term = 0.0, bilap_term = 0.0, power_term = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Field& f = u[c];
    std::array<Field, 3> d;
    for (int a = 0; a < N; ++a) d[a] = derivative(g, f, a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double rho = std::norm(f[i]);
      moment += w.phi[i] * rho;
      bilap_term += w.bilap[i] * rho;
      for (int a = 0; a < N; ++a) {
        flux += w.grad[a][i] * (std::conj(f[i]) * d[a][i]).imag();
        for (int b = 0; b < N; ++b) {
          const double h = w.hess[a][b][i];
          if (h != 0.0) hess_term += h * (d[a][i] * std::conj(d[b][i])).real();
        }
      }
      if (terms.power) power_term += w.lap[i] * std::pow(rho, 0.5 * m.p);
    }
  }
  double coupling = 0.0, exchange = 0.0, rate = 0.0;
  if (terms.coupling) {
    // d/dt psi_j = i H_j with H_j = Lap psi_j + f_j, so
    // d/dt Im(psi1 psi2 conj psi3) = Re(H1 psi2 conj psi3 + psi1 H2 conj psi3 - psi1 psi2 conj H3).
    std::array<Field, 3> H;
    const double half_pm2 = 0.5 * (m.p - 2.0);
    for (int c = 0; c < 3; ++c) {
      H[c] = laplacian(g, u[c]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (terms.power) H[c][i] += std::pow(std::norm(u[c][i]), half_pm2) * u[c][i];
      }
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      const cplx z1 = u[0][i], z2 = u[1][i], z3 = u[2][i];
      H[0][i] += m.alpha * z3 * std::conj(z2);
      H[1][i] += m.alpha * z3 * std::conj(z1);
      H[2][i] += m.alpha * z1 * z2;
      const cplx Z = z1 * z2 * std::conj(z3);
      coupling += w.lap[i] * Z.real();
      exchange += w.phi[i] * Z.imag();
      rate += w.phi[i] * (H[0][i] * z2 * std::conj(z3) + z1 * H[1][i] * std::conj(z3) -
                          z1 * z2 * std::conj(H[2][i]))
                             .real();
    }
  }
  out.I = moment * dv;
  out.exchange = 2.0 * m.alpha * exchange * dv;
  out.exchange_rate = 2.0 * m.alpha * rate * dv;
  out.I_prime = 2.0 * flux * dv + out.exchange;
  out.I_second_flux = (4.0 * hess_term - bilap_term - 2.0 * (1.0 - 2.0 / m.p) * power_term -
                       2.0 * m.alpha * coupling) *
                      dv;
  out.I_second = out.I_second_flux + out.exchange_rate;
  return out;
}

}  // namespace nls3
