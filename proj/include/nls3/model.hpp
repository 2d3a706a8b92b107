#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "nls3/grid.hpp"

namespace nls3 {

struct ModelParams {
  int dim = 1;
  double p = 6.0;
  double alpha = 1.0;
  double a1 = 0.1;
  double a2 = 0.1;

  // 2_* = 2 + 4/N.
  double critical_exponent() const { return 2.0 + 4.0 / dim; }
  double gamma_p() const { return dim * (p - 2.0) / (2.0 * p); }
  bool mass_critical() const;
  double max_mass() const { return a1 > a2 ? a1 : a2; }
  // Throws ModelError when (N, p, alpha, a1, a2) is outside the admissible range.
  void validate() const;
};

// Best Gagliardo-Nirenberg constants C(N,p) and C(N,3).
struct GnConstants {
  double cp = 0.0;
  double c3 = 0.0;
};

struct DerivedConstants {
  double gamma_p = 0.0;
  double gn_constant_p = 0.0;
  double gn_constant_3 = 0.0;
  double A1 = 0.0;
  double A2 = 0.0;
  double D = 0.0;
  // +inf when p = 2_*: there is no kinetic barrier in the mass-critical case.
  double rho_star = 0.0;
  // Zeros of h; set only when max(a1,a2) < D and p > 2_*.
  std::optional<double> R0;
  std::optional<double> R1;
};

double threshold_D(const ModelParams& m, const GnConstants& gn);
double rho_star(const ModelParams& m, const GnConstants& gn);
double geometry_h(const ModelParams& m, const DerivedConstants& c, double rho);
// Zeros of h on (0, inf) by log-grid bracketing and bisection.
std::vector<double> geometry_h_roots(const ModelParams& m, const DerivedConstants& c);
DerivedConstants derive_constants(const ModelParams& m, const GnConstants& gn);

// Mass bound below which E is coercive on the constraint set when p = 2_*.
double mass_critical_threshold(const ModelParams& m, const GnConstants& gn);
// 1 - (N C^{2+4/N}/(N+2)) max(a1,a2)^{4/N}; positive below the threshold.
double coercivity_coefficient(const ModelParams& m, const GnConstants& gn);

struct FieldTriple {
  GridPtr grid;
  std::array<Field, 3> c;

  FieldTriple() = default;
  explicit FieldTriple(GridPtr g);
  Field& operator[](int i) { return c[i]; }
  const Field& operator[](int i) const { return c[i]; }
  const SpectralGrid& g() const { return *grid; }
};

void require_same_grid(const FieldTriple& a, const FieldTriple& b);

// Scalars that determine E, P and the fiber map.
struct FieldNorms {
  std::array<double, 3> l2{};      // ||u_i||^2
  std::array<double, 3> grad{};    // ||grad u_i||^2
  std::array<double, 3> power{};   // ||u_i||_p^p
  double kinetic = 0.0;
  double potential = 0.0;
  double interaction = 0.0;        // Re int u1 u2 conj(u3)
};

FieldNorms field_norms(double p, const FieldTriple& u);

struct Diagnostics {
  double energy = 0.0;
  double limit_energy = 0.0;
  double mass1 = 0.0;
  double mass2 = 0.0;
  double pohozaev = 0.0;
  double kinetic = 0.0;
  double power_potential = 0.0;
  double interaction = 0.0;
};

Diagnostics diagnostics(const ModelParams& m, const FieldTriple& u);
Diagnostics diagnostics_from_norms(const ModelParams& m, const FieldNorms& n);

double energy(const ModelParams& m, const FieldTriple& u);
double limit_energy(const FieldTriple& u);
std::pair<double, double> masses(const FieldTriple& u);
double pohozaev(const ModelParams& m, const FieldTriple& u);
// Sum ||grad v_i||^2 - (N/2) Re int v1 v2 conj(v3).
double limit_pohozaev(const FieldTriple& u);
double restriction_indicator(const FieldTriple& u);

// L2 gradients: E(u + e v) = E(u) + e Re<E'(u), v> + O(e^2).
FieldTriple energy_gradient(const ModelParams& m, const FieldTriple& u);
FieldTriple limit_energy_gradient(const FieldTriple& u);

FieldTriple gauge(const FieldTriple& u, double theta1, double theta2);

// s * u = s^{N/2} u(s x) by band-limited trigonometric interpolation.
// Throws ModelError when the mass changes by more than mass_tol (aliasing).
FieldTriple dilate(double s, const FieldTriple& u, double mass_tol = 1e-8);

double fiber_map(const ModelParams& m, const FieldNorms& n, double s);
// (Psi'(s), Psi''(s)).
std::pair<double, double> fiber_derivatives(const ModelParams& m, const FieldNorms& n,
                                            double s);
// Sign changes of Psi' on a log grid over [smin, smax], refined by bisection.
std::vector<double> fiber_stationary_points(const ModelParams& m, const FieldNorms& n,
                                            double smin = 1e-8, double smax = 1e8);
// Zeros of Psi itself on (smin, smax).
std::vector<double> fiber_zeros(const ModelParams& m, const FieldNorms& n,
                                double smin = 1e-8, double smax = 1e8);
// Count of Psi' sign changes on a dense log grid.
int fiber_root_count_dense(const ModelParams& m, const FieldNorms& n, double smin,
                           double smax, int samples);

// Bisection on [lo, hi] where f(lo), f(hi) have opposite signs.
template <class F>
double bisect(F&& f, double lo, double hi, double tol = 1e-12) {
  double flo = f(lo);
  for (int it = 0; it < 400 && hi - lo > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace nls3
