#include "doctest.h"

#include <cmath>
#include <random>

#include "nls3/errors.hpp"
#include "nls3/groundstate.hpp"
#include "nls3/scalar.hpp"
#include "support.hpp"

using namespace nls3;
using nls3::testing::random_triple;
using nls3::testing::rel;

namespace {

GnConstants constants(double p) {
  static auto g = make_grid(1, 1024, 40.0);
  return gn_constants(g, p);
}

void check_on_sphere(const FieldTriple& u, double a1, double a2, double tol) {
  auto [q1, q2] = masses(u);
  CHECK(rel(q1, a1 * a1) < tol);
  CHECK(rel(q2, a2 * a2) < tol);
}

// Common post-conditions of every StationaryResult.
void check_stationary(const ModelParams& m, const StationaryResult& r, const SolverConfig& cfg) {
  check_on_sphere(r.fields, m.a1, m.a2, 1e-10);
  CHECK(r.residual < cfg.grad_tol);
  const auto& d = r.diagnostics;
  double P = r.kind == StationaryKind::limit_system ? limit_pohozaev(r.fields) : d.pohozaev;
  CHECK(std::abs(P) < 1e-6 * (1.0 + d.kinetic));
  CHECK(std::abs(multiplier_identity_defect(m, r)) < 1e-6);
  // Gauge: u1 and u2 are real and positive where they peak.
  for (int i = 0; i < 2; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < r.fields[i].size(); ++k)
      if (std::abs(r.fields[i][k]) > std::abs(r.fields[i][best])) best = k;
    CHECK(r.fields[i][best].real() > 0.0);
    CHECK(std::abs(r.fields[i][best].imag()) < 1e-12 * std::abs(r.fields[i][best]));
  }
  for (std::size_t k = 1; k < r.value_history.size(); ++k)
    CHECK(r.value_history[k] <= r.value_history[k - 1] + 1e-12 * (1.0 + std::abs(r.value_history[k - 1])));
}

}  // namespace

TEST_CASE("mass projection") {
  auto g = make_grid(1, 256, 20.0);
  std::mt19937_64 rng(3);
  SUBCASE("random triples land on S with c3 = sqrt(c1 c2)") {
    for (int t = 0; t < 20; ++t) {
      auto u = random_triple(g, rng);
      double a1 = 0.2 + t * 0.05, a2 = 1.3 - t * 0.04;
      auto f = projection_factors(u, a1, a2);
      CHECK(f.c3 == doctest::Approx(std::sqrt(f.c1 * f.c2)).epsilon(1e-12));
      check_on_sphere(project_masses(u, a1, a2), a1, a2, 1e-12);
    }
  }
  SUBCASE("points of S are fixed") {
    auto u = project_masses(random_triple(g, rng), 0.7, 0.4);
    auto f = projection_factors(u, 0.7, 0.4);
    CHECK(std::abs(f.c1 - 1.0) < 1e-12);
    CHECK(std::abs(f.c2 - 1.0) < 1e-12);
    CHECK(std::abs(f.c3 - 1.0) < 1e-12);
  }
  SUBCASE("decoupled case n3 = 0 scales each component") {
    auto u = random_triple(g, rng);
    std::fill(u[2].begin(), u[2].end(), cplx(0.0, 0.0));
    auto v = project_masses(u, 0.5, 0.9);
    CHECK(rel(norm_sq(*g, v[0]), 0.25) < 1e-12);
    CHECK(rel(norm_sq(*g, v[1]), 0.81) < 1e-12);
  }
  SUBCASE("degenerate inputs") {
    auto u = random_triple(g, rng);
    std::fill(u[0].begin(), u[0].end(), cplx(0.0, 0.0));
    // u1 = 0: u3 alone must carry a1, so a2 >= a1 is needed.
    check_on_sphere(project_masses(u, 0.3, 0.5), 0.3, 0.5, 1e-12);
    CHECK_THROWS_AS(project_masses(u, 0.5, 0.3), ModelError);
    std::fill(u[2].begin(), u[2].end(), cplx(0.0, 0.0));
    CHECK_THROWS_AS(project_masses(u, 0.5, 0.5), ModelError);
  }
}

TEST_CASE("constrained gradient is tangent to S") {
  auto g = make_grid(1, 256, 20.0);
  std::mt19937_64 rng(5);
  ModelParams m{1, 8.0, 1.3, 0.6, 0.5};
  for (int t = 0; t < 5; ++t) {
    auto u = project_masses(random_triple(g, rng), m.a1, m.a2);
    auto cg = constrained_gradient(m, u);
    double t1 = inner(*g, cg.g[0], u[0]) + inner(*g, cg.g[2], u[2]);
    double t2 = inner(*g, cg.g[1], u[1]) + inner(*g, cg.g[2], u[2]);
    CHECK(std::abs(t1) < 1e-10 * (1.0 + cg.norm));
    CHECK(std::abs(t2) < 1e-10 * (1.0 + cg.norm));
    // Derivative of E along a curve on S matches <G, w> for tangent w.
    auto w = random_triple(g, rng);
    {
      const double n1 = norm_sq(*g, u[0]), n2 = norm_sq(*g, u[1]), n3 = norm_sq(*g, u[2]);
      const double r1 = inner(*g, w[0], u[0]) + inner(*g, w[2], u[2]);
      const double r2 = inner(*g, w[1], u[1]) + inner(*g, w[2], u[2]);
      const double Q1 = n1 + n3, Q2 = n2 + n3, det = Q1 * Q2 - n3 * n3;
      const double m1 = (r1 * Q2 - n3 * r2) / det, m2 = (Q1 * r2 - n3 * r1) / det;
      const double mu[3] = {m1, m2, m1 + m2};
      for (int i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < g->size(); ++k) w[i][k] -= mu[i] * u[i][k];
    }
    const double h = 1e-6;
    FieldTriple up = u, um = u;
    for (int i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < g->size(); ++k) {
        up[i][k] += h * w[i][k];
        um[i][k] -= h * w[i][k];
      }
    up = project_masses(up, m.a1, m.a2);
    um = project_masses(um, m.a1, m.a2);
    double fd = (energy(m, up) - energy(m, um)) / (2 * h);
    double an = 0.0;
    for (int i = 0; i < 3; ++i) an += inner(*g, cg.g[i], w[i]);
    CHECK(std::abs(fd - an) < 1e-5 * (1.0 + std::abs(an)));
  }
}

TEST_CASE("ground state N=1, p=6 (mass-critical branch)") {
  ModelParams m{1, 6.0, 1.0, 0.0, 0.0};
  auto gn = constants(6.0);
  const double D = threshold_D(m, gn);
  m.a1 = m.a2 = 0.1 * D;
  auto grid = make_grid(1, 1024, 300.0);
  SolverConfig cfg;
  auto r = solve_ground_state(m, grid, gn, cfg);
  check_stationary(m, r, cfg);
  CHECK(r.kind == StationaryKind::ground);
  CHECK(r.level < 0.0);
  CHECK(r.lambda1 > 0.0);
  CHECK(r.lambda2 > 0.0);
  CHECK(r.diagnostics.interaction > 0.0);
  CHECK(r.boundary_ratio < 1e-8);
  // Single critical point of the fiber map, located at s = 1.
  auto cps = fiber_stationary_points(m, field_norms(m.p, r.fields));
  REQUIRE(cps.size() == 1);
  CHECK(std::abs(cps[0] - 1.0) < 1e-6);
  // Refined bound against the independently computed quadratic scalar level.
  auto w3 = solve_scalar_ground_state(make_grid(1, 1024, 40.0), 3.0);
  CHECK(r.level < 3.0 * scalar_level_m0_closed(1, m.alpha, m.a1 / std::sqrt(2.0), w3.l2_norm_sq));
  // Symmetric masses give u1 = u2.
  CHECK(nls3::testing::max_abs_diff(r.fields[0], r.fields[1]) < 1e-6);
}

TEST_CASE("ground state N=1, p=8 sits inside the kinetic well") {
  ModelParams m{1, 8.0, 1.0, 0.0, 0.0};
  auto gn = constants(8.0);
  const double D = threshold_D(m, gn);
  m.a1 = 0.3 * D;
  m.a2 = 0.25 * D;
  auto grid = make_grid(1, 512, 60.0);
  SolverConfig cfg;
  auto r = solve_ground_state(m, grid, gn, cfg);
  check_stationary(m, r, cfg);
  CHECK(r.level < 0.0);
  CHECK(r.lambda1 > 0.0);
  CHECK(r.lambda2 > 0.0);
  const double rs = rho_star(m, gn);
  CHECK(r.diagnostics.kinetic < rs * rs);
  auto c = derive_constants(m, gn);
  CHECK(r.level >= geometry_h(m, c, std::sqrt(r.diagnostics.kinetic)));
  auto [s, sigma] = fiber_critical_points(m, r.fields);
  CHECK(std::abs(s - 1.0) < 1e-6);
  auto zeros = fiber_zeros(m, field_norms(m.p, r.fields));
  REQUIRE(zeros.size() == 2);
  CHECK(s < zeros[0]);
  CHECK(zeros[0] < sigma);
  CHECK(sigma < zeros[1]);
}

TEST_CASE("ground state refuses masses at or above D") {
  ModelParams m{1, 8.0, 1.0, 0.0, 0.0};
  auto gn = constants(8.0);
  m.a1 = m.a2 = threshold_D(m, gn);
  CHECK_THROWS_AS(solve_ground_state(m, make_grid(1, 256, 40.0), gn, {}), ModelError);
  ModelParams c{1, 6.0, 1.0, 0.0, 0.0};
  c.a1 = c.a2 = 1.01 * mass_critical_threshold(c, constants(6.0));
  CHECK_THROWS_AS(solve_ground_state(c, make_grid(1, 256, 40.0), constants(6.0), {}), ModelError);
}

TEST_CASE("limit system: symmetric minimizer and its level") {
  auto grid = make_grid(1, 512, 40.0);
  SolverConfig cfg;
  const double a = 1.0;
  auto r = solve_limit_system(grid, a, a, cfg);
  ModelParams m{1, 3.0, 1.0, a, a};
  check_stationary(m, r, cfg);
  CHECK(r.kind == StationaryKind::limit_system);
  CHECK(r.level < 0.0);
  CHECK(r.lambda1 > 0.0);
  CHECK(r.lambda2 > 0.0);
  // omega1 a1^2 + omega2 a2^2 = (3 - N/2) Re int u1 u2 conj(u3).
  double I = r.diagnostics.interaction;
  CHECK(rel(r.lambda1 * a * a + r.lambda2 * a * a, 2.5 * I) < 1e-8);
  // (v, v, v) with ||v||^2 = a^2/2 is admissible but not critical, so 3 m0(a / sqrt 2) at
  // alpha = 1 is a strict upper bound.
  auto w3 = solve_scalar_ground_state(make_grid(1, 1024, 40.0), 3.0);
  CHECK(r.level < 3.0 * scalar_level_m0_closed(1, 1.0, a / std::sqrt(2.0), w3.l2_norm_sq));
  CHECK(nls3::testing::max_abs_diff(r.fields[0], r.fields[1]) < 1e-6);
}

TEST_CASE("limit system with unequal masses") {
  auto grid = make_grid(1, 512, 40.0);
  SolverConfig cfg;
  auto r = solve_limit_system(grid, 1.0, 0.7, cfg);
  ModelParams m{1, 3.0, 1.0, 1.0, 0.7};
  check_stationary(m, r, cfg);
  CHECK(r.level < 0.0);
  CHECK(r.lambda1 > 0.0);
  CHECK(r.lambda2 > 0.0);
}

TEST_CASE("energy lower bound by h on random triples") {
  ModelParams m{1, 8.0, 1.0, 0.0, 0.0};
  auto gn = constants(8.0);
  const double D = threshold_D(m, gn);
  m.a1 = m.a2 = 0.8 * D;
  auto c = derive_constants(m, gn);
  auto grid = make_grid(1, 128, 20.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> frac(0.05, 1.0), width(0.2, 3.0);
  int checked = 0;
  for (int t = 0; t < 10000; ++t) {
    auto u = random_triple(grid, rng, width(rng));
    if (restriction_indicator(u) == 0.0) continue;
    u = project_masses(u, frac(rng) * m.a1, frac(rng) * m.a2);
    double K = field_norms(m.p, u).kinetic;
    CHECK(energy(m, u) >= geometry_h(m, c, std::sqrt(K)) - 1e-12 * (1.0 + std::abs(energy(m, u))));
    ++checked;
  }
  CHECK(checked > 9000);
}

TEST_CASE("excited state N=1, p=10 and continuation in a2") {
  ModelParams m{1, 10.0, 20.0, 0.0, 0.0};
  auto gn = constants(10.0);
  const double D = threshold_D(m, gn);
  m.a1 = m.a2 = 0.9 * D;
  auto grid = make_grid(1, 4096, 20.0);
  SolverConfig cfg;
  auto r = solve_excited_state(m, grid, gn, cfg);
  check_on_sphere(r.fields, m.a1, m.a2, 1e-10);
  CHECK(r.residual < cfg.grad_tol);
  CHECK(std::abs(r.diagnostics.pohozaev) < 1e-6 * (1.0 + r.diagnostics.kinetic));
  CHECK(std::abs(multiplier_identity_defect(m, r)) < 1e-6);
  CHECK(r.kind == StationaryKind::excited);
  CHECK(r.warning.empty());
  CHECK(r.level > 0.0);
  CHECK(r.lambda1 > 0.0);
  CHECK(r.lambda2 > 0.0);
  auto wp = solve_scalar_ground_state(grid, m.p);
  CHECK(r.level < scalar_level_m(wp, 1, m.a1));
  auto n = field_norms(m.p, r.fields);
  CHECK(fiber_derivatives(m, n, 1.0).second < 0.0);
  auto [s, sigma] = fiber_critical_points(m, r.fields);
  CHECK(std::abs(sigma - 1.0) < 1e-6);
  CHECK(s < 1.0);

  // u1 carries the concentrated soliton; continue toward a2 -> 0 along that branch.
  CHECK(r.lambda1 > r.lambda2);
  SolverConfig next = cfg;
  next.initial = r.fields;
  ModelParams m2 = m;
  m2.a2 = 0.5 * m.a1;
  auto r2 = solve_excited_state(m2, grid, gn, next);
  CHECK(r2.residual < cfg.grad_tol);
  CHECK(r2.level > r.level);
  CHECK(r2.level < scalar_level_m(wp, 1, m.a1));
}

TEST_CASE("excited state preconditions") {
  auto gn6 = constants(6.0);
  ModelParams c{1, 6.0, 1.0, 0.1, 0.1};
  CHECK_THROWS_AS(solve_excited_state(c, make_grid(1, 256, 40.0), gn6, {}), ModelError);
  ModelParams m{1, 10.0, 1.0, 0.0, 0.0};
  auto gn = constants(10.0);
  m.a1 = m.a2 = 1.01 * threshold_D(m, gn);
  CHECK_THROWS_AS(solve_excited_state(m, make_grid(1, 256, 40.0), gn, {}), ModelError);
}

TEST_CASE("fiber_critical_points rejects points outside M") {
  auto g = make_grid(1, 128, 20.0);
  std::mt19937_64 rng(2);
  ModelParams m{1, 8.0, 1.0, 0.5, 0.5};
  auto u = random_triple(g, rng);
  std::fill(u[2].begin(), u[2].end(), cplx(0.0, 0.0));
  CHECK_THROWS_AS(fiber_critical_points(m, u), ModelError);
}
