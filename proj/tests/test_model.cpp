#include <cmath>
#include <random>

#include "doctest.h"
#include "nls3/model.hpp"
#include "nls3/scalar.hpp"
#include "support.hpp"

using namespace nls3;
using nls3::testing::random_triple;
using nls3::testing::rel;

namespace {

GnConstants gn_1d(double p) {
  static auto g = make_grid(1, 1024, 40.0);
  return gn_constants(g, p);
}

FieldTriple gaussian_triple(GridPtr g, double width) {
  FieldTriple u(g);
  for (int i = 0; i < 3; ++i)
    u[i] = sample(*g, [&](const std::array<double, 3>& x) {
      double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
      return cplx(std::exp(-r2 / (width * width)), 0.0);
    });
  return u;
}

void scale(FieldTriple& u, double c) {
  for (auto& f : u.c)
    for (auto& v : f) v *= c;
}

}  // namespace

TEST_CASE("admissible parameters") {
  ModelParams m{3, 2.0, 1.0, 0.1, 0.1};
  CHECK_THROWS_AS(m.validate(), ModelError);
  m.p = 10.0 / 3.0;
  CHECK_NOTHROW(m.validate());
  m.p = 6.0;
  CHECK_THROWS_AS(m.validate(), ModelError);
  ModelParams n{1, 6.0, 1.0, 0.1, 0.1};
  CHECK(n.mass_critical());
  CHECK(n.gamma_p() * n.p == doctest::Approx(2.0));
  n.alpha = 0.0;
  CHECK_THROWS_AS(n.validate(), ModelError);
}

TEST_CASE("energy examples") {
  auto g = make_grid(1, 256, 16.0);
  ModelParams m{1, 4.0, 1.0, 1.0, 1.0};
  CHECK(energy(m, FieldTriple(g)) == 0.0);

  std::mt19937_64 rng(3);
  auto u = random_triple(g, rng);
  double e0 = energy(m, u);
  CHECK(std::abs(energy(m, gauge(u, 0.7, -1.3)) - e0) < 1e-12 * (1 + std::abs(e0)));

  // Oracle: analytic derivative quadrature on a 4x finer grid.
  auto gf = make_grid(1, 1024, 16.0);
  RealField dens(gf->size());
  for (int j = 0; j < gf->points(); ++j) {
    double x = gf->coordinate(j), e = std::exp(-x * x), d = -2 * x * e;
    dens[j] = 3 * 0.5 * d * d - 3 * std::pow(e, 4) / 4.0 - e * e * e;
  }
  double oracle = integrate(*gf, dens);
  CHECK(std::abs(energy(m, gaussian_triple(g, 1.0)) - oracle) < 1e-8);
}

TEST_CASE("masses examples") {
  auto g = make_grid(1, 128, 10.0);
  FieldTriple u(g);
  auto [z1, z2] = masses(u);
  CHECK(z1 == 0.0);
  CHECK(z2 == 0.0);
  auto gauss = sample(*g, [](const std::array<double, 3>& x) { return cplx(std::exp(-x[0] * x[0]), 0); });
  double n = norm_sq(*g, gauss);
  u[0] = gauss;
  for (auto& v : u[0]) v *= std::sqrt(2.0 / n);
  auto [q1, q2] = masses(u);
  CHECK(q1 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(q2 == 0.0);
  FieldTriple w(g);
  w[2] = gauss;
  for (auto& v : w[2]) v *= std::sqrt(1.5 / n);
  auto [r1, r2] = masses(w);
  CHECK(r1 == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(r2 == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("pohozaev as the scaling derivative of the energy") {
  auto g = make_grid(1, 512, 30.0);
  ModelParams m{1, 5.0, 1.3, 1.0, 1.0};
  CHECK(pohozaev(m, FieldTriple(g)) == 0.0);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 3; ++t) {
    auto u = random_triple(g, rng, 1.5);
    const double h = 1e-4;
    double fd = (energy(m, dilate(1 + h, u)) - energy(m, dilate(1 - h, u))) / (2 * h);
    double P = pohozaev(m, u);
    CHECK(std::abs(fd - P) < 1e-6 * std::abs(P));
  }
}

TEST_CASE("dilation") {
  auto g = make_grid(1, 512, 30.0);
  std::mt19937_64 rng(9);
  auto u = random_triple(g, rng, 1.5);
  auto same = dilate(1.0, u);
  CHECK(same[0] == u[0]);
  auto v = dilate(1.7, u);
  auto [q1, q2] = masses(u);
  auto [r1, r2] = masses(v);
  CHECK(std::abs(r1 - q1) < 1e-8 * q1);
  CHECK(std::abs(r2 - q2) < 1e-8 * q2);
  for (double s : {0.6, 1.7}) {
    auto d = dilate(s, u);
    for (int i = 0; i < 3; ++i) {
      double k0 = gradient_norm_sq(*g, u[i]), k1 = gradient_norm_sq(*g, d[i]);
      CHECK(std::abs(k1 - s * s * k0) < 1e-8 * k1);
    }
  }
  // A bump that reaches the boundary after stretching loses mass and is rejected.
  CHECK_THROWS_AS(dilate(0.05, u), ModelError);

  auto g2 = make_grid(2, 96, 16.0);
  auto u2 = random_triple(g2, rng, 2.0);
  auto d2 = dilate(1.3, u2);
  double k0 = gradient_norm_sq(*g2, u2[1]), k1 = gradient_norm_sq(*g2, d2[1]);
  CHECK(std::abs(k1 - 1.69 * k0) < 1e-8 * k1);
}

TEST_CASE("fiber map") {
  auto g = make_grid(1, 512, 30.0);
  ModelParams m{1, 8.0, 1.0, 1.0, 1.0};
  std::mt19937_64 rng(13);
  auto u = random_triple(g, rng, 1.5, 1.5, true);
  auto n = field_norms(m.p, u);
  CHECK(std::abs(fiber_map(m, n, 1.0) - energy(m, u)) < 1e-13 * std::abs(energy(m, u)));
  for (double s : {0.5, 2.0}) {
    double lhs = s * fiber_derivatives(m, n, s).first;
    double rhs = pohozaev(m, dilate(s, u));
    CHECK(std::abs(lhs - rhs) < 1e-6 * std::abs(rhs));
  }
  // Psi'' against a centered difference of Psi'.
  const double s = 1.3, h = 1e-5;
  double fd = (fiber_derivatives(m, n, s + h).first - fiber_derivatives(m, n, s - h).first) / (2 * h);
  CHECK(rel(fd, fiber_derivatives(m, n, s).second) < 1e-7);
  CHECK_THROWS_AS(fiber_map(m, n, 0.0), ModelError);
}

TEST_CASE("fiber map has exactly two critical points below D in M") {
  auto g = make_grid(1, 256, 20.0);
  ModelParams m{1, 8.0, 1.0, 1.0, 1.0};
  const double D = threshold_D(m, gn_1d(8.0));
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    auto u = random_triple(g, rng, 1.0, 1.5, true);
    auto [q1, q2] = masses(u);
    scale(u, 0.9 * D / std::sqrt(std::max(q1, q2)));
    REQUIRE(restriction_indicator(u) > 0.0);
    auto n = field_norms(m.p, u);
    CHECK(fiber_root_count_dense(m, n, 1e-4, 1e4, 100000) == 2);
    auto cps = fiber_stationary_points(m, n);
    REQUIRE(cps.size() == 2);
    CHECK(fiber_derivatives(m, n, cps[0]).second > 0.0);
    CHECK(fiber_derivatives(m, n, cps[1]).second < 0.0);
  }
}

TEST_CASE("mass-critical fiber map has a single minimum at negative level") {
  auto g = make_grid(1, 256, 20.0);
  ModelParams m{1, 6.0, 1.0, 1.0, 1.0};
  auto gn = gn_1d(6.0);
  const double thr = mass_critical_threshold(m, gn);
  std::mt19937_64 rng(19);
  for (int t = 0; t < 20; ++t) {
    auto u = random_triple(g, rng, 1.0, 1.5, true);
    auto [q1, q2] = masses(u);
    scale(u, 0.9 * thr / std::sqrt(std::max(q1, q2)));
    auto n = field_norms(m.p, u);
    auto cps = fiber_stationary_points(m, n);
    REQUIRE(cps.size() == 1);
    CHECK(fiber_derivatives(m, n, cps[0]).second > 0.0);
    CHECK(fiber_map(m, n, cps[0]) < 0.0);
  }
}

TEST_CASE("threshold D and rho*") {
  ModelParams m{1, 6.0, 1.0, 1.0, 1.0};
  auto gn6 = gn_1d(6.0);
  double D = threshold_D(m, gn6);
  // Frozen from the formula with C(1,6) computed on L=40, M=1024.
  CHECK(std::abs(D - 1.6494541661869015) < 1e-9);
  CHECK(std::abs(D - mass_critical_threshold(m, gn6)) < 1e-12 * D);
  CHECK(std::isinf(rho_star(m, gn6)));

  ModelParams s{1, 8.0, 1.0, 0.3, 0.2};
  auto gn8 = gn_1d(8.0);
  ModelParams s2 = s;
  s2.alpha = 2.0;
  CHECK(threshold_D(s2, gn8) < threshold_D(s, gn8));
  ModelParams s3 = s;
  s3.a1 = 0.05;
  s3.a2 = 0.7;
  CHECK(rho_star(s3, gn8) == rho_star(s, gn8));

  ModelParams bad{1, 3.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(threshold_D(bad, gn6), ModelError);
}

TEST_CASE("geometry function h") {
  ModelParams m{1, 8.0, 1.0, 0.1, 0.1};
  auto gn = gn_1d(8.0);
  auto c0 = derive_constants(m, gn);
  CHECK(geometry_h(m, c0, 0.0) == 0.0);
  m.a1 = m.a2 = 0.5 * c0.D;
  auto c = derive_constants(m, gn);
  REQUIRE(c.R0.has_value());
  REQUIRE(c.R1.has_value());
  CHECK(std::abs(geometry_h(m, c, *c.R0)) < 1e-10 * (*c.R0) * (*c.R0));
  CHECK(std::abs(geometry_h(m, c, *c.R1)) < 1e-10 * (*c.R1) * (*c.R1));
  CHECK(*c.R0 < c.rho_star);
  CHECK(c.rho_star < *c.R1);
  CHECK(geometry_h(m, c, c.rho_star) > 0.0);

  m.a1 = m.a2 = c0.D;
  auto cd = derive_constants(m, gn);
  auto roots = geometry_h_roots(m, cd);
  REQUIRE(roots.size() == 2);
  CHECK(std::abs(roots[1] - roots[0]) < 1e-6);
  CHECK(std::abs(roots[0] - cd.rho_star) < 1e-6 * cd.rho_star);
}

TEST_CASE("mass-critical threshold") {
  auto g2 = make_grid(2, 128, 16.0);
  ModelParams m{2, 4.0, 1.0, 0.5, 0.5};
  double c = gn_constant(g2, 4.0);
  GnConstants gn{c, c};
  double thr = mass_critical_threshold(m, gn);
  CHECK(std::abs(thr - std::sqrt(2.0) * std::pow(c, -2.0)) < 1e-12 * thr);
  m.a1 = m.a2 = 0.8 * thr;
  CHECK(coercivity_coefficient(m, gn) > 0.0);
  m.a1 = m.a2 = thr;
  CHECK(std::abs(coercivity_coefficient(m, gn)) < 1e-12);
  ModelParams sup{2, 5.0, 1.0, 0.5, 0.5};
  CHECK_THROWS_AS(mass_critical_threshold(sup, gn), ModelError);
}

TEST_CASE("restriction indicator") {
  auto g = make_grid(1, 128, 10.0);
  auto u = gaussian_triple(g, 1.0);
  CHECK(restriction_indicator(u) > 0.0);
  for (auto& v : u[2]) v = -v;
  CHECK(restriction_indicator(u) < 0.0);
  CHECK(restriction_indicator(FieldTriple(g)) == 0.0);
}

TEST_CASE("gauge invariance of E, Q and P") {
  std::mt19937_64 rng(23);
  auto g = make_grid(2, 32, 6.0);
  ModelParams m{2, 5.0, 0.8, 1.0, 1.0};
  for (int t = 0; t < 5; ++t) {
    auto u = random_triple(g, rng);
    std::uniform_real_distribution<double> th(-M_PI, M_PI);
    auto v = gauge(u, th(rng), th(rng));
    auto a = diagnostics(m, u), b = diagnostics(m, v);
    CHECK(std::abs(a.energy - b.energy) < 1e-12 * (1 + std::abs(a.energy)));
    CHECK(std::abs(a.pohozaev - b.pohozaev) < 1e-12 * (1 + std::abs(a.pohozaev)));
    CHECK(std::abs(a.mass1 - b.mass1) < 1e-12 * a.mass1);
    CHECK(std::abs(a.mass2 - b.mass2) < 1e-12 * a.mass2);
  }
}

TEST_CASE("energy minus scaled Pohozaev identity") {
  std::mt19937_64 rng(29);
  auto g = make_grid(1, 256, 20.0);
  for (double p : {6.0, 7.5, 10.0}) {
    ModelParams m{1, p, 1.7, 1.0, 1.0};
    for (int t = 0; t < 10; ++t) {
      auto u = random_triple(g, rng);
      auto d = diagnostics(m, u);
      double pg = p * m.gamma_p();
      double lhs = d.energy - d.pohozaev / pg;
      double rhs = 0.5 * (1 - 2 / pg) * d.kinetic - m.alpha * (1 - 1 / (p - 2)) * d.interaction;
      CHECK(std::abs(lhs - rhs) < 1e-10 * (d.kinetic + std::abs(d.interaction)));
    }
  }
}

TEST_CASE("energy gradient against finite differences") {
  std::mt19937_64 rng(31);
  auto g = make_grid(1, 256, 20.0);
  ModelParams m{1, 7.0, 1.4, 1.0, 1.0};
  auto u = random_triple(g, rng);
  auto G = energy_gradient(m, u);
  auto G0 = limit_energy_gradient(u);
  for (int t = 0; t < 5; ++t) {
    auto v = random_triple(g, rng);
    double dir = 0.0, dir0 = 0.0;
    for (int i = 0; i < 3; ++i) {
      dir += inner(*g, G[i], v[i]);
      dir0 += inner(*g, G0[i], v[i]);
    }
    const double h = 1e-5;
    FieldTriple up = u, um = u;
    for (int i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < u[i].size(); ++k) {
        up[i][k] += h * v[i][k];
        um[i][k] -= h * v[i][k];
      }
    double fd = (energy(m, up) - energy(m, um)) / (2 * h);
    double fd0 = (limit_energy(up) - limit_energy(um)) / (2 * h);
    CHECK(rel(fd, dir) < 1e-6);
    CHECK(rel(fd0, dir0) < 1e-6);
  }
}
