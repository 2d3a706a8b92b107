#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "nls3/scalar.hpp"
#include "support.hpp"

using namespace nls3;

TEST_CASE("N=1, p=3 matches (3/2) sech^2(x/2)") {
  auto g = make_grid(1, 1024, 40.0);
  auto w = solve_scalar_ground_state(g, 3.0);
  double err = 0.0;
  for (int j = 0; j < g->points(); ++j) {
    double x = g->coordinate(j), s = 1.0 / std::cosh(x / 2);
    err = std::max(err, std::abs(w.field[j].real() - 1.5 * s * s));
  }
  CHECK(err < 1e-8);
  CHECK(std::abs(w.l2_norm_sq - 6.0) < 1e-8);
  CHECK(w.residual < 1e-8);
}

TEST_CASE("N=1 closed-form family for p = 4, 6") {
  auto g = make_grid(1, 1024, 40.0);
  for (double p : {4.0, 6.0}) {
    auto w = solve_scalar_ground_state(g, p);
    double err = 0.0;
    for (int j = 0; j < g->points(); ++j)
      err = std::max(err, std::abs(w.field[j].real() - soliton_1d(p, g->coordinate(j))));
    CHECK(err < 1e-8);
  }
}

TEST_CASE("closed-form profiles satisfy the discrete equation") {
  auto g = make_grid(1, 1024, 40.0);
  for (double p : {3.0, 4.0, 6.0}) {
    auto f = sample(*g, [&](const std::array<double, 3>& x) { return cplx(soliton_1d(p, x[0]), 0); });
    CHECK(scalar_residual(*g, f, p) < 1e-8);
  }
}

TEST_CASE("N=2, p=3 profile: residual and scalar Pohozaev relation") {
  auto g = make_grid(2, 128, 16.0);
  auto w = solve_scalar_ground_state(g, 3.0);
  CHECK(w.residual < 1e-8);
  double gam = 2.0 * (3.0 - 2.0) / (2.0 * 3.0);
  CHECK(std::abs(w.kinetic - gam * w.lp_norm) < 1e-8 * w.kinetic);
  // Positivity and radial symmetry about the center.
  double mx = 0.0;
  for (auto v : w.field) mx = std::max(mx, v.real());
  for (auto v : w.field) CHECK(v.real() > -1e-14 * mx);
  const int M = g->points();
  double asym = 0.0;
  for (int i = 1; i < M; ++i)
    for (int j = 1; j < M; ++j)
      asym = std::max(asym, std::abs(w.field[i * M + j] - w.field[j * M + i]) +
                                std::abs(w.field[i * M + j] - w.field[(M - i) * M + j]));
  CHECK(asym < 1e-8);
}

TEST_CASE("gn_constant N=1, p=3 regression") {
  // Closed-form norms of (3/2)sech^2(x/2): ||w||^2 = 6, ||w'||^2 = 6/5, ||w||_3^3 = 36/5.
  double gam = 1.0 / 6.0;
  double oracle = std::cbrt(7.2) / (std::pow(1.2, gam / 2) * std::pow(6.0, (1 - gam) / 2));
  CHECK(std::abs(oracle - 0.90146604693547737) < 1e-15);
  auto g = make_grid(1, 1024, 40.0);
  CHECK(std::abs(gn_constant(g, 3.0) - oracle) < 1e-10);
}

TEST_CASE("gn_constant N=1, p=6 regression") {
  // Norms of 3^{1/4} sech^{1/2}(2x) by extended-precision quadrature.
  auto g = make_grid(1, 1024, 40.0);
  CHECK(std::abs(gn_constant(g, 6.0) - 0.86025401382809965) < 1e-10);
}

TEST_CASE("GN inequality on random fields and sharpness on w_p") {
  std::mt19937_64 rng(11);
  auto g = make_grid(1, 512, 30.0);
  for (double p : {3.0, 6.0}) {
    auto w = solve_scalar_ground_state(g, p);
    double C = gn_constant_of(w);
    CHECK(std::abs(gn_quotient(*g, w.field, p) - C) < 1e-10 * C);
    int violations = 0;
    for (int t = 0; t < 1000; ++t) {
      auto u = nls3::testing::random_bumps(*g, rng, 1.0 + (t % 5), 3.0);
      if (gn_quotient(*g, u, p) > C * (1 + 1e-9)) ++violations;
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("gn_constant is grid converged in 1D") {
  double a = gn_constant(make_grid(1, 512, 40.0), 4.0);
  double b = gn_constant(make_grid(1, 1024, 40.0), 4.0);
  CHECK(std::abs(a - b) < 1e-8);
}

TEST_CASE("constant cache round trip") {
  auto dir = std::filesystem::temp_directory_path() / "nls3_cache_test";
  std::filesystem::remove_all(dir);
  GnCache cache((dir / "gn.txt").string());
  CHECK_FALSE(cache.lookup(1, 3.0, 256, 20.0).has_value());
  auto g = make_grid(1, 256, 20.0);
  double c = gn_constant_cached(g, 3.0, &cache);
  auto hit = cache.lookup(1, 3.0, 256, 20.0);
  REQUIRE(hit.has_value());
  CHECK(*hit == c);
  cache.store(2, 4.0, 64, 10.0, 1.25);
  CHECK(*cache.lookup(1, 3.0, 256, 20.0) == c);
  CHECK(*cache.lookup(2, 4.0, 64, 10.0) == 1.25);
  std::filesystem::remove_all(dir);
}

TEST_CASE("scalar level m(c) for a supercritical exponent") {
  auto g = make_grid(1, 1024, 40.0);
  const double p = 8.0;
  auto w = solve_scalar_ground_state(g, p);
  double m05 = scalar_level_m(w, 1, 0.5), m1 = scalar_level_m(w, 1, 1.0), m2 = scalar_level_m(w, 1, 2.0);
  CHECK(m05 > m1);
  CHECK(m1 > m2);
  CHECK(m2 > 0.0);

  // Build u_c on the grid from the closed-form profile and check P_c membership and J.
  const double c = 0.9 * std::sqrt(w.l2_norm_sq), e = 2.0 / (p - 2.0) - 0.5;
  const double lambda = std::pow(c * c / w.l2_norm_sq, 1.0 / e);
  const double mc = scalar_level_m(w, 1, c);
  auto gf = make_grid(1, 2048, 40.0);
  auto uc = sample(*gf, [&](const std::array<double, 3>& x) {
    return cplx(std::pow(lambda, 1.0 / (p - 2.0)) * soliton_1d(p, std::sqrt(lambda) * x[0]), 0);
  });
  double k = gradient_norm_sq(*gf, uc), v = lp_norm_p(*gf, uc, p), gam = (p - 2.0) / (2.0 * p);
  CHECK(std::abs(norm_sq(*gf, uc) - c * c) < 1e-8);
  CHECK(std::abs(k - gam * v) < 1e-8 * k);
  CHECK(std::abs(0.5 * k - v / p - mc) < 1e-8 * mc);
}

TEST_CASE("scalar level m(c) has no rescaling at p = 2_*") {
  auto g = make_grid(1, 512, 30.0);
  auto w = solve_scalar_ground_state(g, 6.0);
  CHECK_THROWS_AS(scalar_level_m(w, 1, 1.0), ModelError);
}

TEST_CASE("scalar level m0") {
  auto g = make_grid(1, 1024, 40.0);
  double v = scalar_level_m0(g, 1.0, 1.0);
  CHECK(std::abs(v - (-0.3 * std::pow(1.0 / 6.0, 2.0 / 3.0))) < 1e-8);
  for (int N = 1; N <= 3; ++N) {
    double r = scalar_level_m0_closed(N, 1.3, 0.8, 5.0) / scalar_level_m0_closed(N, 1.3, 0.4, 5.0);
    CHECK(std::abs(r - std::pow(2.0, 2.0 * (6.0 - N) / (4.0 - N))) < 1e-12 * r);
    CHECK(scalar_level_m0_closed(N, 0.5, 0.3, 5.0) < 0.0);
  }
}
