#include <cmath>
#include <random>

#include "doctest.h"
#include "nls3/grid.hpp"
#include "support.hpp"

using namespace nls3;
using nls3::testing::white_noise;

TEST_CASE("grid construction") {
  SpectralGrid g(2, 16, 3.0);
  CHECK(g.size() == 256);
  CHECK(g.spacing() == doctest::Approx(0.375));
  CHECK(g.wavenumbers().size() == 16);
  CHECK(g.wavenumbers()[1] == doctest::Approx(M_PI / 3.0));
  CHECK(g.wavenumbers()[8] == doctest::Approx(-8 * M_PI / 3.0));
  CHECK(g.coordinate(8) == 0.0);
  RealField one(g.size(), 1.0);
  CHECK(std::abs(integrate(g, one) - 36.0) < 1e-13);

  CHECK_THROWS_AS(SpectralGrid(4, 16, 1.0), GridError);
  CHECK_THROWS_AS(SpectralGrid(1, 6, 1.0), GridError);
  CHECK_THROWS_AS(SpectralGrid(1, 15, 1.0), GridError);
  CHECK_THROWS_AS(SpectralGrid(1, 16, -1.0), GridError);
}

TEST_CASE("laplacian examples") {
  auto g = make_grid(1, 64, 8.0);
  Field c(g->size(), cplx(2.5, -1.0));
  for (const auto& v : laplacian(*g, c)) CHECK(std::abs(v) < 1e-13);

  const double k0 = 5 * M_PI / 8.0;
  auto wave = sample(*g, [&](const std::array<double, 3>& x) { return std::polar(1.0, k0 * x[0]); });
  auto lw = laplacian(*g, wave);
  for (std::size_t i = 0; i < wave.size(); ++i) CHECK(std::abs(lw[i] + k0 * k0 * wave[i]) < 1e-12);

  auto g2 = make_grid(1, 256, 16.0);
  auto gauss = sample(*g2, [](const std::array<double, 3>& x) { return cplx(std::exp(-x[0] * x[0]), 0); });
  auto lg = laplacian(*g2, gauss);
  double err = 0.0;
  for (int j = 0; j < g2->points(); ++j) {
    double x = g2->coordinate(j);
    err = std::max(err, std::abs(lg[j] - (4 * x * x - 2) * std::exp(-x * x)));
  }
  CHECK(err < 1e-10);

  Field bad = gauss;
  bad[3] = cplx(NAN, 0.0);
  CHECK_THROWS_AS(laplacian(*g2, bad), GridError);
}

TEST_CASE("integrate examples") {
  auto g = make_grid(1, 32, 8.0);
  CHECK(std::abs(integrate(*g, RealField(g->size(), 1.0)) - 16.0) < 1e-13);

  auto g1 = make_grid(1, 1024, 40.0);
  auto sech = sample(*g1, [](const std::array<double, 3>& x) {
    double s = 1.0 / std::cosh(x[0] / 2);
    return cplx(2.25 * std::pow(s, 4), 0);
  });
  CHECK(std::abs(integrate(*g1, sech).real() - 6.0) < 1e-10);

  auto g2 = make_grid(1, 256, 16.0);
  auto gauss = sample(*g2, [](const std::array<double, 3>& x) { return cplx(std::exp(-x[0] * x[0]), 0); });
  CHECK(std::abs(integrate(*g2, gauss).real() - std::sqrt(M_PI)) < 1e-12);
}

TEST_CASE("gradient_norm_sq examples") {
  auto g = make_grid(1, 64, 8.0);
  CHECK(gradient_norm_sq(*g, Field(g->size())) == 0.0);
  const double k0 = 3 * M_PI / 8.0;
  auto wave = sample(*g, [&](const std::array<double, 3>& x) { return std::polar(1.0, k0 * x[0]); });
  CHECK(std::abs(gradient_norm_sq(*g, wave) - k0 * k0 * 16.0) < 1e-11);

  // Oracle: quadrature of the closed-form derivative of (3/2)sech^2(x/2).
  auto g1 = make_grid(1, 1024, 40.0);
  auto w = sample(*g1, [](const std::array<double, 3>& x) {
    double s = 1.0 / std::cosh(x[0] / 2);
    return cplx(1.5 * s * s, 0);
  });
  RealField dw2(g1->size());
  for (int j = 0; j < g1->points(); ++j) {
    double x = g1->coordinate(j), s = 1.0 / std::cosh(x / 2);
    double d = -1.5 * s * s * std::tanh(x / 2);
    dw2[j] = d * d;
  }
  double oracle = integrate(*g1, dw2);
  CHECK(std::abs(gradient_norm_sq(*g1, w) - oracle) < 1e-10 * oracle);
  // Closed form: int |w'|^2 = 6/5.
  CHECK(std::abs(oracle - 1.2) < 1e-10);
}

TEST_CASE("properties on random fields") {
  std::mt19937_64 rng(7);
  for (int dim = 1; dim <= 3; ++dim) {
    auto g = make_grid(dim, dim == 3 ? 16 : 32, 5.0);
    for (int trial = 0; trial < 5; ++trial) {
      auto f = white_noise(*g, rng), h = white_noise(*g, rng);
      double a = norm_sq(*g, f);
      CHECK(std::abs(norm_sq_parseval(*g, f) - a) < 1e-12 * a);

      double kd = gradient_norm_sq(*g, f), kp = gradient_norm_sq_parseval(*g, f);
      CHECK(std::abs(kd - kp) < 1e-10 * kp);

      cplx ca(0.3, -1.2), cb(-2.0, 0.5);
      Field comb(f.size());
      for (std::size_t i = 0; i < f.size(); ++i) comb[i] = ca * f[i] + cb * h[i];
      auto lc = laplacian(*g, comb), lf = laplacian(*g, f), lh = laplacian(*g, h);
      double scale = 0.0, err = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        err = std::max(err, std::abs(lc[i] - ca * lf[i] - cb * lh[i]));
        scale = std::max(scale, std::abs(lc[i]));
      }
      CHECK(err < 1e-12 * scale);

      double fn = std::sqrt(a);
      CHECK(std::abs(integrate(*g, lf)) < 1e-10 * fn);
    }
  }
}
