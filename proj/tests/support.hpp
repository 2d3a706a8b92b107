#pragma once

#include <cmath>
#include <random>

#include "nls3/model.hpp"

namespace nls3::testing {

inline Field white_noise(const SpectralGrid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Field f(g.size());
  for (auto& v : f) v = cplx(n(rng), n(rng));
  return f;
}

// Sum of a few complex Gaussian bumps near the box center.
inline Field random_bumps(const SpectralGrid& g, std::mt19937_64& rng, double width = 1.0,
                          double spread = 1.5, bool positive = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f(g.size(), cplx(0.0, 0.0));
  for (int b = 0; b < 3; ++b) {
    std::array<double, 3> c{spread * u(rng), spread * u(rng), spread * u(rng)};
    double w = width * (1.0 + 0.5 * u(rng));
    cplx amp = positive ? cplx(1.0 + 0.5 * u(rng), 0.0) : cplx(u(rng), u(rng));
    auto bump = sample(g, [&](const std::array<double, 3>& x) {
      double r2 = 0.0;
      for (int a = 0; a < g.dim(); ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
      return amp * std::exp(-r2 / (w * w));
    });
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += bump[i];
  }
  return f;
}

inline FieldTriple random_triple(GridPtr grid, std::mt19937_64& rng, double width = 1.0,
                                 double spread = 1.5, bool positive = false) {
  FieldTriple u(grid);
  for (int i = 0; i < 3; ++i) u[i] = random_bumps(*grid, rng, width, spread, positive);
  return u;
}

inline double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace nls3::testing
