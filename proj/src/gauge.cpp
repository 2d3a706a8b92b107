#include <cmath>

#include "nls3/experiments.hpp"

namespace nls3 {

namespace {

constexpr double kTwoPi = 6.283185307179586;

double wrap(double t) {
  t = std::fmod(t, kTwoPi);
  return t < 0.0 ? t + kTwoPi : t;
}

// Maximizer of f on [lo, hi], assumed unimodal there.
template <class F>
double golden_max(F&& f, double lo, double hi) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

cplx h1_inner(const SpectralGrid& g, const Field& a, const Field& b) {
  if (a.size() != g.size() || b.size() != g.size())
    throw GridError("h1_inner: field size does not match the grid");
  Field fa = a, fb = b;
  g.forward(fa);
  g.forward(fb);
  const RealField& k2 = g.k_squared();
  cplx sum(0.0, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) sum += (1.0 + k2[i]) * std::conj(fa[i]) * fb[i];
  return sum * (g.cell_volume() / static_cast<double>(g.size()));
}

double h1_norm_sq(const FieldTriple& u) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += h1_inner(u.g(), u[c], u[c]).real();
  return s;
}

double h1_distance(const FieldTriple& u, const FieldTriple& v) {
  require_same_grid(u, v);
  FieldTriple d(u.grid);
  for (int c = 0; c < 3; ++c) {
    d[c] = u[c];
    for (std::size_t i = 0; i < d[c].size(); ++i) d[c][i] -= v[c][i];
  }
  return std::sqrt(std::max(0.0, h1_norm_sq(d)));
}

GaugeFit gauge_distance(const FieldTriple& u, const FieldTriple& ref) {
  require_same_grid(u, ref);
  cplx A[3];
  for (int c = 0; c < 3; ++c) A[c] = h1_inner(u.g(), ref[c], u[c]);
  auto overlap = [&](double t1, double t2) {
    return (std::polar(1.0, t1) * A[0] + std::polar(1.0, t2) * A[1] +
            std::polar(1.0, t1 + t2) * A[2])
        .real();
  };
  constexpr int kScan = 64;
  const double h = kTwoPi / kScan;
  double best = -INFINITY, t1 = 0.0, t2 = 0.0;
  for (int i = 0; i < kScan; ++i)
    for (int j = 0; j < kScan; ++j) {
      double v = overlap(i * h, j * h);
      if (v > best) {
        best = v;
        t1 = i * h;
        t2 = j * h;
      }
    }
  for (int sweep = 0; sweep < 60; ++sweep) {
    const double o1 = t1, o2 = t2;
    t1 = golden_max([&](double t) { return overlap(t, t2); }, t1 - h, t1 + h);
    t2 = golden_max([&](double t) { return overlap(t1, t); }, t2 - h, t2 + h);
    if (std::abs(t1 - o1) + std::abs(t2 - o2) < 1e-13) break;
  }
  // Golden section stalls at |dtheta| ~ sqrt(eps); Newton on the trigonometric overlap
  // finishes the job.
  for (int it = 0; it < 4; ++it) {
    const cplx e1 = std::polar(1.0, t1), e2 = std::polar(1.0, t2), e12 = e1 * e2;
    const cplx a = e1 * A[0] + e12 * A[2], b = e2 * A[1] + e12 * A[2], c = e12 * A[2];
    const double g1 = -a.imag(), g2 = -b.imag();
    const double h11 = -a.real(), h22 = -b.real(), h12 = -c.real();
    const double det = h11 * h22 - h12 * h12;
    if (!(h11 < 0.0) || !(det > 0.0)) break;
    t1 -= (h22 * g1 - h12 * g2) / det;
    t2 -= (h11 * g2 - h12 * g1) / det;
  }
  GaugeFit fit;
  fit.theta1 = wrap(t1);
  fit.theta2 = wrap(t2);
  fit.distance = h1_distance(gauge(u, fit.theta1, fit.theta2), ref);
  return fit;
}

double phase_distance(const SpectralGrid& g, const Field& u, const Field& ref) {
  const cplx A = h1_inner(g, ref, u);
  const cplx rot = std::abs(A) > 0.0 ? std::conj(A) / std::abs(A) : cplx(1.0, 0.0);
  Field d(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) d[i] = rot * u[i] - ref[i];
  return std::sqrt(std::max(0.0, h1_inner(g, d, d).real()));
}

}  // namespace nls3
