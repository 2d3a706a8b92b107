#include <cmath>
#include <string>

#include "nls3/model.hpp"

namespace nls3 {

namespace {

// Periodic sinc for even M: the trigonometric interpolant through a unit sample,
// with the Nyquist mode carried as a cosine so that real data stays real.
double periodic_sinc(double xi, int M) {
  double eta = xi - M * std::round(xi / M);
  if (std::abs(eta) < 1e-12) return 1.0;
  return std::sin(M_PI * eta) / (M * std::tan(M_PI * eta / M));
}

std::vector<double> resample_matrix(const SpectralGrid& g, double s) {
  const int M = g.points();
  std::vector<double> T(static_cast<std::size_t>(M) * M);
  for (int j = 0; j < M; ++j) {
    double y = s * g.coordinate(j);
    // Outside the box the field is taken to be zero, not its periodic image.
    if (std::abs(y) > g.half_length()) continue;
    for (int m = 0; m < M; ++m) T[j * M + m] = periodic_sinc((y - g.coordinate(m)) / g.spacing(), M);
  }
  return T;
}

void apply_along_axis(const SpectralGrid& g, const std::vector<double>& T, Field& f, int axis) {
  const std::size_t M = g.points();
  std::size_t stride = 1;
  for (int a = g.dim() - 1; a > axis; --a) stride *= M;
  const std::size_t block = stride * M;
  Field line(M), out(M);
  for (std::size_t base = 0; base < f.size(); base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      for (std::size_t m = 0; m < M; ++m) line[m] = f[base + off + m * stride];
      for (std::size_t j = 0; j < M; ++j) {
        const double* row = &T[j * M];
        double re = 0.0, im = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
          re += row[m] * line[m].real();
          im += row[m] * line[m].imag();
        }
        out[j] = cplx(re, im);
      }
      for (std::size_t j = 0; j < M; ++j) f[base + off + j * stride] = out[j];
    }
  }
}

}  // namespace

FieldTriple dilate(double s, const FieldTriple& u, double mass_tol) {
  if (!(s > 0.0) || !std::isfinite(s)) throw ModelError("dilate: s must be positive");
  if (s == 1.0) return u;
  const SpectralGrid& g = u.g();
  auto T = resample_matrix(g, s);
  const double amp = std::pow(s, 0.5 * g.dim());
  FieldTriple v = u;
  for (int i = 0; i < 3; ++i) {
    for (int a = 0; a < g.dim(); ++a) apply_along_axis(g, T, v[i], a);
    for (auto& x : v[i]) x *= amp;
  }
  auto [q1, q2] = masses(u);
  auto [r1, r2] = masses(v);
  double e1 = q1 > 0 ? std::abs(r1 - q1) / q1 : std::abs(r1);
  double e2 = q2 > 0 ? std::abs(r2 - q2) / q2 : std::abs(r2);
  if (e1 > mass_tol || e2 > mass_tol)
    throw ModelError("dilate: s = " + std::to_string(s) + " changes the masses by " +
                     std::to_string(std::max(e1, e2)) + " (aliasing or support leaving the box)");
  return v;
}

}  // namespace nls3
