#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "nls3/errors.hpp"

namespace nls3 {

using cplx = std::complex<double>;
using Field = std::vector<cplx>;
using RealField = std::vector<double>;

// Periodic box [-L, L)^dim sampled with M points per axis. Axis 0 is the
// slowest index. x_j = -L + j*dx, so the box center x = 0 sits on j = M/2.
class SpectralGrid {
 public:
  SpectralGrid(int dim, int points, double half_length);
  ~SpectralGrid();
  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  int dim() const { return dim_; }
  int points() const { return points_; }
  double half_length() const { return half_length_; }
  double spacing() const { return spacing_; }
  double cell_volume() const { return cell_volume_; }
  std::size_t size() const { return size_; }

  // k_j = pi j / L in FFT order (0, 1, ..., M/2-1, -M/2, ..., -1).
  const std::vector<double>& wavenumbers() const { return k_; }
  // |k|^2 at every flat index.
  const RealField& k_squared() const { return k2_; }
  double coordinate(int j) const { return -half_length_ + j * spacing_; }
  // Per-axis multi-index of a flat index.
  std::array<int, 3> unflatten(std::size_t flat) const;
  double radius(std::size_t flat) const;

  bool same_as(const SpectralGrid& other) const;

  // Unnormalized forward transform and normalized inverse, in place.
  void forward(Field& f) const;
  void inverse(Field& f) const;

 private:
  int dim_;
  int points_;
  double half_length_;
  double spacing_;
  double cell_volume_;
  std::size_t size_;
  std::vector<double> k_;
  RealField k2_;
  void* plan_fwd_ = nullptr;
  void* plan_bwd_ = nullptr;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

GridPtr make_grid(int dim, int points, double half_length);

// Field sampled from a function of position.
template <class F>
Field sample(const SpectralGrid& g, F&& fn) {
  Field out(g.size());
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto idx = g.unflatten(i);
    for (int a = 0; a < g.dim(); ++a) x[a] = g.coordinate(idx[a]);
    out[i] = fn(x);
  }
  return out;
}

void require_finite(const Field& f, const char* what);

Field laplacian(const SpectralGrid& g, const Field& f);
// Spectral derivative along one axis.
Field derivative(const SpectralGrid& g, const Field& f, int axis);

double integrate(const SpectralGrid& g, const RealField& f);
cplx integrate(const SpectralGrid& g, const Field& f);

double norm_sq(const SpectralGrid& g, const Field& f);
double lp_norm_p(const SpectralGrid& g, const Field& f, double p);
// Re <f, h> = Re integral of conj(f) h.
double inner(const SpectralGrid& g, const Field& f, const Field& h);

// Sum over axes of integrate(|d_axis f|^2), physical-space route.
double gradient_norm_sq(const SpectralGrid& g, const Field& f);
// Same quantity from |k|^2 |f_hat|^2 (Parseval route).
double gradient_norm_sq_parseval(const SpectralGrid& g, const Field& f);
// integrate(|f|^2) computed in wavenumber space.
double norm_sq_parseval(const SpectralGrid& g, const Field& f);

}  // namespace nls3
