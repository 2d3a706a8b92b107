#include "nls3/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace nls3 {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Field& f) { return reinterpret_cast<fftw_complex*>(f.data()); }

}  // namespace

SpectralGrid::SpectralGrid(int dim, int points, double half_length)
    : dim_(dim), points_(points), half_length_(half_length) {
  if (dim < 1 || dim > 3) throw GridError("grid: dim must be 1, 2 or 3");
  if (points < 8 || points % 2 != 0) throw GridError("grid: points must be even and >= 8");
  if (!(half_length > 0.0) || !std::isfinite(half_length))
    throw GridError("grid: box_half_length must be positive");
  spacing_ = 2.0 * half_length / points;
  cell_volume_ = std::pow(spacing_, dim);
  size_ = 1;
  for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(points);

  k_.resize(points);
  for (int j = 0; j < points; ++j) {
    int m = j < points / 2 ? j : j - points;
    k_[j] = M_PI * m / half_length;
  }
  k2_.resize(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    auto idx = unflatten(i);
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += k_[idx[a]] * k_[idx[a]];
    k2_[i] = s;
  }

  int n[3] = {points, points, points};
  Field scratch(size_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plan_fwd_ = fftw_plan_dft(dim, n, as_fftw(scratch), as_fftw(scratch), FFTW_FORWARD, flags);
  plan_bwd_ = fftw_plan_dft(dim, n, as_fftw(scratch), as_fftw(scratch), FFTW_BACKWARD, flags);
  if (!plan_fwd_ || !plan_bwd_) throw GridError("grid: FFT planning failed");
}

SpectralGrid::~SpectralGrid() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

std::array<int, 3> SpectralGrid::unflatten(std::size_t flat) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % points_);
    flat /= points_;
  }
  return idx;
}

double SpectralGrid::radius(std::size_t flat) const {
  auto idx = unflatten(flat);
  double s = 0.0;
  for (int a = 0; a < dim_; ++a) {
    double x = coordinate(idx[a]);
    s += x * x;
  }
  return std::sqrt(s);
}

bool SpectralGrid::same_as(const SpectralGrid& o) const {
  return this == &o ||
         (dim_ == o.dim_ && points_ == o.points_ && half_length_ == o.half_length_);
}

void SpectralGrid::forward(Field& f) const {
  if (f.size() != size_) throw GridError("grid: field size does not match grid");
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), as_fftw(f), as_fftw(f));
}

void SpectralGrid::inverse(Field& f) const {
  if (f.size() != size_) throw GridError("grid: field size does not match grid");
  fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_), as_fftw(f), as_fftw(f));
  double s = 1.0 / static_cast<double>(size_);
  for (auto& v : f) v *= s;
}

GridPtr make_grid(int dim, int points, double half_length) {
  return std::make_shared<const SpectralGrid>(dim, points, half_length);
}

void require_finite(const Field& f, const char* what) {
  for (const auto& v : f)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw GridError(std::string(what) + ": non-finite value in input field");
}

Field laplacian(const SpectralGrid& g, const Field& f) {
  require_finite(f, "laplacian");
  Field h = f;
  g.forward(h);
  const auto& k2 = g.k_squared();
  for (std::size_t i = 0; i < h.size(); ++i) h[i] *= -k2[i];
  g.inverse(h);
  return h;
}

Field derivative(const SpectralGrid& g, const Field& f, int axis) {
  if (axis < 0 || axis >= g.dim()) throw GridError("derivative: bad axis");
  Field h = f;
  g.forward(h);
  const auto& k = g.wavenumbers();
  std::size_t stride = 1;
  for (int a = g.dim() - 1; a > axis; --a) stride *= g.points();
  const std::size_t m = g.points();
  for (std::size_t i = 0; i < h.size(); ++i) h[i] *= cplx(0.0, k[(i / stride) % m]);
  g.inverse(h);
  return h;
}

double integrate(const SpectralGrid& g, const RealField& f) {
  if (f.size() != g.size()) throw GridError("integrate: field size does not match grid");
  double s = 0.0;
  for (double v : f) s += v;
  return s * g.cell_volume();
}

cplx integrate(const SpectralGrid& g, const Field& f) {
  if (f.size() != g.size()) throw GridError("integrate: field size does not match grid");
  cplx s = 0.0;
  for (const auto& v : f) s += v;
  return s * g.cell_volume();
}

double norm_sq(const SpectralGrid& g, const Field& f) {
  double s = 0.0;
  for (const auto& v : f) s += std::norm(v);
  return s * g.cell_volume();
}

double lp_norm_p(const SpectralGrid& g, const Field& f, double p) {
  double s = 0.0;
  for (const auto& v : f) s += std::pow(std::abs(v), p);
  return s * g.cell_volume();
}

double inner(const SpectralGrid& g, const Field& f, const Field& h) {
  if (f.size() != h.size()) throw GridError("inner: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    s += f[i].real() * h[i].real() + f[i].imag() * h[i].imag();
  return s * g.cell_volume();
}

double gradient_norm_sq(const SpectralGrid& g, const Field& f) {
  require_finite(f, "gradient_norm_sq");
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a) s += norm_sq(g, derivative(g, f, a));
  return s;
}

double gradient_norm_sq_parseval(const SpectralGrid& g, const Field& f) {
  Field h = f;
  g.forward(h);
  const auto& k2 = g.k_squared();
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) s += k2[i] * std::norm(h[i]);
  return s * g.cell_volume() / static_cast<double>(g.size());
}

double norm_sq_parseval(const SpectralGrid& g, const Field& f) {
  Field h = f;
  g.forward(h);
  double s = 0.0;
  for (const auto& v : h) s += std::norm(v);
  return s * g.cell_volume() / static_cast<double>(g.size());
}

}  // namespace nls3
