#include "nls3/scalar.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace nls3 {

double scalar_residual(const SpectralGrid& g, const Field& w, double p) {
  Field r = laplacian(g, w);
  for (std::size_t i = 0; i < w.size(); ++i)
    r[i] = -r[i] + w[i] - std::pow(std::abs(w[i]), p - 2.0) * w[i];
  return std::sqrt(norm_sq(g, r) / norm_sq(g, w));
}

ScalarGroundState solve_scalar_ground_state(GridPtr grid, double p, const ScalarSolveOptions& opt) {
  const SpectralGrid& g = *grid;
  const int N = g.dim();
  if (!(p > 2.0) || (N == 3 && p >= 6.0))
    throw ModelError("scalar ground state needs 2 < p < 2^*");
  const double gamma = (p - 1.0) / (p - 2.0);

  Field w = sample(g, [](const std::array<double, 3>& x) {
    return cplx(std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])), 0.0);
  });
  double m0 = norm_sq(g, w);
  for (auto& v : w) v /= std::sqrt(m0);

  const auto& k2 = g.k_squared();
  Field wh(g.size()), nh(g.size());
  double change = 1.0, res = 1.0;
  int it = 0;
  for (; it < opt.max_iters; ++it) {
    wh = w;
    g.forward(wh);
    for (std::size_t i = 0; i < w.size(); ++i)
      nh[i] = std::pow(std::abs(w[i].real()), p - 2.0) * w[i].real();
    g.forward(nh);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      num += (1.0 + k2[i]) * std::norm(wh[i]);
      den += (std::conj(wh[i]) * nh[i]).real();
    }
    if (!(den > 0.0)) throw ConvergenceError("scalar ground state: iteration collapsed");
    const double factor = std::pow(num / den, gamma);
    for (std::size_t i = 0; i < w.size(); ++i) nh[i] *= factor / (1.0 + k2[i]);
    g.inverse(nh);
    double diff = 0.0, base = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      double nv = nh[i].real();
      diff += (nv - w[i].real()) * (nv - w[i].real());
      base += w[i].real() * w[i].real();
      w[i] = cplx(nv, 0.0);
    }
    change = std::sqrt(diff / base);
    if (change < opt.change_tol) {
      res = scalar_residual(g, w, p);
      if (res < opt.residual_tol) break;
    }
  }
  if (it == opt.max_iters) {
    res = scalar_residual(g, w, p);
    std::ostringstream os;
    os << "scalar ground state (p = " << p << ") did not converge in " << opt.max_iters
       << " iterations: last change " << change << ", residual " << res;
    throw ConvergenceError(os.str());
  }

  ScalarGroundState s;
  s.grid = grid;
  s.field = std::move(w);
  s.p = p;
  s.l2_norm_sq = norm_sq(g, s.field);
  s.kinetic = gradient_norm_sq_parseval(g, s.field);
  s.lp_norm = lp_norm_p(g, s.field, p);
  s.residual = res;
  s.iterations = it + 1;
  return s;
}

double soliton_1d(double p, double x) {
  double q = p - 2.0;
  return std::pow(p / 2.0, 1.0 / q) * std::pow(1.0 / std::cosh(q * x / 2.0), 2.0 / q);
}

double gn_quotient(const SpectralGrid& g, const Field& u, double p) {
  const double gam = g.dim() * (p - 2.0) / (2.0 * p);
  double lp = std::pow(lp_norm_p(g, u, p), 1.0 / p);
  double k = std::sqrt(gradient_norm_sq_parseval(g, u));
  double l2 = std::sqrt(norm_sq(g, u));
  return lp / (std::pow(k, gam) * std::pow(l2, 1.0 - gam));
}

double gn_constant_of(const ScalarGroundState& w) { return gn_quotient(*w.grid, w.field, w.p); }

double gn_constant(GridPtr grid, double p) {
  return gn_constant_of(solve_scalar_ground_state(grid, p));
}

namespace {

struct CacheRecord {
  int dim;
  double p;
  int points;
  double half_length;
  double value;
};

std::vector<CacheRecord> read_records(const std::string& path) {
  std::vector<CacheRecord> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    CacheRecord r;
    if (ls >> r.dim >> r.p >> r.points >> r.half_length >> r.value) out.push_back(r);
  }
  return out;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::optional<double> GnCache::lookup(int dim, double p, int points, double half_length) const {
  for (const auto& r : read_records(path_))
    if (r.dim == dim && r.p == p && r.points == points && r.half_length == half_length)
      return r.value;
  return std::nullopt;
}

void GnCache::store(int dim, double p, int points, double half_length, double value) const {
  auto recs = read_records(path_);
  bool replaced = false;
  for (auto& r : recs) {
    if (r.dim == dim && r.p == p && r.points == points && r.half_length == half_length) {
      r.value = value;
      replaced = true;
    }
  }
  if (!replaced) recs.push_back({dim, p, points, half_length, value});
  std::filesystem::path target(path_);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  std::string tmp = path_ + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write constant cache " + tmp);
    for (const auto& r : recs)
      out << r.dim << ' ' << fmt17(r.p) << ' ' << r.points << ' ' << fmt17(r.half_length) << ' '
          << fmt17(r.value) << '\n';
    if (!out) throw IoError("write failed for constant cache " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename constant cache into place: " + ec.message());
}

double gn_constant_cached(GridPtr grid, double p, const GnCache* cache) {
  const auto& g = *grid;
  if (cache) {
    if (auto v = cache->lookup(g.dim(), p, g.points(), g.half_length())) return *v;
  }
  double c = gn_constant(grid, p);
  if (cache) cache->store(g.dim(), p, g.points(), g.half_length(), c);
  return c;
}

GnConstants gn_constants(GridPtr grid, double p, const GnCache* cache) {
  GnConstants gn;
  gn.cp = gn_constant_cached(grid, p, cache);
  gn.c3 = p == 3.0 ? gn.cp : gn_constant_cached(grid, 3.0, cache);
  return gn;
}

double scalar_level_m(const ScalarGroundState& wp, int dim, double c) {
  const double p = wp.p, N = dim;
  if (!(c > 0.0)) throw ModelError("scalar_level_m: c must be positive");
  // ||u_c||_2^2 = lambda^e ||w_p||_2^2 with e = 2/(p-2) - N/2, which vanishes at p = 2_*.
  const double e = 2.0 / (p - 2.0) - 0.5 * N;
  if (std::abs(e) < 1e-12)
    throw ModelError("scalar_level_m: no admissible rescaling at p = 2_*");
  const double lambda = std::pow(c * c / wp.l2_norm_sq, 1.0 / e);
  const double ek = 2.0 / (p - 2.0) + 1.0 - 0.5 * N;
  return 0.5 * std::pow(lambda, ek) * wp.kinetic - std::pow(lambda, ek) * wp.lp_norm / p;
}

double scalar_level_m(GridPtr grid, double p, double c) {
  return scalar_level_m(solve_scalar_ground_state(grid, p), grid->dim(), c);
}

double scalar_level_m0_closed(int dim, double alpha, double a, double w_norm_sq) {
  const double N = dim;
  return -((4.0 - N) / (2.0 * (6.0 - N))) * std::pow(alpha * alpha / w_norm_sq, 2.0 / (4.0 - N)) *
         std::pow(a, 2.0 * (6.0 - N) / (4.0 - N));
}

double scalar_level_m0(GridPtr grid, double alpha, double a) {
  if (!(a > 0.0) || !(alpha > 0.0)) throw ModelError("scalar_level_m0: a and alpha must be positive");
  auto w = solve_scalar_ground_state(grid, 3.0);
  return scalar_level_m0_closed(grid->dim(), alpha, a, w.l2_norm_sq);
}

}  // namespace nls3
