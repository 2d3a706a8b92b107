#pragma once

#include <optional>
#include <string>

#include "nls3/model.hpp"

namespace nls3 {

// Positive solution of -Lap w + w = |w|^{p-2} w on the grid, centered at x = 0.
struct ScalarGroundState {
  GridPtr grid;
  Field field;
  double p = 3.0;
  double l2_norm_sq = 0.0;
  double kinetic = 0.0;
  double lp_norm = 0.0;  // ||w||_p^p
  double residual = 0.0;
  int iterations = 0;
};

struct ScalarSolveOptions {
  int max_iters = 5000;
  double change_tol = 1e-12;
  double residual_tol = 1e-8;
};

// Petviashvili iteration seeded with a unit-mass Gaussian.
ScalarGroundState solve_scalar_ground_state(GridPtr grid, double p,
                                            const ScalarSolveOptions& opt = {});

// ||-Lap w + w - |w|^{p-2} w||_2 / ||w||_2.
double scalar_residual(const SpectralGrid& g, const Field& w, double p);

// (p/2)^{1/(p-2)} sech^{2/(p-2)}((p-2)x/2), the 1D positive solution.
double soliton_1d(double p, double x);

// ||u||_p / (||grad u||^gamma ||u||^{1-gamma}).
double gn_quotient(const SpectralGrid& g, const Field& u, double p);
double gn_constant_of(const ScalarGroundState& w);
double gn_constant(GridPtr grid, double p);

// On-disk table of C(N,p), one "N p M L C" record per line.
class GnCache {
 public:
  explicit GnCache(std::string path) : path_(std::move(path)) {}
  std::optional<double> lookup(int dim, double p, int points, double half_length) const;
  // Rewrites the file atomically (temporary file, then rename).
  void store(int dim, double p, int points, double half_length, double value) const;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// C(N,p) through the cache when one is given.
double gn_constant_cached(GridPtr grid, double p, const GnCache* cache);
GnConstants gn_constants(GridPtr grid, double p, const GnCache* cache = nullptr);

// m(c) = J(u_c) with u_c = lambda^{1/(p-2)} w_p(lambda^{1/2} x) and ||u_c||_2 = c.
double scalar_level_m(const ScalarGroundState& wp, int dim, double c);
double scalar_level_m(GridPtr grid, double p, double c);

// Closed form of m0(a) given ||w||_2^2 of the p = 3 solution.
double scalar_level_m0_closed(int dim, double alpha, double a, double w_norm_sq);
double scalar_level_m0(GridPtr grid, double alpha, double a);

}  // namespace nls3
