#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nls3/model.hpp"

namespace nls3 {

enum class StationaryKind { ground, excited, limit_system };

const char* kind_name(StationaryKind k);

struct SolverConfig {
  double step_size = 1.0;
  int max_iters = 20000;
  double grad_tol = 1e-9;
  double mass_tol = 1e-10;
  std::uint64_t seed = 1;
  // Gaussian width of the initial triple; 0 picks one from the small-mass scaling.
  double init_width = 0.0;
  // Initial guess (e.g. a neighbouring solution for continuation); overrides init_width.
  std::optional<FieldTriple> initial;
};

struct StationaryResult {
  FieldTriple fields;
  // lambda3 = lambda1 + lambda2. For the limit system these hold omega1, omega2.
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double level = 0.0;
  Diagnostics diagnostics;
  // L2 norm of the constrained gradient.
  double residual = 0.0;
  StationaryKind kind = StationaryKind::ground;
  int iterations = 0;
  // max |u| on the outermost cells over max |u|.
  double boundary_ratio = 0.0;
  // Set when a post-condition check flags the result (e.g. a suspected semi-trivial state).
  std::string warning;
  // Objective value after each accepted descent step (E, E0, or the reduced functional).
  std::vector<double> value_history;
};

struct ProjectionFactors {
  double c1 = 1.0, c2 = 1.0, c3 = 1.0;
};

// Scalars (c1, c2, c3) with c3 = sqrt(c1 c2) that put (c1 u1, c2 u2, c3 u3) on S(a1,a2).
ProjectionFactors projection_factors(const FieldTriple& u, double a1, double a2);
FieldTriple project_masses(const FieldTriple& u, double a1, double a2);

struct ConstrainedGradient {
  // E'(u) + (lambda1 u1, lambda2 u2, (lambda1+lambda2) u3), L2-orthogonal to the
  // constraint gradients (u1, 0, u3) and (0, u2, u3).
  FieldTriple g;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double norm = 0.0;
};

ConstrainedGradient constrained_gradient(const ModelParams& m, const FieldTriple& u);
ConstrainedGradient constrained_limit_gradient(const FieldTriple& u);

// Phases fixed so that u1 and u2 are real and positive where |u1|, |u2| peak.
FieldTriple fix_gauge(const FieldTriple& u);

// Sum ||grad u_i||^2 + Sum lambda_i ||u_i||^2 - Sum ||u_i||_p^p - 3 alpha Re int u1 u2 conj(u3).
double multiplier_identity_defect(const ModelParams& m, const StationaryResult& r);

// Ground state in V(a1,a2). Requires max(a1,a2) below D (p > 2_*) or below the
// mass-critical threshold (p = 2_*).
StationaryResult solve_ground_state(const ModelParams& m, GridPtr grid, const GnConstants& gn,
                                    const SolverConfig& cfg);

// Minimizer of E0 on S(a1,a2).
StationaryResult solve_limit_system(GridPtr grid, double a1, double a2, const SolverConfig& cfg);

// (s_u, sigma_u): the local minimum and the local maximum of the fiber map.
std::pair<double, double> fiber_critical_points(const ModelParams& m, const FieldTriple& u);

// Mountain-pass state on P-minus by descent of u -> E(sigma_u * u).
StationaryResult solve_excited_state(const ModelParams& m, GridPtr grid, const GnConstants& gn,
                                     const SolverConfig& cfg);

}  // namespace nls3
