#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nls3/dynamics.hpp"
#include "nls3/groundstate.hpp"
#include "nls3/io.hpp"
#include "nls3/scalar.hpp"

namespace nls3 {

// Re/Im of int conj(a) b + grad conj(a) . grad b, from the Fourier side.
cplx h1_inner(const SpectralGrid& g, const Field& a, const Field& b);
double h1_norm_sq(const FieldTriple& u);
double h1_distance(const FieldTriple& u, const FieldTriple& v);

struct GaugeFit {
  double distance = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
};

// inf over (theta1, theta2) of ||gauge(u, theta1, theta2) - ref||_{H1}: coarse scan of
// the torus, then alternating golden-section refinement.
GaugeFit gauge_distance(const FieldTriple& u, const FieldTriple& ref);
// inf over theta of ||e^{i theta} u - ref||_{H1}; closed form.
double phase_distance(const SpectralGrid& g, const Field& u, const Field& ref);

struct ExperimentSetup {
  ModelParams params;
  GridPtr grid;
  GnConstants gn;
  SolverConfig solver;
  double dt = 1e-3;
  int sample_every = 10;
  std::uint64_t seed = 1;
  // Echoed into every report.
  std::vector<std::pair<std::string, std::string>> inputs;
  // History CSVs go here when set.
  std::string output_dir;
};

// Validates cfg, builds the grid, computes (or looks up) the GN constants and resolves "xD" masses.
ExperimentSetup make_setup(const RunConfig& cfg, const GnCache* cache = nullptr);

// Largest kinetic energy compatible with E(psi) = energy and P(psi) >= 0 on S(a1,a2),
// from E - P/(p gamma_p) and the GN bound on the interaction. +inf at p = 2_*.
double global_kinetic_bound(const ModelParams& m, const GnConstants& gn, double energy);

enum class StabilityReference { ground, excited };

struct StabilityOptions {
  StabilityReference reference = StabilityReference::ground;
  // H1 size of the random perturbation (ground) ; ignored when dilation != 1.
  double epsilon = 1e-2;
  // Initial datum s * v instead of a random perturbation.
  double dilation = 1.0;
  double horizon = 10.0;
  double bound_factor = 10.0;
  // Floor for the pass threshold so that epsilon = 0 tests integrator error.
  double absolute_floor = 1e-6;
};

ExperimentReport run_stability(const ExperimentSetup& setup, const StabilityOptions& opt);

struct DichotomyOptions {
  std::vector<double> dilations{0.9, 1.0, 1.1};
  double horizon = 20.0;
  BlowupThresholds thresholds;
  // Runs with s > 1 use dt / collapse_refine, since the collapse happens on the time
  // scale 1/lambda1 of the concentrated component.
  int collapse_refine = 10;
};

ExperimentReport run_dichotomy(const ExperimentSetup& setup, const DichotomyOptions& opt);

// kappa = (alpha a / (sqrt 2 ||w||))^{4/(4-N)}.
double collapse_kappa(int dim, double alpha, double a, double w_norm_sq);
// a_fractions are multiples of D (or of the coercivity threshold at p = 2_*).
ExperimentReport run_mass_collapse(const ExperimentSetup& setup,
                                   const std::vector<double>& a_fractions);

ExperimentReport run_alpha_limits(const ExperimentSetup& setup, const std::vector<double>& alphas);

// kappa~ = (a1^2 / ||w_p||^2)^{(p-2)/(2 - p gamma_p)}.
double semitrivial_kappa(int dim, double p, double a1, double wp_norm_sq);
// a2_fractions are multiples of a1, in the order visited.
ExperimentReport run_semitrivial_limit(const ExperimentSetup& setup,
                                       const std::vector<double>& a2_fractions);

// Least-squares slope of log|y| against log x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);
// Number of k with values[k+1] >= values[k].
int monotone_violations(const std::vector<double>& values);

}  // namespace nls3
