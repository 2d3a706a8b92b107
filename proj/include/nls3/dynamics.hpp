#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>

#include "nls3/model.hpp"

namespace nls3 {

// Which right-hand side terms take part in the flow. Switching both off leaves
// the free Schrodinger evolution.
struct FlowTerms {
  bool power = true;
  bool coupling = true;
};

struct HistorySample {
  double t = 0.0;
  double energy = 0.0;
  double mass1 = 0.0;
  double mass2 = 0.0;
  double pohozaev = 0.0;
  double kinetic = 0.0;
  double virial = 0.0;
  double virial_prime = 0.0;
  double virial_second = 0.0;
};

struct EvolutionState {
  double time = 0.0;
  FieldTriple fields;
  double dt = 1e-3;
  std::int64_t steps = 0;
  // Oldest samples are dropped once history_capacity is reached (0 keeps everything).
  std::deque<HistorySample> history;
  std::size_t history_capacity = 0;
};

enum class VirialMode { quadratic, localized };

// phi and its derivatives sampled on the grid. The Hessian is stored for every
// (j, k) pair so the I'' integrand needs no symmetry bookkeeping.
struct VirialWeights {
  VirialMode mode = VirialMode::quadratic;
  double R = 0.0;
  RealField phi;
  std::array<RealField, 3> grad;
  std::array<std::array<RealField, 3>, 3> hess;
  RealField lap;
  RealField bilap;
};

// Cutoff profile: r^2 on [0,1], constant 20/9 beyond 2, C^5 with chi'' <= 2.
// Returns (chi, chi', chi'', chi''', chi'''').
std::array<double, 5> cutoff_profile(double r);

VirialWeights quadratic_weights(GridPtr grid);
// phi_R(x) = R^2 chi(|x|/R). Requires 2R <= L so phi_R is flat before the wrap.
VirialWeights localized_weights(GridPtr grid, double R);

// The coupling moves density between components (only Q1 and Q2 are
// conserved), so I' and I'' carry the exchange term
// X = 2 alpha int phi Im(psi1 psi2 conj(psi3)) and its time derivative on top of
// the flux formulas.
struct VirialValues {
  double I = 0.0;
  // Flux part 2 Im int grad phi . conj(psi) grad psi, plus exchange.
  double I_prime = 0.0;
  // Full second derivative: I_second_flux + exchange_rate.
  double I_second = 0.0;
  // Hessian, bilaplacian, power and coupling terms; 8P for quadratic weights.
  double I_second_flux = 0.0;
  double exchange = 0.0;
  double exchange_rate = 0.0;
};

VirialValues virial(const ModelParams& m, const FieldTriple& u, const VirialWeights& w,
                    FlowTerms terms = {});

// One Strang step: exact half linear step, RK4 on the pointwise nonlinear
// system, exact half linear step. Non-finite values are left in place for the
// blow-up detector.
void step_strang(const ModelParams& m, EvolutionState& s, FlowTerms terms = {},
                 double dt_cap = 0.05);

// Evaluates the functionals on the current fields and appends a history sample.
Diagnostics diagnostics_now(const ModelParams& m, EvolutionState& s, const VirialWeights& w,
                            FlowTerms terms = {});

enum class BlowupVerdict { global_so_far, blowup_detected };

const char* verdict_name(BlowupVerdict v);

struct BlowupThresholds {
  double growth_factor = 1e3;
  // eta and the I'' bound are taken over samples with t <= eta_window.
  double eta_window = 1e300;
  // Enables the quadratic-virial convexity test.
  bool convexity_test = true;
};

struct BlowupReport {
  BlowupVerdict verdict = BlowupVerdict::global_so_far;
  std::string reason;
  // -max P over the window; <= 0 means no uniform negative bound was seen.
  double eta = 0.0;
  // Positive root of I(0) + I'(0) t + c t^2 / 2, with c < 0 the largest I''
  // sampled in the window; +inf when c >= 0.
  double convexity_time = 0.0;
};

// Flags blow-up on NaN, on kinetic growth by growth_factor, or (quadratic
// weights only) when the run has outlived the convexity bound on T_max.
BlowupReport detect_blowup(const EvolutionState& s, const BlowupThresholds& th,
                           VirialMode mode);

struct EvolveOptions {
  double horizon = 1.0;
  // A history sample is taken every sample_every steps and at the final time.
  int sample_every = 1;
  FlowTerms terms;
  BlowupThresholds thresholds;
  double dt_cap = 0.05;
  // Stop as soon as blow-up is detected.
  bool stop_on_blowup = true;
};

// Called after every sample; returning false stops the run.
using EvolveObserver = std::function<bool(const EvolutionState&)>;

// Evolves to options.horizon, sampling diagnostics. Starts with a sample at the
// current time when the history is empty.
BlowupReport evolve(const ModelParams& m, EvolutionState& s, const VirialWeights& w,
                    const EvolveOptions& opt, const EvolveObserver& observer = {});

// Largest deviation of |u(x)| from |u(g x)| over reflections and axis swaps
// about the box center, relative to max |u|.
double radial_asymmetry(const Field& f, const SpectralGrid& g);

struct TailBound {
  // Per component: int_{|x|>=R} |psi_i|^p and the radial-embedding bound.
  std::array<double, 3> measured{};
  std::array<double, 3> bound{};
  // max_i measured_i / bound_i, with 0/0 read as 0.
  double ratio = 0.0;
};

// (2/|S^{N-1}|) R^{-(N-1)} ||grad f|| ||f|| bounds sup_{|x|>=R} |f|^2 for radial f,
// hence int_{|x|>=R}|f|^p <= that^{(p-2)/2} ||f||^2.
double radial_tail_rhs(int dim, double p, double R, double grad_norm, double l2_norm);
// Throws ModelError when a component is not radial to 1e-6.
TailBound radial_tail_bound(const ModelParams& m, const EvolutionState& s, double R);

}  // namespace nls3
