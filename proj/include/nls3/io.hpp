#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nls3/dynamics.hpp"
#include "nls3/model.hpp"

namespace nls3 {

// A mass given either absolutely or as a multiple of D ("0.1D").
struct MassSpec {
  double value = 0.1;
  bool relative_to_D = false;
};

struct RunConfig {
  int dim = 1;
  int points = 512;
  double box_half_length = 40.0;
  double p = 6.0;
  double alpha = 1.0;
  MassSpec a1;
  MassSpec a2;
  double dt = 1e-3;
  double horizon = 1.0;
  std::uint64_t seed = 1;
  double solver_step_size = 1.0;
  double solver_grad_tol = 1e-9;
  int solver_max_iters = 20000;
  std::string experiment = "groundstate";
  std::string output_dir = "out";
  // Steps between field snapshots; 0 disables them.
  std::int64_t snapshot_every = 0;
  // Steps between history samples.
  int sample_every = 10;
  // Initial data for evolve: ground, excited, or gaussian.
  std::string initial = "ground";
  // s in s * u applied to the initial data.
  double dilation = 1.0;
  // Perturbation size for stability runs.
  double epsilon = 1e-2;
  // Dilation list for dichotomy runs.
  std::vector<double> dilations{0.9, 1.0, 1.1};
  // Parameter sequence for the limit experiments (fractions of D, of alpha, or of a1).
  std::vector<double> sequence;
};

struct ConfigKey {
  const char* name;
  const char* symbol;
  const char* meaning;
};

// Every accepted key with its physical meaning, in file order.
const std::vector<ConfigKey>& config_keys();

// Applies one "key = value" assignment. Throws ConfigError naming the key.
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
// Assignments in text are applied on top of base.
RunConfig parse_config(const std::string& text, RunConfig base = {});
// Throws IoError when the file cannot be read, ConfigError when it is malformed.
RunConfig load_config(const std::string& path, RunConfig base = {});
// Range checks that need no computation; physical keys go through ModelParams::validate.
void validate_config(const RunConfig& cfg);
// Canonical key/value echo; parsing it back yields the same configuration.
std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg);
std::string config_text(const RunConfig& cfg);

// Resolves "xD" masses against D. Needs the Gagliardo-Nirenberg constants only
// when a mass is relative or when the caller asks for the D check.
ModelParams resolve_params(const RunConfig& cfg, const GnConstants& gn);
// Ground-state runs need max(a1,a2) < D (p > 2_*) or below the coercivity threshold.
void require_ground_state_masses(const ModelParams& m, const GnConstants& gn);

constexpr std::uint32_t kSnapshotVersion = 1;
constexpr std::size_t kSnapshotHeaderBytes = 64;

struct Snapshot {
  ModelParams params;
  double time = 0.0;
  FieldTriple fields;
};

// Atomic: writes path.tmp and renames it.
void save_snapshot(const std::string& path, const ModelParams& m, const EvolutionState& s);
// Throws IoError on bad magic, version mismatch (unless allow_migration), or a
// truncated/oversized payload.
Snapshot load_snapshot(const std::string& path, bool allow_migration = false);

constexpr const char* kHistoryHeader = "t,E,Q1,Q2,P,kinetic,I,Iprime,Isecond";

std::string history_row(const HistorySample& h);
void write_history_csv(const std::string& path, const std::deque<HistorySample>& history);
std::vector<HistorySample> read_history_csv(const std::string& path);

struct Observation {
  std::string claim;
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string note;
};

struct ExperimentReport {
  std::string name;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<Observation> observations;
  std::vector<std::string> artifacts;
  // Set when a non-fatal anomaly was seen (e.g. a non-monotone sequence that
  // the protocol flags rather than fails).
  std::vector<std::string> flags;

  bool all_pass() const;
  void add(std::string claim, double measured, double threshold, bool pass,
           std::string note = {});
};

std::string report_json(const ExperimentReport& r);
ExperimentReport parse_report_json(const std::string& text);
void write_report(const std::string& path, const ExperimentReport& r);
ExperimentReport read_report(const std::string& path);
std::string report_text(const ExperimentReport& r);

std::string read_file(const std::string& path);
// Atomic text write (temporary file, then rename).
void write_file(const std::string& path, const std::string& content);
std::string format_double(double v);

}  // namespace nls3
