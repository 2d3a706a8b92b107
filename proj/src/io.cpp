#include "nls3/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace nls3 {

static_assert(std::endian::native == std::endian::little,
              "snapshot and CSV layouts assume a little-endian host");

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("config key '" + key + "': expected a finite number, got '" + v + "'");
  return out;
}

long long parse_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

[[noreturn]] void out_of_range(const std::string& key, const std::string& v, const char* rule) {
  throw ConfigError("config key '" + key + "' = " + v + " is out of range: " + rule);
}

MassSpec parse_mass(const std::string& key, const std::string& v) {
  MassSpec m;
  std::string body = v;
  if (!body.empty() && body.back() == 'D') {
    m.relative_to_D = true;
    body = trim(body.substr(0, body.size() - 1));
    if (!body.empty() && body.back() == '*') body = trim(body.substr(0, body.size() - 1));
  }
  m.value = parse_number(key, body);
  if (!(m.value > 0.0)) out_of_range(key, v, "masses must be positive");
  return m;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, trim(item)));
  if (out.empty()) out_of_range(key, v, "needs at least one value");
  for (double x : out)
    if (!(x > 0.0)) out_of_range(key, v, "entries must be positive");
  return out;
}

std::string mass_text(const MassSpec& m) {
  return format_double(m.value) + (m.relative_to_D ? "D" : "");
}

std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

const std::set<std::string>& experiment_names() {
  static const std::set<std::string> names{
      "gn-constant", "groundstate", "excited",  "limit-system", "fiber",       "evolve",
      "dichotomy",   "stability",   "mass-collapse", "alpha-limits", "semitrivial", "report"};
  return names;
}

template <class T>
void put(char* buf, std::size_t& off, T v) {
  std::memcpy(buf + off, &v, sizeof(T));
  off += sizeof(T);
}

template <class T>
T get(const char* buf, std::size_t& off) {
  T v;
  std::memcpy(&v, buf + off, sizeof(T));
  off += sizeof(T);
  return v;
}

void ensure_parent(const std::string& path) {
  fs::path parent = fs::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

void write_atomic(const std::string& path, const char* data, std::size_t n) {
  ensure_parent(path);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp + " for writing");
    f.write(data, static_cast<std::streamsize>(n));
    if (!f) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

double json_number(const nlohmann::ordered_json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys{
      {"dim", "N", "space dimension (1, 2 or 3)"},
      {"points", "M", "grid points per axis (even, >= 8)"},
      {"box_half_length", "L", "half width of the periodic box [-L, L)^N"},
      {"p", "p", "power nonlinearity exponent, 2_* <= p < 2^*"},
      {"alpha", "alpha", "three-wave coupling strength, > 0"},
      {"a1", "a1", "mass ||u1||^2 + ||u3||^2 = a1^2; suffix D for a multiple of D"},
      {"a2", "a2", "mass ||u2||^2 + ||u3||^2 = a2^2; suffix D for a multiple of D"},
      {"dt", "dt", "time step of the splitting scheme"},
      {"horizon", "T", "final time of an evolution"},
      {"seed", "-", "random seed for initial data and perturbations"},
      {"solver.step_size", "-", "initial trial step of the constrained descent"},
      {"solver.grad_tol", "-", "stop when the constrained gradient norm falls below this"},
      {"solver.max_iters", "-", "iteration cap of the constrained descent"},
      {"experiment", "-", "subcommand this file is meant for"},
      {"output_dir", "-", "directory receiving reports, CSV and snapshots"},
      {"snapshot_every", "-", "steps between field snapshots (0: none)"},
      {"sample_every", "-", "steps between history samples"},
      {"initial", "psi_0", "evolve initial data: ground, excited or gaussian"},
      {"dilation", "s", "L2-preserving dilation s * u applied to the initial data"},
      {"epsilon", "epsilon", "H1 size of the perturbation in stability runs"},
      {"dilations", "s", "comma list of dilations for dichotomy runs"},
      {"sequence", "a, alpha", "comma list driving the limit experiments"},
  };
  return keys;
}

void apply_config_value(RunConfig& c, const std::string& key, const std::string& v) {
  if (v.empty()) throw ConfigError("config key '" + key + "' has an empty value");
  if (key == "dim") {
    long long d = parse_integer(key, v);
    if (d < 1 || d > 3) out_of_range(key, v, "N must be 1, 2 or 3");
    c.dim = static_cast<int>(d);
  } else if (key == "points") {
    long long n = parse_integer(key, v);
    if (n < 8 || n % 2 != 0 || n > (1 << 20)) out_of_range(key, v, "M must be even, >= 8");
    c.points = static_cast<int>(n);
  } else if (key == "box_half_length") {
    c.box_half_length = parse_number(key, v);
    if (!(c.box_half_length > 0.0)) out_of_range(key, v, "L must be positive");
  } else if (key == "p") {
    c.p = parse_number(key, v);
  } else if (key == "alpha") {
    c.alpha = parse_number(key, v);
    if (!(c.alpha > 0.0)) out_of_range(key, v, "alpha must be positive");
  } else if (key == "a1") {
    c.a1 = parse_mass(key, v);
  } else if (key == "a2") {
    c.a2 = parse_mass(key, v);
  } else if (key == "dt") {
    c.dt = parse_number(key, v);
    if (!(c.dt > 0.0) || c.dt > 0.05) out_of_range(key, v, "dt must lie in (0, 0.05]");
  } else if (key == "horizon") {
    c.horizon = parse_number(key, v);
    if (c.horizon < 0.0) out_of_range(key, v, "horizon must be non-negative");
  } else if (key == "seed") {
    long long s = parse_integer(key, v);
    if (s < 0) out_of_range(key, v, "seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "solver.step_size") {
    c.solver_step_size = parse_number(key, v);
    if (!(c.solver_step_size > 0.0)) out_of_range(key, v, "step size must be positive");
  } else if (key == "solver.grad_tol") {
    c.solver_grad_tol = parse_number(key, v);
    if (!(c.solver_grad_tol > 0.0)) out_of_range(key, v, "tolerance must be positive");
  } else if (key == "solver.max_iters") {
    long long n = parse_integer(key, v);
    if (n < 1 || n > 100000000) out_of_range(key, v, "iteration cap must be >= 1");
    c.solver_max_iters = static_cast<int>(n);
  } else if (key == "experiment") {
    if (!experiment_names().count(v)) out_of_range(key, v, "not a known subcommand");
    c.experiment = v;
  } else if (key == "output_dir") {
    c.output_dir = v;
  } else if (key == "snapshot_every") {
    long long n = parse_integer(key, v);
    if (n < 0) out_of_range(key, v, "must be non-negative");
    c.snapshot_every = n;
  } else if (key == "sample_every") {
    long long n = parse_integer(key, v);
    if (n < 1 || n > 1000000000) out_of_range(key, v, "must be >= 1");
    c.sample_every = static_cast<int>(n);
  } else if (key == "initial") {
    if (v != "ground" && v != "excited" && v != "gaussian")
      out_of_range(key, v, "one of ground, excited, gaussian");
    c.initial = v;
  } else if (key == "dilation") {
    c.dilation = parse_number(key, v);
    if (!(c.dilation > 0.0)) out_of_range(key, v, "dilation must be positive");
  } else if (key == "epsilon") {
    c.epsilon = parse_number(key, v);
    if (c.epsilon < 0.0) out_of_range(key, v, "epsilon must be non-negative");
  } else if (key == "dilations") {
    c.dilations = parse_list(key, v);
  } else if (key == "sequence") {
    c.sequence = parse_list(key, v);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

RunConfig parse_config(const std::string& text, RunConfig c) {
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": missing key before '='");
    if (!seen.insert(key).second)
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    apply_config_value(c, key, value);
  }
  return c;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  return parse_config(read_file(path), std::move(base));
}

void validate_config(const RunConfig& c) {
  ModelParams m{c.dim, c.p, c.alpha, c.a1.value, c.a2.value};
  try {
    m.validate();
  } catch (const ModelError& e) {
    throw ConfigError(std::string("out of range: ") + e.what());
  }
  if (c.dim == 3 && c.points > 256)
    throw ConfigError("config key 'points' = " + std::to_string(c.points) +
                      " is out of range: at most 256 per axis in 3D");
}

std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& c) {
  std::vector<std::pair<std::string, std::string>> out{
      {"dim", std::to_string(c.dim)},
      {"points", std::to_string(c.points)},
      {"box_half_length", format_double(c.box_half_length)},
      {"p", format_double(c.p)},
      {"alpha", format_double(c.alpha)},
      {"a1", mass_text(c.a1)},
      {"a2", mass_text(c.a2)},
      {"dt", format_double(c.dt)},
      {"horizon", format_double(c.horizon)},
      {"seed", std::to_string(c.seed)},
      {"solver.step_size", format_double(c.solver_step_size)},
      {"solver.grad_tol", format_double(c.solver_grad_tol)},
      {"solver.max_iters", std::to_string(c.solver_max_iters)},
      {"experiment", c.experiment},
      {"output_dir", c.output_dir},
      {"snapshot_every", std::to_string(c.snapshot_every)},
      {"sample_every", std::to_string(c.sample_every)},
      {"initial", c.initial},
      {"dilation", format_double(c.dilation)},
      {"epsilon", format_double(c.epsilon)},
      {"dilations", list_text(c.dilations)},
  };
  if (!c.sequence.empty()) out.emplace_back("sequence", list_text(c.sequence));
  return out;
}

std::string config_text(const RunConfig& c) {
  std::string out;
  for (const auto& [k, v] : config_echo(c)) out += k + " = " + v + "\n";
  return out;
}

ModelParams resolve_params(const RunConfig& c, const GnConstants& gn) {
  validate_config(c);
  ModelParams m{c.dim, c.p, c.alpha, c.a1.value, c.a2.value};
  if (c.a1.relative_to_D || c.a2.relative_to_D) {
    double D = threshold_D(m, gn);
    if (c.a1.relative_to_D) m.a1 = c.a1.value * D;
    if (c.a2.relative_to_D) m.a2 = c.a2.value * D;
  }
  return m;
}

void require_ground_state_masses(const ModelParams& m, const GnConstants& gn) {
  if (m.mass_critical()) {
    double t = mass_critical_threshold(m, gn);
    if (!(m.max_mass() < t))
      throw ConfigError("out of range: max(a1,a2) = " + format_double(m.max_mass()) +
                        " must stay below the mass-critical threshold " + format_double(t));
    return;
  }
  double D = threshold_D(m, gn);
  if (!(m.max_mass() < D))
    throw ConfigError("out of range: max(a1,a2) = " + format_double(m.max_mass()) +
                      " must be below D = " + format_double(D));
}

void save_snapshot(const std::string& path, const ModelParams& m, const EvolutionState& s) {
  const SpectralGrid& g = s.fields.g();
  const std::size_t n = g.size();
  std::vector<char> buf(kSnapshotHeaderBytes + 3 * n * 2 * sizeof(double), 0);
  std::size_t off = 0;
  std::memcpy(buf.data(), "NLS3", 4);
  off = 4;
  put<std::uint32_t>(buf.data(), off, kSnapshotVersion);
  put<std::uint32_t>(buf.data(), off, static_cast<std::uint32_t>(g.dim()));
  put<std::uint32_t>(buf.data(), off, static_cast<std::uint32_t>(g.points()));
  put<double>(buf.data(), off, g.half_length());
  put<double>(buf.data(), off, m.p);
  put<double>(buf.data(), off, m.alpha);
  put<double>(buf.data(), off, m.a1);
  put<double>(buf.data(), off, m.a2);
  put<double>(buf.data(), off, s.time);
  off = kSnapshotHeaderBytes;
  for (int c = 0; c < 3; ++c)
    for (const cplx& z : s.fields[c]) {
      put<double>(buf.data(), off, z.real());
      put<double>(buf.data(), off, z.imag());
    }
  write_atomic(path, buf.data(), buf.size());
}

Snapshot load_snapshot(const std::string& path, bool allow_migration) {
  std::string bytes = read_file(path);
  if (bytes.size() < kSnapshotHeaderBytes)
    throw IoError("snapshot " + path + ": truncated header (" + std::to_string(bytes.size()) +
                  " bytes)");
  const char* b = bytes.data();
  if (std::memcmp(b, "NLS3", 4) != 0) throw IoError("snapshot " + path + ": bad magic bytes");
  std::size_t off = 4;
  auto version = get<std::uint32_t>(b, off);
  if (version != kSnapshotVersion && !allow_migration)
    throw IoError("snapshot " + path + ": format version " + std::to_string(version) +
                  " does not match " + std::to_string(kSnapshotVersion) +
                  " (pass the migration flag to load it anyway)");
  auto dim = get<std::uint32_t>(b, off);
  auto points = get<std::uint32_t>(b, off);
  double L = get<double>(b, off);
  Snapshot s;
  s.params.dim = static_cast<int>(dim);
  s.params.p = get<double>(b, off);
  s.params.alpha = get<double>(b, off);
  s.params.a1 = get<double>(b, off);
  s.params.a2 = get<double>(b, off);
  s.time = get<double>(b, off);
  if (dim < 1 || dim > 3 || points < 8 || points % 2 != 0 || points > (1u << 20) ||
      !(L > 0.0) || !std::isfinite(s.time))
    throw IoError("snapshot " + path + ": corrupt header");
  std::size_t n = 1;
  for (std::uint32_t a = 0; a < dim; ++a) n *= points;
  const std::size_t expected = kSnapshotHeaderBytes + 3 * n * 2 * sizeof(double);
  if (bytes.size() < expected)
    throw IoError("snapshot " + path + ": truncated payload (" + std::to_string(bytes.size()) +
                  " of " + std::to_string(expected) + " bytes)");
  if (bytes.size() > expected)
    throw IoError("snapshot " + path + ": " + std::to_string(bytes.size() - expected) +
                  " trailing bytes after the payload");
  s.fields = FieldTriple(make_grid(static_cast<int>(dim), static_cast<int>(points), L));
  off = kSnapshotHeaderBytes;
  for (int c = 0; c < 3; ++c)
    for (auto& z : s.fields[c]) {
      double re = get<double>(b, off);
      double im = get<double>(b, off);
      z = cplx(re, im);
    }
  return s;
}

std::string history_row(const HistorySample& h) {
  const double v[9] = {h.t,       h.energy, h.mass1,        h.mass2,        h.pohozaev,
                       h.kinetic, h.virial, h.virial_prime, h.virial_second};
  std::string out;
  for (int i = 0; i < 9; ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

void write_history_csv(const std::string& path, const std::deque<HistorySample>& history) {
  std::string out = std::string(kHistoryHeader) + "\n";
  for (const auto& h : history) out += history_row(h) + "\n";
  write_file(path, out);
}

std::vector<HistorySample> read_history_csv(const std::string& path) {
  std::stringstream ss(read_file(path));
  std::string line;
  if (!std::getline(ss, line) || trim(line) != kHistoryHeader)
    throw IoError("history " + path + ": missing or unexpected header");
  std::vector<HistorySample> out;
  int lineno = 1;
  while (std::getline(ss, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ls, cell, ',')) {
      cell = trim(cell);
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        if (cell == "nan" || cell == "-nan")
          x = std::numeric_limits<double>::quiet_NaN();
        else
          throw IoError("history " + path + " line " + std::to_string(lineno) + ": bad number");
      }
      v.push_back(x);
    }
    if (v.size() != 9)
      throw IoError("history " + path + " line " + std::to_string(lineno) + ": expected 9 columns");
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
  }
  return out;
}

bool ExperimentReport::all_pass() const {
  for (const auto& o : observations)
    if (!o.pass) return false;
  return true;
}

void ExperimentReport::add(std::string claim, double measured, double threshold, bool pass,
                           std::string note) {
  observations.push_back({std::move(claim), measured, threshold, pass, std::move(note)});
}

std::string report_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["pass"] = r.all_pass();
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.inputs) inputs[k] = v;
  j["inputs"] = inputs;
  nlohmann::ordered_json obs = nlohmann::ordered_json::array();
  for (const auto& o : r.observations) {
    nlohmann::ordered_json e;
    e["claim"] = o.claim;
    // nlohmann writes non-finite doubles as null.
    e["measured"] = o.measured;
    e["threshold"] = o.threshold;
    e["pass"] = o.pass;
    if (!o.note.empty()) e["note"] = o.note;
    obs.push_back(e);
  }
  j["observations"] = obs;
  j["artifacts"] = r.artifacts;
  j["flags"] = r.flags;
  return j.dump(2) + "\n";
}

ExperimentReport parse_report_json(const std::string& text) {
  ExperimentReport r;
  try {
    auto j = nlohmann::ordered_json::parse(text);
    r.name = j.at("name").get<std::string>();
    for (const auto& [k, v] : j.at("inputs").items()) r.inputs.emplace_back(k, v.get<std::string>());
    for (const auto& e : j.at("observations")) {
      Observation o;
      o.claim = e.at("claim").get<std::string>();
      o.measured = json_number(e.at("measured"));
      o.threshold = json_number(e.at("threshold"));
      o.pass = e.at("pass").get<bool>();
      if (e.contains("note")) o.note = e.at("note").get<std::string>();
      r.observations.push_back(o);
    }
    r.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    if (j.contains("flags")) r.flags = j.at("flags").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed report JSON: ") + e.what());
  }
  return r;
}

void write_report(const std::string& path, const ExperimentReport& r) {
  write_file(path, report_json(r));
}

ExperimentReport read_report(const std::string& path) { return parse_report_json(read_file(path)); }

std::string report_text(const ExperimentReport& r) {
  std::ostringstream out;
  out << "experiment: " << r.name << "\n";
  out << "result: " << (r.all_pass() ? "PASS" : "FAIL") << "\n";
  out << "inputs:\n";
  for (const auto& [k, v] : r.inputs) out << "  " << k << " = " << v << "\n";
  out << "observations:\n";
  for (const auto& o : r.observations) {
    out << "  [" << (o.pass ? "pass" : "FAIL") << "] " << o.claim << ": measured "
        << format_double(o.measured) << ", threshold " << format_double(o.threshold);
    if (!o.note.empty()) out << " (" << o.note << ")";
    out << "\n";
  }
  for (const auto& f : r.flags) out << "flag: " << f << "\n";
  for (const auto& a : r.artifacts) out << "artifact: " << a << "\n";
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw IoError("read failed for " + path);
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  write_atomic(path, content.data(), content.size());
}

}  // namespace nls3
