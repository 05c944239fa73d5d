#pragma once

// Run configuration: a sectioned key = value text file, archivable and
// sufficient to reproduce a run byte for byte.

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubeflow/domain.hpp"
#include "tubeflow/flow.hpp"
#include "tubeflow/kernels.hpp"

namespace tubeflow {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Sectioned key = value document.  '#' and ';' start comments; section
// headers are [name]; keys are unique within a section.

class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in) {
    ConfigFile cfg;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      cfg.values_[section + "." + key] = value;
    }
    return cfg;
  }

  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in);
  }

  static ConfigFile parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
  }

  double get_num(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : to_num(key, it->second);
  }

  double require_num(const std::string& key) const { return to_num(key, require(key)); }

  long get_int(const std::string& key, long fallback) const {
    const double v = get_num(key, double(fallback));
    const long n = long(std::llround(v));
    if (double(n) != v) throw ConfigError("config key " + key + " must be an integer");
    return n;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    throw ConfigError("config key " + key + " must be a boolean, got '" + v + "'");
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        out.push_back(trim(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    cur = trim(cur);
    if (!cur.empty() || !out.empty()) out.push_back(cur);
    return out;
  }

  static double to_num(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " is not a number: '" + v + "'");
    }
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Fully resolved run specification.

enum class ProfileKind { constant, cosine, table };

struct InitialProfile {
  ProfileKind kind = ProfileKind::constant;
  double r0 = 0.5;
  double amplitude = 0.0;
  int mode = 1;
  std::vector<double> table;  // per-node radii for the table kind
};

struct OutputSpec {
  std::string directory = "out";
  std::size_t cadence = 10;
  std::size_t snapshot_cadence = 0;
  bool plot = false;
};

struct RunSpec {
  SpaceModel model;
  BaseDomain domain;
  InitialProfile initial;
  FlowConfig flow;
  OutputSpec output;
  double ceiling = 0.0;           // effective radius ceiling for the run
  bool strict_boundary = false;   // also reject nonzero endpoint r''
};

namespace detail {

inline std::vector<double> read_column_file(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table file: " + path);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  if (out.size() != n)
    throw ConfigError("table file " + path + " has " + std::to_string(out.size()) +
                      " values, expected " + std::to_string(n));
  return out;
}

inline void parse_multiplicities(const ConfigFile& cfg, SpaceModel& m) {
  const auto parse = [&cfg](const std::string& key,
                            std::vector<std::pair<double, int>>& out) {
    for (const auto& tok : ConfigFile::split_list(cfg.require(key))) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ConfigError(key + " entries must be k:m pairs");
      const double k = ConfigFile::to_num(key, tok.substr(0, colon));
      const double mm = ConfigFile::to_num(key, tok.substr(colon + 1));
      if (mm < 0 || mm != std::floor(mm))
        throw ConfigError(key + " multiplicities must be nonnegative integers");
      out.emplace_back(k, int(mm));
    }
  };
  std::vector<std::pair<double, int>> mv, mh;
  parse("model.mult_vertical", mv);
  parse("model.mult_horizontal", mh);
  m.mult_vertical = {0, 0, 0};
  for (const auto& [k, mm] : mv) {
    if (k != 0.0 && k != 1.0 && k != 2.0)
      throw ConfigError("model.mult_vertical blocks must be k = 0, 1 or 2");
    m.mult_vertical[int(k)] = mm;
  }
  m.mult_horizontal = mh;
}

inline SpaceModel model_from_config(const ConfigFile& cfg) {
  const std::string preset = cfg.get("model.preset", "custom");
  const double b = cfg.get_num("model.b", 1.0);
  SpaceModel m;
  if (preset == "spaceform") {
    const int n = int(cfg.get_int("model.n", 2));
    const int p = int(cfg.get_int("model.p", 1));
    const std::string variant = cfg.get("model.variant", "compact");
    if (variant != "compact" && variant != "noncompact")
      throw ConfigError("model.variant must be compact or noncompact");
    m = space_form_model(
        n, p, variant == "compact" ? Curvature::compact : Curvature::noncompact, b);
  } else if (preset == "custom") {
    const double eps = cfg.require_num("model.epsilon");
    if (eps != 1.0 && eps != -1.0) throw ConfigError("model.epsilon must be +1 or -1");
    m.epsilon = eps > 0 ? Curvature::compact : Curvature::noncompact;
    m.b = b;
    for (const auto& tok : ConfigFile::split_list(cfg.require("model.ratios")))
      m.ratios.push_back(ConfigFile::to_num("model.ratios", tok));
    std::sort(m.ratios.begin(), m.ratios.end());
    m.k0 = cfg.require_num("model.k0");
    m.r_cut = SpaceModel::default_r_cut(m.epsilon, m.b, m.ratios);
    parse_multiplicities(cfg, m);
  } else {
    const auto cat = preset_catalogue();
    const Preset* p = find_preset(cat, preset);
    if (!p) throw ConfigError("unknown preset: " + preset);
    m = p->model;
    m.b = b;
    m.r_cut = SpaceModel::default_r_cut(m.epsilon, m.b, m.ratios);
    if (!p->complete) parse_multiplicities(cfg, m);  // table presets
  }
  if (cfg.has("model.r_cut")) m.r_cut = cfg.require_num("model.r_cut");
  m.validate();
  return m;
}

inline BaseDomain domain_from_config(const ConfigFile& cfg, const SpaceModel& m) {
  const double L = cfg.get_num("domain.L", 2.0 * kPi);
  const std::size_t n = std::size_t(cfg.get_int("domain.n", 129));
  const double s0 = cfg.get_num("domain.s0", 0.0);
  const std::string omega = cfg.get("domain.omega", "product");
  const std::string gamma = cfg.get("domain.gamma", "zero");
  if (gamma != "zero" && gamma != "radial")
    throw ConfigError("domain.gamma must be zero or radial");
  const bool radial_gamma = gamma == "radial";

  // product: transverse geometry constant along s (the default)
  if (omega == "product") {
    if (radial_gamma)
      throw ConfigError("domain.gamma = radial needs a radial omega family");
    return make_uniform_domain(L, n, std::vector<double>(n, 1.0), {}, s0);
  }
  if (omega.rfind("table:", 0) == 0) {
    auto w = read_column_file(omega.substr(6), n);
    return make_uniform_domain(L, n, std::move(w), {}, s0);
  }
  // radial families: omega = warp(s)^(mH-1), Gamma = warp'/warp when radial
  OmegaFamily family;
  if (omega == "flat") family = OmegaFamily::flat;
  else if (omega == "spherical") family = OmegaFamily::spherical;
  else if (omega == "hyperbolic") family = OmegaFamily::hyperbolic;
  else
    throw ConfigError(
        "domain.omega must be product, flat, spherical, hyperbolic or table:<path>");
  return make_warped_domain(family, L, n, m.horizontal_total(), m.k0, radial_gamma, s0);
}

inline InitialProfile initial_from_config(const ConfigFile& cfg, std::size_t n) {
  InitialProfile prof;
  const std::string kind = cfg.get("initial.profile", "cosine");
  if (kind == "constant") {
    prof.kind = ProfileKind::constant;
    prof.r0 = cfg.require_num("initial.r0");
  } else if (kind == "cosine") {
    prof.kind = ProfileKind::cosine;
    prof.r0 = cfg.require_num("initial.r0");
    prof.amplitude = cfg.get_num("initial.amplitude", 0.0);
    prof.mode = int(cfg.get_int("initial.mode", 1));
    if (prof.mode < 1) throw ConfigError("initial.mode must be >= 1");
  } else if (kind.rfind("table:", 0) == 0) {
    prof.kind = ProfileKind::table;
    prof.table = read_column_file(kind.substr(6), n);
  } else {
    throw ConfigError("initial.profile must be constant, cosine or table:<path>");
  }
  return prof;
}

inline FlowConfig flow_from_config(const ConfigFile& cfg) {
  FlowConfig f;
  const std::string scheme = cfg.get("flow.scheme", "rk4");
  if (scheme == "rk4") f.scheme = Scheme::rk4;
  else if (scheme == "explicit-euler") f.scheme = Scheme::explicit_euler;
  else if (scheme == "imex") f.scheme = Scheme::imex;
  else throw ConfigError("flow.scheme must be rk4, explicit-euler or imex");
  f.dt = cfg.get_num("flow.dt", 0.0);
  f.cfl = cfg.get_num("flow.cfl", 0.4);
  if (f.dt < 0.0) throw ConfigError("flow.dt must be >= 0");
  if (!(f.cfl > 0.0) || f.cfl > 1.0) throw ConfigError("flow.cfl must lie in (0, 1]");
  f.t_end = cfg.get_num("flow.t_end", 1.0);
  f.steady_tol = cfg.get_num("flow.steady_tol", 1e-10);
  f.u_floor = cfg.get_num("flow.u_floor", 1e-3);
  f.conserve_project = cfg.get_bool("flow.conserve_project", false);
  f.max_steps = std::size_t(cfg.get_int("flow.max_steps", 50'000'000));
  return f;
}

}  // namespace detail

inline std::vector<double> build_profile(const InitialProfile& prof, const BaseDomain& dom) {
  std::vector<double> r(dom.n);
  switch (prof.kind) {
    case ProfileKind::constant:
      for (auto& v : r) v = prof.r0;
      break;
    case ProfileKind::cosine:
      for (std::size_t i = 0; i < dom.n; ++i)
        r[i] = prof.r0 + prof.amplitude *
                             std::cos(prof.mode * kPi * (dom.s(i) - dom.s_begin) /
                                      dom.length);
      break;
    case ProfileKind::table:
      r = prof.table;
      break;
  }
  return r;
}

// Endpoint residuals of the flow's boundary conditions for a candidate
// profile: first derivative (hard requirement) and second derivative
// (monitored; hard only under strict_boundary).
struct BoundaryResiduals {
  double first = 0.0;
  double second = 0.0;
};

inline BoundaryResiduals boundary_residuals(const BaseDomain& dom,
                                            const std::vector<double>& r) {
  const double h = dom.h();
  const std::size_t n = dom.n;
  BoundaryResiduals res;
  // one-sided fourth-order first derivative at the ends
  const auto d5 = [&](double f0, double f1, double f2, double f3, double f4) {
    return (-25.0 * f0 + 48.0 * f1 - 36.0 * f2 + 16.0 * f3 - 3.0 * f4) / (12.0 * h);
  };
  const double dl = d5(r[0], r[1], r[2], r[3], r[4]);
  const double dr = -d5(r[n - 1], r[n - 2], r[n - 3], r[n - 4], r[n - 5]);
  res.first = std::max(std::abs(dl), std::abs(dr));
  const double sl = 2.0 * (r[1] - r[0]) / (h * h);
  const double sr = 2.0 * (r[n - 2] - r[n - 1]) / (h * h);
  res.second = std::max(std::abs(sl), std::abs(sr));
  return res;
}

// Validates the flow's boundary conditions on the initial data.  Constant and
// integer-mode cosine profiles satisfy the first-derivative condition by
// construction; table data is measured. Returns an error message, or empty.
inline std::string validate_initial_profile(const InitialProfile& prof,
                                            const BaseDomain& dom,
                                            const std::vector<double>& r,
                                            bool strict_boundary) {
  const BoundaryResiduals res = boundary_residuals(dom, r);
  if (prof.kind == ProfileKind::table && res.first > 1e-8) {
    std::ostringstream os;
    os << "initial profile violates the boundary condition: endpoint r' residual "
       << res.first << " exceeds 1e-8";
    return os.str();
  }
  if (strict_boundary && res.second > 1e-8) {
    std::ostringstream os;
    os << "initial profile violates the strict boundary condition: endpoint r'' "
          "residual "
       << res.second << " exceeds 1e-8";
    return os.str();
  }
  return {};
}

inline RunSpec run_spec_from_config(const ConfigFile& cfg) {
  RunSpec spec;
  spec.model = detail::model_from_config(cfg);
  spec.domain = detail::domain_from_config(cfg, spec.model);
  spec.initial = detail::initial_from_config(cfg, spec.domain.n);
  spec.flow = detail::flow_from_config(cfg);
  spec.output.directory = cfg.get("output.directory", "out");
  spec.output.cadence = std::size_t(cfg.get_int("output.cadence", 10));
  spec.output.snapshot_cadence = std::size_t(cfg.get_int("output.snapshot_cadence", 0));
  spec.output.plot = cfg.get_bool("output.plot", false);
  spec.flow.cadence = spec.output.cadence;
  spec.flow.snapshot_cadence = spec.output.snapshot_cadence;
  spec.strict_boundary = cfg.get_bool("flow.strict_boundary", false);

  const double margin_frac = cfg.get_num("model.margin", 1e-3);
  if (spec.model.compact()) {
    spec.ceiling = spec.model.r_cut * (1.0 - margin_frac);
  } else {
    if (!cfg.has("model.r_max"))
      throw ConfigError("noncompact models require a finite model.r_max ceiling");
    spec.ceiling = cfg.require_num("model.r_max");
    if (!(spec.ceiling > 0.0) || !std::isfinite(spec.ceiling))
      throw ConfigError("model.r_max must be positive and finite");
  }
  return spec;
}

// The commented default configuration emitted by the command line tool.
inline std::string default_config_text() {
  return R"(# tubeflow run configuration (defaults; every key shown with its default)

[model]
preset = spaceform        # spaceform | custom | a catalogue name (see `tubeflow presets`)
variant = compact         # spaceform only: compact | noncompact
n = 2                     # spaceform: tube dimension
p = 1                     # spaceform: base dimension
b = 1.0                   # root norm |beta(X0)|
# r_cut = ...             # override the default ceiling pi/(2 b max K)
# r_max = 5.0             # required for noncompact models: finite run ceiling
margin = 1e-3             # compact ceiling = r_cut * (1 - margin)
# custom models instead take:
# epsilon = +1            # +1 compact, -1 noncompact
# ratios = 1,2            # root ratio set K
# k0 = 2                  # eigenblock ratio carrying grad r
# mult_vertical = 0:0,1:1,2:0     # k:m pairs, k in {0,1,2}
# mult_horizontal = 1:1,2:1       # k:m pairs, k in K u {0}

[domain]
L = 6.283185307179586     # base interval length
n = 129                   # node count
s0 = 0.0                  # grid start (radial weights need s0 > 0)
omega = product           # product | flat | spherical | hyperbolic | table:<path>
gamma = zero              # zero | radial (radial needs a radial omega family)

[initial]
profile = cosine          # constant | cosine | table:<path>
r0 = 0.6
amplitude = 0.02
mode = 1                  # r = r0 + amplitude cos(mode pi s / L)

[flow]
scheme = rk4              # rk4 | explicit-euler | imex (imex is experimental)
dt = 0                    # fixed step; 0 = parabolic step control
cfl = 0.4                 # step factor for the parabolic bound
t_end = 1.0
steady_tol = 1e-10        # sup|dr/dt| steady-state threshold; 0 disables
u_floor = 1e-3            # tube-loss guard on the preservation monitor
conserve_project = false  # rescale after each step to pin the enclosed volume
strict_boundary = false   # also reject nonzero endpoint r'' in initial data
max_steps = 50000000

[output]
directory = out
cadence = 10              # series row every this many steps
snapshot_cadence = 0      # snapshots every this many rows; 0 = ends only
plot = false              # emit series.svg and profile.svg
)";
}

}  // namespace tubeflow
