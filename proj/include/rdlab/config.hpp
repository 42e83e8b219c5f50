#pragma once

// Scenario files are INI text:
//
//   kind = rd                 ; ode | rd | spectral_gap | sweep
//   id = two_by_two
//   [network]   alpha, beta (integer lists), l, k
//   [diffusion] n, length, psi, diffusivity (expressions in x)
//   [initial]   v1 .. vq (expressions in x; constants for ode)
//   [numerics]  dt, t_end, sample_every, tol, samples, tolerances
//   [output]    directory, series, report, snapshots
//   [gap]       sizes
//   [sweep]     parameter, values
//
// Comments start a line with ';' or '#'.

#include "rdlab/expression.hpp"
#include "rdlab/network.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdlab {

enum class ScenarioKind { ode, rd, spectral_gap, sweep };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::ode: return "ode";
    case ScenarioKind::rd: return "rd";
    case ScenarioKind::spectral_gap: return "spectral_gap";
    case ScenarioKind::sweep: return "sweep";
  }
  return "unknown";
}

enum class ConfigErrorCode {
  syntax,
  unknown_key,
  missing_field,
  bad_value,
  bad_expression,
  catalyzer,
  no_sign_change,
  file_not_found,
};

inline const char* to_string(ConfigErrorCode c) {
  switch (c) {
    case ConfigErrorCode::syntax: return "E_SYNTAX";
    case ConfigErrorCode::unknown_key: return "E_UNKNOWN_KEY";
    case ConfigErrorCode::missing_field: return "E_MISSING_FIELD";
    case ConfigErrorCode::bad_value: return "E_BAD_VALUE";
    case ConfigErrorCode::bad_expression: return "E_BAD_EXPRESSION";
    case ConfigErrorCode::catalyzer: return "E_CATALYZER";
    case ConfigErrorCode::no_sign_change: return "E_NO_SIGN_CHANGE";
    case ConfigErrorCode::file_not_found: return "E_FILE_NOT_FOUND";
  }
  return "E_UNKNOWN";
}

struct ConfigIssue {
  ConfigErrorCode code;
  std::string path;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues)
      : std::runtime_error(summarize(issues)), issues_(std::move(issues)) {}
  const std::vector<ConfigIssue>& issues() const { return issues_; }

  bool has(ConfigErrorCode c) const {
    return std::any_of(issues_.begin(), issues_.end(), [c](const auto& i) { return i.code == c; });
  }

 private:
  static std::string summarize(const std::vector<ConfigIssue>& issues) {
    std::ostringstream os;
    for (std::size_t k = 0; k < issues.size(); ++k) {
      if (k) os << '\n';
      os << to_string(issues[k].code) << ' ' << issues[k].path << ": " << issues[k].message;
    }
    return os.str();
  }

  std::vector<ConfigIssue> issues_;
};

struct NetworkConfig {
  std::vector<int> alpha;
  std::vector<int> beta;
  double l = 1.0;
  double k = 1.0;
  bool operator==(const NetworkConfig&) const = default;
};

struct DiffusionConfig {
  std::size_t n = 200;
  double length = 1.0;
  std::string psi = "0";
  std::string diffusivity = "1";
  bool operator==(const DiffusionConfig&) const = default;
};

struct NumericsConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  std::size_t sample_every = 10;
  bool reaction = true;
  // ODE integrator
  double tol = 1e-10;
  std::size_t samples = 1000;
  // verdict tolerances
  std::optional<double> rate_tolerance;  ///< 0.03 for ode, 0.10 otherwise
  double fit_window = 0.5;
  double fit_floor = 1e-11;
  double min_r2 = 0.999;
  double conservation_tol = 1e-8;
  double positivity_tol = 1e-9;
  double clamp_tol = 1e-8;
  double bound_tol = 1e-7;
  bool operator==(const NumericsConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";
  bool series = true;
  bool report = true;
  std::vector<double> snapshots;
  bool operator==(const OutputConfig&) const = default;
};

struct GapConfig {
  std::vector<std::size_t> sizes{25, 50, 100, 200, 400};
  bool operator==(const GapConfig&) const = default;
};

enum class SweepParameter { mass_scale, length, n };

inline const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::mass_scale: return "mass_scale";
    case SweepParameter::length: return "length";
    case SweepParameter::n: return "n";
  }
  return "unknown";
}

struct SweepConfig {
  SweepParameter parameter = SweepParameter::mass_scale;
  std::vector<double> values;
  bool operator==(const SweepConfig&) const = default;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::rd;
  std::string id = "scenario";
  NetworkConfig network;
  DiffusionConfig diffusion;
  std::vector<std::string> initial;
  NumericsConfig numerics;
  OutputConfig output;
  GapConfig gap;
  SweepConfig sweep;
  bool operator==(const ScenarioConfig&) const = default;

  bool needs_network() const { return kind != ScenarioKind::spectral_gap; }
  double rate_tolerance() const {
    return numerics.rate_tolerance.value_or(kind == ScenarioKind::ode ? 0.03 : 0.10);
  }
};

namespace detail::cfg {

namespace pt = boost::property_tree;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream is(t);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

class Reader {
 public:
  std::vector<ConfigIssue> issues;

  void add(ConfigErrorCode c, std::string path, std::string msg) {
    issues.push_back({c, std::move(path), std::move(msg)});
  }

  template <class T>
  bool parse_scalar(const std::string& path, const std::string& raw, T& out) {
    const std::string s = trim(raw);
    std::istringstream is(s);
    T v{};
    if constexpr (std::is_unsigned_v<T>) {
      if (!s.empty() && s[0] == '-') {
        add(ConfigErrorCode::bad_value, path, "expected a nonnegative integer, got '" + s + "'");
        return false;
      }
    }
    if (!(is >> v) || !(is >> std::ws).eof()) {
      add(ConfigErrorCode::bad_value, path, "cannot read '" + s + "'");
      return false;
    }
    out = v;
    return true;
  }

  bool parse_bool(const std::string& path, const std::string& raw, bool& out) {
    std::string s = trim(raw);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "yes" || s == "on" || s == "1") {
      out = true;
      return true;
    }
    if (s == "false" || s == "no" || s == "off" || s == "0") {
      out = false;
      return true;
    }
    add(ConfigErrorCode::bad_value, path, "expected a boolean, got '" + s + "'");
    return false;
  }

  template <class T>
  bool parse_list(const std::string& path, const std::string& raw, std::vector<T>& out) {
    std::vector<T> v;
    bool ok = true;
    for (const auto& w : split_list(raw)) {
      T x{};
      ok = parse_scalar(path, w, x) && ok;
      v.push_back(x);
    }
    if (ok) out = std::move(v);
    return ok;
  }

  bool expression(const std::string& path, const std::string& raw, std::string& out) {
    const std::string s = trim(raw);
    try {
      parse_expression(s);
    } catch (const ExpressionError& e) {
      add(ConfigErrorCode::bad_expression, path, e.what());
      return false;
    }
    out = s;
    return true;
  }
};

using Handler = std::function<void(Reader&, const std::string& path, const std::string& value)>;

inline void walk_section(Reader& r, const pt::ptree& sec, const std::string& name,
                         const std::map<std::string, Handler>& handlers) {
  for (const auto& [key, node] : sec) {
    const std::string path = name.empty() ? key : name + "." + key;
    if (!node.empty()) {
      r.add(ConfigErrorCode::unknown_key, path, "unexpected section");
      continue;
    }
    const auto it = handlers.find(key);
    if (it == handlers.end()) {
      r.add(ConfigErrorCode::unknown_key, path, "unknown key");
      continue;
    }
    it->second(r, path, node.data());
  }
}

inline void check_network(Reader& r, const NetworkConfig& n) {
  if (n.alpha.size() != n.beta.size()) {
    r.add(ConfigErrorCode::bad_value, "network.beta",
          "alpha has " + std::to_string(n.alpha.size()) + " entries, beta has " +
              std::to_string(n.beta.size()));
    return;
  }
  if (n.alpha.size() < 2) r.add(ConfigErrorCode::bad_value, "network.alpha", "need at least 2 species");
  bool gains = false, losses = false;
  for (std::size_t i = 0; i < n.alpha.size(); ++i) {
    if (n.alpha[i] < 0 || n.beta[i] < 0) {
      r.add(ConfigErrorCode::bad_value, "network.alpha",
            "negative coefficient for species " + std::to_string(i + 1));
      continue;
    }
    if (n.alpha[i] == n.beta[i])
      r.add(ConfigErrorCode::catalyzer, "network.beta",
            "species " + std::to_string(i + 1) +
                " is a catalyzer (alpha == beta); every species must change in the reaction");
    gains = gains || n.beta[i] > n.alpha[i];
    losses = losses || n.beta[i] < n.alpha[i];
  }
  if (n.alpha.size() >= 2 && (!gains || !losses))
    r.add(ConfigErrorCode::no_sign_change, "network.beta",
          "beta - alpha must take both signs, otherwise no mass is conserved");
  if (!(n.l > 0.0) || !std::isfinite(n.l))
    r.add(ConfigErrorCode::bad_value, "network.l", "rate constant must be positive");
  if (!(n.k > 0.0) || !std::isfinite(n.k))
    r.add(ConfigErrorCode::bad_value, "network.k", "rate constant must be positive");
}

inline std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

}  // namespace detail::cfg

/// Parses and validates a scenario; throws ConfigError listing every issue found.
inline ScenarioConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  using detail::cfg::Reader;
  using Code = ConfigErrorCode;

  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({{Code::syntax, "line " + std::to_string(e.line()), e.message()}});
  }

  ScenarioConfig c;
  Reader r;
  std::set<std::string> seen;
  std::map<std::string, std::string> initial_raw;

  auto mark = [&](const std::string& path) { seen.insert(path); };

  using H = detail::cfg::Handler;
  const std::map<std::string, H> top{
      {"kind",
       [&](Reader& rd, const std::string& p, const std::string& v) {
         mark(p);
         const std::string s = detail::cfg::trim(v);
         if (s == "ode") c.kind = ScenarioKind::ode;
         else if (s == "rd") c.kind = ScenarioKind::rd;
         else if (s == "spectral_gap") c.kind = ScenarioKind::spectral_gap;
         else if (s == "sweep") c.kind = ScenarioKind::sweep;
         else rd.add(Code::bad_value, p, "kind must be ode, rd, spectral_gap or sweep; got '" + s + "'");
       }},
      {"id", [&](Reader& rd, const std::string& p, const std::string& v) {
         mark(p);
         c.id = detail::cfg::trim(v);
         if (c.id.empty() || c.id.find_first_of(",\n/\\") != std::string::npos)
           rd.add(Code::bad_value, p, "id must be nonempty without ',', '/' or '\\'");
       }}};

  const std::map<std::string, H> network{
      {"alpha", [&](Reader& rd, const std::string& p, const std::string& v) {
         mark(p);
         if (rd.parse_list(p, v, c.network.alpha)) mark("network.alpha#ok");
       }},
      {"beta", [&](Reader& rd, const std::string& p, const std::string& v) {
         mark(p);
         if (rd.parse_list(p, v, c.network.beta)) mark("network.beta#ok");
       }},
      {"l", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, c.network.l); }},
      {"k", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, c.network.k); }}};

  const std::map<std::string, H> diffusion{
      {"n", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, c.diffusion.n); }},
      {"length", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, c.diffusion.length); }},
      {"psi", [&](Reader& rd, const std::string& p, const std::string& v) { rd.expression(p, v, c.diffusion.psi); }},
      {"diffusivity", [&](Reader& rd, const std::string& p, const std::string& v) {
         rd.expression(p, v, c.diffusion.diffusivity);
       }}};

  auto& nm = c.numerics;
  const std::map<std::string, H> numerics{
      {"dt", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, nm.dt); }},
      {"t_end", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, nm.t_end); }},
      {"sample_every", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, nm.sample_every); }},
      {"reaction", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_bool(p, v, nm.reaction); }},
      {"tol", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, nm.tol); }},
      {"samples", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, nm.samples); }},
      {"rate_tolerance", [&](Reader& rd, const std::string& p, const std::string& v) {
         double x = 0.0;
         if (rd.parse_scalar(p, v, x)) nm.rate_tolerance = x;
       }},
      {"fit_window", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, nm.fit_window); }},
      {"fit_floor", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, nm.fit_floor); }},
      {"min_r2", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, nm.min_r2); }},
      {"conservation_tol", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, nm.conservation_tol); }},
      {"positivity_tol", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, nm.positivity_tol); }},
      {"clamp_tol", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, nm.clamp_tol); }},
      {"bound_tol", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_scalar(p, v, nm.bound_tol); }}};

  const std::map<std::string, H> output{
      {"directory", [&](Reader& rd, const std::string& p, const std::string& v) {
         c.output.directory = detail::cfg::trim(v);
         if (c.output.directory.empty()) rd.add(Code::bad_value, p, "directory must not be empty");
       }},
      {"series", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_bool(p, v, c.output.series); }},
      {"report", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_bool(p, v, c.output.report); }},
      {"snapshots", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_list(p, v, c.output.snapshots); }}};

  const std::map<std::string, H> gap{
      {"sizes", [&](Reader& rd, const std::string& p, const std::string& v) { rd.parse_list(p, v, c.gap.sizes); }}};

  const std::map<std::string, H> sweep{
      {"parameter", [&](Reader& rd, const std::string& p, const std::string& v) {
         const std::string s = detail::cfg::trim(v);
         if (s == "mass_scale") c.sweep.parameter = SweepParameter::mass_scale;
         else if (s == "length") c.sweep.parameter = SweepParameter::length;
         else if (s == "n") c.sweep.parameter = SweepParameter::n;
         else rd.add(Code::bad_value, p, "parameter must be mass_scale, length or n; got '" + s + "'");
       }},
      {"values", [&](Reader& rd, const std::string& p, const std::string& v) {
         mark(p);
         rd.parse_list(p, v, c.sweep.values);
       }}};

  const std::map<std::string, const std::map<std::string, H>*> sections{
      {"network", &network}, {"diffusion", &diffusion}, {"numerics", &numerics},
      {"output", &output},   {"gap", &gap},             {"sweep", &sweep}};

  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      const auto it = top.find(key);
      if (it == top.end())
        r.add(Code::unknown_key, key, "unknown key");
      else
        it->second(r, key, node.data());
      continue;
    }
    if (key == "initial") {
      for (const auto& [k2, v2] : node) initial_raw[k2] = v2.data();
      continue;
    }
    const auto it = sections.find(key);
    if (it == sections.end()) {
      r.add(Code::unknown_key, key, "unknown section");
      continue;
    }
    detail::cfg::walk_section(r, node, key, *it->second);
  }

  if (!seen.count("kind")) r.add(Code::missing_field, "kind", "required");

  if (c.needs_network()) {
    if (!seen.count("network.alpha")) r.add(Code::missing_field, "network.alpha", "required");
    if (!seen.count("network.beta")) r.add(Code::missing_field, "network.beta", "required");
    if (seen.count("network.alpha#ok") && seen.count("network.beta#ok"))
      detail::cfg::check_network(r, c.network);

    const std::size_t q = c.network.alpha.size();
    for (std::size_t i = 1; i <= q; ++i) {
      const std::string key = "v" + std::to_string(i);
      const std::string path = "initial." + key;
      const auto it = initial_raw.find(key);
      if (it == initial_raw.end()) {
        r.add(Code::missing_field, path, "initial data for species " + std::to_string(i) + " is required");
        c.initial.push_back("0");
        continue;
      }
      std::string src = "0";
      if (r.expression(path, it->second, src) && c.kind == ScenarioKind::ode &&
          parse_expression(src).depends_on_x())
        r.add(Code::bad_value, path, "ode initial data must be constant (no x)");
      c.initial.push_back(src);
    }
    for (const auto& [key, _] : initial_raw) {
      bool known = false;
      for (std::size_t i = 1; i <= q; ++i) known = known || key == "v" + std::to_string(i);
      if (!known) r.add(Code::unknown_key, "initial." + key, "no such species (expected v1..v" + std::to_string(q) + ")");
    }
  } else {
    for (const auto& [key, _] : initial_raw)
      r.add(Code::unknown_key, "initial." + key, "spectral_gap scenarios take no initial data");
  }

  // Range checks.
  if (c.diffusion.n < 3) r.add(Code::bad_value, "diffusion.n", "need at least 3 cells");
  if (!(c.diffusion.length > 0.0) || !std::isfinite(c.diffusion.length))
    r.add(Code::bad_value, "diffusion.length", "must be positive");
  if (!(nm.dt > 0.0) || !std::isfinite(nm.dt)) r.add(Code::bad_value, "numerics.dt", "must be positive");
  if (!(nm.t_end > 0.0) || !std::isfinite(nm.t_end)) r.add(Code::bad_value, "numerics.t_end", "must be positive");
  if (nm.sample_every == 0) r.add(Code::bad_value, "numerics.sample_every", "must be at least 1");
  if (!(nm.tol > 0.0 && nm.tol < 1.0)) r.add(Code::bad_value, "numerics.tol", "must lie in (0, 1)");
  if (nm.samples < 2) r.add(Code::bad_value, "numerics.samples", "must be at least 2");
  if (!(nm.fit_window > 0.0 && nm.fit_window <= 1.0))
    r.add(Code::bad_value, "numerics.fit_window", "must lie in (0, 1]");
  if (nm.rate_tolerance && !(*nm.rate_tolerance > 0.0))
    r.add(Code::bad_value, "numerics.rate_tolerance", "must be positive");
  for (double t : c.output.snapshots)
    if (!(t >= 0.0) || t > nm.t_end) r.add(Code::bad_value, "output.snapshots", "times must lie in [0, t_end]");
  if (c.gap.sizes.size() < 2) r.add(Code::bad_value, "gap.sizes", "need at least two grids");
  for (std::size_t n : c.gap.sizes)
    if (n < 3) r.add(Code::bad_value, "gap.sizes", "every grid needs at least 3 cells");
  if (c.kind == ScenarioKind::sweep) {
    if (!seen.count("sweep.values")) r.add(Code::missing_field, "sweep.values", "required for kind = sweep");
    for (double v : c.sweep.values)
      if (!(v > 0.0) || !std::isfinite(v)) r.add(Code::bad_value, "sweep.values", "values must be positive");
  }

  // Fields must evaluate on the domain.
  auto check_field = [&](const std::string& path, const std::string& src, bool positive) {
    Expression e;
    try {
      e = parse_expression(src);
    } catch (const ExpressionError&) {
      return;  // already reported
    }
    const std::size_t n = std::max<std::size_t>(c.diffusion.n, 3);
    const double len = c.diffusion.length > 0.0 ? c.diffusion.length : 1.0;
    for (std::size_t i = 0; i <= 2 * n; ++i) {
      const double x = len * static_cast<double>(i) / static_cast<double>(2 * n);
      const double y = e(x);
      if (!std::isfinite(y) || (positive && !(y > 0.0))) {
        r.add(Code::bad_value, path,
              "'" + src + "' is " + (std::isfinite(y) ? "not positive" : "not finite") + " at x = " +
                  detail::cfg::fmt_double(x));
        return;
      }
    }
  };
  check_field("diffusion.psi", c.diffusion.psi, false);
  check_field("diffusion.diffusivity", c.diffusion.diffusivity, true);
  for (std::size_t i = 0; i < c.initial.size(); ++i) {
    const std::string path = "initial.v" + std::to_string(i + 1);
    check_field(path, c.initial[i], false);
    try {
      const auto e = parse_expression(c.initial[i]);
      const std::size_t n = std::max<std::size_t>(c.diffusion.n, 3);
      for (std::size_t j = 0; j <= n; ++j)
        if (e(c.diffusion.length * static_cast<double>(j) / static_cast<double>(n)) < 0.0) {
          r.add(Code::bad_value, path, "initial data must be nonnegative");
          break;
        }
    } catch (const ExpressionError&) {
    }
  }

  if (!r.issues.empty()) throw ConfigError(std::move(r.issues));
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({{ConfigErrorCode::file_not_found, path, "cannot open file"}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Writes every field explicitly; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ScenarioConfig& c) {
  namespace pt = boost::property_tree;
  using detail::cfg::fmt_double;
  using detail::cfg::join;
  pt::ptree t;
  t.put("kind", to_string(c.kind));
  t.put("id", c.id);
  if (c.needs_network()) {
    t.put("network.alpha", join(c.network.alpha));
    t.put("network.beta", join(c.network.beta));
    t.put("network.l", fmt_double(c.network.l));
    t.put("network.k", fmt_double(c.network.k));
  }
  t.put("diffusion.n", c.diffusion.n);
  t.put("diffusion.length", fmt_double(c.diffusion.length));
  t.put("diffusion.psi", c.diffusion.psi);
  t.put("diffusion.diffusivity", c.diffusion.diffusivity);
  if (c.needs_network()) {
    pt::ptree init;
    for (std::size_t i = 0; i < c.initial.size(); ++i)
      init.put("v" + std::to_string(i + 1), c.initial[i]);
    t.add_child("initial", init);
  }
  const auto& nm = c.numerics;
  t.put("numerics.dt", fmt_double(nm.dt));
  t.put("numerics.t_end", fmt_double(nm.t_end));
  t.put("numerics.sample_every", nm.sample_every);
  t.put("numerics.reaction", nm.reaction ? "true" : "false");
  t.put("numerics.tol", fmt_double(nm.tol));
  t.put("numerics.samples", nm.samples);
  if (nm.rate_tolerance) t.put("numerics.rate_tolerance", fmt_double(*nm.rate_tolerance));
  t.put("numerics.fit_window", fmt_double(nm.fit_window));
  t.put("numerics.fit_floor", fmt_double(nm.fit_floor));
  t.put("numerics.min_r2", fmt_double(nm.min_r2));
  t.put("numerics.conservation_tol", fmt_double(nm.conservation_tol));
  t.put("numerics.positivity_tol", fmt_double(nm.positivity_tol));
  t.put("numerics.clamp_tol", fmt_double(nm.clamp_tol));
  t.put("numerics.bound_tol", fmt_double(nm.bound_tol));
  t.put("output.directory", c.output.directory);
  t.put("output.series", c.output.series ? "true" : "false");
  t.put("output.report", c.output.report ? "true" : "false");
  if (!c.output.snapshots.empty()) t.put("output.snapshots", join(c.output.snapshots));
  t.put("gap.sizes", join(c.gap.sizes));
  if (c.kind == ScenarioKind::sweep || !c.sweep.values.empty()) {
    t.put("sweep.parameter", to_string(c.sweep.parameter));
    t.put("sweep.values", join(c.sweep.values));
  }
  std::ostringstream os;
  pt::write_ini(os, t);
  return os.str();
}

}  // namespace rdlab
