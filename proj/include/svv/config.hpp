#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "svv/errors.hpp"
#include "svv/grid.hpp"
#include "svv/kernel.hpp"
#include "svv/kernel_approx.hpp"
#include "svv/market.hpp"
#include "svv/payoff.hpp"
#include "svv/sandwich.hpp"

namespace svv {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// '#' starts a comment unless inside a quoted string
inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

// split on top-level `delim`, respecting quotes, brackets and braces
inline std::vector<std::string> split_top_level(const std::string& s, char delim) {
  std::vector<std::string> parts;
  int depth = 0;
  bool quoted = false;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char ch = s[i];
    if (ch == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (!quoted) {
      if (ch == '[' || ch == '{') ++depth;
      if (ch == ']' || ch == '}') --depth;
      if (ch == delim && depth == 0) {
        parts.push_back(cur);
        cur.clear();
        continue;
      }
    }
    cur += ch;
  }
  parts.push_back(cur);
  return parts;
}

inline nlohmann::json parse_value(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  if (s.empty()) throw config_error(where + ": missing value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      throw config_error(where + ": unterminated string " + s);
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == '\\' && i + 2 < s.size() && (s[i + 1] == '"' || s[i + 1] == '\\'))
        out += s[++i];
      else
        out += s[i];
    }
    return out;
  }
  if (s.front() == '[') {
    if (s.back() != ']') throw config_error(where + ": unterminated array " + s);
    nlohmann::json arr = nlohmann::json::array();
    const std::string inner = trim(s.substr(1, s.size() - 2));
    if (inner.empty()) return arr;
    for (const std::string& part : split_top_level(inner, ','))
      arr.push_back(parse_value(part, where));
    return arr;
  }
  if (s.front() == '{') {
    if (s.back() != '}') throw config_error(where + ": unterminated table " + s);
    nlohmann::json obj = nlohmann::json::object();
    const std::string inner = trim(s.substr(1, s.size() - 2));
    if (inner.empty()) return obj;
    for (const std::string& part : split_top_level(inner, ',')) {
      const std::vector<std::string> kv = split_top_level(part, '=');
      if (kv.size() != 2) throw config_error(where + ": malformed inline entry " + part);
      obj[trim(kv[0])] = parse_value(kv[1], where + "." + trim(kv[0]));
    }
    return obj;
  }
  if (s == "true") return true;
  if (s == "false") return false;
  // integer first (keeps 64-bit seeds exact), then double
  {
    const bool neg = s.front() == '-';
    if (!neg) {
      std::uint64_t u = 0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), u);
      if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return u;
    } else {
      std::int64_t v = 0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return v;
    }
  }
  {
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (end == s.c_str() + s.size()) return d;
  }
  throw config_error(where + ": cannot parse value " + s);
}

}  // namespace detail

// Sectioned key-value text ([section] headers, key = value, `#` comments,
// arrays, inline tables, quoted strings) parsed into one JSON object per
// section.  Text whose first non-space character is `{` is taken as JSON
// directly, so both formats describe the same structure.
inline nlohmann::json parse_config_text(const std::string& text) {
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    if (ch == '{') {
      try {
        return nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
      }
    }
    break;
  }
  nlohmann::json root = nlohmann::json::object();
  std::string section;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = detail::trim(detail::strip_comment(line));
    if (stripped.empty()) continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']')
        throw config_error("config line " + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(stripped.substr(1, stripped.size() - 2));
      if (section.empty())
        throw config_error("config line " + std::to_string(lineno) + ": empty section name");
      if (!root.contains(section)) root[section] = nlohmann::json::object();
      continue;
    }
    const std::vector<std::string> kv = detail::split_top_level(stripped, '=');
    if (kv.size() != 2)
      throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw config_error("config line " + std::to_string(lineno) + ": key outside a section");
    const std::string key = detail::trim(kv[0]);
    root[section][key] = detail::parse_value(kv[1], section + "." + key);
  }
  return root;
}

inline nlohmann::json load_config_file(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw config_error("config: cannot open " + file.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

// Typed experiment description.  `raw` keeps the normalized JSON for
// echoing into run reports.
struct ExperimentConfig {
  // market
  bool has_market = false;
  double x0 = 1.0, rho = 0.0;
  TimeProfile rate;  // null when undiscounted
  std::string rate_desc = "0";
  // sandwich
  bool has_sandwich = false;
  TimeProfile phi, psi;
  std::string phi_desc, psi_desc;
  double gamma = 4.0, c = 1.0, y0 = 1.0, c3 = 1.0;
  // kernel
  std::string kernel_type;
  double hurst = 0.0, exponent = 0.0;
  // approx
  std::string method;
  std::size_t m = 0, m_ref = 0;
  std::vector<std::size_t> m_values;
  std::string tau_partition = "standard";
  double tau_min = 0.0, tau_max = 0.0;
  // grid
  std::size_t n_steps = 512;
  double horizon = 1.0;
  // run
  std::string kind, target;
  std::size_t n_paths = 0, n_inner = 0, partition_n = 10, degree = 2;
  double ridge = 1e-8;
  std::uint64_t master_seed = 0;
  int workers = 1;
  // payoff
  bool has_payoff = false;
  std::string payoff_type;
  double strike = 0.0, level = 0.0, amount = 1.0, value = 0.0;
  // output
  std::string out_dir = "out";
  std::vector<std::string> formats{"csv", "json"};

  nlohmann::json raw;
};

namespace detail {

inline const nlohmann::json* find_key(const nlohmann::json& root, const std::string& section,
                                      const std::string& key) {
  const auto sec = root.find(section);
  if (sec == root.end()) return nullptr;
  const auto it = sec->find(key);
  return it == sec->end() ? nullptr : &*it;
}

inline double as_double(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number()) throw config_error(where + ": expected a number");
  return v.get<double>();
}

inline double require_double(const nlohmann::json& root, const std::string& sec,
                             const std::string& key) {
  const nlohmann::json* v = find_key(root, sec, key);
  if (!v) throw config_error(sec + "." + key + ": required field is missing");
  return as_double(*v, sec + "." + key);
}

inline double opt_double(const nlohmann::json& root, const std::string& sec,
                         const std::string& key, double fallback) {
  const nlohmann::json* v = find_key(root, sec, key);
  return v ? as_double(*v, sec + "." + key) : fallback;
}

inline std::size_t as_count(const nlohmann::json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::size_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d <= 1e15) return static_cast<std::size_t>(d);
  }
  throw config_error(where + ": expected a non-negative integer");
}

inline std::size_t opt_count(const nlohmann::json& root, const std::string& sec,
                             const std::string& key, std::size_t fallback) {
  const nlohmann::json* v = find_key(root, sec, key);
  return v ? as_count(*v, sec + "." + key) : fallback;
}

inline std::string opt_string(const nlohmann::json& root, const std::string& sec,
                              const std::string& key, const std::string& fallback) {
  const nlohmann::json* v = find_key(root, sec, key);
  if (!v) return fallback;
  if (!v->is_string()) throw config_error(sec + "." + key + ": expected a string");
  return v->get<std::string>();
}

// number -> constant profile; "linear(a,b)" -> a + b t
inline std::pair<TimeProfile, std::string> parse_profile(const nlohmann::json& v,
                                                         const std::string& where) {
  if (v.is_number()) {
    const double c = v.get<double>();
    return {constant_profile(c), nlohmann::json(c).dump()};
  }
  if (v.is_string()) {
    const std::string s = trim(v.get<std::string>());
    if (s.rfind("linear(", 0) == 0 && s.back() == ')') {
      const std::string inner = s.substr(7, s.size() - 8);
      const std::vector<std::string> parts = split_top_level(inner, ',');
      if (parts.size() == 2) {
        const double a = as_double(parse_value(parts[0], where), where);
        const double b = as_double(parse_value(parts[1], where), where);
        return {linear_profile(a, b), s};
      }
    }
    throw config_error(where + ": unknown profile " + s +
                       " (use a number or \"linear(a,b)\")");
  }
  throw config_error(where + ": expected a number or profile string");
}

inline void reject_unknown_keys(const nlohmann::json& root) {
  static const std::map<std::string, std::set<std::string>> allowed = {
      {"market", {"x0", "rho", "rate"}},
      {"sandwich", {"phi", "psi", "gamma", "c", "y0", "c3"}},
      {"kernel", {"type", "H", "exponent"}},
      {"approx", {"method", "m", "m_values", "m_ref", "partition", "tau_min", "tau_max"}},
      {"grid", {"N", "T"}},
      {"run",
       {"kind", "target", "n_paths", "n_inner", "partition_n", "degree", "ridge", "master_seed",
        "workers"}},
      {"payoff", {"type", "strike", "level", "amount", "value"}},
      {"output", {"dir", "formats"}},
  };
  for (const auto& [section, body] : root.items()) {
    const auto it = allowed.find(section);
    if (it == allowed.end()) throw config_error("config: unknown section [" + section + "]");
    if (!body.is_object()) throw config_error("config: section " + section + " must be a table");
    for (const auto& [key, value] : body.items()) {
      (void)value;
      if (!it->second.count(key))
        throw config_error(section + "." + key + ": unknown field");
    }
  }
}

}  // namespace detail

inline const std::set<std::string>& known_run_kinds() {
  static const std::set<std::string> kinds = {"simulate",   "kernel-error", "vol-error",
                                              "price-error", "hedge-nmc",    "hedge-lsmc",
                                              "objective",   "convergence"};
  return kinds;
}

// kernel-error / vol-error / price-error are shorthand for a convergence
// study over the corresponding target.
inline std::string effective_target(const ExperimentConfig& cfg) {
  if (cfg.kind == "kernel-error") return "kernel";
  if (cfg.kind == "vol-error") return "vol";
  if (cfg.kind == "price-error") return "price";
  if (cfg.kind == "convergence") return cfg.target;
  return "";
}

inline ExperimentConfig config_from_json(const nlohmann::json& root) {
  if (!root.is_object()) throw config_error("config: top level must be a table");
  detail::reject_unknown_keys(root);
  ExperimentConfig cfg;
  cfg.raw = root;

  // run
  if (!root.contains("run")) throw config_error("run: section is required");
  cfg.kind = detail::opt_string(root, "run", "kind", "");
  if (!known_run_kinds().count(cfg.kind))
    throw config_error("run.kind: expected one of simulate | kernel-error | vol-error | "
                       "price-error | hedge-nmc | hedge-lsmc | objective | convergence, got \"" +
                       cfg.kind + "\"");
  cfg.target = detail::opt_string(root, "run", "target", "");
  if (cfg.kind == "convergence") {
    static const std::set<std::string> targets = {"kernel", "vol", "price", "hedge"};
    if (!targets.count(cfg.target))
      throw config_error("run.target: convergence needs target = kernel | vol | price | hedge");
  }
  {
    const nlohmann::json* seed = detail::find_key(root, "run", "master_seed");
    if (!seed)
      throw config_error("run.master_seed: required field is missing (no wall-clock seeding)");
    if (seed->is_number_unsigned())
      cfg.master_seed = seed->get<std::uint64_t>();
    else if (seed->is_number_integer() && seed->get<std::int64_t>() >= 0)
      cfg.master_seed = static_cast<std::uint64_t>(seed->get<std::int64_t>());
    else
      throw config_error("run.master_seed: expected a non-negative integer");
  }
  cfg.n_paths = detail::opt_count(root, "run", "n_paths", 0);
  cfg.n_inner = detail::opt_count(root, "run", "n_inner", 0);
  cfg.partition_n = detail::opt_count(root, "run", "partition_n", 10);
  cfg.degree = detail::opt_count(root, "run", "degree", 2);
  cfg.ridge = detail::opt_double(root, "run", "ridge", 1e-8);
  {
    const std::size_t w = detail::opt_count(root, "run", "workers", 1);
    cfg.workers = static_cast<int>(w);
  }

  // grid
  cfg.n_steps = detail::opt_count(root, "grid", "N", 512);
  cfg.horizon = detail::opt_double(root, "grid", "T", 1.0);
  if (cfg.n_steps == 0) throw config_error("grid.N: must be positive");
  if (!(cfg.horizon > 0.0)) throw config_error("grid.T: must be positive");

  // kernel
  if (!root.contains("kernel")) throw config_error("kernel: section is required");
  cfg.kernel_type = detail::opt_string(root, "kernel", "type", "");
  if (cfg.kernel_type == "fractional") {
    cfg.hurst = detail::require_double(root, "kernel", "H");
    if (!(cfg.hurst > 0.0 && cfg.hurst < 1.0))
      throw config_error("kernel.H: must lie in (0, 1)");
  } else if (cfg.kernel_type == "power") {
    cfg.exponent = detail::require_double(root, "kernel", "exponent");
    if (!(cfg.exponent > 0.0)) throw config_error("kernel.exponent: must be positive");
  } else {
    throw config_error("kernel.type: expected \"fractional\" or \"power\", got \"" +
                       cfg.kernel_type + "\"");
  }

  // approx
  if (!root.contains("approx")) throw config_error("approx: section is required");
  cfg.method = detail::opt_string(root, "approx", "method", "");
  if (cfg.method != "ou" && cfg.method != "bernstein")
    throw config_error("approx.method: expected \"ou\" or \"bernstein\", got \"" + cfg.method +
                       "\"");
  cfg.m = detail::opt_count(root, "approx", "m", 0);
  cfg.m_ref = detail::opt_count(root, "approx", "m_ref", 0);
  if (const nlohmann::json* mv = detail::find_key(root, "approx", "m_values")) {
    if (!mv->is_array()) throw config_error("approx.m_values: expected an array");
    for (const auto& v : *mv) {
      const std::size_t val = detail::as_count(v, "approx.m_values");
      if (val == 0) throw config_error("approx.m_values: entries must be positive");
      cfg.m_values.push_back(val);
    }
  }
  cfg.tau_partition = detail::opt_string(root, "approx", "partition", "standard");
  if (cfg.tau_partition != "standard" && cfg.tau_partition != "geometric")
    throw config_error("approx.partition: expected \"standard\" or \"geometric\"");
  if (cfg.tau_partition == "geometric") {
    cfg.tau_min = detail::require_double(root, "approx", "tau_min");
    cfg.tau_max = detail::require_double(root, "approx", "tau_max");
  }

  // market
  if (root.contains("market")) {
    cfg.has_market = true;
    cfg.x0 = detail::opt_double(root, "market", "x0", 1.0);
    cfg.rho = detail::opt_double(root, "market", "rho", 0.0);
    if (const nlohmann::json* r = detail::find_key(root, "market", "rate")) {
      auto [profile, desc] = detail::parse_profile(*r, "market.rate");
      cfg.rate_desc = desc;
      // a literal zero rate keeps the fast undiscounted path
      if (!(r->is_number() && r->get<double>() == 0.0)) cfg.rate = profile;
    }
  }

  // sandwich
  if (root.contains("sandwich")) {
    cfg.has_sandwich = true;
    const nlohmann::json* phi = detail::find_key(root, "sandwich", "phi");
    const nlohmann::json* psi = detail::find_key(root, "sandwich", "psi");
    if (!phi) throw config_error("sandwich.phi: required field is missing");
    if (!psi) throw config_error("sandwich.psi: required field is missing");
    std::tie(cfg.phi, cfg.phi_desc) = detail::parse_profile(*phi, "sandwich.phi");
    std::tie(cfg.psi, cfg.psi_desc) = detail::parse_profile(*psi, "sandwich.psi");
    cfg.gamma = detail::opt_double(root, "sandwich", "gamma", 4.0);
    cfg.c = detail::opt_double(root, "sandwich", "c", 1.0);
    cfg.y0 = detail::opt_double(root, "sandwich", "y0", 1.0);
    cfg.c3 = detail::opt_double(root, "sandwich", "c3", 1.0);
    if (!(cfg.gamma > 0.0)) throw config_error("sandwich.gamma: must be positive");
    if (cfg.c < 0.0) throw config_error("sandwich.c: must be non-negative");
  }

  // payoff
  if (root.contains("payoff")) {
    cfg.has_payoff = true;
    cfg.payoff_type = detail::opt_string(root, "payoff", "type", "");
    static const std::set<std::string> types = {"call", "put", "digital", "identity",
                                                "constant"};
    if (!types.count(cfg.payoff_type))
      throw config_error(
          "payoff.type: expected call | put | digital | identity | constant, got \"" +
          cfg.payoff_type + "\"");
    cfg.strike = detail::opt_double(root, "payoff", "strike", 0.0);
    cfg.level = detail::opt_double(root, "payoff", "level", 0.0);
    cfg.amount = detail::opt_double(root, "payoff", "amount", 1.0);
    cfg.value = detail::opt_double(root, "payoff", "value", 0.0);
    if ((cfg.payoff_type == "call" || cfg.payoff_type == "put") && !(cfg.strike > 0.0))
      throw config_error("payoff.strike: must be positive");
    if (cfg.payoff_type == "digital" && !(cfg.level > 0.0))
      throw config_error("payoff.level: must be positive");
  }

  // output
  cfg.out_dir = detail::opt_string(root, "output", "dir", "out");
  if (const nlohmann::json* f = detail::find_key(root, "output", "formats")) {
    if (!f->is_array()) throw config_error("output.formats: expected an array");
    cfg.formats.clear();
    for (const auto& v : *f) {
      if (!v.is_string()) throw config_error("output.formats: entries must be strings");
      const std::string fmt = v.get<std::string>();
      if (fmt != "csv" && fmt != "json")
        throw config_error("output.formats: expected \"csv\" or \"json\", got \"" + fmt + "\"");
      cfg.formats.push_back(fmt);
    }
  }

  // per-kind structural requirements
  const bool needs_dynamics = cfg.kind != "kernel-error" &&
                              !(cfg.kind == "convergence" && cfg.target == "kernel");
  if (needs_dynamics) {
    if (!cfg.has_sandwich) throw config_error("sandwich: section required for run.kind = " +
                                              cfg.kind);
    if (cfg.kind != "vol-error" && !(cfg.kind == "convergence" && cfg.target == "vol") &&
        !cfg.has_market)
      throw config_error("market: section required for run.kind = " + cfg.kind);
  }
  const bool is_study = !effective_target(cfg).empty();
  const bool is_hedge_study = effective_target(cfg) == "hedge";
  if (is_study) {
    if (cfg.m_values.size() < 3)
      throw config_error("approx.m_values: convergence studies need at least 3 values");
    if (is_hedge_study && cfg.m_ref == 0)
      throw config_error("approx.m_ref: required for hedge convergence studies");
  } else if (cfg.kind != "simulate") {
    if (cfg.m == 0) throw config_error("approx.m: required for run.kind = " + cfg.kind);
  } else if (cfg.m == 0 && cfg.m_values.empty()) {
    throw config_error("approx.m or approx.m_values: required for run.kind = simulate");
  }
  if (cfg.kind == "simulate" || cfg.kind == "objective" || cfg.kind == "hedge-lsmc" ||
      effective_target(cfg) == "vol" || effective_target(cfg) == "price") {
    if (cfg.n_paths == 0) throw config_error("run.n_paths: must be positive for run.kind = " +
                                             cfg.kind);
  }
  if (cfg.kind == "hedge-nmc" || cfg.kind == "objective" || is_hedge_study) {
    if (cfg.n_inner < 2) throw config_error("run.n_inner: must be at least 2 for run.kind = " +
                                            cfg.kind);
  }
  if (cfg.kind == "hedge-nmc" || cfg.kind == "hedge-lsmc" || cfg.kind == "objective" ||
      is_hedge_study) {
    if (!cfg.has_payoff) throw config_error("payoff: section required for run.kind = " + cfg.kind);
    if (cfg.partition_n == 0) throw config_error("run.partition_n: must be positive");
    if (cfg.n_steps % cfg.partition_n != 0)
      throw config_error("run.partition_n: grid.N = " + std::to_string(cfg.n_steps) +
                         " is not divisible by partition_n = " + std::to_string(cfg.partition_n) +
                         "; refine the grid");
  }
  return cfg;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& file) {
  return config_from_json(load_config_file(file));
}

// --- builders -------------------------------------------------------------

inline TimeGrid build_grid(const ExperimentConfig& cfg) {
  return TimeGrid::make_uniform(cfg.n_steps, cfg.horizon);
}

inline VolterraKernel build_kernel(const ExperimentConfig& cfg) {
  if (cfg.kernel_type == "fractional") return make_fractional_kernel(cfg.hurst, cfg.horizon);
  return make_power_kernel(cfg.exponent, cfg.horizon);
}

inline FactorBasis build_basis(const ExperimentConfig& cfg, std::size_t m) {
  if (cfg.method == "ou") {
    if (cfg.kernel_type != "fractional")
      throw config_error("approx.method: \"ou\" requires kernel.type = \"fractional\"");
    if (cfg.tau_partition == "geometric")
      return FactorBasis(
          ou_discretize_geometric(cfg.hurst, m, cfg.horizon, cfg.tau_min, cfg.tau_max));
    return FactorBasis(ou_discretize(cfg.hurst, m, cfg.horizon));
  }
  return FactorBasis(bernstein_fit(build_kernel(cfg), m));
}

inline SandwichSpec build_sandwich(const ExperimentConfig& cfg) {
  if (!cfg.has_sandwich) throw config_error("sandwich: section is required");
  SandwichSpec spec;
  spec.phi = cfg.phi;
  spec.psi = cfg.psi;
  spec.gamma = cfg.gamma;
  spec.c = cfg.c;
  spec.y0 = cfg.y0;
  spec.c3 = cfg.c3;
  return spec;
}

// `basis` may be empty for convolution-mode use.
inline MarketSpec build_market(const ExperimentConfig& cfg, std::optional<FactorBasis> basis) {
  MarketSpec spec;
  spec.sandwich = build_sandwich(cfg);
  spec.kernel = build_kernel(cfg);
  spec.basis = std::move(basis);
  spec.x0 = cfg.has_market ? cfg.x0 : 1.0;
  spec.rho = cfg.has_market ? cfg.rho : 0.0;
  spec.rate = cfg.rate;
  return spec;
}

inline Payoff build_payoff(const ExperimentConfig& cfg) {
  if (!cfg.has_payoff) throw config_error("payoff: section is required");
  if (cfg.payoff_type == "call") return call_payoff(cfg.strike);
  if (cfg.payoff_type == "put") return put_payoff(cfg.strike);
  if (cfg.payoff_type == "digital") return digital_payoff(cfg.level, cfg.amount);
  if (cfg.payoff_type == "identity") return identity_payoff();
  return constant_payoff(cfg.value);
}

// --- model assumption checks ----------------------------------------------

struct AssumptionCheck {
  std::string name;
  bool pass = true;
  std::string detail;
};

// The checks a run refuses to start without; kinds that do not use a given
// ingredient report the check as passing with an explanatory detail.
inline std::vector<AssumptionCheck> validate_model(const ExperimentConfig& cfg) {
  std::vector<AssumptionCheck> checks;
  const TimeGrid grid = build_grid(cfg);
  const VolterraKernel kernel = build_kernel(cfg);

  {
    AssumptionCheck c{"bounds: phi < psi on the grid", true, ""};
    if (cfg.has_sandwich) {
      for (double t : grid.t)
        if (!(cfg.phi(t) < cfg.psi(t))) {
          c.pass = false;
          c.detail = "phi(t) >= psi(t) at t = " + std::to_string(t);
          break;
        }
      if (c.pass) c.detail = "phi = " + cfg.phi_desc + ", psi = " + cfg.psi_desc;
    } else {
      c.detail = "no sandwich section";
    }
    checks.push_back(c);
  }
  {
    AssumptionCheck c{"start: phi(0) < y0 < psi(0)", true, ""};
    if (cfg.has_sandwich) {
      const double lo = cfg.phi(0.0), hi = cfg.psi(0.0);
      c.pass = lo < cfg.y0 && cfg.y0 < hi;
      c.detail = "phi(0) = " + std::to_string(lo) + ", y0 = " + std::to_string(cfg.y0) +
                 ", psi(0) = " + std::to_string(hi);
    } else {
      c.detail = "no sandwich section";
    }
    checks.push_back(c);
  }
  {
    AssumptionCheck c{"drift strength: gamma > 1/H - 1", true, ""};
    if (cfg.has_sandwich) {
      const double h = kernel.hoelder_index;
      const double bound = 1.0 / h - 1.0;
      c.pass = cfg.gamma > bound;
      c.detail = "gamma = " + std::to_string(cfg.gamma) + " vs 1/H - 1 = " +
                 std::to_string(bound) + " at H = " + std::to_string(h);
    } else {
      c.detail = "no sandwich section";
    }
    checks.push_back(c);
  }
  {
    AssumptionCheck c{"step size: dt * c3 < 1", true, ""};
    const double dt = grid.dt;
    c.pass = !cfg.has_sandwich || dt * cfg.c3 < 1.0;
    c.detail = "dt = " + std::to_string(dt) + ", c3 = " + std::to_string(cfg.c3);
    checks.push_back(c);
  }
  {
    AssumptionCheck c{"polynomial basis: kernel vanishes at zero lag", true, ""};
    if (cfg.method == "bernstein") {
      c.pass = kernel.value_at_zero.has_value() && *kernel.value_at_zero == 0.0;
      c.detail = kernel.value_at_zero
                     ? "value at zero lag = " + std::to_string(*kernel.value_at_zero)
                     : "kernel is singular at zero lag";
    } else {
      c.detail = "factor method is not polynomial";
    }
    checks.push_back(c);
  }
  {
    AssumptionCheck c{"correlation: |rho| < 1", true, ""};
    if (cfg.has_market) {
      c.pass = std::abs(cfg.rho) < 1.0;
      c.detail = "rho = " + std::to_string(cfg.rho);
    } else {
      c.detail = "no market section";
    }
    checks.push_back(c);
  }
  {
    AssumptionCheck c{"payoff: strike > 0", true, ""};
    if (cfg.has_payoff && (cfg.payoff_type == "call" || cfg.payoff_type == "put")) {
      c.pass = cfg.strike > 0.0;
      c.detail = "strike = " + std::to_string(cfg.strike);
    } else {
      c.detail = "no strike-bearing payoff";
    }
    checks.push_back(c);
  }
  return checks;
}

inline void require_assumptions(const ExperimentConfig& cfg) {
  for (const AssumptionCheck& c : validate_model(cfg))
    if (!c.pass) throw assumption_error("assumption violated -- " + c.name + " (" + c.detail + ")");
}

}  // namespace svv
