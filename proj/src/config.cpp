#include "semiwave/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

namespace semiwave {

namespace {

const std::map<std::string, std::regex>& key_patterns() {
  static const std::map<std::string, std::regex> patterns = {
      {"domain", std::regex(R"(dim|L[123]|grid|time_samples|boundary_tol)")},
      {"basis", std::regex(R"(m|quad_order|m_list|m_ref)")},
      {"coefficients",
       std::regex(R"(rho|rho_dt|c|alpha|b\.[123]|A_s\.[123][123](_dt)?|A_a\.[123][123](_d[xyz])?)")},
      {"nonlinearity", std::regex(R"(kind|p|F|lip|growth_p|z_nodes|F_values)")},
      {"sources", std::regex(R"(f|g0|g0_dt|Gvec\.[123](_dt)?|u_exact)")},
      {"initial", std::regex(R"(u0|u1|delta)")},
      {"time", std::regex(R"(T|dt|integrator|newton_tol|max_iter|sample_every|dt_list|dt_ref|reference)")},
      {"output", std::regex(R"(dir)")},
      {"approx", std::regex(R"(k|j)")},
  };
  return patterns;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail_line(const std::string& name, int line, const std::string& msg) {
  throw ConfigError(name + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  const auto s = sections.find(section);
  if (s == sections.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  sections[section][key] = value;
}

Config parse_config(const std::string& text, const std::string& name) {
  Config cfg;
  cfg.name = name;
  cfg.text = text;
  std::istringstream in(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail_line(name, line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!key_patterns().count(section)) fail_line(name, line_no, "unknown section [" + section + "]");
      cfg.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_line(name, line_no, "expected 'key = value'");
    if (section.empty()) fail_line(name, line_no, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!std::regex_match(key, key_patterns().at(section)))
      fail_line(name, line_no, "unknown key '" + key + "' in [" + section + "]");
    auto& sec = cfg.sections[section];
    if (sec.count(key)) fail_line(name, line_no, "duplicate key '" + section + "." + key + "'");
    sec[key] = value;
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void check_required(const Config& cfg, const std::string& subcommand) {
  auto need = [&](const std::string& section, const std::string& key) {
    if (!cfg.has(section, key)) throw ConfigError("missing required key '" + section + "." + key + "'");
  };
  need("domain", "dim");
  const auto dim_text = cfg.get("domain", "dim");
  int dim = 0;
  const auto r = std::from_chars(dim_text->data(), dim_text->data() + dim_text->size(), dim);
  if (r.ec != std::errc() || r.ptr != dim_text->data() + dim_text->size() || dim < 1 || dim > 3)
    throw ConfigError("domain.dim must be 1, 2 or 3");
  for (int i = 1; i <= dim; ++i) need("domain", "L" + std::to_string(i));
  need("basis", "m");
  need("time", "T");
  need("time", "dt");
  need("coefficients", "rho");
  for (int i = 1; i <= dim; ++i) need("coefficients", "A_s." + std::to_string(i) + std::to_string(i));
  need("initial", "u0");
  need("initial", "u1");
  if (subcommand == "mms") need("sources", "u_exact");
}

namespace {

double to_real(const Config& cfg, const std::string& section, const std::string& key) {
  const std::string v = *cfg.get(section, key);
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || v.empty())
    throw ConfigError(section + "." + key + ": '" + v + "' is not a number");
  return out;
}

long to_int(const Config& cfg, const std::string& section, const std::string& key) {
  const std::string v = *cfg.get(section, key);
  long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || v.empty())
    throw ConfigError(section + "." + key + ": '" + v + "' is not an integer");
  return out;
}

std::optional<double> opt_real(const Config& cfg, const std::string& section, const std::string& key) {
  if (!cfg.has(section, key)) return std::nullopt;
  return to_real(cfg, section, key);
}

Expr to_expr(const Config& cfg, const std::string& section, const std::string& key, VarPolicy policy) {
  const std::string v = *cfg.get(section, key);
  try {
    return parse(v, policy);
  } catch (const ParseError& e) {
    throw ConfigError(section + "." + key + ": parse error at offset " + std::to_string(e.offset()) + ": " +
                      e.message());
  }
}

ScalarField field(const Config& cfg, const std::string& section, const std::string& key, VarPolicy policy) {
  if (!cfg.has(section, key)) return {};
  ScalarField f(to_expr(cfg, section, key, policy));
  if (cfg.has(section, key + "_dt")) f.set_dt(to_expr(cfg, section, key + "_dt", policy));
  return f;
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    double v = 0.0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || r.ec != std::errc() || r.ptr != item.data() + item.size())
      throw ConfigError("'" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    std::size_t v = 0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || r.ec != std::errc() || r.ptr != item.data() + item.size() || v == 0)
      throw ConfigError("'" + item + "' is not a positive integer");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

ProblemSpec build_spec(const Config& cfg) {
  check_required(cfg, "");
  ProblemSpec spec;
  const int dim = static_cast<int>(to_int(cfg, "domain", "dim"));
  std::array<double, 3> L{1.0, 1.0, 1.0};
  for (int i = 0; i < dim; ++i) L[i] = to_real(cfg, "domain", "L" + std::to_string(i + 1));
  try {
    spec.domain = BoxDomain(dim, L);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("domain: ") + e.what());
  }
  if (cfg.has("domain", "grid")) spec.validation.grid = static_cast<int>(to_int(cfg, "domain", "grid"));
  if (cfg.has("domain", "time_samples"))
    spec.validation.time_samples = static_cast<int>(to_int(cfg, "domain", "time_samples"));
  if (cfg.has("domain", "boundary_tol")) spec.validation.boundary_tol = to_real(cfg, "domain", "boundary_tol");

  const VarPolicy space_time{dim, true};
  const VarPolicy space{dim, false};
  auto& co = spec.coefficients;
  co.rho = field(cfg, "coefficients", "rho", space_time);
  co.c = field(cfg, "coefficients", "c", space_time);
  for (int i = 0; i < 3; ++i) {
    const std::string bi = "b." + std::to_string(i + 1);
    if (i >= dim && cfg.has("coefficients", bi)) throw ConfigError("coefficients." + bi + ": index exceeds dim");
    co.b[i] = field(cfg, "coefficients", bi, space_time);
  }
  static const char* axis_suffix[3] = {"_dx", "_dy", "_dz"};
  for (const auto& [key, value] : cfg.sections.count("coefficients") ? cfg.sections.at("coefficients")
                                                                      : std::map<std::string, std::string>{}) {
    if (key.rfind("A_s.", 0) != 0 && key.rfind("A_a.", 0) != 0) continue;
    const int i = key[4] - '1', j = key[5] - '1';
    if (i >= dim || j >= dim) throw ConfigError("coefficients." + key + ": index exceeds dim");
    if (key.rfind("A_s.", 0) == 0 && i > j)
      throw ConfigError("coefficients." + key + ": give the upper triangle of the symmetric part");
    if (key.rfind("A_a.", 0) == 0 && i >= j)
      throw ConfigError("coefficients." + key + ": give the strict upper triangle of the antisymmetric part");
  }
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      const std::string ij = std::to_string(i + 1) + std::to_string(j + 1);
      co.As_upper[i][j] = field(cfg, "coefficients", "A_s." + ij, space_time);
      if (i == j) continue;
      ScalarField aa = field(cfg, "coefficients", "A_a." + ij, space_time);
      for (int k = 0; k < dim; ++k) {
        const std::string dk = "A_a." + ij + axis_suffix[k];
        if (cfg.has("coefficients", dk)) aa.set_dx(k, to_expr(cfg, "coefficients", dk, space_time));
      }
      co.Aa_upper[i][j] = aa;
    }

  auto& src = spec.sources;
  src.f = field(cfg, "sources", "f", space_time);
  src.g0 = field(cfg, "sources", "g0", space_time);
  for (int i = 0; i < dim; ++i) src.Gvec[i] = field(cfg, "sources", "Gvec." + std::to_string(i + 1), space_time);
  if (cfg.has("sources", "u_exact")) to_expr(cfg, "sources", "u_exact", space_time);

  spec.initial.u0 = field(cfg, "initial", "u0", space);
  spec.initial.u1 = field(cfg, "initial", "u1", space);
  spec.initial.truncation = opt_real(cfg, "approx", "j");
  if (spec.initial.truncation && !(*spec.initial.truncation > 0.0)) throw ConfigError("approx.j must be positive");

  const std::string kind = cfg.get("nonlinearity", "kind").value_or(
      cfg.has("nonlinearity", "F") ? "expr" : (cfg.has("nonlinearity", "p") ? "power" : "zero"));
  try {
    if (kind == "zero") {
      spec.nonlinearity = Nonlinearity();
    } else if (kind == "power") {
      if (!cfg.has("nonlinearity", "p")) throw ConfigError("missing required key 'nonlinearity.p'");
      spec.nonlinearity = Nonlinearity::power(to_real(cfg, "nonlinearity", "p"));
    } else if (kind == "expr") {
      if (!cfg.has("nonlinearity", "F")) throw ConfigError("missing required key 'nonlinearity.F'");
      spec.nonlinearity = Nonlinearity::expression(to_expr(cfg, "nonlinearity", "F", VarPolicy{1, false}),
                                                   opt_real(cfg, "nonlinearity", "lip"),
                                                   opt_real(cfg, "nonlinearity", "growth_p"));
    } else if (kind == "tabulated") {
      if (!cfg.has("nonlinearity", "z_nodes") || !cfg.has("nonlinearity", "F_values"))
        throw ConfigError("tabulated nonlinearity needs nonlinearity.z_nodes and nonlinearity.F_values");
      spec.nonlinearity = Nonlinearity::tabulated(parse_real_list(*cfg.get("nonlinearity", "z_nodes")),
                                                  parse_real_list(*cfg.get("nonlinearity", "F_values")));
    } else {
      throw ConfigError("nonlinearity.kind: unknown kind '" + kind + "' (zero, power, expr, tabulated)");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("nonlinearity: ") + e.what());
  }

  spec.T = to_real(cfg, "time", "T");
  if (!(spec.T > 0.0)) throw ConfigError("time.T must be positive");

  if (cfg.has("coefficients", "alpha")) {
    spec.alpha = to_real(cfg, "coefficients", "alpha");
  } else {
    spec.alpha = 1.0;
    const auto rep = validate(spec);
    spec.alpha = std::min(rep.min_rho, rep.min_As_eig);
  }
  return spec;
}

RunSettings build_settings(const Config& cfg) {
  RunSettings rs;
  const long m = to_int(cfg, "basis", "m");
  if (m < 1) throw ConfigError("basis.m must be positive");
  rs.m = static_cast<std::size_t>(m);
  if (cfg.has("basis", "quad_order")) rs.quad_order = static_cast<int>(to_int(cfg, "basis", "quad_order"));
  rs.solve.dt = to_real(cfg, "time", "dt");
  if (cfg.has("time", "integrator")) {
    try {
      rs.solve.integrator = integrator_from_string(*cfg.get("time", "integrator"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("time.integrator: ") + e.what());
    }
  }
  if (cfg.has("time", "newton_tol")) rs.solve.newton_tol = to_real(cfg, "time", "newton_tol");
  if (cfg.has("time", "max_iter")) rs.solve.max_iter = static_cast<int>(to_int(cfg, "time", "max_iter"));
  if (cfg.has("time", "sample_every")) rs.solve.sample_every = static_cast<int>(to_int(cfg, "time", "sample_every"));
  if (cfg.has("approx", "k")) {
    const long k = to_int(cfg, "approx", "k");
    if (k < 1) throw ConfigError("approx.k must be positive");
    rs.approx_k = static_cast<int>(k);
  }
  rs.truncation = opt_real(cfg, "approx", "j");
  rs.m_list = cfg.has("basis", "m_list") ? parse_size_list(*cfg.get("basis", "m_list")) : std::vector{rs.m};
  rs.dt_list = cfg.has("time", "dt_list") ? parse_real_list(*cfg.get("time", "dt_list")) : std::vector{rs.solve.dt};
  if (cfg.has("basis", "m_ref")) rs.m_ref = static_cast<std::size_t>(to_int(cfg, "basis", "m_ref"));
  rs.dt_ref = opt_real(cfg, "time", "dt_ref");
  if (cfg.has("time", "reference")) {
    const std::string r = *cfg.get("time", "reference");
    if (r != "exact" && r != "computed") throw ConfigError("time.reference must be 'exact' or 'computed'");
    rs.exact_reference = r == "exact";
  }
  rs.deltas = cfg.has("initial", "delta") ? parse_real_list(*cfg.get("initial", "delta")) : std::vector{1e-3, 1e-4};
  const int dim = static_cast<int>(to_int(cfg, "domain", "dim"));
  if (cfg.has("sources", "u_exact")) rs.u_exact = to_expr(cfg, "sources", "u_exact", VarPolicy{dim, true});
  if (rs.exact_reference && !rs.u_exact) throw ConfigError("time.reference = exact needs sources.u_exact");
  if (cfg.has("output", "dir")) rs.out_dir = *cfg.get("output", "dir");
  return rs;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace semiwave
