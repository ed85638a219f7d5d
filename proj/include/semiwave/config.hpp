#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "semiwave/diagnostics.hpp"
#include "semiwave/problem.hpp"

namespace semiwave {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Flat INI-style run description: `key = value` lines under `[section]`
/// headers, `#` comments, optional double quotes around values.
struct Config {
  std::string name;  // file path or preset name
  std::string text;  // exact bytes the config was read from
  std::map<std::string, std::map<std::string, std::string>> sections;

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  bool has(const std::string& section, const std::string& key) const { return get(section, key).has_value(); }
  void set(const std::string& section, const std::string& key, const std::string& value);
};

/// Throws ConfigError with a line number on malformed lines, unknown
/// sections, unknown keys and duplicates.
Config parse_config(const std::string& text, const std::string& name = "<string>");
Config load_config(const std::string& path);

/// Built-in configs: eigenmode1d, bump1d, sec4_1d_p1, sec4_2d_antisym,
/// nonlipschitz_sqrt.
const std::vector<std::string>& preset_names();
std::string preset_text(const std::string& name);  // throws ConfigError for unknown names
Config preset(const std::string& name);

/// Throws ConfigError naming the first missing key. `subcommand` adds
/// its own requirements (mms needs sources.u_exact).
void check_required(const Config& cfg, const std::string& subcommand);

/// Everything besides the problem itself needed to run a subcommand.
struct RunSettings {
  std::size_t m = 0;
  int quad_order = 0;
  SolveOptions solve;
  std::optional<int> approx_k;
  std::optional<double> truncation;
  std::vector<std::size_t> m_list;
  std::vector<double> dt_list;
  std::optional<std::size_t> m_ref;
  std::optional<double> dt_ref;
  bool exact_reference = false;
  std::vector<double> deltas;
  std::optional<Expr> u_exact;
  std::string out_dir = "out";
  int threads = 1;
};

/// Parses every expression and number. Errors name the offending key.
/// alpha defaults to the sampled minimum of rho and of the smallest
/// eigenvalue of A_s when the config does not set it.
ProblemSpec build_spec(const Config& cfg);
RunSettings build_settings(const Config& cfg);

std::vector<double> parse_real_list(const std::string& text);
std::vector<std::size_t> parse_size_list(const std::string& text);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace semiwave
