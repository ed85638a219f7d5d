#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semiwave/config.hpp"

namespace semiwave {

/// Command-line overrides of config values.
struct Flags {
  std::optional<std::vector<std::size_t>> m;
  std::optional<std::vector<double>> dt;
  std::optional<std::string> out;
  std::optional<int> k;
  std::optional<double> j;
  std::optional<std::vector<double>> delta;
  std::optional<std::string> integrator;
  int threads = 1;
};

const std::vector<std::string>& subcommand_names();

/// Resolves `preset:NAME`, then a readable file, then a bare preset name.
Config resolve_config(const std::string& ref);

/// Runs one subcommand and writes its files plus manifest.txt into the
/// output directory. Returns 0 iff every check passed, 1 when a check
/// failed and 2 on configuration or input errors. Failures are reported
/// on `out` as a `[failure]` section of key = value lines.
int run(const std::string& subcommand, const Config& cfg, const Flags& flags, std::ostream& out,
        std::ostream& err);

/// %.17g
std::string format_real(double v);

/// Writes to `path`.tmp and renames over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

std::string trajectory_csv(const Trajectory& traj);

}  // namespace semiwave
