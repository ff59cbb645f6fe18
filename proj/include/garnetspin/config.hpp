#pragma once

// Line-oriented `key = value` run configuration. Blank lines and `#`
// comments are ignored; vectors are comma separated.
//
//   ground.g_J = 1.16
//   ground.g = 27, 146, 36        (or ground.AJ_lambda = ...)
//   convention = si-table
//   grid.b_step = 0.001

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "garnetspin/geometry.hpp"
#include "garnetspin/hamiltonian.hpp"
#include "garnetspin/search.hpp"

namespace garnetspin {

struct LevelConfig {
  LevelConstants constants;
  std::optional<std::array<double, 3>> g_values;  // MHz/T
  std::optional<std::array<double, 3>> products;  // A_J * Lambda

  LevelParameters parameters() const;
};

struct SpectraConfig {
  double shb_linewidth = 0.5;  // MHz
  double shb_noise = 0.0;
  double odnmr_linewidth = 0.1;
  double odnmr_start = 0.1;
  double odnmr_stop = 4.0;
  double odnmr_step = 0.02;
  double odnmr_noise = 0.0;
  double resonance_noise = 0.0;  // multiplicative, for synthetic datasets
};

struct RunConfig {
  LevelConfig ground;
  LevelConfig excited;
  Convention convention = Convention::si_table;
  SplittingModel search_model = SplittingModel::signed_sum;
  GridSpec grid;
  RotationScan scan;
  SpectraConfig spectra;
  std::uint64_t seed = 0;
  std::map<std::string, std::filesystem::path> paths;

  SearchContext search_context() const;
};

/// Table I parameters with default grid and scan settings.
RunConfig default_config();

/// Applies `key = value` lines from `in` on top of `base`. Throws InputError
/// with `source:line` for malformed lines, unknown keys, bad values, two
/// parameterizations of one level, or unresolvable paths.
RunConfig parse_config(std::istream& in, const std::string& source, RunConfig base = default_config());
RunConfig load_config(const std::filesystem::path& path);

/// Applies a single assignment; `line` is used for error messages.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value, const std::string& source,
                        int line);

/// Path of the bundled data directory.
std::filesystem::path data_dir();

}  // namespace garnetspin
