#pragma once

// Resonance datasets as comma-delimited text.
//
//   # scan.optical_axis = 1, 1, 0
//   angle_deg,frequency_MHz,kind,site,weight
//   0,12.31,ground,1,1
//
// The header is mandatory; site and weight (and field_T) columns are
// optional. Comment lines of the form `# key = value` carry scan metadata
// (keys as in the run configuration) that override the configured scan.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "garnetspin/config.hpp"
#include "garnetspin/fitting.hpp"
#include "garnetspin/spectra.hpp"

namespace garnetspin {

struct ResonanceFile {
  std::vector<Resonance> resonances;
  ResonanceKind kind = ResonanceKind::ground_splitting;
  std::vector<std::pair<std::string, std::string>> metadata;  // key, value
};

/// Throws InputError for a missing header, unknown columns, a malformed row
/// (message names the data row), or mixed kinds.
ResonanceFile read_resonances(std::istream& in, const std::string& source);
ResonanceFile load_resonances(const std::filesystem::path& path);

/// Applies scan metadata from a dataset onto a configuration.
RunConfig with_metadata(RunConfig cfg, const ResonanceFile& file, const std::string& source);

void write_resonances(std::ostream& out, std::span<const Resonance> resonances, const RotationScan& scan,
                      Convention convention, std::uint64_t seed);

/// Reads a trace written by write_trace_csv (offset_MHz,amplitude). The
/// offsets must be uniform and strictly increasing.
SpectrumTrace read_trace(std::istream& in, const std::string& source);
SpectrumTrace load_trace(const std::filesystem::path& path);

}  // namespace garnetspin
