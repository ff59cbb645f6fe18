#pragma once

// Spectral hole structures, synthetic SHB / ODNMR traces, peak finding and a
// generator for labeled resonance datasets.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "garnetspin/fitting.hpp"
#include "garnetspin/geometry.hpp"
#include "garnetspin/hamiltonian.hpp"

namespace garnetspin {

enum class FeatureKind { main_hole, side_hole, antihole_ground, antihole_difference, antihole_sum };

std::string_view to_string(FeatureKind k);

struct HoleFeature {
  double offset = 0.0;     // MHz
  double amplitude = 0.0;  // negative for holes, positive for anti-holes
  FeatureKind kind = FeatureKind::main_hole;
  std::vector<int> sites;
};

struct ClassSplittings {
  std::vector<int> sites;
  double delta_g = 0.0;  // MHz
  double delta_e = 0.0;
};

struct HoleStructure {
  std::vector<ClassSplittings> classes;
  std::vector<HoleFeature> features;  // merged, sorted by offset
};

/// Hole and anti-hole positions for every symmetry class at field `b`
/// (cubic frame, tesla).
HoleStructure predict_hole_offsets(const EffectiveGTensor& ground, const EffectiveGTensor& excited, const Vec3& b,
                                   Convention convention = Convention::si_table);

enum class TraceKind { shb, odnmr };

struct OffsetGrid {
  double start = -20.0;  // MHz
  double stop = 20.0;
  double step = 0.01;

  void validate() const;
  std::size_t size() const;
};

struct SpectrumTrace {
  TraceKind kind = TraceKind::shb;
  std::vector<double> offsets;  // MHz, uniform
  std::vector<double> amplitude;
  std::uint64_t seed = 0;
  bool coarse_grid = false;  // step > linewidth / 2
};

struct ShbOptions {
  double linewidth = 0.5;     // MHz, full width at half maximum
  double noise_sigma = 0.0;   // additive Gaussian
  std::uint64_t seed = 0;
  std::optional<std::vector<FeatureKind>> only;  // render just these kinds
};

SpectrumTrace synth_shb(const std::vector<HoleFeature>& features, const OffsetGrid& grid, const ShbOptions& options);

struct OdnmrOptions {
  double rf_linewidth = 0.1;  // MHz, FWHM
  double start = 0.1;         // MHz
  double stop = 4.0;
  double step = 0.02;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Class-resolved splittings seen by ODNMR: (delta, sites), sorted by delta.
std::vector<ClassSplittings> odnmr_resonances(const EffectiveGTensor& g, const Vec3& b,
                                              Convention convention = Convention::si_table);

SpectrumTrace synth_odnmr(const EffectiveGTensor& g, const Vec3& b, Convention convention,
                          const OdnmrOptions& options = {});

struct Peak {
  double offset = 0.0;
  double amplitude = 0.0;
  double prominence = 0.0;
};

/// Moving-average smoothing (odd `window`), local maxima with prominence >=
/// `min_prominence`, parabolic refinement. Sorted by offset.
std::vector<Peak> find_peaks(const SpectrumTrace& trace, int window, double min_prominence);

/// Labeled resonances on every site for every angle of a scan.
struct ResonanceSynthesis {
  RotationScan scan;
  Convention convention = Convention::si_table;
  EffectiveGTensor ground;
  std::optional<EffectiveGTensor> excited;  // required for difference data
  ResonanceKind kind = ResonanceKind::ground_splitting;
  double noise_fraction = 0.0;  // multiplicative Gaussian
  std::uint64_t seed = 0;
};

std::vector<Resonance> synth_resonances(const ResonanceSynthesis& spec);

/// Two-column CSV (offset_MHz,amplitude) with a seed comment line.
void write_trace_csv(std::ostream& out, const SpectrumTrace& trace);

}  // namespace garnetspin
