#include "garnetspin/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

namespace garnetspin {

namespace {

constexpr double kMergeTolerance = 1e-6;  // MHz
constexpr double kMainAmplitude = -1.0;
constexpr double kSideAmplitude = -0.25;
constexpr double kAntiAmplitude = 0.25;

std::vector<ClassSplittings> class_splittings(const EffectiveGTensor& ground, const EffectiveGTensor* excited,
                                              const Vec3& b, Convention convention) {
  std::vector<ClassSplittings> out;
  if (b.norm() == 0.0) {
    out.push_back({{1, 2, 3, 4, 5, 6}, 0.0, 0.0});
    return out;
  }
  for (const auto& cls : symmetry_classes(b, convention)) {
    const LocalField local = project_onto_site(b, site_frame(cls.front(), convention));
    ClassSplittings c;
    c.sites = cls;
    c.delta_g = hyperfine_splitting(ground, local);
    c.delta_e = excited ? hyperfine_splitting(*excited, local) : 0.0;
    out.push_back(std::move(c));
  }
  return out;
}

double lorentzian(double x, double center, double hwhm) {
  const double d = x - center;
  return hwhm * hwhm / (d * d + hwhm * hwhm);
}

std::vector<double> grid_points(double start, double stop, double step) {
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = start + static_cast<double>(i) * step;
  return x;
}

void add_noise(std::vector<double>& y, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& v : y) v += noise(rng);
}

}  // namespace

std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::main_hole: return "main_hole";
    case FeatureKind::side_hole: return "side_hole";
    case FeatureKind::antihole_ground: return "antihole_ground";
    case FeatureKind::antihole_difference: return "antihole_difference";
    case FeatureKind::antihole_sum: return "antihole_sum";
  }
  return "unknown";
}

HoleStructure predict_hole_offsets(const EffectiveGTensor& ground, const EffectiveGTensor& excited, const Vec3& b,
                                   Convention convention) {
  HoleStructure hs;
  hs.classes = class_splittings(ground, &excited, b, convention);

  std::vector<HoleFeature> raw;
  for (const auto& c : hs.classes) {
    const double scale = static_cast<double>(c.sites.size()) / kSiteCount;
    raw.push_back({0.0, kMainAmplitude * scale, FeatureKind::main_hole, c.sites});
    const auto pair = [&](double offset, double amp, FeatureKind kind) {
      raw.push_back({offset, amp * scale, kind, c.sites});
      raw.push_back({-offset, amp * scale, kind, c.sites});
    };
    if (c.delta_g <= kMergeTolerance && c.delta_e <= kMergeTolerance) continue;
    pair(c.delta_e, kSideAmplitude, FeatureKind::side_hole);
    pair(c.delta_g, kAntiAmplitude, FeatureKind::antihole_ground);
    pair(c.delta_g - c.delta_e, kAntiAmplitude, FeatureKind::antihole_difference);
    pair(c.delta_g + c.delta_e, kAntiAmplitude, FeatureKind::antihole_sum);
  }
  std::stable_sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.offset < b.offset; });

  for (auto& f : raw) {
    if (!hs.features.empty() && std::abs(f.offset - hs.features.back().offset) <= kMergeTolerance) {
      auto& last = hs.features.back();
      last.amplitude += f.amplitude;
      for (int s : f.sites) {
        if (std::find(last.sites.begin(), last.sites.end(), s) == last.sites.end()) last.sites.push_back(s);
      }
      std::sort(last.sites.begin(), last.sites.end());
    } else {
      hs.features.push_back(std::move(f));
    }
  }
  return hs;
}

void OffsetGrid::validate() const {
  if (!(step > 0.0)) throw DomainError("offset grid step must be positive");
  if (!(stop > start)) throw DomainError("offset grid stop must exceed start");
}

std::size_t OffsetGrid::size() const {
  return static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
}

SpectrumTrace synth_shb(const std::vector<HoleFeature>& features, const OffsetGrid& grid, const ShbOptions& options) {
  grid.validate();
  if (!(options.linewidth > 0.0)) throw DomainError("linewidth must be positive");
  SpectrumTrace t;
  t.kind = TraceKind::shb;
  t.seed = options.seed;
  t.coarse_grid = grid.step > options.linewidth / 2.0;
  t.offsets = grid_points(grid.start, grid.stop, grid.step);
  t.amplitude.assign(t.offsets.size(), 0.0);
  const double hwhm = options.linewidth / 2.0;
  for (const auto& f : features) {
    if (options.only && std::find(options.only->begin(), options.only->end(), f.kind) == options.only->end()) {
      continue;
    }
    for (std::size_t i = 0; i < t.offsets.size(); ++i) {
      t.amplitude[i] += f.amplitude * lorentzian(t.offsets[i], f.offset, hwhm);
    }
  }
  add_noise(t.amplitude, options.noise_sigma, options.seed);
  return t;
}

std::vector<ClassSplittings> odnmr_resonances(const EffectiveGTensor& g, const Vec3& b, Convention convention) {
  auto classes = class_splittings(g, nullptr, b, convention);
  std::stable_sort(classes.begin(), classes.end(),
                   [](const auto& a, const auto& c) { return a.delta_g < c.delta_g; });
  return classes;
}

SpectrumTrace synth_odnmr(const EffectiveGTensor& g, const Vec3& b, Convention convention,
                          const OdnmrOptions& options) {
  if (!(options.start > 0.0) || !(options.stop > options.start)) throw DomainError("ODNMR scan range must be positive");
  if (!(options.step > 0.0)) throw DomainError("ODNMR step must be positive");
  if (!(options.rf_linewidth > 0.0)) throw DomainError("RF linewidth must be positive");
  SpectrumTrace t;
  t.kind = TraceKind::odnmr;
  t.seed = options.seed;
  t.coarse_grid = options.step > options.rf_linewidth / 2.0;
  t.offsets = grid_points(options.start, options.stop, options.step);
  t.amplitude.assign(t.offsets.size(), 0.0);
  if (b.norm() > 0.0) {
    const double hwhm = options.rf_linewidth / 2.0;
    for (const auto& c : odnmr_resonances(g, b, convention)) {
      const double amp = static_cast<double>(c.sites.size()) / kSiteCount;
      for (std::size_t i = 0; i < t.offsets.size(); ++i) t.amplitude[i] += amp * lorentzian(t.offsets[i], c.delta_g, hwhm);
    }
  }
  add_noise(t.amplitude, options.noise_sigma, options.seed);
  return t;
}

std::vector<Peak> find_peaks(const SpectrumTrace& trace, int window, double min_prominence) {
  if (window < 1 || window % 2 == 0) throw DomainError("smoothing window must be odd and >= 1");
  const std::size_t n = trace.amplitude.size();
  std::vector<Peak> peaks;
  if (n < 3) return peaks;

  const int half = window / 2;
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= static_cast<std::size_t>(half) ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) sum += trace.amplitude[k];
    s[i] = sum / static_cast<double>(hi - lo + 1);
  }

  const double step = trace.offsets.size() > 1 ? trace.offsets[1] - trace.offsets[0] : 1.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(s[i] > s[i - 1] && s[i] >= s[i + 1])) continue;
    double left_min = s[i];
    std::size_t k = i;
    while (k > 0) {
      --k;
      if (s[k] > s[i]) break;
      left_min = std::min(left_min, s[k]);
    }
    double right_min = s[i];
    k = i;
    while (k + 1 < n) {
      ++k;
      if (s[k] > s[i]) break;
      right_min = std::min(right_min, s[k]);
    }
    const double prominence = s[i] - std::max(left_min, right_min);
    if (prominence < min_prominence) continue;

    const double y0 = s[i - 1], y1 = s[i], y2 = s[i + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    double shift = 0.0;
    double height = y1;
    if (denom < 0.0) {
      shift = std::clamp(0.5 * (y0 - y2) / denom, -0.5, 0.5);
      height = y1 - 0.25 * (y0 - y2) * shift;
    }
    peaks.push_back({trace.offsets[i] + shift * step, height, prominence});
  }
  return peaks;
}

std::vector<Resonance> synth_resonances(const ResonanceSynthesis& spec) {
  if (spec.kind == ResonanceKind::difference_splitting && !spec.excited) {
    throw DomainError("difference data needs an excited tensor");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Resonance> out;
  for (const auto& point : scan_fields(spec.scan)) {
    for (int site = 1; site <= kSiteCount; ++site) {
      const double clean = predicted_splitting(spec.scan, spec.convention, site, point.angle, spec.kind, spec.ground,
                                               spec.excited, spec.scan.field_magnitude);
      Resonance r;
      r.scan_angle = point.angle;
      r.kind = spec.kind;
      r.site = site;
      r.frequency = spec.noise_fraction > 0.0 ? clean * (1.0 + spec.noise_fraction * noise(rng)) : clean;
      out.push_back(r);
    }
  }
  return out;
}

void write_trace_csv(std::ostream& out, const SpectrumTrace& trace) {
  out << "# kind=" << (trace.kind == TraceKind::shb ? "shb" : "odnmr") << " seed=" << trace.seed << "\n";
  out << "offset_MHz,amplitude\n";
  out << std::setprecision(10);
  for (std::size_t i = 0; i < trace.offsets.size(); ++i) out << trace.offsets[i] << "," << trace.amplitude[i] << "\n";
}

}  // namespace garnetspin
