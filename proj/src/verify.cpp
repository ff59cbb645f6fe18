#include "garnetspin/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>

#include "garnetspin/fitting.hpp"
#include "garnetspin/spectra.hpp"

namespace garnetspin {

namespace {

constexpr std::array<double, 3> kTableGround{27.0, 146.0, 36.0};
constexpr std::array<double, 3> kTableExcited{7.0, 92.0, 16.0};
constexpr std::array<double, 3> kProductsGround{-7.23e-4, -4.47e-3, -9.99e-4};
constexpr std::array<double, 3> kProductsExcited{-1.55e-4, -3.95e-3, -5.57e-4};

CheckResult check(std::string name, double measured, double expected, double tol, std::string detail = {}) {
  CheckResult c;
  c.name = std::move(name);
  c.measured = measured;
  c.expected = expected;
  c.tolerance = tol;
  c.passed = std::abs(measured - expected) <= tol;
  c.detail = std::move(detail);
  return c;
}

CheckResult info(std::string name, double measured, std::string detail = {}) {
  CheckResult c;
  c.name = std::move(name);
  c.measured = measured;
  c.expected = std::nan("");
  c.informational = true;
  c.passed = true;
  c.detail = std::move(detail);
  return c;
}

void effective_g_checks(const RunConfig& cfg, std::vector<CheckResult>& out) {
  const char* axes = "xyz";
  for (const auto* level : {&cfg.ground, &cfg.excited}) {
    const bool ground = level == &cfg.ground;
    const auto products = level->products.value_or(ground ? kProductsGround : kProductsExcited);
    const auto reference = level->g_values.value_or(ground ? kTableGround : kTableExcited);
    const auto g = effective_g(level->constants, HyperfineTensor::from_products(level->constants, products));
    for (int a = 0; a < 3; ++a) {
      const double tol = ground && a == 1 ? 3.0 : 0.1;
      out.push_back(check(std::string("effective g ") + (ground ? "ground " : "excited ") + axes[a] + " (MHz/T)",
                          std::abs(g.g[a]), reference[a], tol, "A_J*Lambda products through the effective-g relation"));
    }
  }
}

void zeeman_checks(const RunConfig& cfg, std::vector<CheckResult>& out) {
  const auto ground = cfg.ground.parameters();
  const auto excited = cfg.excited.parameters();
  const Vec3 b = diagonal_direction();
  for (Convention conv : {Convention::equal_projection, Convention::si_table}) {
    const std::string tag = " <111> " + std::string(to_string(conv));
    const LocalField local = project_onto_site(b, site_frame(1, conv));
    const double dg = hyperfine_splitting(ground.effective_g(), local);
    const double de = hyperfine_splitting(excited.effective_g(), local);
    const double quad =
        (quadratic_shift(excited.constants, excited.tensor, local) - quadratic_shift(ground.constants, ground.tensor, local)) /
        1e3;
    if (conv == Convention::equal_projection) {
      out.push_back(check("linear Zeeman ground" + tag + " (MHz/T)", dg, 106.3, 0.5));
      out.push_back(check("linear Zeeman excited" + tag + " (MHz/T)", de, 66.0, 0.5));
      out.push_back(check("quadratic Zeeman transition" + tag + " (GHz/T^2)", quad, 1.09, 0.25));
    } else {
      out.push_back(info("linear Zeeman ground" + tag + " (MHz/T)", dg, "projection-convention discrepancy"));
      out.push_back(info("linear Zeeman excited" + tag + " (MHz/T)", de));
      out.push_back(info("quadratic Zeeman transition" + tag + " (GHz/T^2)", quad));
    }
  }
}

void clock_checks(const RunConfig& cfg, std::vector<CheckResult>& out) {
  const std::vector<int> sites{1, 2, 3, 4, 5, 6};
  ClockSearchOptions opts;
  opts.grid = cfg.grid;
  int best_matched = -1;
  Convention best_conv = cfg.convention;
  ClockSearchResult best_result;
  for (Convention conv : {Convention::si_table, Convention::equal_projection}) {
    SearchContext ctx = cfg.search_context();
    ctx.convention = conv;
    const auto result = find_clock_transitions(ctx, sites, opts);
    const auto matches = match_reference(result.solutions, table2_reference());
    int matched = 0, aliased = 0;
    for (const auto& m : matches) {
      if (!m.solution) continue;
      ++matched;
      if (m.alias != Eigen::Vector3i(1, 1, 1)) ++aliased;
    }
    std::ostringstream d;
    d << result.solutions.size() << " solutions, " << aliased << " matched through axis-sign aliases";
    out.push_back(info("clock rows matched (" + std::string(to_string(conv)) + ")", matched, d.str()));
    if (matched > best_matched) {
      best_matched = matched;
      best_conv = conv;
      best_result = result;
    }
  }
  const auto matches = match_reference(best_result.solutions, table2_reference());
  out.push_back(check("clock transitions recovered (" + std::string(to_string(best_conv)) + ")", best_matched, 24, 0,
                      "rows within 1 mT and 2 deg"));
  for (const auto& m : matches) {
    if (m.solution) continue;
    std::ostringstream d;
    d << "site " << m.reference.site << " " << to_string(m.reference.branch) << " " << m.reference.b_mT << " mT ("
      << m.reference.theta << ", " << m.reference.phi << ")";
    double nearest = std::nan("");
    for (const auto& s : best_result.solutions) {
      if (s.site == m.reference.site && s.branch == m.reference.branch) {
        nearest = s.b_star * 1e3;
        d << "; nearest solution " << std::setprecision(4) << nearest << " mT (" << s.theta << ", " << s.phi << ")";
        break;
      }
    }
    out.push_back(info("unmatched clock row", nearest, d.str()));
  }
  if (best_result.solutions.empty()) {
    out.push_back(check("clock curvature mean (Hz/G^2)", 0.0, 36.0, 9.0, "no solutions"));
    return;
  }
  double lo = 1e300, hi = -1e300, sum = 0.0;
  for (const auto& s : best_result.solutions) {
    lo = std::min(lo, s.curvature);
    hi = std::max(hi, s.curvature);
    sum += s.curvature;
  }
  const double mean = sum / static_cast<double>(best_result.solutions.size());
  out.push_back(check("clock curvature mean (Hz/G^2)", mean, 36.0, 0.25 * 36.0, "largest field-Hessian eigenvalue"));
  out.push_back(check("clock curvature spread (fraction)", (hi - lo) / mean, 0.0, 0.05));
}

RotationScan fit_scan() {
  RotationScan scan;
  scan.optical_axis = Vec3(1.0, 1.0, 0.0);
  scan.field_magnitude = 0.3;
  scan.angle_start = 0.0;
  scan.angle_stop = 180.0;
  scan.angle_step = 10.0;
  return scan;
}

bool within(const EffectiveGTensor& fit, const EffectiveGTensor& truth, double rel) {
  for (int a = 0; a < 3; ++a) {
    if (std::abs(fit.g[a] - std::abs(truth.g[a])) > rel * std::abs(truth.g[a])) return false;
  }
  return true;
}

void fit_checks(const RunConfig& cfg, int seeds, std::vector<CheckResult>& out) {
  const auto g = cfg.ground.parameters().effective_g().magnitudes();
  const auto e = cfg.excited.parameters().effective_g().magnitudes();
  int ground_ok = 0, r2_ok = 0, diff_ok = 0;
  double worst_r2 = 1.0;
  std::array<double, 3> diff_sq{};
  for (int s = 0; s < seeds; ++s) {
    ResonanceSynthesis spec;
    spec.scan = fit_scan();
    spec.convention = cfg.convention;
    spec.ground = g;
    spec.noise_fraction = 0.02;
    spec.seed = cfg.seed + static_cast<std::uint64_t>(s);
    FitProblem p;
    p.scan = spec.scan;
    p.convention = spec.convention;
    p.resonances = synth_resonances(spec);
    const auto gr = fit_ground_tensor(p);
    if (gr.converged && within(gr.g_values, g, 0.02)) ++ground_ok;
    if (gr.r_squared > 0.90) ++r2_ok;
    worst_r2 = std::min(worst_r2, gr.r_squared);

    spec.kind = ResonanceKind::difference_splitting;
    spec.excited = e;
    spec.seed += 1000;
    p.resonances = synth_resonances(spec);
    p.fixed_ground = g;
    const auto dr = fit_difference_tensor(p);
    if (dr.converged && within(dr.g_values, e, 0.03)) ++diff_ok;
    for (int a = 0; a < 3; ++a) diff_sq[a] += std::pow(dr.g_values.g[a] / std::abs(e.g[a]) - 1.0, 2);
  }
  const double need = std::ceil(0.9 * seeds);
  auto c = check("ground fit within 2% (seeds)", ground_ok, seeds, seeds - need, "19 angles x 6 sites, 2% noise");
  c.passed = ground_ok >= need;
  out.push_back(c);
  c = check("ground fit R^2 > 0.90 (seeds)", r2_ok, seeds, 0);
  c.detail = "worst R^2 " + std::to_string(worst_r2);
  out.push_back(c);
  c = check("difference fit within 3% (seeds)", diff_ok, seeds, seeds - need, "fixed ground, 2% noise");
  c.passed = diff_ok >= need;
  out.push_back(c);
  const char* axes = "xyz";
  for (int a = 0; a < 3; ++a) {
    out.push_back(info(std::string("difference fit e_") + axes[a] + " rms relative error",
                       std::sqrt(diff_sq[a] / seeds)));
  }
}

void spectra_checks(const RunConfig& cfg, std::vector<CheckResult>& out) {
  const auto g = cfg.ground.parameters().effective_g();
  const auto e = cfg.excited.parameters().effective_g();
  const Vec3 b = 0.09 * diagonal_direction();
  const auto hs = predict_hole_offsets(g, e, b, Convention::equal_projection);
  const double linewidth = 0.1;
  double min_amp = 1e300, span = 0.0;
  for (const auto& f : hs.features) {
    min_amp = std::min(min_amp, std::abs(f.amplitude));
    span = std::max(span, std::abs(f.offset));
  }
  ShbOptions opts;
  opts.linewidth = linewidth;
  opts.noise_sigma = min_amp / 10.0;
  opts.seed = cfg.seed;
  const OffsetGrid grid{-span - 1.0, span + 1.0, linewidth / 20.0};
  SpectrumTrace trace = synth_shb(hs.features, grid, opts);
  const auto positive = find_peaks(trace, 5, 0.5 * min_amp);
  for (auto& v : trace.amplitude) v = -v;
  const auto negative = find_peaks(trace, 5, 0.5 * min_amp);
  double worst = 0.0;
  for (const auto& f : hs.features) {
    const auto& peaks = f.amplitude > 0 ? positive : negative;
    double best = 1e300;
    for (const auto& p : peaks) best = std::min(best, std::abs(p.offset - f.offset));
    worst = std::max(worst, best);
  }
  out.push_back(check("SHB round trip worst offset error (MHz)", worst, 0.0, linewidth / 5.0,
                      std::to_string(hs.features.size()) + " features, SNR 10"));

  const auto r1 = odnmr_resonances(g, 0.03 * diagonal_direction() + Vec3(0.0, 0.004, -0.011), cfg.convention);
  const auto r2 = odnmr_resonances(g, 0.06 * diagonal_direction() + Vec3(0.0, 0.008, -0.022), cfg.convention);
  double lin = 0.0;
  for (std::size_t i = 0; i < r1.size() && i < r2.size(); ++i) {
    lin = std::max(lin, std::abs(r2[i].delta_g / (2.0 * r1[i].delta_g) - 1.0));
  }
  out.push_back(check("ODNMR doubling linearity (relative)", lin, 0.0, 1e-9));
}

void branching_checks(const RunConfig& cfg, std::vector<CheckResult>& out) {
  SearchContext ctx = cfg.search_context();
  for (int site = 1; site <= kSiteCount; ++site) {
    const auto map = branching_map(ctx, site);
    if (map.extrema.empty()) {
      out.push_back(check("branching max site " + std::to_string(site), 0.0, 0.05, 0.015, "undefined"));
      continue;
    }
    const auto& m = map.extrema.front();
    const Vec3 n = direction(m.theta, m.phi);
    const Vec3 x = site_frame(site, ctx.convention).x_axis;
    const double off = std::acos(std::min(1.0, std::abs(n.dot(x)))) * 180.0 / std::numbers::pi;
    out.push_back(check("branching max site " + std::to_string(site), m.value, 0.05, 0.015));
    out.push_back(check("branching max angle from local x site " + std::to_string(site) + " (deg)", off, 0.0, 15.0));
  }
}

void hygiene_checks(const RunConfig& cfg, std::vector<CheckResult>& out) {
  std::mt19937_64 rng(cfg.seed + 7);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(5.0, 150.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    TensorModel model;
    model.kind = i % 2 == 0 ? ResonanceKind::ground_splitting : ResonanceKind::difference_splitting;
    std::vector<double> p(model.parameter_count());
    for (auto& v : p) v = std::pow(pos(rng), 2);
    const LocalField b{0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng)};
    std::vector<double> grad(p.size());
    model.gradient(p, b, grad);
    double norm = 0.0;
    for (double v : grad) norm += v * v;
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double h = 1e-4 * p[j];
      auto pp = p, pm = p;
      pp[j] += h;
      pm[j] -= h;
      const double fd = (model.evaluate(pp, b) - model.evaluate(pm, b)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - grad[j]) / norm);
    }
  }
  out.push_back(check("fit Jacobian vs central differences (relative)", worst, 0.0, 1e-6, "100 random points, relative to the gradient norm"));

  SearchContext ctx = cfg.search_context();
  double worst_ratio = 0.0;
  for (SplittingModel model : {SplittingModel::magnitude, SplittingModel::signed_sum}) {
    ctx.model = model;
    for (int i = 0; i < 20; ++i) {
      const double theta = 20.0 + 140.0 * (0.5 + 0.5 * u(rng));
      const double phi = 180.0 * u(rng);
      const int site = 1 + i % kSiteCount;
      const auto d = [&](double h) {
        return angular_gradient_components(ctx, site, 0.05, theta, phi, all_branches()[0], h);
      };
      const auto a = d(0.4), b = d(0.2), c = d(0.1);
      for (const auto& [x, y, z] : {std::tuple{a.along_theta, b.along_theta, c.along_theta},
                                    std::tuple{a.along_phi, b.along_phi, c.along_phi}}) {
        worst_ratio = std::max(worst_ratio, std::abs((x - y) / (y - z) / 4.0 - 1.0));
      }
    }
  }
  out.push_back(check("angular gradient Richardson ratio deviation from 4 (fraction)", worst_ratio, 0.0, 0.05,
                      "steps 0.4, 0.2, 0.1 deg, both splitting models"));
}

}  // namespace

Vec3 diagonal_direction() { return Vec3(1.0, 1.0, 1.0).normalized(); }

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

VerifyReport run_verify(const RunConfig& cfg, const VerifyOptions& options) {
  VerifyReport r;
  effective_g_checks(cfg, r.checks);
  zeeman_checks(cfg, r.checks);
  if (options.include_clock_search) clock_checks(cfg, r.checks);
  fit_checks(cfg, options.fit_seeds, r.checks);
  spectra_checks(cfg, r.checks);
  branching_checks(cfg, r.checks);
  hygiene_checks(cfg, r.checks);
  return r;
}

void print_report(std::ostream& out, const VerifyReport& report) {
  out << std::setprecision(6);
  for (const auto& c : report.checks) {
    out << (c.informational ? "INFO" : c.passed ? "PASS" : "FAIL") << "  " << c.name << ": measured " << c.measured;
    if (!c.informational) out << ", expected " << c.expected << " +- " << c.tolerance;
    if (!c.detail.empty()) out << "  [" << c.detail << "]";
    out << "\n";
  }
  const auto failed = std::count_if(report.checks.begin(), report.checks.end(), [](const CheckResult& c) {
    return !c.passed;
  });
  out << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << "\n";
}

}  // namespace garnetspin
