#include "garnetspin/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "garnetspin/config.hpp"
#include "garnetspin/errors.hpp"
#include "garnetspin/fitting.hpp"
#include "garnetspin/io.hpp"
#include "garnetspin/search.hpp"
#include "garnetspin/spectra.hpp"
#include "garnetspin/verify.hpp"

namespace garnetspin {

namespace {

struct Common {
  std::string config;
  std::string convention;
  std::string sites;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> b_step;
  std::optional<double> angle_step;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Run configuration file");
  app->add_option("--convention", c.convention, "Site-axis convention: si-table or equal-projection");
  app->add_option("--site", c.sites, "Site ids, comma separated (default all)");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--out", c.out, "Output path");
  app->add_option("--b-step", c.b_step, "Field grid step, tesla");
  app->add_option("--angle-step", c.angle_step, "Angular grid step, degrees");
}

RunConfig load(const Common& c) {
  RunConfig cfg = c.config.empty() ? default_config() : load_config(c.config);
  if (!c.convention.empty()) {
    try {
      cfg.convention = parse_convention(c.convention);
    } catch (const DomainError& e) {
      throw InputError("--convention", 0, e.what());
    }
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.b_step) cfg.grid.b_step = *c.b_step;
  if (c.angle_step) {
    cfg.grid.theta_step = *c.angle_step;
    cfg.grid.phi_step = *c.angle_step;
  }
  try {
    cfg.grid.validate();
  } catch (const DomainError& e) {
    throw InputError("grid", 0, e.what());
  }
  return cfg;
}

std::vector<int> parse_sites(const std::string& text) {
  if (text.empty()) return {1, 2, 3, 4, 5, 6};
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int s = std::stoi(item, &used);
      if (used != item.size() || s < 1 || s > kSiteCount) throw std::invalid_argument(item);
      out.push_back(s);
    } catch (const std::exception&) {
      throw InputError("--site", 0, "site ids must be integers 1..6, got '" + item + "'");
    }
  }
  return out;
}

Vec3 parse_vector(const std::string& text, const std::string& what) {
  std::stringstream ss(text);
  std::string item;
  std::vector<double> v;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError(what, 0, "expected three comma-separated numbers");
    }
  }
  if (v.size() != 3) throw InputError(what, 0, "expected three comma-separated numbers");
  const Vec3 out(v[0], v[1], v[2]);
  if (out.norm() == 0.0) throw InputError(what, 0, "direction must be nonzero");
  return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw InputError(path.string(), 0, "cannot write output file");
  return f;
}

// Writes `text` to stdout and, when requested, to the --out file.
void emit(std::ostream& out, const std::string& path, const std::string& text) {
  out << text;
  if (!path.empty()) {
    auto f = open_output(path);
    f << text;
  }
}

std::filesystem::path sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return p.parent_path() / (p.stem().string() + suffix);
}

int cmd_predict(const Common& c, double field, const std::string& dir_text, std::ostream& out) {
  const RunConfig cfg = load(c);
  const Vec3 dir = parse_vector(dir_text, "--direction").normalized();
  const Vec3 b = field * dir;
  const auto ground = cfg.ground.parameters();
  const auto excited = cfg.excited.parameters();
  const auto g = ground.effective_g();
  const auto e = excited.effective_g();
  const auto classes = symmetry_classes(dir, cfg.convention);
  std::ostringstream t;
  t << std::setprecision(8);
  t << "# convention=" << to_string(cfg.convention) << " field_T=" << field << " direction=" << dir.x() << ","
    << dir.y() << "," << dir.z() << "\n";
  t << "site,class,b_x_T,b_y_T,b_z_T,Delta_g_MHz,Delta_e_MHz,shift_ground_MHz,shift_excited_MHz,"
       "quadratic_GHz_per_T2\n";
  for (int site : parse_sites(c.sites)) {
    const auto frame = site_frame(site, cfg.convention);
    const LocalField local = project_onto_site(b, frame);
    const LocalField unit = project_onto_site(dir, frame);
    std::size_t cls = 0;
    for (std::size_t k = 0; k < classes.size(); ++k) {
      if (std::find(classes[k].begin(), classes[k].end(), site) != classes[k].end()) cls = k + 1;
    }
    const double qg = quadratic_shift(ground.constants, ground.tensor, local);
    const double qe = quadratic_shift(excited.constants, excited.tensor, local);
    const double coeff = (quadratic_shift(excited.constants, excited.tensor, unit) -
                          quadratic_shift(ground.constants, ground.tensor, unit)) /
                         1e3;
    t << site << "," << cls << "," << local.x << "," << local.y << "," << local.z << ","
      << hyperfine_splitting(g, local) << "," << hyperfine_splitting(e, local) << "," << qg << "," << qe << ","
      << coeff << "\n";
  }
  t << "\noffset_MHz,amplitude,feature,sites\n";
  for (const auto& f : predict_hole_offsets(g, e, b, cfg.convention).features) {
    t << f.offset << "," << f.amplitude << "," << to_string(f.kind) << ",";
    for (std::size_t i = 0; i < f.sites.size(); ++i) t << (i ? " " : "") << f.sites[i];
    t << "\n";
  }
  emit(out, c.out, t.str());
  return exit_ok;
}

struct FitFlags {
  std::vector<std::string> files;
  std::string mode = "auto";
  bool assign = false;
  bool fit_offset = false;
  bool free_ground = false;
};

int cmd_fit(const Common& c, const FitFlags& flags, std::ostream& out) {
  const RunConfig cfg = load(c);
  const auto g0 = cfg.ground.parameters().effective_g().magnitudes();
  const auto e0 = cfg.excited.parameters().effective_g().magnitudes();
  std::ostringstream report, tensors, residuals, assignment;
  report << std::fixed << std::setprecision(3);
  tensors << std::setprecision(10) << "file,component,value_MHz_per_T,uncertainty_MHz_per_T,identified\n";
  residuals << std::setprecision(10) << "file,angle_deg,site,frequency_MHz,model_MHz,residual_MHz\n";
  assignment << std::setprecision(10)
             << "file,index,angle_deg,frequency_MHz,site,predicted_MHz,relative_residual,status\n";
  std::vector<EffectiveGTensor> fits;
  bool all_converged = true;
  std::optional<ResonanceKind> kind;

  for (const auto& path : flags.files) {
    const auto file = load_resonances(path);
    const RunConfig local = with_metadata(cfg, file, path);
    if (flags.mode != "auto" && parse_resonance_kind(flags.mode) != file.kind) {
      throw InputError(path, 0, "file holds '" + std::string(to_string(file.kind)) + "' data but --mode is " + flags.mode);
    }
    if (kind && *kind != file.kind) throw InputError(path, 0, "all files must hold the same kind of data");
    kind = file.kind;

    FitProblem p;
    p.scan = local.scan;
    p.convention = local.convention;
    p.resonances = file.resonances;
    if (file.kind == ResonanceKind::difference_splitting && !flags.free_ground) p.fixed_ground = g0;

    const bool unassigned = std::any_of(p.resonances.begin(), p.resonances.end(), [](const Resonance& r) {
      return !r.site.has_value();
    });
    if (flags.assign || unassigned) {
      AssignmentCandidates cand{g0, std::nullopt};
      if (file.kind == ResonanceKind::difference_splitting) cand.excited = e0;
      const auto rep = assign_sites(p.resonances, p.scan, p.convention, cand);
      for (const auto& en : rep.entries) {
        assignment << path << "," << en.index << "," << en.angle << "," << en.frequency << "," << en.site << ","
                   << en.predicted << "," << en.relative_residual << ","
                   << (en.status == AssignmentStatus::assigned       ? "assigned"
                       : en.status == AssignmentStatus::host_spin ? "host_spin"
                                                                   : "residual_too_large")
                   << "\n";
      }
      report << path << ": assigned " << rep.assigned.size() << " of " << rep.entries.size() << " resonances, "
             << rep.excluded_count() << " excluded\n";
      p.resonances = rep.assigned;
    }

    auto fit = [&](const FitProblem& q) {
      return q.resonances.front().kind == ResonanceKind::ground_splitting ? fit_ground_tensor(q)
                                                                          : fit_difference_tensor(q);
    };
    if (p.resonances.empty()) throw UnderdeterminedError(path + ": no usable resonances");
    FitResult r = fit(p);
    if (flags.fit_offset) {
      p.scan.angular_offset = fit_angular_offset(p, r.g_values);
      r = fit(p);
      report << path << ": fitted angular offset " << p.scan.angular_offset << " deg\n";
    }
    all_converged = all_converged && r.converged;
    const char* axes = "xyz";
    const std::string label = file.kind == ResonanceKind::ground_splitting ? "g" : "e";
    report << path << ": " << to_string(file.kind) << " fit, " << p.resonances.size() << " resonances, "
           << r.iterations << " iterations, " << (r.converged ? "converged" : "NOT converged") << "\n";
    for (int a = 0; a < 3; ++a) {
      report << "  " << label << "_" << axes[a] << " = " << r.g_values.g[a] << " +- " << r.uncertainties[a]
             << " MHz/T" << (r.identified[a] ? "" : " (not identified by these data)") << "\n";
      tensors << path << "," << label << "_" << axes[a] << "," << r.g_values.g[a] << "," << r.uncertainties[a] << ","
              << (r.identified[a] ? 1 : 0) << "\n";
    }
    if (r.ground_values && flags.free_ground) {
      for (int a = 0; a < 3; ++a) {
        report << "  g_" << axes[a] << " = " << r.ground_values->g[a] << " +- " << (*r.ground_uncertainties)[a]
               << " MHz/T\n";
      }
    }
    report << "  R^2 = " << std::setprecision(5) << r.r_squared << std::setprecision(3)
           << " (uncertainties from linearized covariance)\n";
    for (std::size_t i = 0; i < p.resonances.size() && i < r.residuals.size(); ++i) {
      const auto& res = p.resonances[i];
      residuals << path << "," << res.scan_angle << "," << res.site.value_or(0) << "," << res.frequency << ","
                << res.frequency - r.residuals[i] << "," << r.residuals[i] << "\n";
    }
    fits.push_back(r.g_values);
  }
  if (fits.size() > 1) {
    const auto avg = average_tensors(fits);
    report << "average over " << fits.size() << " fits: " << avg.g[0] << ", " << avg.g[1] << ", " << avg.g[2]
           << " MHz/T (arithmetic mean of magnitudes)\n";
    for (int a = 0; a < 3; ++a) tensors << "average," << "xyz"[a] << "," << avg.g[a] << ",,\n";
  }
  out << report.str();
  if (!c.out.empty()) {
    open_output(c.out) << tensors.str();
    open_output(sibling(c.out, "_residuals.csv")) << residuals.str();
    open_output(sibling(c.out, "_assignment.csv")) << assignment.str();
  }
  return all_converged ? exit_ok : exit_numerical;
}

int cmd_scan_clock(const Common& c, const std::string& model, bool compare, std::ostream& out) {
  RunConfig cfg = load(c);
  if (!model.empty()) {
    try {
      cfg.search_model = parse_splitting_model(model);
    } catch (const DomainError& e) {
      throw InputError("--model", 0, e.what());
    }
  }
  const auto sites = parse_sites(c.sites);
  ClockSearchOptions opts;
  opts.grid = cfg.grid;
  const auto result = find_clock_transitions(cfg.search_context(), sites, opts);
  std::ostringstream t;
  write_clock_table(t, result.solutions);
  for (const auto& d : result.degenerate) {
    t << "# site " << d.site << " " << to_string(d.branch) << ": no isolated solutions\n";
  }
  if (compare) {
    std::vector<ReferenceClock> ref;
    for (const auto& r : table2_reference()) {
      if (std::find(sites.begin(), sites.end(), r.site) != sites.end()) ref.push_back(r);
    }
    int matched = 0;
    t << std::fixed << std::setprecision(2);
    for (const auto& m : match_reference(result.solutions, ref)) {
      t << "# reference site " << m.reference.site << " " << to_string(m.reference.branch) << " "
        << m.reference.b_mT << " mT (" << m.reference.theta << ", " << m.reference.phi << "): ";
      if (m.solution) {
        ++matched;
        t << "matched, dB " << m.delta_b_mT << " mT, dtheta " << m.delta_theta << ", dphi " << m.delta_phi;
        if (m.alias != Eigen::Vector3i(1, 1, 1)) {
          t << ", axis signs (" << m.alias.x() << "," << m.alias.y() << "," << m.alias.z() << ")";
        }
      } else {
        t << "unmatched";
      }
      t << "\n";
    }
    t << "# matched " << matched << " of " << ref.size() << " reference rows\n";
  }
  emit(out, c.out, t.str());
  return exit_ok;
}

int single_site(const Common& c) {
  const auto sites = parse_sites(c.sites.empty() ? "1" : c.sites);
  if (sites.size() != 1) throw InputError("--site", 0, "maps take exactly one site");
  return sites.front();
}

void write_map(const Common& c, const OrientationMap& map, std::ostream& out) {
  std::ostringstream summary;
  summary << std::setprecision(8);
  for (const auto& e : map.extrema) {
    summary << "# " << to_string(e.type) << " theta=" << e.theta << " phi=" << e.phi << " value=" << e.value << "\n";
  }
  if (map.undefined) summary << "# some orientations are undefined\n";
  if (c.out.empty()) {
    out << summary.str();
    write_map_csv(out, map);
  } else {
    out << summary.str();
    auto f = open_output(c.out);
    f << summary.str();
    write_map_csv(f, map);
  }
}

AngularGrid map_grid(const Common& c) {
  AngularGrid g;
  if (c.angle_step) g.theta_step = g.phi_step = *c.angle_step;
  try {
    g.validate();
  } catch (const DomainError& e) {
    throw InputError("--angle-step", 0, e.what());
  }
  return g;
}

struct SynthFlags {
  std::string kind;
  double field = 0.09;
  std::string direction = "1,1,1";
  std::optional<double> noise;
  std::optional<double> linewidth;
  std::string mode = "ground";
  double start = -20.0, stop = 20.0, step = 0.01;
};

int cmd_synth(const Common& c, const SynthFlags& s, std::ostream& out) {
  const RunConfig cfg = load(c);
  const auto g = cfg.ground.parameters().effective_g();
  const auto e = cfg.excited.parameters().effective_g();
  std::ostringstream t;
  if (s.kind == "resonances") {
    ResonanceSynthesis spec;
    spec.scan = cfg.scan;
    spec.convention = cfg.convention;
    spec.ground = g.magnitudes();
    spec.kind = parse_resonance_kind(s.mode);
    if (spec.kind == ResonanceKind::difference_splitting) spec.excited = e.magnitudes();
    spec.noise_fraction = s.noise.value_or(cfg.spectra.resonance_noise);
    spec.seed = cfg.seed;
    const auto res = synth_resonances(spec);
    write_resonances(t, res, spec.scan, spec.convention, spec.seed);
  } else {
    const Vec3 b = s.field * parse_vector(s.direction, "--direction").normalized();
    SpectrumTrace trace;
    if (s.kind == "shb") {
      ShbOptions o;
      o.linewidth = s.linewidth.value_or(cfg.spectra.shb_linewidth);
      o.noise_sigma = s.noise.value_or(cfg.spectra.shb_noise);
      o.seed = cfg.seed;
      trace = synth_shb(predict_hole_offsets(g, e, b, cfg.convention).features, {s.start, s.stop, s.step}, o);
    } else {
      OdnmrOptions o;
      o.rf_linewidth = s.linewidth.value_or(cfg.spectra.odnmr_linewidth);
      o.start = cfg.spectra.odnmr_start;
      o.stop = cfg.spectra.odnmr_stop;
      o.step = cfg.spectra.odnmr_step;
      o.noise_sigma = s.noise.value_or(cfg.spectra.odnmr_noise);
      o.seed = cfg.seed;
      trace = synth_odnmr(g, b, cfg.convention, o);
    }
    write_trace_csv(t, trace);
    if (trace.coarse_grid) out << "# warning: grid step exceeds half the linewidth\n";
  }
  if (c.out.empty()) {
    out << t.str();
  } else {
    open_output(c.out) << t.str();
  }
  return exit_ok;
}

int cmd_find_peaks(const Common& c, const std::string& path, int window, double prominence, bool holes,
                   std::ostream& out) {
  if (window < 1 || window % 2 == 0) throw InputError("--window", 0, "window must be a positive odd integer");
  SpectrumTrace trace = load_trace(path);
  if (holes) {
    for (auto& v : trace.amplitude) v = -v;
  }
  std::ostringstream t;
  t << std::setprecision(10) << "offset_MHz,amplitude,prominence\n";
  for (const auto& p : find_peaks(trace, window, prominence)) {
    t << p.offset << "," << (holes ? -p.amplitude : p.amplitude) << "," << p.prominence << "\n";
  }
  emit(out, c.out, t.str());
  return exit_ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spin Hamiltonian tools for Tm-doped garnet sites"};
  app.require_subcommand(1);
  Common common;

  auto* predict = app.add_subcommand("predict", "Per-site splittings, quadratic shifts and hole offsets");
  add_common(predict, common);
  double predict_field = 1.0;
  std::string predict_dir = "1,1,1";
  predict->add_option("--field", predict_field, "Field magnitude, tesla")->check(CLI::NonNegativeNumber);
  predict->add_option("--direction", predict_dir, "Field direction x,y,z in the cubic frame");

  auto* fit = app.add_subcommand("fit", "Fit a tensor to resonance datasets");
  add_common(fit, common);
  FitFlags fit_flags;
  fit->add_option("files", fit_flags.files, "Resonance files, one per rotation")->required();
  fit->add_option("--mode", fit_flags.mode, "auto, ground or difference")
      ->check(CLI::IsMember({"auto", "ground", "difference"}));
  fit->add_flag("--assign", fit_flags.assign, "Assign sites from the configured tensors");
  fit->add_flag("--fit-offset", fit_flags.fit_offset, "Fit a scalar scan-angle offset");
  fit->add_flag("--free-ground", fit_flags.free_ground, "Fit ground and excited jointly for difference data");

  auto* scan = app.add_subcommand("scan-clock", "Search optical clock transitions");
  add_common(scan, common);
  std::string model;
  bool compare = false;
  scan->add_option("--model", model, "Splitting model: signed-sum or magnitude");
  scan->add_flag("--compare", compare, "Compare against the tabulated reference rows");

  auto* broadening = app.add_subcommand("broadening-map", "Ground splitting over orientations");
  add_common(broadening, common);
  double broadening_field = 0.1;
  broadening->add_option("--field", broadening_field, "Field magnitude, tesla")->check(CLI::PositiveNumber);

  auto* branching = app.add_subcommand("branching-map", "Branching ratio over orientations");
  add_common(branching, common);

  auto* synth = app.add_subcommand("synth", "Synthetic SHB/ODNMR traces or resonance datasets");
  add_common(synth, common);
  SynthFlags synth_flags;
  synth->add_option("kind", synth_flags.kind, "shb, odnmr or resonances")
      ->required()
      ->check(CLI::IsMember({"shb", "odnmr", "resonances"}));
  synth->add_option("--field", synth_flags.field, "Field magnitude, tesla")->check(CLI::NonNegativeNumber);
  synth->add_option("--direction", synth_flags.direction, "Field direction x,y,z");
  synth->add_option("--noise", synth_flags.noise, "Noise level (additive sigma, or fraction for resonances)");
  synth->add_option("--linewidth", synth_flags.linewidth, "Feature linewidth FWHM, MHz");
  synth->add_option("--mode", synth_flags.mode, "Resonance kind: ground or difference")
      ->check(CLI::IsMember({"ground", "difference"}));
  synth->add_option("--start", synth_flags.start, "SHB grid start, MHz");
  synth->add_option("--stop", synth_flags.stop, "SHB grid stop, MHz");
  synth->add_option("--step", synth_flags.step, "SHB grid step, MHz");

  auto* peaks = app.add_subcommand("find-peaks", "Peaks of a trace file");
  add_common(peaks, common);
  std::string trace_path;
  int window = 5;
  double prominence = 0.05;
  bool holes = false;
  peaks->add_option("trace", trace_path, "Trace CSV (offset_MHz,amplitude)")->required();
  peaks->add_option("--window", window, "Smoothing window, odd number of samples");
  peaks->add_option("--min-prominence", prominence, "Minimum peak prominence");
  peaks->add_flag("--holes", holes, "Find minima instead of maxima");

  auto* verify = app.add_subcommand("verify", "Reproduction checks");
  add_common(verify, common);
  VerifyOptions verify_opts;
  bool skip_clock = false;
  verify->add_option("--fit-seeds", verify_opts.fit_seeds, "Synthetic datasets per fit check")
      ->check(CLI::PositiveNumber);
  verify->add_flag("--skip-clock", skip_clock, "Skip the clock-transition search");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_input;
  }

  try {
    if (*predict) return cmd_predict(common, predict_field, predict_dir, out);
    if (*fit) return cmd_fit(common, fit_flags, out);
    if (*scan) return cmd_scan_clock(common, model, compare, out);
    if (*broadening) {
      const RunConfig cfg = load(common);
      write_map(common, broadening_map(cfg.search_context(), single_site(common), broadening_field, map_grid(common)),
                out);
      return exit_ok;
    }
    if (*branching) {
      const RunConfig cfg = load(common);
      write_map(common, branching_map(cfg.search_context(), single_site(common), map_grid(common)), out);
      return exit_ok;
    }
    if (*synth) return cmd_synth(common, synth_flags, out);
    if (*peaks) return cmd_find_peaks(common, trace_path, window, prominence, holes, out);
    if (*verify) {
      const RunConfig cfg = load(common);
      verify_opts.include_clock_search = !skip_clock;
      const auto report = run_verify(cfg, verify_opts);
      std::ostringstream t;
      print_report(t, report);
      emit(out, common.out, t.str());
      return report.all_passed() ? exit_ok : exit_check_failed;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  } catch (const UnderdeterminedError& e) {
    err << "error: " << e.what() << "\n";
    return exit_numerical;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  }
  return exit_input;
}

}  // namespace garnetspin
