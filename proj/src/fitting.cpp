#include "garnetspin/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

namespace garnetspin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinSplitting = 1e-12;
constexpr double kZeroDataThreshold = 1e-6;  // MHz

double weighted_splitting(std::span<const double> squared, const LocalField& b) {
  const double s = squared[0] * b.x * b.x + squared[1] * b.y * b.y + squared[2] * b.z * b.z;
  return std::sqrt(std::max(s, 0.0));
}

void splitting_gradient(std::span<const double> squared, const LocalField& b, double sign,
                        std::span<double> out) {
  const double m = std::max(weighted_splitting(squared, b), kMinSplitting);
  out[0] = sign * b.x * b.x / (2.0 * m);
  out[1] = sign * b.y * b.y / (2.0 * m);
  out[2] = sign * b.z * b.z / (2.0 * m);
}

struct Linearization {
  Eigen::MatrixXd jacobian;  // rows scaled by sqrt(w)
  Eigen::VectorXd residual;  // sqrt(w) * (f - model)
  double cost = 0.0;
};

Linearization linearize(std::span<const Observation> obs, const TensorModel& model, const Eigen::VectorXd& p) {
  const int n = model.parameter_count();
  Linearization lin;
  lin.jacobian.resize(static_cast<Eigen::Index>(obs.size()), n);
  lin.residual.resize(static_cast<Eigen::Index>(obs.size()));
  std::vector<double> grad(n);
  const std::span<const double> params(p.data(), n);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double sw = std::sqrt(obs[i].weight);
    model.gradient(params, obs[i].field, grad);
    for (int j = 0; j < n; ++j) lin.jacobian(i, j) = sw * grad[j];
    lin.residual(i) = sw * (obs[i].frequency - model.evaluate(params, obs[i].field));
  }
  lin.cost = 0.5 * lin.residual.squaredNorm();
  return lin;
}

double cost_at(std::span<const Observation> obs, const TensorModel& model, const Eigen::VectorXd& p) {
  const std::span<const double> params(p.data(), model.parameter_count());
  double c = 0.0;
  for (const auto& o : obs) {
    const double r = o.frequency - model.evaluate(params, o.field);
    c += o.weight * r * r;
  }
  return 0.5 * c;
}

// Gradient of the cost projected onto the feasible set p >= 0.
Eigen::VectorXd projected_descent(const Linearization& lin, const Eigen::VectorXd& p) {
  Eigen::VectorXd d = lin.jacobian.transpose() * lin.residual;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (p(j) <= 0.0 && d(j) < 0.0) d(j) = 0.0;
  }
  return d;
}

std::vector<bool> identifiable(const Eigen::MatrixXd& normal) {
  const Eigen::Index n = normal.rows();
  std::vector<bool> ok(n, true);
  const double max_diag = normal.diagonal().maxCoeff();
  if (!(max_diag > 0.0)) return std::vector<bool>(n, false);
  Eigen::VectorXd scale(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (normal(j, j) <= 1e-14 * max_diag) {
      ok[j] = false;
      scale(j) = 0.0;
    } else {
      scale(j) = 1.0 / std::sqrt(normal(j, j));
    }
  }
  const Eigen::MatrixXd corr = scale.asDiagonal() * normal * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (es.eigenvalues()(k) > 1e-10) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (scale(j) != 0.0 && std::abs(es.eigenvectors()(j, k)) > 0.1) ok[j] = false;
    }
  }
  return ok;
}

double g_uncertainty(double variance_sq, double g) {
  if (!std::isfinite(variance_sq)) return kInf;
  const double sigma_sq = std::sqrt(std::max(variance_sq, 0.0));
  if (std::abs(g) > 0.0) return sigma_sq / (2.0 * std::abs(g));
  return std::sqrt(sigma_sq);
}

void check_uniform_kind(std::span<const Resonance> rs, ResonanceKind expected) {
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (rs[i].kind != expected) {
      throw DomainError("resonance " + std::to_string(i + 1) + " has kind " + std::string(to_string(rs[i].kind)) +
                        ", expected " + std::string(to_string(expected)));
    }
  }
}

TensorModel model_for(const FitProblem& p) {
  if (p.resonances.empty()) throw UnderdeterminedError("no resonances to fit");
  TensorModel m;
  m.kind = p.resonances.front().kind;
  if (m.kind == ResonanceKind::difference_splitting) m.fixed_ground = p.fixed_ground;
  return m;
}

std::vector<double> solution_vector(const FitResult& r, const TensorModel& m) {
  std::vector<double> g;
  if (m.parameter_count() == 6) {
    const auto& gr = r.ground_values.value().g;
    g.assign(gr.begin(), gr.end());
  }
  g.insert(g.end(), r.g_values.g.begin(), r.g_values.g.end());
  return g;
}

void fill_from_diagnostics(FitResult& r, const FitDiagnostics& d, int n) {
  r.r_squared = d.r_squared;
  const int off = n == 6 ? 3 : 0;
  for (int a = 0; a < 3; ++a) r.uncertainties[a] = d.uncertainties[off + a];
  if (n == 6) r.ground_uncertainties = std::array<double, 3>{d.uncertainties[0], d.uncertainties[1], d.uncertainties[2]};
}

LocalField local_field_at(const RotationScan& scan, Convention convention, int site, double angle, double field) {
  return project_onto_site(field * scan.direction_at(angle), site_frame(site, convention));
}

double golden_section(const auto& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::string_view to_string(ResonanceKind k) {
  return k == ResonanceKind::ground_splitting ? "ground" : "difference";
}

ResonanceKind parse_resonance_kind(std::string_view text) {
  if (text == "ground" || text == "ground_splitting") return ResonanceKind::ground_splitting;
  if (text == "difference" || text == "difference_splitting") return ResonanceKind::difference_splitting;
  throw DomainError("unknown resonance kind '" + std::string(text) + "' (expected ground or difference)");
}

int TensorModel::parameter_count() const {
  return kind == ResonanceKind::difference_splitting && !fixed_ground ? 6 : 3;
}

double TensorModel::evaluate(std::span<const double> squared, const LocalField& b) const {
  if (kind == ResonanceKind::ground_splitting) return weighted_splitting(squared, b);
  if (fixed_ground) return hyperfine_splitting(*fixed_ground, b) - weighted_splitting(squared, b);
  return weighted_splitting(squared.subspan(0, 3), b) - weighted_splitting(squared.subspan(3, 3), b);
}

void TensorModel::gradient(std::span<const double> squared, const LocalField& b, std::span<double> out) const {
  if (kind == ResonanceKind::ground_splitting) {
    splitting_gradient(squared, b, 1.0, out);
  } else if (fixed_ground) {
    splitting_gradient(squared, b, -1.0, out);
  } else {
    splitting_gradient(squared.subspan(0, 3), b, 1.0, out.subspan(0, 3));
    splitting_gradient(squared.subspan(3, 3), b, -1.0, out.subspan(3, 3));
  }
}

std::vector<Observation> build_observations(const FitProblem& p) {
  if (p.resonances.empty()) throw UnderdeterminedError("no resonances to fit");
  p.scan.validate();
  const ResonanceKind kind = p.resonances.front().kind;
  check_uniform_kind(p.resonances, kind);

  std::vector<double> angles;
  std::vector<Observation> obs;
  obs.reserve(p.resonances.size());
  double max_abs = 0.0;
  for (std::size_t i = 0; i < p.resonances.size(); ++i) {
    const Resonance& r = p.resonances[i];
    const std::string row = "resonance " + std::to_string(i + 1);
    if (!r.site || *r.site < 1 || *r.site > kSiteCount) throw DomainError(row + " has no site assignment");
    if (!(r.weight > 0.0) || !std::isfinite(r.weight)) throw DomainError(row + " has a non-positive weight");
    if (!std::isfinite(r.frequency)) throw DomainError(row + " has a non-finite frequency");
    max_abs = std::max(max_abs, std::abs(r.frequency));
    const double field = r.field_tesla.value_or(p.scan.field_magnitude);
    obs.push_back({local_field_at(p.scan, p.convention, *r.site, r.scan_angle, field), r.frequency, r.weight});
    if (std::none_of(angles.begin(), angles.end(), [&](double a) { return std::abs(a - r.scan_angle) < 1e-9; })) {
      angles.push_back(r.scan_angle);
    }
  }
  if (angles.size() < 3) {
    throw UnderdeterminedError("need at least 3 distinct orientations, got " + std::to_string(angles.size()));
  }
  if (kind == ResonanceKind::difference_splitting && max_abs < kZeroDataThreshold) {
    throw UnderdeterminedError("difference splittings vanish at every angle");
  }
  for (std::size_t i = 0; i < p.resonances.size(); ++i) {
    if (!(p.resonances[i].frequency > 0.0)) {
      throw DomainError("resonance " + std::to_string(i + 1) + " has a non-positive frequency");
    }
  }
  return obs;
}

FitResult fit_observations(std::span<const Observation> obs, const TensorModel& model,
                           std::span<const double> initial, const FitOptions& options) {
  const int n = model.parameter_count();
  if (static_cast<int>(initial.size()) != n) throw DomainError("initial guess has the wrong length");
  if (obs.empty()) throw UnderdeterminedError("no observations");

  Eigen::VectorXd p(n);
  for (int j = 0; j < n; ++j) p(j) = initial[j] * initial[j];

  FitResult result;
  double lambda = options.initial_damping;
  Linearization lin = linearize(obs, model, p);
  result.cost_history.push_back(lin.cost);
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd descent = projected_descent(lin, p);
    result.gradient_norm = descent.norm();
    if (result.gradient_norm < options.gradient_tolerance * (1.0 + lin.cost)) {
      result.converged = true;
      break;
    }
    const Eigen::MatrixXd normal = lin.jacobian.transpose() * lin.jacobian;
    const double max_diag = std::max(normal.diagonal().maxCoeff(), std::numeric_limits<double>::min());
    bool accepted = false;
    while (!accepted && lambda < 1e20) {
      Eigen::MatrixXd damped = normal;
      for (int j = 0; j < n; ++j) damped(j, j) += lambda * std::max(normal(j, j), 1e-12 * max_diag);
      const Eigen::VectorXd step = damped.ldlt().solve(lin.jacobian.transpose() * lin.residual);
      Eigen::VectorXd trial = (p + step).cwiseMax(0.0);
      const double trial_cost = cost_at(obs, model, trial);
      if (std::isfinite(trial_cost) && trial_cost <= lin.cost) {
        const bool stalled = (trial - p).norm() <= 1e-15 * (1.0 + p.norm());
        p = trial;
        lambda = std::max(lambda / options.damping_factor, 1e-12);
        lin = linearize(obs, model, p);
        result.cost_history.push_back(lin.cost);
        accepted = true;
        if (stalled) lambda = 1e20;
      } else {
        lambda *= options.damping_factor;
      }
    }
    if (!accepted || lambda >= 1e20) {
      const Eigen::VectorXd d = projected_descent(lin, p);
      result.gradient_norm = d.norm();
      result.converged = result.gradient_norm < options.gradient_tolerance * (1.0 + lin.cost);
      ++iter;
      break;
    }
  }
  result.iterations = iter;
  result.cost = lin.cost;

  result.residuals.resize(obs.size());
  const std::span<const double> params(p.data(), n);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    result.residuals[i] = obs[i].frequency - model.evaluate(params, obs[i].field);
  }

  const auto ok = identifiable(lin.jacobian.transpose() * lin.jacobian);
  const int off = n == 6 ? 3 : 0;
  for (int a = 0; a < 3; ++a) {
    result.g_values.g[a] = std::sqrt(p(off + a));
    result.identified[a] = ok[off + a];
  }
  if (n == 6) {
    result.ground_values = EffectiveGTensor{{std::sqrt(p(0)), std::sqrt(p(1)), std::sqrt(p(2))}};
  } else if (model.fixed_ground) {
    result.ground_values = model.fixed_ground->magnitudes();
  }

  std::vector<double> g(n);
  for (int j = 0; j < n; ++j) g[j] = std::sqrt(p(j));
  fill_from_diagnostics(result, diagnostics_for(obs, model, g), n);
  return result;
}

FitResult fit_ground_tensor(const FitProblem& p) {
  if (!p.resonances.empty()) check_uniform_kind(p.resonances, ResonanceKind::ground_splitting);
  const auto obs = build_observations(p);
  const std::array<double, 3> init = p.initial_guess.value_or(std::array<double, 3>{50.0, 100.0, 50.0});
  return fit_observations(obs, model_for(p), init, p.options);
}

FitResult fit_difference_tensor(const FitProblem& p) {
  if (!p.resonances.empty()) check_uniform_kind(p.resonances, ResonanceKind::difference_splitting);
  const auto obs = build_observations(p);
  const TensorModel model = model_for(p);
  std::vector<double> init;
  if (p.fixed_ground) {
    const auto g = p.fixed_ground->magnitudes();
    const std::array<double, 3> half{0.5 * g.g[0], 0.5 * g.g[1], 0.5 * g.g[2]};
    const auto e = p.initial_guess.value_or(half);
    init.assign(e.begin(), e.end());
  } else {
    const std::array<double, 3> ground{50.0, 100.0, 50.0};
    const std::array<double, 3> half{25.0, 50.0, 25.0};
    const auto e = p.initial_guess.value_or(half);
    init.assign(ground.begin(), ground.end());
    init.insert(init.end(), e.begin(), e.end());
  }
  return fit_observations(obs, model, init, p.options);
}

FitDiagnostics diagnostics_for(std::span<const Observation> obs, const TensorModel& model,
                               std::span<const double> g_values) {
  const int n = model.parameter_count();
  Eigen::VectorXd p(n);
  for (int j = 0; j < n; ++j) p(j) = g_values[j] * g_values[j];
  const Linearization lin = linearize(obs, model, p);

  FitDiagnostics d;
  const double ss_res = lin.residual.squaredNorm();
  double wsum = 0.0, wf = 0.0;
  for (const auto& o : obs) {
    wsum += o.weight;
    wf += o.weight * o.frequency;
  }
  const double mean = wf / wsum;
  double ss_tot = 0.0;
  for (const auto& o : obs) ss_tot += o.weight * (o.frequency - mean) * (o.frequency - mean);
  if (ss_tot > 0.0) {
    d.r_squared = 1.0 - ss_res / ss_tot;
  } else {
    d.r_squared = ss_res <= 1e-24 ? 1.0 : 0.0;
  }

  const int dof = static_cast<int>(obs.size()) - n;
  d.residual_variance = dof > 0 ? ss_res / dof : kInf;
  d.uncertainties.assign(n, kInf);

  const Eigen::MatrixXd normal = lin.jacobian.transpose() * lin.jacobian;
  const auto ok = identifiable(normal);
  if (dof <= 0 || std::find(ok.begin(), ok.end(), false) != ok.end()) {
    d.unbounded = true;
  }
  if (dof <= 0) return d;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normal);
  const double max_eig = es.eigenvalues().maxCoeff();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double ev = es.eigenvalues()(k);
    if (ev > 1e-14 * max_eig) inv += es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose() / ev;
  }
  for (int j = 0; j < n; ++j) {
    d.uncertainties[j] = ok[j] ? g_uncertainty(d.residual_variance * inv(j, j), g_values[j]) : kInf;
  }
  return d;
}

FitDiagnostics fit_diagnostics(const FitResult& result, const FitProblem& problem) {
  const auto obs = build_observations(problem);
  const TensorModel model = model_for(problem);
  const auto g = solution_vector(result, model);
  return diagnostics_for(obs, model, g);
}

double predicted_splitting(const RotationScan& scan, Convention convention, int site, double angle,
                           ResonanceKind kind, const EffectiveGTensor& ground,
                           const std::optional<EffectiveGTensor>& excited, double field_tesla) {
  const LocalField b = local_field_at(scan, convention, site, angle, field_tesla);
  const double dg = hyperfine_splitting(ground, b);
  if (kind == ResonanceKind::ground_splitting) return dg;
  if (!excited) throw DomainError("difference prediction needs an excited tensor");
  return dg - hyperfine_splitting(*excited, b);
}

double fit_angular_offset(const FitProblem& p, const EffectiveGTensor& g) {
  if (p.resonances.empty()) throw UnderdeterminedError("no resonances to fit");
  const ResonanceKind kind = p.resonances.front().kind;
  check_uniform_kind(p.resonances, kind);
  EffectiveGTensor ground = g;
  std::optional<EffectiveGTensor> excited;
  if (kind == ResonanceKind::difference_splitting) {
    if (!p.fixed_ground) throw DomainError("difference offset fit needs a fixed ground tensor");
    ground = *p.fixed_ground;
    excited = g;
  }
  for (std::size_t i = 0; i < p.resonances.size(); ++i) {
    if (!p.resonances[i].site) throw DomainError("resonance " + std::to_string(i + 1) + " has no site assignment");
  }

  const auto objective = [&](double offset) {
    RotationScan scan = p.scan;
    scan.angular_offset = offset;
    double s = 0.0;
    for (const auto& r : p.resonances) {
      const double pred = predicted_splitting(scan, p.convention, *r.site, r.scan_angle, kind, ground, excited,
                                              r.field_tesla.value_or(scan.field_magnitude));
      s += r.weight * (r.frequency - pred) * (r.frequency - pred);
    }
    return s;
  };

  constexpr double kRange = 10.0;
  constexpr double kCoarse = 0.25;
  double best = -kRange;
  double best_val = objective(best);
  for (double x = -kRange + kCoarse; x <= kRange + 1e-9; x += kCoarse) {
    const double v = objective(x);
    if (v < best_val) {
      best_val = v;
      best = x;
    }
  }
  const double lo = std::max(-kRange, best - kCoarse);
  const double hi = std::min(kRange, best + kCoarse);
  return golden_section(objective, lo, hi, 1e-7);
}

std::size_t AssignmentReport::excluded_count() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const AssignmentEntry& e) {
    return e.status != AssignmentStatus::assigned;
  }));
}

AssignmentReport assign_sites(std::span<const Resonance> resonances, const RotationScan& scan,
                              Convention convention, const AssignmentCandidates& candidates,
                              const AssignmentOptions& options) {
  scan.validate();
  AssignmentReport report;
  if (resonances.empty()) return report;
  const ResonanceKind kind = resonances.front().kind;
  check_uniform_kind(resonances, kind);
  if (kind == ResonanceKind::difference_splitting && !candidates.excited) {
    throw DomainError("assigning difference data needs an excited tensor estimate");
  }

  // Host-spin trend: a flat per-tesla slope in the host window present at
  // every scan angle.
  std::vector<double> slopes(resonances.size());
  std::vector<std::size_t> in_window;
  std::vector<double> all_angles;
  for (std::size_t i = 0; i < resonances.size(); ++i) {
    const double field = resonances[i].field_tesla.value_or(scan.field_magnitude);
    slopes[i] = field > 0.0 ? resonances[i].frequency / field : 0.0;
    if (slopes[i] >= options.host_slope_min && slopes[i] <= options.host_slope_max) in_window.push_back(i);
    if (std::none_of(all_angles.begin(), all_angles.end(),
                     [&](double a) { return std::abs(a - resonances[i].scan_angle) < 1e-9; })) {
      all_angles.push_back(resonances[i].scan_angle);
    }
  }
  std::vector<bool> host(resonances.size(), false);
  if (!in_window.empty()) {
    std::vector<double> w;
    for (auto i : in_window) w.push_back(slopes[i]);
    std::nth_element(w.begin(), w.begin() + w.size() / 2, w.end());
    const double median = w[w.size() / 2];
    std::vector<std::size_t> track;
    for (auto i : in_window) {
      if (std::abs(slopes[i] - median) <= 0.5 * options.host_max_variation * median) track.push_back(i);
    }
    const bool covers = std::all_of(all_angles.begin(), all_angles.end(), [&](double a) {
      return std::any_of(track.begin(), track.end(),
                         [&](std::size_t i) { return std::abs(resonances[i].scan_angle - a) < 1e-9; });
    });
    if (covers && track.size() >= 3) {
      for (auto i : track) host[i] = true;
    }
  }

  for (std::size_t i = 0; i < resonances.size(); ++i) {
    const Resonance& r = resonances[i];
    AssignmentEntry e;
    e.index = i;
    e.angle = r.scan_angle;
    e.frequency = r.frequency;
    if (host[i]) {
      e.status = AssignmentStatus::host_spin;
      report.entries.push_back(e);
      continue;
    }
    const double field = r.field_tesla.value_or(scan.field_magnitude);
    double best_diff = kInf;
    for (int site = 1; site <= kSiteCount; ++site) {
      const double pred =
          predicted_splitting(scan, convention, site, r.scan_angle, kind, candidates.ground, candidates.excited, field);
      const double diff = std::abs(r.frequency - pred);
      if (diff < best_diff - 1e-12) {
        best_diff = diff;
        e.site = site;
        e.predicted = pred;
      }
    }
    e.relative_residual = std::abs(e.predicted) > 0.0 ? best_diff / std::abs(e.predicted) : kInf;
    if (e.relative_residual > options.max_relative_residual) {
      e.status = AssignmentStatus::residual_too_large;
      e.site = 0;
    } else {
      Resonance kept = r;
      kept.site = e.site;
      report.assigned.push_back(kept);
    }
    report.entries.push_back(e);
  }
  return report;
}

EffectiveGTensor average_tensors(std::span<const EffectiveGTensor> fits) {
  if (fits.empty()) throw DomainError("no tensors to average");
  EffectiveGTensor out;
  for (const auto& f : fits) {
    for (int a = 0; a < 3; ++a) out.g[a] += std::abs(f.g[a]);
  }
  for (int a = 0; a < 3; ++a) out.g[a] /= static_cast<double>(fits.size());
  return out;
}

}  // namespace garnetspin
