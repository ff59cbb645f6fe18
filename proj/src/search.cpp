#include "garnetspin/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include <Eigen/Eigenvalues>

namespace garnetspin {

namespace {

constexpr double kRadPerDeg = std::numbers::pi / 180.0;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void parallel_for(std::size_t n, int workers, const auto& body) {
  const auto count = static_cast<std::size_t>(std::max(1, std::min<int>(workers, static_cast<int>(n))));
  if (count <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::vector<double> theta_axis(double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::floor(180.0 / step + 1e-9));
  for (int i = 0; i <= n; ++i) out.push_back(i * step);
  return out;
}

std::vector<double> phi_axis(double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::floor(360.0 / step + 1e-9));
  for (int i = 1; i <= n; ++i) out.push_back(-180.0 + i * step);
  return out;
}

std::pair<Vec3, Vec3> lab_tangents(double theta, double phi) {
  const double t = theta * kRadPerDeg;
  const double p = phi * kRadPerDeg;
  return {Vec3(std::cos(t) * std::cos(p), std::cos(t) * std::sin(p), -std::sin(t)),
          Vec3(-std::sin(p), std::cos(p), 0.0)};
}

// Orthonormal tangent pair at n, independent of the polar parameterization.
std::pair<Vec3, Vec3> tangent_basis(const Vec3& n) {
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(n[i]) < std::abs(n[k])) k = i;
  }
  const Vec3 e1 = n.cross(Vec3::Unit(k)).normalized();
  return {e1, n.cross(e1)};
}

Vec3 great_circle(const Vec3& n, const Vec3& e, double angle_rad) {
  return std::cos(angle_rad) * n + std::sin(angle_rad) * e;
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

// Cyclic golden-section descent over a field vector: two great-circle moves
// and, when `radial`, the magnitude. Stops once f < target.
Vec3 coordinate_descent(const auto& f, Vec3 field, bool radial, double target, int max_sweeps) {
  std::array<double, 3> h{1.0 * kRadPerDeg, 1.0 * kRadPerDeg, 1e-3};
  double current = f(field);
  const int coords = radial ? 3 : 2;
  for (int sweep = 0; sweep < max_sweeps && current > target; ++sweep) {
    bool moved = false;
    for (int k = 0; k < coords; ++k) {
      const double b = field.norm();
      const Vec3 n = field / b;
      const auto [e1, e2] = tangent_basis(n);
      const auto move = [&](double t) -> Vec3 {
        if (k == 0) return b * great_circle(n, e1, t);
        if (k == 1) return b * great_circle(n, e2, t);
        return std::max(b + t, 1e-12) * n;
      };
      const auto g = [&](double t) { return f(move(t)); };
      const double t = golden_section(g, -h[k], h[k], 1e-3 * h[k]);
      const double val = g(t);
      if (val < current) {
        field = move(t);
        current = val;
        moved = true;
        h[k] = std::abs(t) > 0.8 * h[k] ? 2.0 * h[k] : std::max(4.0 * std::abs(t), 1e-15);
      } else {
        h[k] = std::max(h[k] / 4.0, 1e-15);
      }
    }
    if (!moved && std::max({h[0], h[1], coords == 3 ? h[2] : 0.0}) <= 1e-15) break;
  }
  return field;
}

Vec3 linear_gradient(const EffectiveGTensor& g, const LocalField& b, SplittingModel model) {
  const Vec3 gv(g.g[0], g.g[1], g.g[2]);
  if (model == SplittingModel::signed_sum) return gv;
  const double split = hyperfine_splitting(g, b);
  if (split == 0.0) return Vec3::Zero();
  return gv.cwiseProduct(gv).cwiseProduct(b.vec()) / split;
}

Vec3 level_gradient(const LevelParameters& level, SpinState m, const LocalField& b, SplittingModel model) {
  const auto q = level.quadratic_coefficients();
  const Vec3 quad = 2.0 * Vec3(q[0], q[1], q[2]).cwiseProduct(b.vec());
  return -spin_value(m) * linear_gradient(level.effective_g(), b, model) + quad;
}

std::optional<double> extremum_on_profile(const ShiftProfile& p, const GridSpec& grid, double tolerance) {
  const int n = static_cast<int>(std::floor(grid.b_max / grid.b_step + 1e-9));
  double lo = 0.0;
  double d_lo = p.derivative(0.0);
  for (int k = 1; k <= n; ++k) {
    const double hi = k * grid.b_step;
    const double d_hi = p.derivative(hi);
    if (d_hi == 0.0) return hi;
    if ((d_lo < 0.0) != (d_hi < 0.0) && d_lo != 0.0) {
      double a = lo, b = hi, da = d_lo;
      double mid = 0.5 * (a + b);
      for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (a + b);
        const double dm = p.derivative(mid);
        if (std::abs(dm) < tolerance || b - a < 1e-15) break;
        if ((dm < 0.0) == (da < 0.0)) {
          a = mid;
          da = dm;
        } else {
          b = mid;
        }
      }
      return mid;
    }
    lo = hi;
    d_lo = d_hi;
  }
  return std::nullopt;
}

ShiftProfile profile_for(const SearchContext& ctx, int site, const Vec3& n, const Branch& branch) {
  const Vec3 local = site_frame(site, ctx.convention).rotation() * n;
  return optical_shift_profile(ctx.ground, ctx.excited, branch, local, ctx.model);
}

int branch_index(const Branch& b) {
  const auto all = all_branches();
  return static_cast<int>(std::find(all.begin(), all.end(), b) - all.begin());
}

double angle_between_deg(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b)) / kRadPerDeg;
}

struct SeedCell {
  double value;
  std::size_t i, j;
};

// Local minima of a grid surface (8-neighbourhood, phi wraps); NaN cells skipped.
// A row at theta 0 or 180 is a single point whose neighbours are the whole
// adjacent row.
std::vector<SeedCell> local_minima(const std::vector<double>& v, const std::vector<double>& thetas, std::size_t cols) {
  const std::size_t rows = thetas.size();
  const auto is_pole = [&](std::size_t i) { return thetas[i] == 0.0 || thetas[i] == 180.0; };
  std::vector<SeedCell> out;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (is_pole(i) && j > 0) break;
      const double c = v[i * cols + j];
      if (std::isnan(c)) continue;
      bool is_min = true;
      bool strictly = false;
      for (int di = -1; di <= 1 && is_min; ++di) {
        const long ii = static_cast<long>(i) + di;
        if (ii < 0 || ii >= static_cast<long>(rows)) continue;
        const bool whole_row = is_pole(i) && di != 0;
        const int lo = whole_row ? 0 : -1;
        const int hi = whole_row ? static_cast<int>(cols) - 1 : 1;
        for (int dj = lo; dj <= hi; ++dj) {
          if (di == 0 && (dj == 0 || is_pole(i))) continue;
          const std::size_t jj = whole_row ? static_cast<std::size_t>(dj) : (j + cols + dj) % cols;
          const std::size_t cell = is_pole(static_cast<std::size_t>(ii)) ? 0 : jj;
          const double o = v[static_cast<std::size_t>(ii) * cols + cell];
          if (std::isnan(o)) continue;
          if (o < c) {
            is_min = false;
            break;
          }
          if (o > c) strictly = true;
        }
      }
      if (is_min && strictly) out.push_back({c, i, j});
    }
  }
  std::sort(out.begin(), out.end(), [](const SeedCell& a, const SeedCell& b) {
    if (a.value != b.value) return a.value < b.value;
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  return out;
}

std::string branch_label(const Branch& b) { return to_string(b); }

}  // namespace

void GridSpec::validate() const {
  if (!(b_step > 0.0) || !(theta_step > 0.0) || !(phi_step > 0.0)) throw DomainError("grid steps must be positive");
  if (!(b_max > 0.0) || b_step > b_max) throw DomainError("grid b_step must not exceed b_max");
}

void AngularGrid::validate() const {
  if (!(theta_step > 0.0) || !(phi_step > 0.0)) throw DomainError("angular grid steps must be positive");
}

std::vector<Branch> branch_list() {
  const auto all = all_branches();
  return {all.begin(), all.end()};
}

Vec3 direction(double theta, double phi) { return lab_to_cartesian({1.0, theta, phi}); }

double optical_shift_at(const SearchContext& ctx, int site, const Vec3& field, const Branch& branch) {
  const LocalField local = project_onto_site(field, site_frame(site, ctx.convention));
  return optical_shift(ctx.ground, ctx.excited, branch, local, ctx.model);
}

Vec3 optical_shift_gradient(const SearchContext& ctx, int site, const Vec3& field, const Branch& branch) {
  const SiteFrame frame = site_frame(site, ctx.convention);
  const LocalField local = project_onto_site(field, frame);
  const Vec3 g = level_gradient(ctx.excited, branch.excited, local, ctx.model) -
                 level_gradient(ctx.ground, branch.ground, local, ctx.model);
  return frame.rotation().transpose() * g;
}

std::optional<double> field_extremum(const SearchContext& ctx, int site, double theta, double phi,
                                     const Branch& branch, const GridSpec& grid) {
  grid.validate();
  return extremum_on_profile(profile_for(ctx, site, direction(theta, phi), branch), grid, 1e-6);
}

double radial_derivative(const SearchContext& ctx, int site, double b, double theta, double phi,
                         const Branch& branch) {
  const Vec3 n = direction(theta, phi);
  return n.dot(optical_shift_gradient(ctx, site, b * n, branch));
}

double AngularGradient::norm() const { return std::hypot(along_theta, along_phi); }

AngularGradient angular_gradient_components(const SearchContext& ctx, int site, double b, double theta, double phi,
                                            const Branch& branch, double step_deg) {
  if (!(b > 0.0)) throw DomainError("angular gradient needs a positive field");
  if (!(step_deg > 0.0)) throw DomainError("angular step must be positive");
  const Vec3 n = direction(theta, phi);
  const auto [e_theta, e_phi] = lab_tangents(theta, phi);
  const double h = step_deg * kRadPerDeg;
  const auto diff = [&](const Vec3& e) {
    const double plus = optical_shift_at(ctx, site, b * great_circle(n, e, h), branch);
    const double minus = optical_shift_at(ctx, site, b * great_circle(n, e, -h), branch);
    return (plus - minus) / (2.0 * step_deg);
  };
  return {diff(e_theta), diff(e_phi)};
}

double angular_gradient(const SearchContext& ctx, int site, double b, double theta, double phi,
                        const Branch& branch, double step_deg) {
  return angular_gradient_components(ctx, site, b, theta, phi, branch, step_deg).norm();
}

int worker_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(n, 1);
  if (const char* env = std::getenv("GARNETSPIN_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min<long>(n, cap);
  }
  return n;
}

Eigen::Matrix3d field_hessian(const SearchContext& ctx, int site, const Vec3& field, const Branch& branch,
                              double step) {
  Eigen::Matrix3d h;
  for (int k = 0; k < 3; ++k) {
    const Vec3 d = step * Vec3::Unit(k);
    h.col(k) = (optical_shift_gradient(ctx, site, field + d, branch) -
                optical_shift_gradient(ctx, site, field - d, branch)) /
               (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

double curvature(const SearchContext& ctx, const ClockTransition& ct) {
  const Vec3 field = ct.b_star * direction(ct.theta, ct.phi);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(field_hessian(ctx, ct.site, field, ct.branch));
  const auto& ev = es.eigenvalues();
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(ev(i)) > std::abs(ev(k))) k = i;
  }
  return ev(k) * kHzPerG2PerMHzPerT2;
}

double radial_curvature(const SearchContext& ctx, const ClockTransition& ct) {
  constexpr double h = 1e-4;
  const Vec3 n = direction(ct.theta, ct.phi);
  const auto e = [&](double b) { return optical_shift_at(ctx, ct.site, b * n, ct.branch); };
  const double second = (e(ct.b_star + h) - 2.0 * e(ct.b_star) + e(ct.b_star - h)) / (h * h);
  return second * kHzPerG2PerMHzPerT2;
}

ClockSearchResult find_clock_transitions(const SearchContext& ctx, std::span<const int> sites,
                                         const ClockSearchOptions& options) {
  options.grid.validate();
  for (int s : sites) (void)site_frame(s, ctx.convention);
  const int workers = worker_count(options.threads);
  const auto thetas = theta_axis(options.grid.theta_step);
  const auto phis = phi_axis(options.grid.phi_step);
  const std::size_t rows = thetas.size();
  const std::size_t cols = phis.size();

  ClockSearchResult result;
  for (int site : sites) {
    for (const Branch& branch : options.branches) {
      // Tangential part of the field gradient at the radial extremum, MHz/T.
      std::vector<double> map(rows * cols, kNaN);
      std::vector<double> bstar(rows * cols, kNaN);
      parallel_for(rows, workers, [&](std::size_t i) {
        for (std::size_t j = 0; j < cols; ++j) {
          const Vec3 n = direction(thetas[i], phis[j]);
          const auto b = extremum_on_profile(profile_for(ctx, site, n, branch), options.grid, options.radial_tolerance);
          if (!b || *b <= 0.0) continue;
          const Vec3 g = optical_shift_gradient(ctx, site, *b * n, branch);
          map[i * cols + j] = (g - g.dot(n) * n).norm();
          bstar[i * cols + j] = *b;
        }
      });

      std::size_t defined = 0, flat = 0;
      for (double v : map) {
        if (std::isnan(v)) continue;
        ++defined;
        if (v < 1e-9) ++flat;
      }
      if (defined > 0 && flat * 10 > defined) {
        result.degenerate.push_back({site, branch});
        continue;
      }

      auto seeds = local_minima(map, thetas, cols);
      if (static_cast<int>(seeds.size()) > options.max_seeds) seeds.resize(options.max_seeds);

      std::vector<std::optional<ClockTransition>> refined(seeds.size());
      parallel_for(seeds.size(), workers, [&](std::size_t s) {
        const auto& cell = seeds[s];
        const Vec3 start = bstar[cell.i * cols + cell.j] * direction(thetas[cell.i], phis[cell.j]);
        const auto objective = [&](const Vec3& f) { return optical_shift_gradient(ctx, site, f, branch).squaredNorm(); };
        const Vec3 field = coordinate_descent(objective, start, true, 1e-20, 2000);
        const double b = field.norm();
        if (!(b > 0.0) || b > options.grid.b_max + options.grid.b_step) return;
        const LabField lab = cartesian_to_lab(field);
        ClockTransition ct;
        ct.site = site;
        ct.branch = branch;
        ct.b_star = b;
        ct.theta = lab.theta;
        ct.phi = lab.phi;
        ct.radial_gradient = radial_derivative(ctx, site, b, ct.theta, ct.phi, branch);
        ct.gradient_norm = angular_gradient(ctx, site, b, ct.theta, ct.phi, branch);
        if (std::abs(ct.radial_gradient) >= options.radial_tolerance || ct.gradient_norm >= options.angular_tolerance) {
          return;
        }
        ct.curvature = curvature(ctx, ct);
        ct.radial_curvature = radial_curvature(ctx, ct);
        refined[s] = ct;
      });

      std::vector<ClockTransition> unique;
      for (const auto& r : refined) {
        if (!r) continue;
        const Vec3 n = direction(r->theta, r->phi);
        const auto dup = std::find_if(unique.begin(), unique.end(), [&](const ClockTransition& u) {
          return angle_between_deg(n, direction(u.theta, u.phi)) <= options.dedup_angle &&
                 std::abs(u.b_star - r->b_star) <= options.dedup_field;
        });
        if (dup == unique.end()) {
          unique.push_back(*r);
        } else if (r->gradient_norm < dup->gradient_norm) {
          *dup = *r;
        }
      }
      result.solutions.insert(result.solutions.end(), unique.begin(), unique.end());
    }
  }
  std::sort(result.solutions.begin(), result.solutions.end(), [](const ClockTransition& a, const ClockTransition& b) {
    return std::make_tuple(a.site, branch_index(a.branch), a.theta, a.phi) <
           std::make_tuple(b.site, branch_index(b.branch), b.theta, b.phi);
  });
  return result;
}

std::string_view to_string(ExtremumType t) {
  switch (t) {
    case ExtremumType::maximum: return "maximum";
    case ExtremumType::minimum: return "minimum";
    case ExtremumType::saddle: return "saddle";
  }
  return "unknown";
}

OrientationMap broadening_map(const SearchContext& ctx, int site, double b, const AngularGrid& grid) {
  if (!(b > 0.0)) throw DomainError("broadening map needs a positive field");
  grid.validate();
  const SiteFrame frame = site_frame(site, ctx.convention);
  const EffectiveGTensor g = ctx.ground.effective_g();
  const Vec3 g2(g.g[0] * g.g[0], g.g[1] * g.g[1], g.g[2] * g.g[2]);
  const auto splitting = [&](const Vec3& n) { return hyperfine_splitting(g, project_onto_site(b * n, frame)); };
  // Tangential gradient of the splitting with respect to direction, MHz/rad.
  const auto tangential = [&](const Vec3& n) -> Vec3 {
    const Vec3 local = frame.rotation() * n;
    const double s = std::sqrt(g2.dot(local.cwiseAbs2()));
    if (s == 0.0) return Vec3::Zero();
    const Vec3 grad = b * frame.rotation().transpose() * g2.cwiseProduct(local) / s;
    return grad - grad.dot(n) * n;
  };

  OrientationMap m;
  m.thetas = theta_axis(grid.theta_step);
  m.phis = phi_axis(grid.phi_step);
  const std::size_t rows = m.thetas.size(), cols = m.phis.size();
  m.values.resize(rows * cols);
  std::vector<double> grad_map(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const Vec3 n = direction(m.thetas[i], m.phis[j]);
      m.values[i * cols + j] = splitting(n);
      grad_map[i * cols + j] = tangential(n).norm();
    }
  }

  constexpr double kThreshold = 1e-6;  // MHz/degree
  constexpr double kHessStep = 0.5 * kRadPerDeg;
  auto seeds = local_minima(grad_map, m.thetas, cols);
  if (seeds.size() > 64) seeds.resize(64);
  std::vector<Vec3> found;
  for (const auto& cell : seeds) {
    const Vec3 start = direction(m.thetas[cell.i], m.phis[cell.j]);
    const auto objective = [&](const Vec3& f) { return tangential(f.normalized()).squaredNorm(); };
    const Vec3 n = coordinate_descent(objective, start, false, 1e-24, 2000).normalized();
    if (tangential(n).norm() * kRadPerDeg >= kThreshold) continue;
    if (std::any_of(found.begin(), found.end(), [&](const Vec3& f) { return angle_between_deg(f, n) < 1.0; })) continue;
    found.push_back(n);

    const auto [e1, e2] = tangent_basis(n);
    const auto at = [&](double u, double v) {
      return splitting(great_circle(great_circle(n, e1, u), e2, v).normalized());
    };
    const double s0 = splitting(n);
    const double huu = (at(kHessStep, 0) - 2 * s0 + at(-kHessStep, 0)) / (kHessStep * kHessStep);
    const double hvv = (at(0, kHessStep) - 2 * s0 + at(0, -kHessStep)) / (kHessStep * kHessStep);
    const double huv = (at(kHessStep, kHessStep) - at(kHessStep, -kHessStep) - at(-kHessStep, kHessStep) +
                        at(-kHessStep, -kHessStep)) /
                       (4 * kHessStep * kHessStep);
    const double det = huu * hvv - huv * huv;
    ExtremumType type = ExtremumType::saddle;
    if (det > 0.0) type = huu < 0.0 ? ExtremumType::maximum : ExtremumType::minimum;
    const LabField lab = cartesian_to_lab(n);
    m.extrema.push_back({lab.theta, lab.phi, s0, type});
  }
  std::sort(m.extrema.begin(), m.extrema.end(), [](const MapExtremum& a, const MapExtremum& b) {
    return std::tie(a.theta, a.phi) < std::tie(b.theta, b.phi);
  });
  return m;
}

double branching_ratio(const EffectiveGTensor& ground, const EffectiveGTensor& excited, const LocalField& unit_b) {
  const Vec3 b = unit_b.vec();
  const Vec3 vg = Vec3(ground.g[0], ground.g[1], ground.g[2]).cwiseProduct(b);
  const Vec3 ve = Vec3(excited.g[0], excited.g[1], excited.g[2]).cwiseProduct(b);
  const double ng = vg.norm(), ne = ve.norm();
  if (ng == 0.0 || ne == 0.0) return kNaN;
  const double c = std::clamp(vg.dot(ve) / (ng * ne), -1.0, 1.0);
  return (1.0 - c) / (1.0 + c);
}

OrientationMap branching_map(const SearchContext& ctx, int site, const AngularGrid& grid) {
  grid.validate();
  const SiteFrame frame = site_frame(site, ctx.convention);
  const EffectiveGTensor g = ctx.ground.effective_g();
  const EffectiveGTensor e = ctx.excited.effective_g();
  OrientationMap m;
  m.thetas = theta_axis(grid.theta_step);
  m.phis = phi_axis(grid.phi_step);
  const std::size_t cols = m.phis.size();
  m.values.resize(m.thetas.size() * cols);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < m.thetas.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double r = branching_ratio(g, e, project_onto_site(direction(m.thetas[i], m.phis[j]), frame));
      m.values[i * cols + j] = r;
      if (std::isnan(r)) {
        m.undefined = true;
      } else if (!best || r > m.values[*best]) {
        best = i * cols + j;
      }
    }
  }
  if (best) m.extrema.push_back({m.thetas[*best / cols], m.phis[*best % cols], m.values[*best], ExtremumType::maximum});
  return m;
}

std::span<const ReferenceClock> table2_reference() {
  using S = SpinState;
  static const ReferenceClock rows[] = {
      {1, 19, 55, -15, {S::down, S::down}},  {1, 19, 125, 166, {S::up, S::up}},
      {1, 36, 64, -150, {S::up, S::down}},   {1, 36, 117, 31, {S::down, S::up}},
      {2, 19, 54, 76, {S::down, S::down}},   {2, 19, 125, -105, {S::up, S::up}},
      {2, 36, 116, 120, {S::down, S::up}},   {2, 36, 63, -60, {S::up, S::down}},
      {3, 19, 102, 54, {S::down, S::down}},  {3, 19, 79, -127, {S::up, S::up}},
      {3, 36, 64, 120, {S::up, S::down}},    {3, 36, 118, 60, {S::down, S::up}},
      {4, 19, 38, 20, {S::down, S::down}},   {4, 19, 143, -160, {S::up, S::up}},
      {4, 36, 140, -45, {S::down, S::up}},   {4, 36, 40, 135, {S::up, S::down}},
      {5, 19, 38, 110, {S::down, S::down}},  {5, 19, 142, -70, {S::up, S::up}},
      {5, 36, 140, 45, {S::down, S::up}},    {5, 19, 40, -135, {S::up, S::down}},
      {6, 19, 78, 37, {S::down, S::down}},   {6, 19, 102, -144, {S::up, S::up}},
      {6, 36, 62, 30, {S::down, S::up}},     {6, 36, 118, -150, {S::up, S::down}},
  };
  return rows;
}

std::vector<ReferenceMatch> match_reference(std::span<const ClockTransition> solutions,
                                            std::span<const ReferenceClock> reference, double b_tol_mT,
                                            double angle_tol) {
  std::vector<Eigen::Vector3i> aliases{{1, 1, 1}};
  for (int sx : {1, -1}) {
    for (int sy : {1, -1}) {
      for (int sz : {1, -1}) {
        if (sx == 1 && sy == 1 && sz == 1) continue;
        aliases.emplace_back(sx, sy, sz);
      }
    }
  }
  std::vector<ReferenceMatch> out;
  for (const auto& ref : reference) {
    ReferenceMatch m;
    m.reference = ref;
    for (const auto& alias : aliases) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& s : solutions) {
        if (s.site != ref.site || !(s.branch == ref.branch)) continue;
        const Vec3 n = direction(s.theta, s.phi).cwiseProduct(alias.cast<double>());
        const LabField lab = cartesian_to_lab(n);
        const double db = s.b_star * 1e3 - ref.b_mT;
        const double dt = lab.theta - ref.theta;
        const double dp = wrap_degrees(lab.phi - ref.phi);
        if (std::abs(db) > b_tol_mT || std::abs(dt) > angle_tol || std::abs(dp) > angle_tol) continue;
        const double score = std::abs(db) / b_tol_mT + (std::abs(dt) + std::abs(dp)) / angle_tol;
        if (score < best) {
          best = score;
          ClockTransition aliased = s;
          aliased.theta = lab.theta;
          aliased.phi = lab.phi;
          m.solution = aliased;
          m.alias = alias;
          m.delta_b_mT = db;
          m.delta_theta = dt;
          m.delta_phi = dp;
        }
      }
      if (m.solution) break;
    }
    out.push_back(m);
  }
  return out;
}

void write_clock_table(std::ostream& out, std::span<const ClockTransition> solutions) {
  out << "site,B_mT,theta_deg,phi_deg,transition,curvature_Hz_per_G2,radial_curvature_Hz_per_G2\n";
  out << std::fixed;
  for (const auto& s : solutions) {
    out << s.site << "," << std::setprecision(2) << s.b_star * 1e3 << "," << s.theta << "," << s.phi << ","
        << branch_label(s.branch) << "," << s.curvature << "," << s.radial_curvature << "\n";
  }
  out << std::defaultfloat;
}

void write_map_csv(std::ostream& out, const OrientationMap& map) {
  out << "theta_deg,phi_deg,value\n";
  out << std::setprecision(10);
  for (std::size_t i = 0; i < map.thetas.size(); ++i) {
    for (std::size_t j = 0; j < map.phis.size(); ++j) {
      out << map.thetas[i] << "," << map.phis[j] << "," << map.at(i, j) << "\n";
    }
  }
}

}  // namespace garnetspin
