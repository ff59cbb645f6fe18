#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "garnetspin/search.hpp"

using namespace garnetspin;

namespace {

const Branch kDownDown{SpinState::down, SpinState::down};
const Branch kUpUp{SpinState::up, SpinState::up};

double angle_between(const Vec3& a, const Vec3& b) {
  return rad_to_deg(std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)));
}

const ClockSearchResult& site1_solutions() {
  static const ClockSearchResult r = [] {
    const std::array<int, 1> one{1};
    return find_clock_transitions(SearchContext{}, one);
  }();
  return r;
}

double largest_eigenvalue(const Eigen::Matrix3d& h) {
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(h).eigenvalues().cwiseAbs().maxCoeff();
}

LevelParameters isotropic(LevelParameters p, double g) { return {p.constants, lambda_from_g({{g, g, g}}, p.constants)}; }

}  // namespace

TEST_CASE("field extremum near the tabulated site 1 row") {
  const SearchContext ctx;
  const auto b = field_extremum(ctx, 1, 55.0, -15.0, kDownDown);
  REQUIRE(b.has_value());
  CHECK(*b * 1e3 == doctest::Approx(19.0).epsilon(0.05));
  CHECK(std::abs(radial_derivative(ctx, 1, *b, 55.0, -15.0, kDownDown)) < 1e-4);
  CHECK_FALSE(field_extremum(ctx, 1, 55.0, -15.0, kUpUp).has_value());

  const auto mirror = field_extremum(ctx, 1, 125.0, 165.0, kUpUp);
  REQUIRE(mirror.has_value());
  CHECK(*mirror == doctest::Approx(*b).epsilon(1e-6));
}

TEST_CASE("shift gradient matches finite differences") {
  const SearchContext ctx;
  const Vec3 f(0.01, -0.02, 0.015);
  const double h = 1e-6;
  for (const auto& br : branch_list()) {
    const Vec3 g = optical_shift_gradient(ctx, 3, f, br);
    for (int k = 0; k < 3; ++k) {
      Vec3 d = Vec3::Zero();
      d[k] = h;
      const double fd = (optical_shift_at(ctx, 3, f + d, br) - optical_shift_at(ctx, 3, f - d, br)) / (2.0 * h);
      CHECK(std::abs(fd - g[k]) < 1e-6 * g.norm());
    }
  }
}

TEST_CASE("angular gradient") {
  const SearchContext ctx;
  const auto& r = site1_solutions();
  REQUIRE_FALSE(r.solutions.empty());
  for (const auto& s : r.solutions) {
    CHECK(angular_gradient(ctx, 1, s.b_star, s.theta, s.phi, s.branch) < 1e-3);
  }
  CHECK(angular_gradient(ctx, 1, 0.02, 40.0, 10.0, kDownDown) > 1e-3);

  SearchContext iso;
  iso.ground = isotropic(iso.ground, 30.0);
  iso.excited = isotropic(iso.excited, 10.0);
  iso.model = SplittingModel::magnitude;
  CHECK(angular_gradient(iso, 1, 0.02, 40.0, 10.0, kDownDown) < 1e-9);
}

TEST_CASE("site 1 clock transitions") {
  const auto& r = site1_solutions();
  CHECK(r.degenerate.empty());
  CHECK(r.solutions.size() == 4);
  for (const auto& s : r.solutions) {
    CHECK(s.site == 1);
    CHECK(s.b_star > 0.0);
    CHECK(std::abs(s.radial_gradient) < 1e-3);
  }
  const auto ref = table2_reference();
  std::vector<ReferenceClock> conserving;
  for (const auto& row : ref) {
    if (row.site == 1 && row.branch.ground == row.branch.excited) conserving.push_back(row);
  }
  REQUIRE(conserving.size() == 2);
  for (const auto& m : match_reference(r.solutions, conserving)) {
    CAPTURE(m.reference.theta);
    CHECK(m.solution.has_value());
    CHECK(std::abs(m.delta_b_mT) <= 1.0);
    CHECK(std::abs(m.delta_theta) <= 2.0);
    CHECK(std::abs(m.delta_phi) <= 2.0);
  }
}

TEST_CASE("sites are cubic images of each other") {
  const SearchContext ctx;
  const std::array<int, 2> sites{2, 5};
  const auto r = find_clock_transitions(ctx, sites);
  const auto& ref = site1_solutions().solutions;
  for (int s : sites) {
    std::vector<double> fields;
    for (const auto& x : r.solutions) {
      if (x.site == s) fields.push_back(x.b_star);
    }
    REQUIRE(fields.size() == ref.size());
    std::sort(fields.begin(), fields.end());
    for (std::size_t i = 0; i < fields.size(); ++i) CHECK(fields[i] == doctest::Approx(ref[i].b_star).epsilon(1e-4));
  }
}

TEST_CASE("curvature") {
  const SearchContext ctx;
  const auto& r = site1_solutions();
  REQUIRE_FALSE(r.solutions.empty());
  const double c0 = r.solutions.front().curvature;
  CHECK(std::abs(c0) == doctest::Approx(36.0).epsilon(0.25));
  for (const auto& s : r.solutions) {
    CHECK(s.curvature == doctest::Approx(c0).epsilon(0.01));
    CHECK(curvature(ctx, s) == doctest::Approx(s.curvature).epsilon(1e-6));
  }

  SearchContext doubled = ctx;
  for (auto* p : {&doubled.ground, &doubled.excited}) {
    for (double& l : p->tensor.lambda) l *= 2.0;
  }
  const Vec3 f(0.01, 0.02, -0.005);
  const double a = largest_eigenvalue(field_hessian(ctx, 1, f, kDownDown));
  const double b = largest_eigenvalue(field_hessian(doubled, 1, f, kDownDown));
  CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-4));
}

TEST_CASE("isotropic tensors have no isolated clock points") {
  SearchContext ctx;
  ctx.ground = isotropic(ctx.ground, 30.0);
  ctx.excited = isotropic(ctx.excited, 10.0);
  ctx.model = SplittingModel::magnitude;
  const std::array<int, 1> one{1};
  const auto r = find_clock_transitions(ctx, one);
  CHECK(r.solutions.empty());
  CHECK_FALSE(r.degenerate.empty());
}

TEST_CASE("broadening map extrema follow the principal axes") {
  SearchContext ctx;
  ctx.model = SplittingModel::magnitude;
  const double b = 0.01;
  const auto m = broadening_map(ctx, 1, b, {1.0, 1.0});
  const auto g = ctx.ground.effective_g();
  const auto frame = site_frame(1);
  bool saw_max = false, saw_min = false;
  for (const auto& e : m.extrema) {
    const Vec3 d = direction(e.theta, e.phi);
    if (e.type == ExtremumType::maximum) {
      saw_max = true;
      CHECK(e.value == doctest::Approx(std::abs(g.y()) * b).epsilon(1e-6));
      CHECK(std::min(angle_between(d, frame.y_axis), angle_between(d, -frame.y_axis)) < 1.0);
    }
    if (e.type == ExtremumType::minimum) {
      saw_min = true;
      CHECK(e.value == doctest::Approx(std::abs(g.x()) * b).epsilon(1e-6));
      CHECK(std::min(angle_between(d, frame.x_axis), angle_between(d, -frame.x_axis)) < 1.0);
    }
  }
  CHECK(saw_max);
  CHECK(saw_min);
  CHECK_FALSE(m.undefined);
}

TEST_CASE("branching ratio") {
  const EffectiveGTensor g{{27.0, 146.0, 36.0}};
  const EffectiveGTensor e{{7.0, 92.0, 16.0}};
  const LocalField u{0.3, 0.4, std::sqrt(0.75)};
  CHECK(branching_ratio(g, g, u) == doctest::Approx(0.0));
  CHECK(branching_ratio(g, e, {1.0, 0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(branching_ratio(g, e, {0.0, 0.0, 1.0}) == doctest::Approx(0.0));
  const EffectiveGTensor e3{{7.0, 30.0, 16.0}};
  const EffectiveGTensor scaled{{14.0, 184.0, 32.0}};
  CHECK(branching_ratio(g, scaled, u) == doctest::Approx(branching_ratio(g, e, u)).epsilon(1e-12));
  CHECK(branching_ratio(g, e, u) != doctest::Approx(branching_ratio(g, e3, u)));

  const SearchContext ctx;
  const auto m = branching_map(ctx, 1, {1.0, 1.0});
  REQUIRE_FALSE(m.extrema.empty());
  const auto& top = m.extrema.front();
  CHECK(top.value == doctest::Approx(0.05).epsilon(0.3));
  const Vec3 d = direction(top.theta, top.phi);
  const auto frame = site_frame(1);
  CHECK(std::min(angle_between(d, frame.x_axis), angle_between(d, -frame.x_axis)) < 15.0);
}

TEST_CASE("invalid grids") {
  GridSpec g;
  g.b_step = 0.0;
  CHECK_THROWS_AS(g.validate(), DomainError);
  AngularGrid a{0.0, 1.0};
  CHECK_THROWS_AS(a.validate(), DomainError);
  CHECK_THROWS_AS(broadening_map(SearchContext{}, 1, -0.1), DomainError);
}

TEST_CASE("clock table output") {
  std::ostringstream out;
  write_clock_table(out, site1_solutions().solutions);
  const std::string s = out.str();
  CHECK(s.rfind("site,B_mT,theta_deg,phi_deg,transition,curvature_Hz_per_G2,radial_curvature_Hz_per_G2\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + static_cast<long>(site1_solutions().solutions.size()));
  CHECK(s.find("1,18.89,") != std::string::npos);
}
