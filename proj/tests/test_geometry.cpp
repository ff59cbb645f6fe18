#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "garnetspin/geometry.hpp"

using namespace garnetspin;

namespace {

constexpr double kTol = 1e-12;

bool close(const Vec3& a, const Vec3& b, double tol = kTol) { return (a - b).norm() < tol; }

Vec3 random_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return {n(rng), n(rng), n(rng)};
}

}  // namespace

TEST_CASE("site frames follow the tabulated axes") {
  const auto s1 = site_frame(1);
  CHECK(close(s1.x_axis, Vec3(1, -1, 0).normalized()));
  CHECK(close(s1.y_axis, Vec3(1, 1, 0).normalized()));
  CHECK(close(s1.z_axis, Vec3(0, 0, 1)));

  const auto s3 = site_frame(3);
  CHECK(close(s3.x_axis, Vec3(0, 1, -1).normalized()));
  CHECK(close(s3.y_axis, Vec3(0, 1, 1).normalized()));
  CHECK(close(s3.z_axis, Vec3(1, 0, 0)));
}

TEST_CASE("site frames are orthonormal and right-handed in both conventions") {
  for (Convention c : {Convention::si_table, Convention::equal_projection}) {
    for (int s = 1; s <= kSiteCount; ++s) {
      const auto f = site_frame(s, c);
      CHECK(f.site_id == s);
      CHECK(std::abs(f.x_axis.dot(f.y_axis)) < kTol);
      CHECK(std::abs(f.x_axis.norm() - 1.0) < kTol);
      CHECK(close(f.x_axis.cross(f.y_axis), f.z_axis));
    }
  }
}

TEST_CASE("invalid site ids are rejected") {
  CHECK_THROWS_AS(site_frame(0), DomainError);
  CHECK_THROWS_AS(site_frame(7), DomainError);
}

TEST_CASE("convention names round trip") {
  CHECK(parse_convention("si-table") == Convention::si_table);
  CHECK(parse_convention(to_string(Convention::equal_projection)) == Convention::equal_projection);
  CHECK_THROWS_AS(parse_convention("literal"), DomainError);
}

TEST_CASE("lab_to_cartesian") {
  CHECK(close(lab_to_cartesian({1.0, 0.0, 123.0}), Vec3(0, 0, 1)));
  CHECK(close(lab_to_cartesian({1.0, 90.0, 0.0}), Vec3(1, 0, 0)));
  const double magic = rad_to_deg(std::acos(1.0 / std::sqrt(3.0)));
  CHECK(close(lab_to_cartesian({1.0, magic, 45.0}), Vec3(1, 1, 1).normalized(), 1e-9));
  CHECK(std::abs(magic - 54.7356) < 1e-4);
}

TEST_CASE("cartesian_to_lab inverts lab_to_cartesian") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Vec3 b = random_vector(rng);
    const LabField f = cartesian_to_lab(b);
    CHECK(f.theta >= 0.0);
    CHECK(f.theta <= 180.0);
    CHECK(f.phi > -180.0);
    CHECK(f.phi <= 180.0);
    CHECK(close(lab_to_cartesian(f), b, 1e-12 * (1.0 + b.norm())));
  }
}

TEST_CASE("project_onto_site") {
  const LocalField a = project_onto_site(Vec3(0, 0, 1), site_frame(1));
  CHECK(std::abs(a.x) < kTol);
  CHECK(std::abs(a.y) < kTol);
  CHECK(std::abs(a.z - 1.0) < kTol);

  const Vec3 d = Vec3(1, 1, 1).normalized();
  const LocalField si = project_onto_site(d, site_frame(1, Convention::si_table));
  CHECK(std::abs(si.x) < kTol);
  CHECK(std::abs(si.y - 0.8165) < 1e-4);
  CHECK(std::abs(si.z - 0.5774) < 1e-4);

  for (int s : {1, 3, 5}) {
    const LocalField eq = project_onto_site(d, site_frame(s, Convention::equal_projection));
    CHECK(std::abs(eq.x) < kTol);
    CHECK(std::abs(std::abs(eq.y) - 1.0 / std::sqrt(2.0)) < kTol);
    CHECK(std::abs(std::abs(eq.z) - 1.0 / std::sqrt(2.0)) < kTol);
  }
  for (int s : {2, 4, 6}) {
    const LocalField eq = project_onto_site(d, site_frame(s, Convention::equal_projection));
    CHECK(std::abs(eq.y) < kTol);
    CHECK(std::abs(std::abs(eq.x) - std::abs(eq.z)) < kTol);
  }
}

TEST_CASE("projection preserves the field norm") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Vec3 b = random_vector(rng);
    for (Convention c : {Convention::si_table, Convention::equal_projection}) {
      for (int s = 1; s <= kSiteCount; ++s) {
        const double n = project_onto_site(b, site_frame(s, c)).norm();
        CHECK(std::abs(n * n - b.squaredNorm()) < 1e-9 * b.squaredNorm());
      }
    }
  }
}

TEST_CASE("symmetry classes") {
  SUBCASE("<111> splits into two triples") {
    const auto c = symmetry_classes(Vec3(1, 1, 1));
    REQUIRE(c.size() == 2);
    CHECK(c[0] == std::vector<int>{1, 3, 5});
    CHECK(c[1] == std::vector<int>{2, 4, 6});
  }
  SUBCASE("<001> groups sites sharing projections") {
    const auto c = symmetry_classes(Vec3(0, 0, 1));
    REQUIRE(c.size() == 2);
    CHECK(c[0] == std::vector<int>{1, 2});
    CHECK(c[1] == std::vector<int>{3, 4, 5, 6});
  }
  SUBCASE("generic directions give singletons and always a partition") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
      const auto c = symmetry_classes(random_vector(rng));
      CHECK(c.size() == 6);
      std::set<int> seen;
      for (const auto& cls : c) seen.insert(cls.begin(), cls.end());
      CHECK(seen.size() == 6);
    }
  }
  CHECK_THROWS_AS(symmetry_classes(Vec3::Zero()), DomainError);
}

TEST_CASE("scan fields") {
  RotationScan scan;
  scan.optical_axis = Vec3(1, 1, 0);
  scan.field_magnitude = 0.3;
  scan.angle_start = 0.0;
  scan.angle_stop = 20.0;
  scan.angle_step = 10.0;
  const auto pts = scan_fields(scan);
  REQUIRE(pts.size() == 3);
  for (const auto& p : pts) {
    CHECK(std::abs(p.field.norm() - 0.3) < 1e-12);
    CHECK(std::abs(p.field.dot(scan.optical_axis.normalized())) < 1e-12);
  }

  SUBCASE("offset shifts the angles") {
    RotationScan shifted = scan;
    shifted.angular_offset = 5.0;
    RotationScan reference = scan;
    reference.angle_start = 5.0;
    reference.angle_stop = 25.0;
    const auto a = scan_fields(shifted);
    const auto b = scan_fields(reference);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(close(a[i].field, b[i].field));
  }

  SUBCASE("field passes through <111> when measured from <001>") {
    RotationScan s;
    s.optical_axis = Vec3(1, -1, 0);
    s.reference_axis = Vec3(0, 0, 1);
    const double magic = rad_to_deg(std::acos(1.0 / std::sqrt(3.0)));
    CHECK(close(s.direction_at(-magic), Vec3(1, 1, 1).normalized(), 1e-12));
  }

  SUBCASE("invalid scans") {
    RotationScan bad = scan;
    bad.angle_step = 0.0;
    CHECK_THROWS_AS(scan_fields(bad), DomainError);
    bad = scan;
    bad.optical_axis = Vec3::Zero();
    CHECK_THROWS_AS(scan_fields(bad), DomainError);
    bad = scan;
    bad.reference_axis = Vec3(2, 2, 0);
    CHECK_THROWS_AS(scan_fields(bad), DomainError);
  }
}

TEST_CASE("angle helpers") {
  CHECK(std::abs(deg_to_rad(180.0) - M_PI) < 1e-15);
  CHECK(std::abs(rad_to_deg(M_PI / 2) - 90.0) < 1e-12);
  CHECK(wrap_degrees(190.0) == doctest::Approx(-170.0));
  CHECK(wrap_degrees(-180.0) == doctest::Approx(180.0));
  CHECK(wrap_degrees(540.0) == doctest::Approx(180.0));
}
