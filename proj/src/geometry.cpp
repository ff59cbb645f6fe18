#include "garnetspin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace garnetspin {

namespace {

// Literal site axes in the cubic frame, before normalization.
constexpr double kSiteAxes[kSiteCount][3][3] = {
    {{1, -1, 0}, {1, 1, 0}, {0, 0, 1}},
    {{1, 1, 0}, {-1, 1, 0}, {0, 0, 1}},
    {{0, 1, -1}, {0, 1, 1}, {1, 0, 0}},
    {{0, 1, 1}, {0, -1, 1}, {1, 0, 0}},
    {{-1, 0, 1}, {1, 0, 1}, {0, 1, 0}},
    {{1, 0, 1}, {1, 0, -1}, {0, 1, 0}},
};

SiteFrame table_frame(int index) {
  const auto axis = [&](int k) {
    const auto& a = kSiteAxes[index][k];
    return Vec3(a[0], a[1], a[2]).normalized();
  };
  return SiteFrame{index + 1, axis(0), axis(1), axis(2)};
}

// Rotates the frame about the axis orthogonal to (1,1,1) so the other two
// projections of (1,1,1) become equal.
SiteFrame equalized_frame(const SiteFrame& f) {
  const Vec3 diag = Vec3::Ones().normalized();
  std::array<Vec3, 3> axes{f.x_axis, f.y_axis, f.z_axis};
  int zero = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(axes[k].dot(diag)) < std::abs(axes[zero].dot(diag))) zero = k;
  }
  const int a = (zero + 1) % 3;
  const int b = (zero + 2) % 3;
  const double pa = axes[a].dot(diag);
  const double pb = axes[b].dot(diag);
  const double delta = std::atan2(pb - pa, pa + pb);
  const Vec3 new_a = std::cos(delta) * axes[a] + std::sin(delta) * axes[b];
  const Vec3 new_b = -std::sin(delta) * axes[a] + std::cos(delta) * axes[b];
  axes[a] = new_a;
  axes[b] = new_b;
  return SiteFrame{f.site_id, axes[0], axes[1], axes[2]};
}

std::array<SiteFrame, kSiteCount> build_frames(Convention c) {
  std::array<SiteFrame, kSiteCount> frames;
  for (int i = 0; i < kSiteCount; ++i) {
    frames[i] = table_frame(i);
    if (c == Convention::equal_projection) frames[i] = equalized_frame(frames[i]);
  }
  return frames;
}

}  // namespace

std::string_view to_string(Convention c) {
  return c == Convention::si_table ? "si-table" : "equal-projection";
}

Convention parse_convention(std::string_view text) {
  if (text == "si-table") return Convention::si_table;
  if (text == "equal-projection") return Convention::equal_projection;
  throw DomainError("unknown projection convention '" + std::string(text) +
                    "' (expected si-table or equal-projection)");
}

Eigen::Matrix3d SiteFrame::rotation() const {
  Eigen::Matrix3d r;
  r.row(0) = x_axis.transpose();
  r.row(1) = y_axis.transpose();
  r.row(2) = z_axis.transpose();
  return r;
}

double LocalField::norm() const { return std::sqrt(x * x + y * y + z * z); }

const std::array<SiteFrame, kSiteCount>& all_site_frames(Convention convention) {
  static const auto table = build_frames(Convention::si_table);
  static const auto equal = build_frames(Convention::equal_projection);
  return convention == Convention::si_table ? table : equal;
}

SiteFrame site_frame(int site_id, Convention convention) {
  if (site_id < 1 || site_id > kSiteCount) {
    throw DomainError("site id " + std::to_string(site_id) + " outside 1..6");
  }
  return all_site_frames(convention)[site_id - 1];
}

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

Vec3 lab_to_cartesian(const LabField& f) {
  const double t = deg_to_rad(f.theta);
  const double p = deg_to_rad(f.phi);
  return f.magnitude * Vec3(std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t));
}

LabField cartesian_to_lab(const Vec3& b) {
  const double r = b.norm();
  if (r == 0.0) return {};
  const double theta = rad_to_deg(std::acos(std::clamp(b.z() / r, -1.0, 1.0)));
  const double phi = wrap_degrees(rad_to_deg(std::atan2(b.y(), b.x())));
  return {r, theta, phi};
}

LocalField project_onto_site(const Vec3& b, const SiteFrame& frame) {
  return {frame.x_axis.dot(b), frame.y_axis.dot(b), frame.z_axis.dot(b)};
}

std::vector<std::vector<int>> symmetry_classes(const Vec3& b, Convention convention,
                                               double tolerance) {
  if (b.norm() == 0.0) throw DomainError("symmetry classes undefined for a zero field");
  const auto& frames = all_site_frames(convention);
  std::array<Vec3, kSiteCount> mags;
  for (int i = 0; i < kSiteCount; ++i) mags[i] = project_onto_site(b, frames[i]).vec().cwiseAbs();

  std::vector<std::vector<int>> classes;
  std::array<bool, kSiteCount> used{};
  for (int i = 0; i < kSiteCount; ++i) {
    if (used[i]) continue;
    std::vector<int> cls{i + 1};
    used[i] = true;
    for (int j = i + 1; j < kSiteCount; ++j) {
      if (!used[j] && (mags[i] - mags[j]).cwiseAbs().maxCoeff() <= tolerance) {
        cls.push_back(j + 1);
        used[j] = true;
      }
    }
    classes.push_back(std::move(cls));
  }
  return classes;
}

void RotationScan::validate() const {
  if (!(angle_step > 0.0)) throw DomainError("scan angle step must be positive");
  if (angle_stop < angle_start) throw DomainError("scan angle stop precedes start");
  if (field_magnitude < 0.0) throw DomainError("scan field magnitude must be >= 0");
  if (optical_axis.norm() == 0.0) throw DomainError("optical axis must be nonzero");
  (void)reference_direction();
}

Vec3 RotationScan::reference_direction() const {
  const Vec3 o = optical_axis.normalized();
  Vec3 ref;
  if (reference_axis) {
    ref = *reference_axis;
  } else {
    int best = 0;
    for (int k = 1; k < 3; ++k) {
      if (std::abs(o[k]) < std::abs(o[best]) - 1e-12) best = k;
    }
    ref = Vec3::Unit(best);
  }
  const Vec3 in_plane = ref - ref.dot(o) * o;
  if (in_plane.norm() < 1e-9) throw DomainError("scan reference axis is parallel to the optical axis");
  return in_plane.normalized();
}

Vec3 RotationScan::direction_at(double nominal_angle_deg) const {
  const Vec3 o = optical_axis.normalized();
  const Vec3 r = reference_direction();
  const Vec3 w = o.cross(r);
  const double a = deg_to_rad(nominal_angle_deg + angular_offset);
  return std::cos(a) * r + std::sin(a) * w;
}

int RotationScan::angle_count() const {
  return static_cast<int>(std::floor((angle_stop - angle_start) / angle_step + 1e-9)) + 1;
}

std::vector<ScanPoint> scan_fields(const RotationScan& scan) {
  scan.validate();
  std::vector<ScanPoint> points;
  const int n = scan.angle_count();
  points.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double angle = scan.angle_start + i * scan.angle_step;
    points.push_back({angle, scan.field_magnitude * scan.direction_at(angle)});
  }
  return points;
}

}  // namespace garnetspin
