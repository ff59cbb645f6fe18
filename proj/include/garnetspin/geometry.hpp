#pragma once

// Six-site garnet geometry: site frames, lab-field conversion, per-site
// projections and rotation scans.
//
// Angles are degrees at every public interface and radians internally.

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "garnetspin/errors.hpp"

namespace garnetspin {

using Vec3 = Eigen::Vector3d;

inline constexpr int kSiteCount = 6;

/// How lab fields are projected onto the local site axes.
///
/// `si_table` uses the literal site axes. `equal_projection` rotates each
/// frame about its axis orthogonal to (1,1,1) so that a field along (1,1,1)
/// has equal-magnitude projections on the remaining two axes.
enum class Convention { si_table, equal_projection };

std::string_view to_string(Convention c);
Convention parse_convention(std::string_view text);

/// Orthonormal, right-handed local axes of one dopant site in the cubic frame.
struct SiteFrame {
  int site_id = 1;
  Vec3 x_axis;
  Vec3 y_axis;
  Vec3 z_axis;

  /// Rows are the local axes, so `rotation() * b` gives local components.
  Eigen::Matrix3d rotation() const;
};

/// Field given in spherical coordinates relative to the cubic axes.
struct LabField {
  double magnitude = 0.0;  // tesla
  double theta = 0.0;      // degrees, [0, 180]
  double phi = 0.0;        // degrees, (-180, 180]
};

/// Field components along a site's local axes, tesla.
struct LocalField {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  Vec3 vec() const { return {x, y, z}; }
  static LocalField from(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
};

/// Field rotated in the plane perpendicular to `optical_axis`. Angle zero lies
/// along `reference_axis` projected into that plane; positive angles rotate
/// towards optical_axis x reference_axis.
struct RotationScan {
  Vec3 optical_axis{0.0, 0.0, 1.0};
  std::optional<Vec3> reference_axis;
  double field_magnitude = 0.3;  // tesla
  double angle_start = 0.0;      // degrees
  double angle_stop = 180.0;
  double angle_step = 10.0;
  double angular_offset = 0.0;   // added to every nominal angle

  void validate() const;
  /// Unit in-plane direction at angle zero.
  Vec3 reference_direction() const;
  /// Field direction (unit) at a nominal angle, offset applied.
  Vec3 direction_at(double nominal_angle_deg) const;
  /// Number of nominal angles in [start, stop].
  int angle_count() const;
};

struct ScanPoint {
  double angle = 0.0;  // nominal angle, degrees
  Vec3 field;          // tesla, cubic frame
};

SiteFrame site_frame(int site_id, Convention convention = Convention::si_table);
const std::array<SiteFrame, kSiteCount>& all_site_frames(Convention convention);

Vec3 lab_to_cartesian(const LabField& f);
/// Inverse of lab_to_cartesian; phi in (-180, 180], theta in [0, 180].
LabField cartesian_to_lab(const Vec3& b);

LocalField project_onto_site(const Vec3& b, const SiteFrame& frame);

/// Sites grouped by equal (|b_x|, |b_y|, |b_z|) local projections. Classes are
/// ordered by their lowest site id; each class is sorted.
std::vector<std::vector<int>> symmetry_classes(const Vec3& b,
                                               Convention convention = Convention::si_table,
                                               double tolerance = 1e-9);

std::vector<ScanPoint> scan_fields(const RotationScan& scan);

double deg_to_rad(double deg);
double rad_to_deg(double rad);
/// Wraps an angle in degrees into (-180, 180].
double wrap_degrees(double deg);

}  // namespace garnetspin
