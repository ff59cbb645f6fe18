#pragma once

// Orientation-space searches: optical clock transitions, minimal-broadening
// orientations of the ground splitting, and branching-ratio maps.
//
// Orientations are (theta, phi) in degrees relative to the cubic axes.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "garnetspin/geometry.hpp"
#include "garnetspin/hamiltonian.hpp"

namespace garnetspin {

/// 1 GHz/T^2 = 10 Hz/G^2.
inline constexpr double kHzPerG2PerMHzPerT2 = 0.01;

struct GridSpec {
  double b_max = 0.1;       // tesla
  double b_step = 1e-3;     // tesla
  double theta_step = 1.0;  // degrees
  double phi_step = 1.0;

  void validate() const;
};

struct SearchContext {
  LevelParameters ground = table1_ground();
  LevelParameters excited = table1_excited();
  Convention convention = Convention::si_table;
  SplittingModel model = SplittingModel::signed_sum;
};

/// Unit cartesian direction for polar angle theta and azimuth phi.
Vec3 direction(double theta, double phi);

/// Optical shift (MHz) for a site at a cartesian field.
double optical_shift_at(const SearchContext& ctx, int site, const Vec3& field, const Branch& branch);

/// Gradient of the optical shift with respect to the cartesian field, MHz/T.
Vec3 optical_shift_gradient(const SearchContext& ctx, int site, const Vec3& field, const Branch& branch);

/// Positive field magnitude where d(shift)/d|B| vanishes along (theta, phi),
/// from a coarse scan over (0, b_max] refined by bisection.
std::optional<double> field_extremum(const SearchContext& ctx, int site, double theta, double phi,
                                     const Branch& branch, const GridSpec& grid = {});

/// d(shift)/d|B| at field magnitude b along (theta, phi), MHz/T.
double radial_derivative(const SearchContext& ctx, int site, double b, double theta, double phi,
                         const Branch& branch);

struct AngularGradient {
  double along_theta = 0.0;  // MHz/degree
  double along_phi = 0.0;

  double norm() const;
};

/// Central differences along the two great circles through (theta, phi).
AngularGradient angular_gradient_components(const SearchContext& ctx, int site, double b, double theta, double phi,
                                            const Branch& branch, double step_deg = 0.01);
double angular_gradient(const SearchContext& ctx, int site, double b, double theta, double phi,
                        const Branch& branch, double step_deg = 0.01);

struct ClockTransition {
  int site = 1;
  double b_star = 0.0;  // tesla
  double theta = 0.0;   // degrees
  double phi = 0.0;
  Branch branch;
  double curvature = 0.0;         // Hz/G^2, largest field-Hessian eigenvalue
  double radial_curvature = 0.0;  // Hz/G^2, along |B|
  double gradient_norm = 0.0;     // angular, MHz/degree
  double radial_gradient = 0.0;   // MHz/T
};

/// all_branches() as a vector.
std::vector<Branch> branch_list();

struct ClockSearchOptions {
  GridSpec grid;
  std::vector<Branch> branches = branch_list();
  double radial_tolerance = 1e-6;   // MHz/T
  double angular_tolerance = 1e-3;  // MHz/degree
  double dedup_angle = 2.0;         // degrees
  double dedup_field = 2e-3;        // tesla
  int max_seeds = 12;               // per site and branch
  int threads = 0;                  // 0: hardware, capped by GARNETSPIN_THREADS
};

struct DegenerateBranch {
  int site = 1;
  Branch branch;
};

struct ClockSearchResult {
  std::vector<ClockTransition> solutions;  // sorted by site, branch, theta, phi
  std::vector<DegenerateBranch> degenerate;  // continuum, no isolated solutions
};

ClockSearchResult find_clock_transitions(const SearchContext& ctx, std::span<const int> sites,
                                         const ClockSearchOptions& options = {});

/// 3x3 Hessian of the optical shift in the cartesian field, MHz/T^2, by
/// central differences of the analytic gradient.
Eigen::Matrix3d field_hessian(const SearchContext& ctx, int site, const Vec3& field, const Branch& branch,
                              double step = 1e-4);
/// Largest-magnitude Hessian eigenvalue at the solution, Hz/G^2.
double curvature(const SearchContext& ctx, const ClockTransition& ct);
/// Second derivative along |B| at the solution (step 0.1 mT), Hz/G^2.
double radial_curvature(const SearchContext& ctx, const ClockTransition& ct);

/// Worker count: `requested` (0 = hardware concurrency) capped by the
/// GARNETSPIN_THREADS environment variable.
int worker_count(int requested = 0);

struct AngularGrid {
  double theta_step = 1.0;
  double phi_step = 1.0;

  void validate() const;
};

enum class ExtremumType { maximum, minimum, saddle };
std::string_view to_string(ExtremumType t);

struct MapExtremum {
  double theta = 0.0;
  double phi = 0.0;
  double value = 0.0;
  ExtremumType type = ExtremumType::maximum;
};

/// Value surface over theta in [0, 180] and phi in (-180, 180].
struct OrientationMap {
  std::vector<double> thetas;
  std::vector<double> phis;
  std::vector<double> values;  // row-major, thetas x phis
  std::vector<MapExtremum> extrema;
  bool undefined = false;      // some cells had no defined value

  double at(std::size_t i, std::size_t j) const { return values[i * phis.size() + j]; }
};

/// Ground splitting over orientations at fixed |B| with its stationary points.
OrientationMap broadening_map(const SearchContext& ctx, int site, double b, const AngularGrid& grid = {});

/// Branching ratio R = tan^2(psi / 2) between g-scaled ground and excited
/// effective field directions. `extrema` holds the global maximum.
OrientationMap branching_map(const SearchContext& ctx, int site, const AngularGrid& grid = {});
double branching_ratio(const EffectiveGTensor& ground, const EffectiveGTensor& excited, const LocalField& unit_b);

/// Tabulated reference clock transition.
struct ReferenceClock {
  int site = 1;
  double b_mT = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  Branch branch;
};

std::span<const ReferenceClock> table2_reference();

struct ReferenceMatch {
  ReferenceClock reference;
  std::optional<ClockTransition> solution;
  Eigen::Vector3i alias{1, 1, 1};  // cubic-axis signs applied to the solution
  double delta_b_mT = 0.0;
  double delta_theta = 0.0;
  double delta_phi = 0.0;
};

/// Matches each reference row to a solution of the same site and branch,
/// trying the identity first and then the other axis-sign aliases.
std::vector<ReferenceMatch> match_reference(std::span<const ClockTransition> solutions,
                                            std::span<const ReferenceClock> reference, double b_tol_mT = 1.0,
                                            double angle_tol = 2.0);

void write_clock_table(std::ostream& out, std::span<const ClockTransition> solutions);
void write_map_csv(std::ostream& out, const OrientationMap& map);

}  // namespace garnetspin
