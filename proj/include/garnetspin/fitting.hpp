#pragma once

// Recovery of effective g-tensors from angle-resolved splittings.
//
// The model for one resonance is the splitting sqrt(sum g_a^2 b_a^2) (ground
// data) or the ground-minus-excited difference of two such terms, evaluated
// on the local field of the assigned site. Parameters are the squared
// g-values, so results are magnitudes. Solved by Levenberg-Marquardt with an
// analytic Jacobian.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "garnetspin/geometry.hpp"
#include "garnetspin/hamiltonian.hpp"

namespace garnetspin {

enum class ResonanceKind { ground_splitting, difference_splitting };

std::string_view to_string(ResonanceKind k);
ResonanceKind parse_resonance_kind(std::string_view text);

struct Resonance {
  double scan_angle = 0.0;  // degrees, nominal
  double frequency = 0.0;   // MHz
  ResonanceKind kind = ResonanceKind::ground_splitting;
  std::optional<int> site;  // 1..6 once assigned
  double weight = 1.0;
  std::optional<double> field_tesla;  // overrides the scan magnitude
};

/// One row of the fit: a local field and the splitting measured there.
struct Observation {
  LocalField field;
  double frequency = 0.0;
  double weight = 1.0;
};

struct FitOptions {
  int max_iterations = 200;
  double initial_damping = 1e-3;
  double damping_factor = 10.0;
  double gradient_tolerance = 1e-8;
};

struct FitProblem {
  std::vector<Resonance> resonances;
  RotationScan scan;
  Convention convention = Convention::si_table;
  std::optional<EffectiveGTensor> fixed_ground;
  std::optional<std::array<double, 3>> initial_guess;  // MHz/T
  FitOptions options;
};

struct FitResult {
  /// Fitted tensor: ground for ground fits, excited for difference fits.
  EffectiveGTensor g_values;
  std::array<double, 3> uncertainties{};
  std::array<bool, 3> identified{true, true, true};
  /// Ground tensor behind a difference fit (fixed or jointly fitted).
  std::optional<EffectiveGTensor> ground_values;
  std::optional<std::array<double, 3>> ground_uncertainties;
  double r_squared = 0.0;
  std::vector<double> residuals;  // data - model, MHz
  std::vector<double> cost_history;  // cost after each accepted step
  double cost = 0.0;                 // 0.5 * sum w r^2
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Residual model in squared-g parameters. Ground: 3 parameters. Difference
/// with fixed ground: 3 (excited). Difference without: 6 (ground, excited).
struct TensorModel {
  ResonanceKind kind = ResonanceKind::ground_splitting;
  std::optional<EffectiveGTensor> fixed_ground;

  int parameter_count() const;
  double evaluate(std::span<const double> squared, const LocalField& b) const;
  void gradient(std::span<const double> squared, const LocalField& b, std::span<double> out) const;
};

/// Local-field observations for every resonance. Requires complete site
/// assignments, a uniform kind and at least three distinct scan angles.
std::vector<Observation> build_observations(const FitProblem& p);

FitResult fit_ground_tensor(const FitProblem& p);
FitResult fit_difference_tensor(const FitProblem& p);

/// Fit on explicit observations; `initial` holds g-values (not squared).
FitResult fit_observations(std::span<const Observation> obs, const TensorModel& model,
                           std::span<const double> initial, const FitOptions& options = {});

struct FitDiagnostics {
  std::vector<double> uncertainties;  // per parameter, MHz/T; inf if unbounded
  bool unbounded = false;
  double r_squared = 0.0;
  double residual_variance = 0.0;
};

/// Linearized-covariance uncertainties and R^2 at a solution.
FitDiagnostics fit_diagnostics(const FitResult& result, const FitProblem& problem);
FitDiagnostics diagnostics_for(std::span<const Observation> obs, const TensorModel& model,
                               std::span<const double> g_values);

/// Scalar scan-angle offset (degrees, within +-10) minimizing the squared
/// residual for a fixed tensor. For difference data `g` is the excited tensor
/// and `p.fixed_ground` must be set.
double fit_angular_offset(const FitProblem& p, const EffectiveGTensor& g);

/// Candidate tensors used for site assignment.
struct AssignmentCandidates {
  EffectiveGTensor ground;
  std::optional<EffectiveGTensor> excited;  // required for difference data
};

enum class AssignmentStatus { assigned, residual_too_large, host_spin };

struct AssignmentEntry {
  std::size_t index = 0;
  double angle = 0.0;
  double frequency = 0.0;
  int site = 0;              // 0 when unassigned
  double predicted = 0.0;    // MHz, nearest prediction
  double relative_residual = 0.0;
  AssignmentStatus status = AssignmentStatus::assigned;
};

struct AssignmentReport {
  std::vector<Resonance> assigned;  // only resonances kept for fitting
  std::vector<AssignmentEntry> entries;

  std::size_t excluded_count() const;
};

struct AssignmentOptions {
  double max_relative_residual = 0.2;
  double host_slope_min = 9.0;  // MHz/T
  double host_slope_max = 11.0;
  double host_max_variation = 0.05;
};

AssignmentReport assign_sites(std::span<const Resonance> resonances, const RotationScan& scan,
                              Convention convention, const AssignmentCandidates& candidates,
                              const AssignmentOptions& options = {});

/// Predicted splitting of `kind` for `site` at a nominal scan angle.
double predicted_splitting(const RotationScan& scan, Convention convention, int site, double angle,
                           ResonanceKind kind, const EffectiveGTensor& ground,
                           const std::optional<EffectiveGTensor>& excited, double field_tesla);

/// Arithmetic mean of component magnitudes of several directional fits.
EffectiveGTensor average_tensors(std::span<const EffectiveGTensor> fits);

}  // namespace garnetspin
