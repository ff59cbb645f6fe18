#pragma once

// Three-term effective spin Hamiltonian of a spin-1/2 dopant level: enhanced
// nuclear Zeeman splitting plus the quadratic (Van Vleck) shift. All energies
// are frequencies in MHz, fields in tesla.

#include <array>
#include <string>
#include <string_view>

#include "garnetspin/geometry.hpp"

namespace garnetspin {

/// Bohr magneton in frequency units, MHz/T.
inline constexpr double kBohrMagnetonMHzPerT = 13996.245;

enum class Level { ground, excited };
std::string_view to_string(Level level);

struct LevelConstants {
  Level label = Level::ground;
  double g_J = 0.0;         // electronic g factor
  double A_J = 0.0;         // hyperfine constant, MHz
  double g_n_beta_n = 0.0;  // nuclear term, MHz/T
  double mu_B = kBohrMagnetonMHzPerT;

  void validate() const;
};

/// Diagonal hyperfine tensor in the site frame, 1/MHz.
struct HyperfineTensor {
  std::array<double, 3> lambda{};

  /// Builds the tensor from tabulated A_J * Lambda products.
  static HyperfineTensor from_products(const LevelConstants& c, const std::array<double, 3>& products);
  std::array<double, 3> products(const LevelConstants& c) const;
};

/// Effective gyromagnetic values per local axis, MHz/T.
struct EffectiveGTensor {
  std::array<double, 3> g{};

  double x() const { return g[0]; }
  double y() const { return g[1]; }
  double z() const { return g[2]; }
  EffectiveGTensor magnitudes() const;
};

/// Nuclear spin projection.
enum class SpinState { up, down };

inline double spin_value(SpinState s) { return s == SpinState::up ? 0.5 : -0.5; }
std::string_view to_string(SpinState s);

/// Ground and excited spin labels of an optical transition.
struct Branch {
  SpinState ground = SpinState::down;
  SpinState excited = SpinState::down;

  bool operator==(const Branch&) const = default;
};

std::string to_string(const Branch& b);
/// All four ground/excited combinations, spin-conserving ones first.
std::array<Branch, 4> all_branches();

/// How the linear term depends on the local field.
///
/// `magnitude` is the sign-blind splitting sqrt(sum g_a^2 b_a^2). `signed_sum`
/// takes the signed component sum sum g_a b_a, the form that reproduces the
/// tabulated optical clock transitions.
enum class SplittingModel { magnitude, signed_sum };

std::string_view to_string(SplittingModel m);
SplittingModel parse_splitting_model(std::string_view text);

/// Constants plus tensor for one electronic level.
struct LevelParameters {
  LevelConstants constants;
  HyperfineTensor tensor;

  static LevelParameters from_g_values(const LevelConstants& c, const EffectiveGTensor& g);
  static LevelParameters from_products(const LevelConstants& c, const std::array<double, 3>& products);

  EffectiveGTensor effective_g() const;
  /// Per-axis quadratic-shift coefficients -g_J^2 mu_B^2 Lambda_a, MHz/T^2.
  std::array<double, 3> quadratic_coefficients() const;
};

EffectiveGTensor effective_g(const LevelConstants& c, const HyperfineTensor& t);
HyperfineTensor lambda_from_g(const EffectiveGTensor& g, const LevelConstants& c);

double hyperfine_splitting(const EffectiveGTensor& g, const LocalField& b);
double linear_splitting(const EffectiveGTensor& g, const LocalField& b, SplittingModel model);
double quadratic_shift(const LevelConstants& c, const HyperfineTensor& t, const LocalField& b);

double level_energy(const LevelParameters& level, SpinState m, const LocalField& b,
                    SplittingModel model = SplittingModel::magnitude);

double optical_shift(const LevelParameters& ground, const LevelParameters& excited, const Branch& branch,
                     const LocalField& b, SplittingModel model = SplittingModel::magnitude);

/// Optical shift along a fixed direction, dE(s) = slope * s + curvature * s^2
/// for field magnitude s >= 0.
struct ShiftProfile {
  double slope = 0.0;      // MHz/T
  double curvature = 0.0;  // MHz/T^2

  double value(double s) const { return slope * s + curvature * s * s; }
  double derivative(double s) const { return slope + 2.0 * curvature * s; }
};

ShiftProfile optical_shift_profile(const LevelParameters& ground, const LevelParameters& excited,
                                   const Branch& branch, const Vec3& unit_local_direction,
                                   SplittingModel model = SplittingModel::magnitude);

/// Table I parameter set (tabulated g-values with derived Lambda).
LevelParameters table1_ground();
LevelParameters table1_excited();
/// Table I parameter set built from the tabulated A_J * Lambda products.
LevelParameters table1_ground_from_products();
LevelParameters table1_excited_from_products();

}  // namespace garnetspin
