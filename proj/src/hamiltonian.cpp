#include "garnetspin/hamiltonian.hpp"

#include <cmath>
#include <string>

namespace garnetspin {

namespace {

constexpr LevelConstants kGroundConstants{Level::ground, 1.16, -470.3, -3.53};
constexpr LevelConstants kExcitedConstants{Level::excited, 0.8, -678.3, -3.53};

double enhancement(const LevelConstants& c) { return 2.0 * c.g_J * c.mu_B * c.A_J; }

}  // namespace

std::string_view to_string(Level level) { return level == Level::ground ? "ground" : "excited"; }

std::string_view to_string(SpinState s) { return s == SpinState::up ? "+1/2" : "-1/2"; }

std::string to_string(const Branch& b) {
  return std::string(to_string(b.ground)) + "<->" + std::string(to_string(b.excited));
}

std::array<Branch, 4> all_branches() {
  return {Branch{SpinState::down, SpinState::down}, Branch{SpinState::up, SpinState::up},
          Branch{SpinState::down, SpinState::up}, Branch{SpinState::up, SpinState::down}};
}

std::string_view to_string(SplittingModel m) {
  return m == SplittingModel::magnitude ? "magnitude" : "signed-sum";
}

SplittingModel parse_splitting_model(std::string_view text) {
  if (text == "magnitude") return SplittingModel::magnitude;
  if (text == "signed-sum") return SplittingModel::signed_sum;
  throw DomainError("unknown splitting model '" + std::string(text) + "' (expected magnitude or signed-sum)");
}

void LevelConstants::validate() const {
  if (A_J == 0.0) throw DomainError("hyperfine constant A_J must be nonzero");
  if (!std::isfinite(g_J) || !std::isfinite(A_J) || !std::isfinite(g_n_beta_n)) {
    throw DomainError("level constants must be finite");
  }
}

HyperfineTensor HyperfineTensor::from_products(const LevelConstants& c, const std::array<double, 3>& products) {
  c.validate();
  HyperfineTensor t;
  for (int a = 0; a < 3; ++a) t.lambda[a] = products[a] / c.A_J;
  return t;
}

std::array<double, 3> HyperfineTensor::products(const LevelConstants& c) const {
  return {lambda[0] * c.A_J, lambda[1] * c.A_J, lambda[2] * c.A_J};
}

EffectiveGTensor EffectiveGTensor::magnitudes() const {
  return {{std::abs(g[0]), std::abs(g[1]), std::abs(g[2])}};
}

EffectiveGTensor effective_g(const LevelConstants& c, const HyperfineTensor& t) {
  EffectiveGTensor out;
  for (int a = 0; a < 3; ++a) out.g[a] = -c.g_n_beta_n - enhancement(c) * t.lambda[a];
  return out;
}

HyperfineTensor lambda_from_g(const EffectiveGTensor& g, const LevelConstants& c) {
  if (c.g_J == 0.0) throw DomainError("g_J = 0: effective g does not depend on Lambda");
  c.validate();
  HyperfineTensor t;
  for (int a = 0; a < 3; ++a) t.lambda[a] = -(g.g[a] + c.g_n_beta_n) / enhancement(c);
  return t;
}

double hyperfine_splitting(const EffectiveGTensor& g, const LocalField& b) {
  return std::hypot(g.g[0] * b.x, g.g[1] * b.y, g.g[2] * b.z);
}

double linear_splitting(const EffectiveGTensor& g, const LocalField& b, SplittingModel model) {
  if (model == SplittingModel::magnitude) return hyperfine_splitting(g, b);
  return g.g[0] * b.x + g.g[1] * b.y + g.g[2] * b.z;
}

double quadratic_shift(const LevelConstants& c, const HyperfineTensor& t, const LocalField& b) {
  const double scale = c.g_J * c.g_J * c.mu_B * c.mu_B;
  return -scale * (t.lambda[0] * b.x * b.x + t.lambda[1] * b.y * b.y + t.lambda[2] * b.z * b.z);
}

LevelParameters LevelParameters::from_g_values(const LevelConstants& c, const EffectiveGTensor& g) {
  return {c, lambda_from_g(g, c)};
}

LevelParameters LevelParameters::from_products(const LevelConstants& c, const std::array<double, 3>& products) {
  return {c, HyperfineTensor::from_products(c, products)};
}

EffectiveGTensor LevelParameters::effective_g() const { return garnetspin::effective_g(constants, tensor); }

std::array<double, 3> LevelParameters::quadratic_coefficients() const {
  const double scale = constants.g_J * constants.g_J * constants.mu_B * constants.mu_B;
  return {-scale * tensor.lambda[0], -scale * tensor.lambda[1], -scale * tensor.lambda[2]};
}

double level_energy(const LevelParameters& level, SpinState m, const LocalField& b, SplittingModel model) {
  return -spin_value(m) * linear_splitting(level.effective_g(), b, model) +
         quadratic_shift(level.constants, level.tensor, b);
}

double optical_shift(const LevelParameters& ground, const LevelParameters& excited, const Branch& branch,
                     const LocalField& b, SplittingModel model) {
  return level_energy(excited, branch.excited, b, model) - level_energy(ground, branch.ground, b, model);
}

ShiftProfile optical_shift_profile(const LevelParameters& ground, const LevelParameters& excited,
                                   const Branch& branch, const Vec3& unit_local_direction,
                                   SplittingModel model) {
  const LocalField u = LocalField::from(unit_local_direction);
  const double split_g = linear_splitting(ground.effective_g(), u, model);
  const double split_e = linear_splitting(excited.effective_g(), u, model);
  ShiftProfile p;
  p.slope = -spin_value(branch.excited) * split_e + spin_value(branch.ground) * split_g;
  p.curvature = quadratic_shift(excited.constants, excited.tensor, u) -
                quadratic_shift(ground.constants, ground.tensor, u);
  return p;
}

LevelParameters table1_ground() {
  return LevelParameters::from_g_values(kGroundConstants, {{27.0, 146.0, 36.0}});
}

LevelParameters table1_excited() {
  return LevelParameters::from_g_values(kExcitedConstants, {{7.0, 92.0, 16.0}});
}

LevelParameters table1_ground_from_products() {
  return LevelParameters::from_products(kGroundConstants, {{-7.23e-4, -4.47e-3, -9.99e-4}});
}

LevelParameters table1_excited_from_products() {
  return LevelParameters::from_products(kExcitedConstants, {{-1.55e-4, -3.95e-3, -5.57e-4}});
}

}  // namespace garnetspin
