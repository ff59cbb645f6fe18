#include <doctest.h>

#include <cmath>
#include <random>

#include "garnetspin/hamiltonian.hpp"

using namespace garnetspin;

namespace {

LocalField scaled(const LocalField& b, double s) { return {s * b.x, s * b.y, s * b.z}; }

LocalField random_field(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.1);
  return {n(rng), n(rng), n(rng)};
}

const Branch kDownDown{SpinState::down, SpinState::down};
const Branch kUpUp{SpinState::up, SpinState::up};

}  // namespace

TEST_CASE("level constants") {
  const auto g = table1_ground().constants;
  CHECK(g.mu_B == kBohrMagnetonMHzPerT);
  CHECK(kBohrMagnetonMHzPerT == 13996.245);
  CHECK(g.g_J == 1.16);
  CHECK(g.A_J == -470.3);
  CHECK(g.g_n_beta_n == -3.53);
  LevelConstants bad = g;
  bad.A_J = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("effective g from the tabulated products") {
  const auto g = table1_ground_from_products().effective_g();
  CHECK(std::abs(g.x()) == doctest::Approx(27.0).epsilon(0.005));
  CHECK(std::abs(g.z()) == doctest::Approx(36.0).epsilon(0.005));
  CHECK(std::abs(g.y()) == doctest::Approx(148.68).epsilon(0.001));
  const auto e = table1_excited_from_products().effective_g();
  CHECK(std::abs(e.x()) == doctest::Approx(7.0).epsilon(0.01));
  CHECK(std::abs(e.y()) == doctest::Approx(92.0).epsilon(0.005));
  CHECK(std::abs(e.z()) == doctest::Approx(16.0).epsilon(0.005));
}

TEST_CASE("zero tensor leaves the bare nuclear term") {
  const auto c = table1_ground().constants;
  for (double v : effective_g(c, HyperfineTensor{}).g) CHECK(v == doctest::Approx(3.53));
  for (double l : lambda_from_g({{3.53, 3.53, 3.53}}, c).lambda) CHECK(std::abs(l) < 1e-18);
}

TEST_CASE("lambda_from_g recovers the tabulated product") {
  const auto c = table1_ground().constants;
  const auto t = lambda_from_g({{27.0, 146.0, 36.0}}, c);
  CHECK(t.products(c)[2] == doctest::Approx(-9.99e-4).epsilon(0.005));
  CHECK(t.products(c)[0] == doctest::Approx(-7.23e-4).epsilon(0.005));
}

TEST_CASE("lambda_from_g and effective_g are mutually inverse") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-200.0, 200.0);
  for (int i = 0; i < 100; ++i) {
    const EffectiveGTensor g{{u(rng), u(rng), u(rng)}};
    for (const auto& c : {table1_ground().constants, table1_excited().constants}) {
      const auto back = effective_g(c, lambda_from_g(g, c));
      for (int a = 0; a < 3; ++a) CHECK(std::abs(back.g[a] - g.g[a]) <= 1e-12 * std::max(1.0, std::abs(g.g[a])));
    }
  }
  LevelConstants no_electron = table1_ground().constants;
  no_electron.g_J = 0.0;
  CHECK_THROWS_AS(lambda_from_g({{1.0, 1.0, 1.0}}, no_electron), DomainError);
}

TEST_CASE("hyperfine splitting") {
  const auto g = table1_ground().effective_g();
  CHECK(hyperfine_splitting(g, {}) == 0.0);
  CHECK(hyperfine_splitting(g, {0.0, 0.0, 1.0}) == doctest::Approx(36.0));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(hyperfine_splitting(g, {0.0, r, r}) == doctest::Approx(std::sqrt(0.5 * (146.0 * 146.0 + 36.0 * 36.0))));
  CHECK(hyperfine_splitting(g, {0.0, r, r}) == doctest::Approx(106.3).epsilon(0.001));
}

TEST_CASE("splitting homogeneity and sign blindness") {
  const auto g = table1_ground().effective_g();
  const auto p = table1_ground();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> s(0.1, 10.0);
  for (int i = 0; i < 100; ++i) {
    const LocalField b = random_field(rng);
    const double k = s(rng);
    CHECK(hyperfine_splitting(g, scaled(b, k)) == doctest::Approx(k * hyperfine_splitting(g, b)).epsilon(1e-12));
    CHECK(quadratic_shift(p.constants, p.tensor, scaled(b, k)) ==
          doctest::Approx(k * k * quadratic_shift(p.constants, p.tensor, b)).epsilon(1e-12));
    CHECK(hyperfine_splitting(g, {-b.x, b.y, -b.z}) == hyperfine_splitting(g, b));
  }
}

TEST_CASE("quadratic shift") {
  const auto p = table1_ground();
  CHECK(quadratic_shift(p.constants, p.tensor, {}) == 0.0);
  // 1.16^2 * 13996.245^2 * 4.47e-3 / 470.3
  const auto products = table1_ground_from_products();
  CHECK(quadratic_shift(products.constants, products.tensor, {0.0, 1.0, 0.0}) ==
        doctest::Approx(-2.505e3).epsilon(0.001));
  const auto e = table1_excited();
  const double r = 1.0 / std::sqrt(2.0);
  const LocalField eq{0.0, r, r};
  const double transition = quadratic_shift(e.constants, e.tensor, eq) - quadratic_shift(p.constants, p.tensor, eq);
  CHECK(transition / 1e3 == doctest::Approx(1.09).epsilon(0.02));
  CHECK(p.quadratic_coefficients()[1] == doctest::Approx(quadratic_shift(p.constants, p.tensor, {0.0, 1.0, 0.0})));
}

TEST_CASE("level energies") {
  const auto p = table1_ground();
  const auto g = p.effective_g();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const LocalField b = random_field(rng);
    const double down = level_energy(p, SpinState::down, b);
    const double up = level_energy(p, SpinState::up, b);
    CHECK(down - up == doctest::Approx(hyperfine_splitting(g, b)).epsilon(1e-12));
  }
  CHECK(level_energy(p, SpinState::down, {}) == 0.0);
  CHECK(level_energy(p, SpinState::up, {}) == 0.0);

  SUBCASE("slope at zero field is half the splitting") {
    const LocalField dir{0.3, 0.5, std::sqrt(1.0 - 0.34)};
    const double h = 1e-7;
    for (SpinState m : {SpinState::down, SpinState::up}) {
      const double slope =
          (4.0 * level_energy(p, m, scaled(dir, h)) - level_energy(p, m, scaled(dir, 2.0 * h)) -
           3.0 * level_energy(p, m, {})) /
          (2.0 * h);
      const double expected = -spin_value(m) * hyperfine_splitting(g, dir);
      CHECK(std::abs(slope - expected) < 1e-6 * std::abs(expected));
    }
  }
}

TEST_CASE("optical shift") {
  const auto g = table1_ground();
  const auto e = table1_excited();
  CHECK(optical_shift(g, e, kDownDown, {}) == 0.0);

  const LocalField dir{0.0, 0.8, 0.6};
  const auto profile = optical_shift_profile(g, e, kDownDown, dir.vec());
  const double split_g = hyperfine_splitting(g.effective_g(), dir);
  const double split_e = hyperfine_splitting(e.effective_g(), dir);
  CHECK(profile.slope == doctest::Approx((split_e - split_g) / 2.0));
  CHECK(profile.slope < 0.0);
  CHECK(profile.curvature > 0.0);
  const double s = 0.02;
  CHECK(optical_shift(g, e, kDownDown, scaled(dir, s)) == doctest::Approx(profile.value(s)).epsilon(1e-12));

  const auto mirrored = optical_shift_profile(g, e, kUpUp, dir.vec());
  CHECK(mirrored.slope == doctest::Approx(-profile.slope));

  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const LocalField b = random_field(rng);
    const double sum = optical_shift(g, e, kDownDown, b) + optical_shift(g, e, kUpUp, b);
    const double quad = quadratic_shift(e.constants, e.tensor, b) - quadratic_shift(g.constants, g.tensor, b);
    CHECK(sum == doctest::Approx(2.0 * quad).epsilon(1e-10));
  }
}

TEST_CASE("signed-sum splitting") {
  const EffectiveGTensor g{{27.0, 146.0, 36.0}};
  const LocalField b{0.1, -0.2, 0.3};
  CHECK(linear_splitting(g, b, SplittingModel::signed_sum) == doctest::Approx(2.7 - 29.2 + 10.8));
  CHECK(linear_splitting(g, b, SplittingModel::magnitude) == hyperfine_splitting(g, b));
  CHECK(parse_splitting_model("signed-sum") == SplittingModel::signed_sum);
  CHECK(parse_splitting_model(to_string(SplittingModel::magnitude)) == SplittingModel::magnitude);
  CHECK_THROWS_AS(parse_splitting_model("abs"), DomainError);
}

TEST_CASE("branches") {
  const auto b = all_branches();
  CHECK(b[0] == kDownDown);
  CHECK(b[1] == kUpUp);
  CHECK(to_string(b[2]) == "-1/2<->+1/2");
}
