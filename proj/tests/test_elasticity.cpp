#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "elastlab/elasticity.hpp"

using namespace elastlab;

static Mat3 random_sym(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat3 A;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) A(i, j) = u(rng);
  return 0.5 * (A + A.transpose());
}

TEST_CASE("apply_isotropic basic identities") {
  IsotropicElastic C{1.3, 0.7};
  CHECK((C.apply(Mat3::Identity()) -
         (2 * C.mu + 3 * C.lambda) * Mat3::Identity())
            .norm() == doctest::Approx(0.0).epsilon(1e-15));

  Mat3 W;  // skew
  W << 0, 1, -2, -1, 0, 3, 2, -3, 0;
  CHECK(C.apply(W).norm() == doctest::Approx(0.0).epsilon(1e-15));

  IsotropicElastic S{0.0, 1.0};
  Mat3 E12 = Vec3::UnitX() * Vec3::UnitY().transpose();
  Mat3 expect = E12 + E12.transpose();
  CHECK((S.apply(E12) - expect).norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("major symmetry and spectrum on Sym(3)") {
  IsotropicElastic C{0.8, 1.9};
  std::mt19937 rng(7);
  for (int k = 0; k < 50; ++k) {
    Mat3 A = random_sym(rng), B = random_sym(rng);
    double ab = (C.apply(A).array() * B.array()).sum();
    double ba = (C.apply(B).array() * A.array()).sum();
    CHECK(ab == doctest::Approx(ba).epsilon(1e-13));
  }
  // spherical eigenvector
  Mat3 I = Mat3::Identity();
  CHECK((C.apply(I) - C.spherical_eig() * I).norm() < 1e-14);
  // deviatoric eigenvectors
  Mat3 D1 = Vec3::UnitX() * Vec3::UnitX().transpose() -
            Vec3::UnitY() * Vec3::UnitY().transpose();
  Mat3 D2 = Vec3::UnitX() * Vec3::UnitY().transpose() +
            Vec3::UnitY() * Vec3::UnitX().transpose();
  CHECK((C.apply(D1) - 2 * C.mu * D1).norm() < 1e-14);
  CHECK((C.apply(D2) - 2 * C.mu * D2).norm() < 1e-14);
}

TEST_CASE("strong convexity report") {
  auto r = check_strong_convexity({1.0, 1.0}, 0.5, 0.5);
  CHECK(r.pass);
  CHECK(r.xi0 == doctest::Approx(0.5));

  auto b = check_strong_convexity({0.0, 0.5}, 0.5, 0.5);
  CHECK(b.pass);
  CHECK(b.margin_shear == doctest::Approx(0.0));

  auto f = check_strong_convexity({0.0, 0.4}, 0.5, 0.5);
  CHECK(!f.pass);
  CHECK(f.violated == "mu < alpha0");

  // sampled quadratic-form bound
  IsotropicElastic C{0.9, 1.1};
  auto rep = check_strong_convexity(C, 1.1, 2 * 1.1 + 3 * 0.9);
  std::mt19937 rng(11);
  double worst = 1e300;
  for (int k = 0; k < 1000; ++k) {
    Mat3 A = random_sym(rng);
    worst = std::min(worst,
                     (C.apply(A).array() * A.array()).sum() / A.squaredNorm());
  }
  CHECK(worst >= rep.xi0 - 1e-12);
}

TEST_CASE("poisson ratio") {
  CHECK(IsotropicElastic{1.0, 1.0}.poisson() == doctest::Approx(0.25));
  CHECK(IsotropicElastic{0.0, 2.0}.poisson() == doctest::Approx(0.0));
  CHECK(IsotropicElastic{3.0, 1.0}.poisson() == doctest::Approx(3.0 / 8.0));
}

TEST_CASE("biphase checks") {
  BiphaseMaterial m;
  m.exterior = {1.0, 1.0};
  m.interior = {2.0, 2.0};
  m.eta0 = 1.0;
  CHECK(m.visible());
  CHECK(m.detect_monotonicity(0.5, 0.5) == Monotonicity::IntMinusExt);
  CHECK(m.sigma() == doctest::Approx(2.0));

  BiphaseMaterial mixed;
  mixed.exterior = {1.0, 1.0};
  mixed.interior = {0.0, 2.0};  // neither difference strongly convex
  CHECK(mixed.detect_monotonicity(0.1, 0.1) == Monotonicity::None);
}
