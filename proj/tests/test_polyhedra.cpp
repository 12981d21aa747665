#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "elastlab/polyhedra.hpp"

using namespace elastlab;

static Box side4_box() { return {Vec3(-2, -2, -2), Vec3(2, 2, 2)}; }

TEST_CASE("cube construction and derived data") {
  auto P = make_cube(Vec3::Zero(), 1.0);
  CHECK(P.V.size() == 8);
  CHECK(P.edges.size() == 12);
  CHECK(P.faces.size() == 6);
  CHECK(P.diameter() == doctest::Approx(std::sqrt(3.0)));
  CHECK(P.contains(Vec3(0.2, 0.1, -0.3)));
  CHECK(!P.contains(Vec3(0.2, 0.1, 0.7)));
  CHECK(P.dist_to_surface(Vec3::Zero()) == doctest::Approx(0.5));
  for (double a : P.dihedral_angles()) CHECK(a == doctest::Approx(M_PI / 2));
  for (int f = 0; f < 6; ++f)
    for (double a : P.face_angles(f)) CHECK(a == doctest::Approx(M_PI / 2));
}

TEST_CASE("json round trip") {
  auto P = make_cube(Vec3(0.25, 0, -0.5), 1.5);
  auto Q = Polyhedron::from_json(P.to_json());
  REQUIRE(Q.V.size() == P.V.size());
  for (size_t i = 0; i < P.V.size(); ++i) CHECK((P.V[i] - Q.V[i]).norm() < 1e-15);
  CHECK(Q.faces == P.faces);
}

TEST_CASE("structural validation") {
  Polyhedron bad = make_cube(Vec3::Zero(), 1.0);
  bad.faces.pop_back();
  CHECK_THROWS(bad.build());

  Polyhedron inward = make_cube(Vec3::Zero(), 1.0);
  for (auto& f : inward.faces) std::reverse(f.begin(), f.end());
  CHECK_THROWS(inward.build());

  // planarity
  Polyhedron warped = make_cube(Vec3::Zero(), 1.0);
  warped.V[6] += Vec3(0.01, 0.01, 0.01);
  CHECK_THROWS(warped.build());
  CHECK_NOTHROW(warped.build(0.1));  // lenient tolerance admits it
}

TEST_CASE("class P validation on the unit cube") {
  auto P = make_cube(Vec3::Zero(), 1.0);
  AdmissibilityParams prm;
  prm.r0 = 0.5;
  prm.theta0 = M_PI / 6;
  prm.M0 = 2.0;
  prm.M1 = 16.0;
  auto rep = validate_class_P(P, side4_box(), prm);
  INFO(rep.to_text());
  CHECK(rep.pass);
  for (const auto& c : rep.checks)
    if (c.name.substr(0, 4) == "H2-2")
      CHECK(c.margin == doctest::Approx(M_PI / 2 - M_PI / 6));

  // shrink an edge below r0: scaled-down cube edge 0.1
  auto small = make_cube(Vec3::Zero(), 0.1);
  auto rep2 = validate_class_P(small, side4_box(), prm);
  CHECK(!rep2.checks[3].pass);
  CHECK(rep2.checks[3].margin == doctest::Approx(0.1 - 0.5));

  // clearance violation
  auto shifted = make_cube(Vec3(1.2, 0, 0), 1.0);
  auto rep3 = validate_class_P(shifted, side4_box(), prm);
  CHECK(!rep3.checks[1].pass);
}

TEST_CASE("tetrahedron admissibility") {
  auto T = make_tetrahedron(Vec3::Zero(), 1.0);
  AdmissibilityParams prm;
  prm.r0 = 0.5;
  prm.theta0 = M_PI / 6;
  prm.M0 = 2.5;
  auto rep = validate_class_P(T, side4_box(), prm);
  INFO(rep.to_text());
  CHECK(rep.pass);
  // regular tetrahedron dihedral: arccos(1/3)
  for (double a : T.dihedral_angles())
    CHECK(a == doctest::Approx(std::acos(1.0 / 3.0)));
}

TEST_CASE("hausdorff distances") {
  auto P = make_cube(Vec3::Zero(), 1.0);
  double res = 1.0 / 256.0;
  CHECK(hausdorff_boundary(P, P, res) == doctest::Approx(0.0));

  auto Q = P.translated(Vec3(0.1, 0, 0));
  CHECK(hausdorff_boundary(P, Q, res) == doctest::Approx(0.1).epsilon(0.02));

  auto S = P.scaled(1.2, Vec3::Zero());
  CHECK(hausdorff_boundary(P, S, res) ==
        doctest::Approx(0.2 * std::sqrt(3.0) / 2.0).epsilon(0.02));

  // solid sandwich: both finite and comparable
  double hb = hausdorff_boundary(P, Q, res);
  double hs = hausdorff_solid(P, Q, res);
  CHECK(hs <= hb + res);
  CHECK(hs > 0.0);

  // symmetry
  CHECK(hausdorff_boundary(Q, P, res) == doctest::Approx(hb).epsilon(1e-9));
}

TEST_CASE("modified distance") {
  auto P = make_cube(Vec3::Zero(), 1.0);
  Box omega = side4_box();
  double vox = 1.0 / 24.0, res = 1.0 / 64.0;
  CHECK(modified_distance(P, P, omega, vox, res) == doctest::Approx(0.0));

  auto Q = P.translated(Vec3(0.08, 0, 0));
  double dmu = modified_distance(P, Q, omega, vox, res);
  double dh = hausdorff_boundary(P, Q, res);
  CHECK(dmu <= dh + res);
  CHECK(dmu == doctest::Approx(dh).epsilon(0.15));  // G reaches everything

  auto nested = P.scaled(0.6, Vec3::Zero());
  double dmun = modified_distance(P, nested, omega, vox, res);
  double dhn = hausdorff_boundary(P, nested, res);
  CHECK(dmun <= dhn + res);
}

TEST_CASE("vertex matching") {
  auto P = make_cube(Vec3::Zero(), 1.0);
  auto idp = match_vertices(P, P, 0.0, 0.05, 10.0, 1.0);
  CHECK(idp.max_displacement == doctest::Approx(0.0));

  auto Q = make_cube(Vec3::Zero(), 1.0);
  Q.V[5] += Vec3(0.006, 0.006, 0.006);
  Q.build(0.1);
  double dh = 0.006 * std::sqrt(3.0);
  auto m = match_vertices(P, Q, dh, 0.05, 10.0, 1.0);
  CHECK(m.max_displacement == doctest::Approx(dh));
  CHECK(m.map01[5] == 5);

  // permuted copy pairs correctly
  Polyhedron R = P;
  std::swap(R.V[0], R.V[6]);
  for (auto& f : R.faces)
    for (auto& i : f) i = i == 0 ? 6 : i == 6 ? 0 : i;
  R.build();
  auto mp = match_vertices(P, R, 0.0, 0.05, 10.0, 1.0);
  CHECK(mp.map01[0] == 6);
  CHECK(mp.map01[6] == 0);
  CHECK(mp.max_displacement == doctest::Approx(0.0));

  // regime violation
  CHECK_THROWS(match_vertices(P, P.translated(Vec3(0.2, 0, 0)), 0.2, 0.05,
                              10.0, 1.0));
}

TEST_CASE("flap triangles on the cube") {
  auto P = make_cube(Vec3::Zero(), 1.0);
  AdmissibilityParams prm;
  prm.r0 = 0.5;
  prm.theta0 = M_PI / 6;
  prm.M0 = 1.0;
  double gamma = std::min(prm.theta0 / 3, M_PI / 2 - std::atan(prm.M0));
  CHECK(gamma == doctest::Approx(M_PI / 18));
  CHECK(prm.flap_h0() == doctest::Approx(0.25 * std::tan(M_PI / 18)));

  auto flaps = flap_triangles(P, prm);
  CHECK(flaps.size() == 24);  // 12 edges x 2 incident faces
  for (const auto& t : flaps) {
    // apex lies in the face plane
    Vec3 n = P.normals[t.face];
    CHECK(std::fabs((t.E - P.centroids[t.face]).dot(n)) < 1e-14);
    // base on the edge
    CHECK((0.5 * (t.A + t.B) + prm.flap_h0() * t.inward - t.E).norm() < 1e-14);
  }
}

TEST_CASE("normal decomposition") {
  // orthonormal triple: coefficients are projections
  Vec3 n1 = Vec3::UnitX(), n2 = Vec3::UnitY(), n3 = Vec3::UnitZ();
  Vec3 nbar = Vec3(0.3, -0.5, 0.8).normalized();
  Vec3 a = decompose_normal(nbar, n1, n2, n3);
  CHECK((a - nbar).norm() < 1e-14);
  CHECK((decompose_normal(n1, n1, n2, n3) - Vec3(1, 0, 0)).norm() < 1e-14);

  // bound 2(sin^2 t0 + 1)/sin^4 t0 at theta0 = pi/3 is 56/9
  double theta0 = M_PI / 3;
  double bound = 2 * (std::pow(std::sin(theta0), 2) + 1) /
                 std::pow(std::sin(theta0), 4);
  CHECK(bound == doctest::Approx(56.0 / 9.0));
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int tested = 0;
  while (tested < 2000) {
    Vec3 m1 = Vec3(u(rng), u(rng), u(rng)).normalized();
    Vec3 m2 = Vec3(u(rng), u(rng), u(rng)).normalized();
    Vec3 m3 = Vec3(u(rng), u(rng), u(rng)).normalized();
    // admissible triple surrogate: pairwise angles within the H2-2 band
    auto ok = [&](const Vec3& p, const Vec3& q) {
      double ang = std::acos(std::clamp(p.dot(q), -1.0, 1.0));
      return ang > theta0 && ang < M_PI - theta0;
    };
    if (!ok(m1, m2) || !ok(m1, m3) || !ok(m2, m3)) continue;
    if (std::fabs(m1.cross(m2).dot(m3)) < 0.2) continue;
    Vec3 nb = Vec3(u(rng), u(rng), u(rng)).normalized();
    Vec3 al = decompose_normal(nb, m1, m2, m3);
    CHECK(al.cwiseAbs().maxCoeff() <= bound + 1e-9);
    // exact reconstruction
    CHECK((al.x() * m1 + al.y() * m2 + al.z() * m3 - nb).norm() < 1e-10);
    ++tested;
  }

  CHECK_THROWS(decompose_normal(nbar, n1, n2, (n1 + 1e-13 * n3).normalized()));
}

TEST_CASE("line-plane angle identity") {
  // line s at angle theta2 from r inside a plane forming dihedral theta1
  // with beta: angle(s, beta) = arcsin(sin theta1 sin theta2)
  for (double t1 : {0.2, 0.7, 1.3})
    for (double t2 : {0.1, 0.8, 1.4}) {
      Vec3 er = Vec3::UnitX();
      Vec3 inplane = std::cos(t1) * Vec3::UnitY() + std::sin(t1) * Vec3::UnitZ();
      Vec3 s = std::cos(t2) * er + std::sin(t2) * inplane;
      double measured = angle_line_plane(s, Vec3::UnitZ());
      CHECK(measured ==
            doctest::Approx(std::asin(std::sin(t1) * std::sin(t2))).epsilon(1e-10));
    }
}
