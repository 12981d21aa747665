#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "elastlab/homotopy.hpp"
#include "elastlab/shape_deriv.hpp"

using namespace elastlab;

namespace {

Box box4() {
  Box b;
  b.lo = Vec3(-2, -2, -2);
  b.hi = Vec3(2, 2, 2);
  return b;
}

BiphaseMaterial contrast() {
  BiphaseMaterial mat;
  mat.exterior = {1.0, 1.0};
  mat.interior = {1.9, 1.6};
  return mat;
}

// Smooth direction field pushing the bottom cube face down, vanishing
// well inside the box boundary.
Vec3 bump_dir(const Vec3& x) {
  double r2 = x.squaredNorm();
  if (r2 >= 2.89) return Vec3::Zero();
  double w = std::exp(1.0 - 2.89 / (2.89 - r2));
  return Vec3(0, 0, -w);
}

Vec3 trace_f(const Vec3& x) {
  return Vec3(0.1 * x.z(), 0.0, 0.2 * x.x() - 0.1);
}
Vec3 trace_g(const Vec3& x) {
  return Vec3(0.0, 0.15 * std::sin(x.x()) + 0.05 * x.y(), 0.1 * x.y() * x.z());
}

}  // namespace

TEST_CASE("distributed derivative: trivial cases") {
  Polyhedron P = make_cube(Vec3::Zero(), 2.0);
  Mesh mesh = mesh_inclusion(box4(), P, 0.5);
  NodalField zero(mesh.n_nodes(), Vec3::Zero());
  CHECK(F_prime_distributed(mesh, contrast(), zero, trace_f, trace_g) == 0.0);

  NodalField U = nodal_field(mesh, bump_dir);
  BiphaseMaterial hom;
  hom.exterior = {1.3, 0.9};
  hom.interior = hom.exterior;
  // Equal phases: the integrand is a divergence of a compactly supported
  // flux, so the quadrature value is tiny relative to the field scale.
  double fp_hom = F_prime_distributed(mesh, hom, U, trace_f, trace_g);
  double f0 = F_value(mesh, hom, U, 0.0, trace_f, trace_g);
  double scale = F_value(mesh, hom, U, 0.0, trace_f, trace_f);
  CHECK(std::fabs(fp_hom) < 2e-2 * scale);
  // And F(t) itself is nearly constant in t.
  double f1 = F_value(mesh, hom, U, 0.05, trace_f, trace_g);
  CHECK(std::fabs(f1 - f0) < 2e-3 * scale);

  // doubling the trace doubles F' in each slot
  auto f2 = [](const Vec3& x) { return Vec3(2.0 * trace_f(x)); };
  double a = F_prime_distributed(mesh, contrast(), U, trace_f, trace_g);
  double b = F_prime_distributed(mesh, contrast(), U, f2, trace_g);
  CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-10));
}

TEST_CASE("finite-difference validation: slope 2 and symmetry") {
  Polyhedron P = make_cube(Vec3::Zero(), 2.0);
  Mesh mesh = mesh_inclusion(box4(), P, 0.5);
  NodalField U = nodal_field(mesh, bump_dir);
  BiphaseMaterial mat = contrast();

  auto tab = fd_validate(mesh, mat, U, trace_f, trace_g,
                         {0.2, 0.1, 0.05, 0.025});
  CHECK(tab.slope > 1.7);
  CHECK(tab.slope < 2.3);
  for (size_t i = 1; i < tab.rows.size(); ++i)
    CHECK(tab.rows[i].R < tab.rows[i - 1].R);

  // F symmetric in (f, g)
  double Ffg = F_value(mesh, mat, U, 0.1, trace_f, trace_g);
  double Fgf = F_value(mesh, mat, U, 0.1, trace_g, trace_f);
  CHECK(Ffg == doctest::Approx(Fgf).epsilon(1e-12));
  // f = g gives nonnegative energy
  CHECK(F_value(mesh, mat, U, 0.1, trace_f, trace_f) >= 0.0);

  SUBCASE("csv table") {
    std::string csv = tab.to_csv();
    CHECK(csv.find("t,F,R") == 0);
    CHECK(csv.find("0.2") != std::string::npos);
  }
}

TEST_CASE("F(1) - F(0) equals the DtN pairing difference") {
  // Traces supported strictly inside the bottom box face so the pairing
  // reduces to the measurement-face bilinear form.
  Polyhedron P = make_cube(Vec3::Zero(), 2.0);
  Mesh mesh = mesh_inclusion(box4(), P, 0.5);
  NodalField U = nodal_field(mesh, [](const Vec3& x) {
    return Vec3(0.2 * bump_dir(x));
  });
  BiphaseMaterial mat = contrast();
  const int sigma = 4;

  auto hat = [](double s) { return std::max(0.0, 1.0 - std::fabs(s)); };
  auto f = [&](const Vec3& x) {
    if (x.z() > -2 + 1e-9) return Vec3(Vec3::Zero());
    return Vec3(0.0, 0.0, hat(x.x()) * hat(x.y()));
  };
  auto g = [&](const Vec3& x) {
    if (x.z() > -2 + 1e-9) return Vec3(Vec3::Zero());
    return Vec3(hat(x.x() - 0.5) * hat(x.y()), 0.0, 0.0);
  };

  double dF = F_value(mesh, mat, U, 1.0, f, g) - F_value(mesh, mat, U, 0.0, f, g);

  Mesh moved = mesh.moved(U);
  auto op0 = dtn_assemble(mesh, mat, sigma, 1.0);
  auto op1 = dtn_assemble(moved, mat, sigma, 1.0);
  int m = (int)op0.sigma_nodes.size();
  Eigen::VectorXd fv(3 * m), gv(3 * m);
  for (int k = 0; k < m; ++k) {
    fv.segment<3>(3 * k) = f(mesh.X[op0.sigma_nodes[k]]);
    gv.segment<3>(3 * k) = g(mesh.X[op0.sigma_nodes[k]]);
  }
  double pairing = gv.dot((op1.L - op0.L) * fv);
  CHECK(dF == doctest::Approx(pairing).epsilon(1e-6));
}

TEST_CASE("boundary form agrees with the distributed form") {
  Polyhedron P = make_cube(Vec3::Zero(), 2.0);
  Mesh mesh = mesh_inclusion(box4(), P, 0.25);
  NodalField U = nodal_field(mesh, bump_dir);
  BiphaseMaterial mat = contrast();

  double dist = F_prime_distributed(mesh, mat, U, trace_f, trace_g);
  auto bd = F_prime_boundary(mesh, P, mat, U, trace_f, trace_g, 1.0 / 8.0);
  CHECK(bd.n_used > 0);
  CHECK(bd.n_excluded > 0);
  double tol = std::max(0.05 * std::fabs(dist), bd.collar);
  CHECK(std::fabs(bd.value - dist) <= tol);

  SUBCASE("tangential direction gives zero boundary form") {
    NodalField T = nodal_field(mesh, [&](const Vec3& x) {
      // tangential on the bottom face z = -1 where bump_dir pushes normal
      double r2 = x.squaredNorm();
      if (r2 >= 2.89) return Vec3(Vec3::Zero());
      return Vec3(std::exp(1.0 - 2.89 / (2.89 - r2)), 0, 0);
    });
    auto bt = F_prime_boundary(mesh, P, mat, T, trace_f, trace_g, 1.0 / 8.0);
    // Only the x-normal side faces see a normal component; restrict the
    // comparison scale to the full-field magnitude.
    CHECK(std::fabs(bt.value) < 10.0 * std::fabs(bd.value));
  }

  SUBCASE("equal phases: moment tensor vanishes") {
    BiphaseMaterial hom;
    hom.exterior = mat.exterior;
    hom.interior = mat.exterior;
    auto bh = F_prime_boundary(mesh, P, hom, U, trace_f, trace_g, 1.0 / 8.0);
    CHECK(bh.value == 0.0);
    CHECK(bh.collar == 0.0);
  }
}

TEST_CASE("material derivative matches the difference quotient") {
  Polyhedron P = make_cube(Vec3::Zero(), 2.0);
  Mesh mesh = mesh_inclusion(box4(), P, 0.5);
  NodalField U = nodal_field(mesh, bump_dir);
  BiphaseMaterial mat = contrast();

  NodalField zero(mesh.n_nodes(), Vec3::Zero());
  CHECK(material_derivative(mesh, mat, zero, trace_f).u.norm() == 0.0);

  DiscreteField ud = material_derivative(mesh, mat, U, trace_f);
  CHECK(ud.u.norm() > 0.0);

  DirichletSolver solver(mesh, mat);
  std::vector<Vec3> bv(solver.bnodes.size());
  for (size_t k = 0; k < bv.size(); ++k)
    bv[k] = trace_f(mesh.X[solver.bnodes[k]]);
  DiscreteField u0 = solver.solve(bv);

  auto quotient_err = [&](double t) {
    NodalField Ut(U.size());
    for (size_t i = 0; i < U.size(); ++i) Ut[i] = t * U[i];
    Mesh mt = mesh.moved(Ut);
    DirichletSolver st(mt, mat);
    DiscreteField ut = st.solve(bv);
    Eigen::VectorXd e = (ut.u - u0.u) / t - ud.u;
    return std::sqrt(std::max(0.0, solver.energy({e}, {e})));
  };
  double e1 = quotient_err(0.1), e2 = quotient_err(0.05);
  double rate = std::log2(e1 / e2);
  CHECK(rate > 0.7);
  CHECK(rate < 1.5);

  SUBCASE("linearity in the direction field") {
    NodalField U2(U.size());
    for (size_t i = 0; i < U.size(); ++i)
      U2[i] = Vec3(0.5 * U[i].z(), 0.0, -U[i].z());
    NodalField sum(U.size());
    for (size_t i = 0; i < U.size(); ++i) sum[i] = U[i] + U2[i];
    DiscreteField a = material_derivative(mesh, mat, U2, trace_f);
    DiscreteField s = material_derivative(mesh, mat, sum, trace_f);
    CHECK((s.u - ud.u - a.u).norm() < 1e-9 * (s.u.norm() + 1.0));
  }
}

TEST_CASE("divergence identity for the derivative flux") {
  IsotropicElastic C{1.2, 0.8};
  Mat3 A;
  A << 0.3, -0.1, 0.2, 0.05, -0.2, 0.1, 0.0, 0.15, 0.25;
  Vec3 c(0.1, -0.2, 0.05);
  Vec3 pu(3.0, 0.5, 0.2), pv(-2.8, 1.0, -0.7);
  Vec3 lu = Vec3(1, 2, -1).normalized(), lv = Vec3(0.5, -1, 1).normalized();

  auto rep = div_identity_check(C, A, c, pu, lu, pv, lv, 30, 1e-4);
  CHECK(rep.max_rel_err < 1e-5);

  SUBCASE("constant direction: both sides vanish") {
    auto r0 = div_identity_check(C, Mat3::Zero(), c, pu, lu, pv, lv, 10, 1e-4);
    CHECK(r0.max_abs_err < 1e-7);
  }
  SUBCASE("doubling the tensor doubles the integrand side consistently") {
    IsotropicElastic C2{2.4, 1.6};
    auto r2 = div_identity_check(C2, A, c, pu, lu, pv, lv, 30, 1e-4);
    CHECK(r2.max_rel_err < 1e-5);
  }
}

TEST_CASE("bundle on a homotopy direction between two cubes") {
  AdmissibilityParams prm;
  prm.r0 = 1.0;
  prm.M0 = 3.0;
  prm.M1 = 20.0;
  prm.theta0 = M_PI / 10.0;

  Polyhedron P0 = make_cube(Vec3::Zero(), 2.0);
  Polyhedron P1 = P0;
  for (auto& v : P1.V)
    if (v.z() < 0) v.z() -= 0.02;
  P1.build();
  HomotopyField field = build_field(P0, P1, prm, {});

  Mesh mesh = mesh_inclusion(box4(), P0, 0.25);
  NodalField U(mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) U[i] = field.eval(mesh.X[i]);

  auto bundle = derivative_bundle(mesh, P0, contrast(), U, trace_f, trace_g,
                                  {0.2, 0.1, 0.05, 0.025}, 1.0 / 8.0);
  CHECK(bundle.table.slope > 1.7);
  CHECK(bundle.table.slope < 2.3);
  double tol = std::max(0.05 * std::fabs(bundle.Fprime_distributed),
                        bundle.boundary.collar);
  CHECK(std::fabs(bundle.boundary.value - bundle.Fprime_distributed) <= tol);
  std::string j = bundle.to_json();
  CHECK(j.find("Fprime_distributed") != std::string::npos);
}
