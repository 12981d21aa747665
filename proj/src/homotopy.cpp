#include "elastlab/homotopy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace elastlab {

double eta_cutoff(double t, double r0) {
  if (t <= r0 / 8.0) return 1.0;
  if (t >= r0 / 4.0) return 0.0;
  return 1.0 - (8.0 / r0) * (t - r0 / 8.0);
}

namespace {

// Base endpoint vertex ids of edge e within face f, in winding order.
std::pair<int, int> base_ids(const Polyhedron& P, int e, int f) {
  const auto& loop = P.faces[f];
  int a = P.edges[e].a, b = P.edges[e].b;
  for (size_t i = 0; i < loop.size(); ++i) {
    int p = loop[i], q = loop[(i + 1) % loop.size()];
    if ((p == a && q == b) || (p == b && q == a)) return {p, q};
  }
  throw std::runtime_error("homotopy: edge not on face");
}

Vec3 apply_S(const Mat3& R, const Vec3& t, const Vec3& y) { return R * y + t; }
Vec3 apply_Sinv(const Mat3& R, const Vec3& t, const Vec3& y) {
  return R.transpose() * (y - t);
}

// Component-wise McShane interpolation: exact on the samples whenever L
// dominates their secant slopes, Lipschitz-L everywhere.
Vec3 mcshane(const std::vector<Vec3>& px, const std::vector<Vec3>& pu,
             const std::vector<int>* idx, double L, const Vec3& x) {
  Vec3 lo(1e300, 1e300, 1e300), hi(-1e300, -1e300, -1e300);
  size_t n = idx ? idx->size() : px.size();
  if (n == 0) return Vec3::Zero();
  for (size_t k = 0; k < n; ++k) {
    int j = idx ? (*idx)[k] : (int)k;
    double d = L * (x - px[j]).norm();
    for (int c = 0; c < 3; ++c) {
      lo[c] = std::min(lo[c], pu[j][c] + d);
      hi[c] = std::max(hi[c], pu[j][c] - d);
    }
  }
  return 0.5 * (lo + hi);
}

// Point-in-polygon in the plane of face f (crossing number, with a
// tolerance band around the boundary counted as inside).
bool face_contains(const Polyhedron& P, int f, const Vec3& x, double tol) {
  Vec3 n = P.normals[f], c = P.centroids[f];
  if (std::fabs((x - c).dot(n)) > tol) return false;
  Vec3 u = Vec3::UnitX();
  if (std::fabs(n.x()) > 0.9) u = Vec3::UnitY();
  u = (u - u.dot(n) * n).normalized();
  Vec3 v = n.cross(u);
  auto to2 = [&](const Vec3& p) {
    return Eigen::Vector2d((p - c).dot(u), (p - c).dot(v));
  };
  Eigen::Vector2d q = to2(x);
  const auto& loop = P.faces[f];
  int cross = 0;
  double bd = 1e300;
  for (size_t i = 0; i < loop.size(); ++i) {
    Eigen::Vector2d a = to2(P.V[loop[i]]);
    Eigen::Vector2d b = to2(P.V[loop[(i + 1) % loop.size()]]);
    // distance to segment
    Eigen::Vector2d ab = b - a;
    double s = std::clamp((q - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    bd = std::min(bd, (a + s * ab - q).norm());
    if ((a.y() > q.y()) != (b.y() > q.y())) {
      double xi = a.x() + (q.y() - a.y()) / (b.y() - a.y()) * ab.x();
      if (xi > q.x()) ++cross;
    }
  }
  return (cross % 2 == 1) || bd <= tol;
}

// Barycentric in-plane test for x against flap (A,B,E).
bool flap_contains(const FlapPiece& fp, const Vec3& x, double tol) {
  Vec3 n = fp.e1.cross(fp.e2);
  if (std::fabs((x - fp.A).dot(n)) > tol) return false;
  Eigen::Vector2d p((x - fp.A).dot(fp.e1), (x - fp.A).dot(fp.e2));
  Eigen::Vector2d b((fp.B - fp.A).dot(fp.e1), (fp.B - fp.A).dot(fp.e2));
  Eigen::Vector2d e((fp.E - fp.A).dot(fp.e1), (fp.E - fp.A).dot(fp.e2));
  Eigen::Matrix2d T;
  T.col(0) = b;
  T.col(1) = e;
  Eigen::Vector2d lm = T.inverse() * p;
  double scale = std::max(b.norm(), e.norm());
  double m = -tol / scale;
  return lm.x() >= m && lm.y() >= m && lm.x() + lm.y() <= 1.0 - m;
}

}  // namespace

Vec3 FaceMap::flap_displacement(const FlapPiece& fp, const Vec3& x) const {
  Eigen::Vector2d p((x - fp.A).dot(fp.e1), (x - fp.A).dot(fp.e2));
  Eigen::Vector2d w = fp.M * p + fp.v;
  Vec3 reduced = x + fp.e1 * w.x() + fp.e2 * w.y();
  return apply_Sinv(S_R, S_t, reduced) - x;
}

Vec3 FaceMap::flap_tangent_deriv(const FlapPiece& fp, const Vec3& t) const {
  Eigen::Vector2d tau(t.dot(fp.e1), t.dot(fp.e2));
  Eigen::Vector2d w = fp.M * tau;
  Vec3 reduced = t + fp.e1 * w.x() + fp.e2 * w.y();
  return S_R.transpose() * reduced - t;
}

FaceMap build_face_map(const Polyhedron& P0, const Polyhedron& P1, int f0,
                       int f1, const std::vector<int>& vmap,
                       const std::vector<FlapTriangle>& flaps0,
                       const std::vector<FlapTriangle>& flaps1,
                       const AdmissibilityParams& prm) {
  FaceMap fm;
  fm.f0 = f0;
  fm.f1 = f1;
  Vec3 n0 = P0.normals[f0], n1 = P1.normals[f1];
  Vec3 c0 = P0.centroids[f0], c1 = P1.centroids[f1];
  Vec3 cr = n0.cross(n1);
  double s = cr.norm(), cphi = n0.dot(n1);
  if (cphi <= 0)
    throw std::runtime_error("face map: planes beyond the small-angle regime");
  const double angle_tol = 1e-9;
  if (s < angle_tol) {
    double h = (c1 - c0).dot(n0);
    if (std::fabs(h) < angle_tol * prm.r0) {
      fm.kind = FaceCase::Coplanar;  // S = identity
    } else {
      fm.kind = FaceCase::Parallel;  // S translates the target plane back
      fm.S_t = -h * n0;
    }
  } else {
    if (s > 0.5)
      throw std::runtime_error(
          "face map: plane angle too large for the small-distance regime");
    fm.kind = FaceCase::Rotation;
    fm.sin_phi = s;
    Vec3 u = cr / s;
    // Rodrigues rotation about u by -phi maps n1 to n0.
    Mat3 K;
    K << 0, -u.z(), u.y(), u.z(), 0, -u.x(), -u.y(), u.x(), 0;
    fm.S_R = Mat3::Identity() + (-s) * K + (1.0 - cphi) * (K * K);
    // Point on the intersection line of the two planes (minimal norm).
    double d0 = n0.dot(c0), d1 = n1.dot(c1);
    Eigen::Matrix2d G;
    G << 1.0, cphi, cphi, 1.0;
    Eigen::Vector2d ab = G.inverse() * Eigen::Vector2d(d0, d1);
    Vec3 p = ab.x() * n0 + ab.y() * n1;
    fm.S_t = p - fm.S_R * p;
  }

  for (const auto& fl : flaps0) {
    if (fl.face != f0) continue;
    auto [ia, ib] = base_ids(P0, fl.edge, f0);
    int ja = vmap[ia], jb = vmap[ib];
    // Apex of the matching isosceles triangle in the target face.
    const FlapTriangle* tgt = nullptr;
    for (const auto& g : flaps1) {
      if (g.face != f1) continue;
      auto [ka, kb] = base_ids(P1, g.edge, f1);
      if ((ka == ja && kb == jb) || (ka == jb && kb == ja)) {
        tgt = &g;
        break;
      }
    }
    if (!tgt) throw std::runtime_error("face map: unmatched flap edge");

    FlapPiece fp;
    fp.face = f0;
    fp.edge = fl.edge;
    fp.A = fl.A;
    fp.B = fl.B;
    fp.E = fl.E;
    // Target endpoints aligned by vertex identity; tgt supplies the apex.
    Vec3 Ap = P1.V[ja], Bp = P1.V[jb], Ep = tgt->E;
    fp.dA = Ap - fl.A;
    fp.dB = Bp - fl.B;
    fp.dE = Ep - fl.E;
    fp.e1 = (fl.B - fl.A).normalized();
    fp.e2 = fl.inward;

    // Reduced targets: rigid motion S drops the target onto the source
    // plane; out-of-plane residual is the planarity defect and is dropped.
    Vec3 rA = apply_S(fm.S_R, fm.S_t, Ap) - fl.A;
    Vec3 rB = apply_S(fm.S_R, fm.S_t, Bp) - fl.B;
    Vec3 rE = apply_S(fm.S_R, fm.S_t, Ep) - fl.E;
    double b1 = (fl.B - fl.A).norm();
    Eigen::Vector2d Ab(rA.dot(fp.e1), rA.dot(fp.e2));
    Eigen::Vector2d Bb(rB.dot(fp.e1), rB.dot(fp.e2));
    Eigen::Vector2d Eb(rE.dot(fp.e1), rE.dot(fp.e2));
    Eigen::Vector2d Ec((fl.E - fl.A).dot(fp.e1), (fl.E - fl.A).dot(fp.e2));
    // Closed-form affine solve with the base endpoint at the origin.
    fp.v = Ab;
    fp.M(0, 0) = (Bb.x() - Ab.x()) / b1;
    fp.M(1, 0) = (Bb.y() - Ab.y()) / b1;
    fp.M(0, 1) = (Eb.x() - Ab.x() + (Ab.x() - Bb.x()) * Ec.x() / b1) / Ec.y();
    fp.M(1, 1) = (Eb.y() - Ab.y() + (Ab.y() - Bb.y()) * Ec.x() / b1) / Ec.y();
    fp.M_norm = fp.M.norm();
    fm.flaps.push_back(fp);
  }

  // Measured Lipschitz bound over flap sample pairs plus the affine slopes.
  std::vector<Vec3> pts;
  std::vector<Vec3> vals;
  for (const auto& fp : fm.flaps) {
    fm.lip = std::max(fm.lip, fp.M_norm + 2.0 * fm.sin_phi);
    for (const Vec3& q :
         {fp.A, fp.B, fp.E, Vec3(0.5 * (fp.A + fp.B)), Vec3(0.5 * (fp.A + fp.E)),
          Vec3(0.5 * (fp.B + fp.E)), Vec3((fp.A + fp.B + fp.E) / 3.0)}) {
      pts.push_back(q);
      vals.push_back(fm.flap_displacement(fp, q));
    }
  }
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) {
      double d = (pts[i] - pts[j]).norm();
      if (d > 1e-12)
        fm.lip = std::max(fm.lip, (vals[i] - vals[j]).norm() / d);
    }
  return fm;
}

Vec3 HomotopyField::eval_boundary(const Vec3& x) const {
  double tol = opt.boundary_tol > 0 ? opt.boundary_tol : 1e-9 * P0.diameter();
  for (const auto& fm : faces) {
    if (!face_contains(P0, fm.f0, x, tol)) continue;
    for (const auto& fp : fm.flaps)
      if (flap_contains(fp, x, tol)) return fm.flap_displacement(fp, x);
    // Off-flap interior of the face: 2D McShane of the reduced in-plane
    // displacements, so the image of the face stays in the target plane.
    const auto& fs = fsam[&fm - &faces[0]];
    Vec3 n = P0.normals[fm.f0];
    std::vector<Vec3> rx(fs.idx.size()), ru(fs.idx.size());
    for (size_t k = 0; k < fs.idx.size(); ++k) {
      int j = fs.idx[k];
      rx[k] = sx[j];
      ru[k] = apply_S(fm.S_R, fm.S_t, sx[j] + su[j]) - sx[j];
    }
    Vec3 w = mcshane(rx, ru, nullptr, fs.lip, x);
    w -= w.dot(n) * n;  // component-wise bounds can leave the plane
    return apply_Sinv(fm.S_R, fm.S_t, x + w) - x;
  }
  // Fallback (x marginally off every face): global extension.
  return mcshane(sx, su, nullptr, L_global, x);
}

Vec3 HomotopyField::eval(const Vec3& x) const {
  if (sx.empty()) return Vec3::Zero();
  double d = P0.dist_to_surface(x);
  double psi = eta_cutoff(d, prm.r0);
  if (psi <= 0.0) return Vec3::Zero();
  double tol = opt.boundary_tol > 0 ? opt.boundary_tol : 1e-9 * P0.diameter();
  if (d <= tol) return eval_boundary(x);
  return psi * mcshane(sx, su, nullptr, L_global, x);
}

Mat3 HomotopyField::jacobian(const Vec3& x) const {
  double h = opt.fd_step > 0 ? opt.fd_step : 1e-6 * prm.r0;
  Mat3 J;
  for (int k = 0; k < 3; ++k) {
    Vec3 dx = Vec3::Zero();
    dx[k] = h;
    J.col(k) = (eval(x + dx) - eval(x - dx)) / (2.0 * h);
  }
  return J;
}

Vec3 phi(const HomotopyField& field, double t, const Vec3& x) {
  return x + t * field.eval(x);
}

Mat3 phi_jacobian(const HomotopyField& field, double t, const Vec3& x) {
  return Mat3::Identity() + t * field.jacobian(x);
}

HomotopyField build_field(const Polyhedron& P0, const Polyhedron& P1,
                          const AdmissibilityParams& prm,
                          const HomotopyOptions& opt) {
  HomotopyField F;
  F.P0 = P0;
  F.P1 = P1;
  F.prm = prm;
  F.opt = opt;
  double res = opt.hausdorff_resolution > 0 ? opt.hausdorff_resolution
                                            : 1e-4 * prm.r0;
  F.d_H = hausdorff_boundary(P0, P1, res);
  F.vmap =
      match_vertices(P0, P1, F.d_H, opt.delta0, opt.C4, prm.r0).map01;

  // Faces correspond through the vertex bijection.
  std::map<std::vector<int>, int> faces1;
  for (int f = 0; f < (int)P1.faces.size(); ++f) {
    std::vector<int> key = P1.faces[f];
    std::sort(key.begin(), key.end());
    faces1[key] = f;
  }
  auto flaps0 = flap_triangles(P0, prm);
  auto flaps1 = flap_triangles(P1, prm);
  for (int f = 0; f < (int)P0.faces.size(); ++f) {
    std::vector<int> key;
    for (int v : P0.faces[f]) key.push_back(F.vmap[v]);
    std::sort(key.begin(), key.end());
    auto it = faces1.find(key);
    if (it == faces1.end())
      throw std::runtime_error("build_field: face correspondence broken");
    F.faces.push_back(
        build_face_map(P0, P1, f, it->second, F.vmap, flaps0, flaps1, prm));
  }

  // Boundary sample set: flap sample points first (they seed the per-face
  // 2D extensions), then a face-interior grid.
  F.fsam.resize(F.faces.size());
  for (size_t fi = 0; fi < F.faces.size(); ++fi) {
    const auto& fm = F.faces[fi];
    for (const auto& fp : fm.flaps) {
      for (const Vec3& q : {fp.A, fp.B, fp.E, Vec3(0.5 * (fp.A + fp.B)),
                            Vec3(0.5 * (fp.A + fp.E)), Vec3(0.5 * (fp.B + fp.E)),
                            Vec3((fp.A + fp.B + fp.E) / 3.0)}) {
        F.fsam[fi].idx.push_back((int)F.sx.size());
        F.sx.push_back(q);
        F.su.push_back(fm.flap_displacement(fp, q));
      }
    }
    // Face Lipschitz constant from the reduced values.
    const auto& fs = F.fsam[fi];
    for (size_t a = 0; a < fs.idx.size(); ++a)
      for (size_t b = a + 1; b < fs.idx.size(); ++b) {
        int i = fs.idx[a], j = fs.idx[b];
        Vec3 ri = apply_S(fm.S_R, fm.S_t, F.sx[i] + F.su[i]) - F.sx[i];
        Vec3 rj = apply_S(fm.S_R, fm.S_t, F.sx[j] + F.su[j]) - F.sx[j];
        double d = (F.sx[i] - F.sx[j]).norm();
        if (d > 1e-12)
          F.fsam[fi].lip = std::max(F.fsam[fi].lip, (ri - rj).norm() / d);
      }
    F.fsam[fi].lip = std::max(F.fsam[fi].lip, fm.lip);
  }
  double pitch = opt.sample_pitch > 0 ? opt.sample_pitch : prm.r0 / 16.0;
  for (size_t fi = 0; fi < F.faces.size(); ++fi) {
    int f = F.faces[fi].f0;
    Vec3 n = P0.normals[f], c = P0.centroids[f];
    Vec3 u = Vec3::UnitX();
    if (std::fabs(n.x()) > 0.9) u = Vec3::UnitY();
    u = (u - u.dot(n) * n).normalized();
    Vec3 v = n.cross(u);
    double lo0 = 1e300, hi0 = -1e300, lo1 = 1e300, hi1 = -1e300;
    for (int vid : P0.faces[f]) {
      Vec3 p = P0.V[vid] - c;
      lo0 = std::min(lo0, p.dot(u));
      hi0 = std::max(hi0, p.dot(u));
      lo1 = std::min(lo1, p.dot(v));
      hi1 = std::max(hi1, p.dot(v));
    }
    for (double a = lo0; a <= hi0 + 1e-12; a += pitch)
      for (double b = lo1; b <= hi1 + 1e-12; b += pitch) {
        Vec3 p = c + a * u + b * v;
        if (!face_contains(P0, f, p, 1e-12 * P0.diameter())) continue;
        F.sx.push_back(p);
        F.su.push_back(F.eval_boundary(p));
      }
  }

  // Secant Lipschitz constant of the full sample set.
  for (size_t i = 0; i < F.sx.size(); ++i) {
    F.U_inf = std::max(F.U_inf, F.su[i].norm());
    for (size_t j = i + 1; j < F.sx.size(); ++j) {
      double d = (F.sx[i] - F.sx[j]).norm();
      if (d > 1e-12)
        F.L_global = std::max(F.L_global, (F.su[i] - F.su[j]).norm() / d);
    }
  }

  // Measured gradient bound: finite differences on a shell of random
  // offsets around the boundary samples.
  std::mt19937 rng(12345);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> uu(-0.25 * prm.r0, 0.25 * prm.r0);
  size_t stride = std::max<size_t>(1, F.sx.size() / 400);
  for (size_t i = 0; i < F.sx.size(); i += stride) {
    Vec3 dir(g(rng), g(rng), g(rng));
    dir.normalize();
    Vec3 x = F.sx[i] + uu(rng) * dir;
    F.DU_inf = std::max(F.DU_inf, F.jacobian(x).norm());
  }
  F.Ctilde = F.d_H > 1e-15 ? (F.U_inf + prm.r0 * F.DU_inf) / F.d_H : 0.0;

  // Regime guards mirroring the construction's standing assumptions.
  if (F.d_H > 1e-15 && F.L_global * prm.r0 / F.d_H > 1e4)
    throw std::runtime_error("build_field: Lipschitz constant blowup");
  return F;
}

HomotopyReport verify_homotopy(const Polyhedron& P0, const Polyhedron& P1,
                               const HomotopyField& field,
                               double face_residual_tol, int n_det_samples) {
  HomotopyReport rep;
  std::ostringstream ss;

  for (size_t i = 0; i < P0.V.size(); ++i) {
    Vec3 img = P0.V[i] + field.eval_boundary(P0.V[i]);
    rep.vertex_err =
        std::max(rep.vertex_err, (img - P1.V[field.vmap[i]]).norm());
  }
  bool v_ok = rep.vertex_err <= 1e-12 * field.prm.r0;

  double pitch = field.prm.r0 / 16.0;
  for (const Vec3& x : P0.sample_surface(pitch)) {
    Vec3 img = x + field.eval_boundary(x);
    rep.face_residual = std::max(rep.face_residual, P1.dist_to_surface(img));
  }
  bool f_ok = rep.face_residual <= face_residual_tol;

  // Jacobian determinant and its first-order expansion on random points in
  // the support neighborhood.
  std::mt19937 rng(777);
  Vec3 bc = P0.barycenter();
  double rad = 0.5 * P0.diameter() + 0.3 * field.prm.r0;
  std::uniform_real_distribution<double> u(-rad, rad);
  rep.min_det = 1e300;
  rep.max_det = -1e300;
  std::uniform_real_distribution<double> ut(0.0, 1.0);
  for (int k = 0; k < n_det_samples; ++k) {
    Vec3 x = bc + Vec3(u(rng), u(rng), u(rng));
    double t = (k % 4 == 0) ? 1.0 : ut(rng);
    Mat3 J = field.jacobian(x);
    double det = (Mat3::Identity() + t * J).determinant();
    rep.min_det = std::min(rep.min_det, det);
    rep.max_det = std::max(rep.max_det, det);
    double nJ = J.norm();
    double lhs = std::fabs(det - 1.0 - t * J.trace());
    double rhs = 6.0 * t * t * nJ * nJ + 6.0 * t * t * t * nJ * nJ * nJ;
    rep.det_expansion_err =
        std::max(rep.det_expansion_err, lhs - rhs);
  }
  bool d_ok = rep.min_det >= 0.5 && rep.max_det <= 1.5 &&
              rep.det_expansion_err <= 1e-9;

  rep.injectivity_ratio = 1e300;
  for (int k = 0; k < 2000; ++k) {
    Vec3 x = bc + Vec3(u(rng), u(rng), u(rng));
    Vec3 y = bc + Vec3(u(rng), u(rng), u(rng));
    double d = (x - y).norm();
    if (d < 1e-6) continue;
    double di = (phi(field, 1.0, x) - phi(field, 1.0, y)).norm();
    rep.injectivity_ratio = std::min(rep.injectivity_ratio, di / d);
  }
  bool i_ok = rep.injectivity_ratio >= 0.5;

  ss << "vertex_err=" << rep.vertex_err << (v_ok ? " ok" : " FAIL")
     << "; face_residual=" << rep.face_residual << (f_ok ? " ok" : " FAIL")
     << "; det in [" << rep.min_det << ", " << rep.max_det << "]"
     << (d_ok ? " ok" : " FAIL")
     << "; injectivity=" << rep.injectivity_ratio << (i_ok ? " ok" : " FAIL");
  rep.detail = ss.str();
  rep.ok = v_ok && f_ok && d_ok && i_ok;
  return rep;
}

std::string HomotopyField::to_json() const {
  nlohmann::json j;
  j["d_H"] = d_H;
  j["L_global"] = L_global;
  j["U_inf"] = U_inf;
  j["DU_inf"] = DU_inf;
  j["Ctilde"] = Ctilde;
  j["faces"] = nlohmann::json::array();
  for (const auto& fm : faces) {
    nlohmann::json jf;
    jf["f0"] = fm.f0;
    jf["f1"] = fm.f1;
    jf["case"] = fm.kind == FaceCase::Coplanar    ? "coplanar"
                 : fm.kind == FaceCase::Parallel ? "parallel"
                                                 : "rotation";
    jf["flaps"] = nlohmann::json::array();
    for (const auto& fp : fm.flaps) {
      nlohmann::json jp;
      jp["edge"] = fp.edge;
      jp["A"] = {fp.A.x(), fp.A.y(), fp.A.z()};
      jp["B"] = {fp.B.x(), fp.B.y(), fp.B.z()};
      jp["E"] = {fp.E.x(), fp.E.y(), fp.E.z()};
      jp["M"] = {fp.M(0, 0), fp.M(0, 1), fp.M(1, 0), fp.M(1, 1)};
      jp["v"] = {fp.v.x(), fp.v.y()};
      jf["flaps"].push_back(jp);
    }
    j["faces"].push_back(jf);
  }
  j["samples"] = nlohmann::json::array();
  for (size_t i = 0; i < sx.size(); ++i)
    j["samples"].push_back({sx[i].x(), sx[i].y(), sx[i].z(), su[i].x(),
                            su[i].y(), su[i].z()});
  return j.dump();
}

}  // namespace elastlab
