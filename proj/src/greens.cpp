#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "elastlab/greens.hpp"

namespace elastlab {

namespace {

double tet_diam(const std::array<Vec3, 4>& v) {
  double d = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) d = std::max(d, (v[a] - v[b]).norm());
  return d;
}

double tet_vol(const std::array<Vec3, 4>& v) {
  return (v[1] - v[0]).cross(v[2] - v[0]).dot(v[3] - v[0]) / 6.0;
}

std::array<Vec3, 4> grads_of(const std::array<Vec3, 4>& v) {
  Mat3 J;
  for (int k = 0; k < 3; ++k) J.col(k) = v[k + 1] - v[0];
  Mat3 Ji = J.inverse();
  std::array<Vec3, 4> g;
  g[1] = Ji.row(0);
  g[2] = Ji.row(1);
  g[3] = Ji.row(2);
  g[0] = -(g[1] + g[2] + g[3]);
  return g;
}

// 4-point degree-2 tet rule
const double qa = 0.5854101966249685, qb = 0.1381966011250105;
const double qbary[4][4] = {{qa, qb, qb, qb},
                            {qb, qa, qb, qb},
                            {qb, qb, qa, qb},
                            {qb, qb, qb, qa}};

}  // namespace

// ---------------------------------------------------------------------------
// TetLocator
// ---------------------------------------------------------------------------

TetLocator::TetLocator(const Mesh& mesh) : mesh_(&mesh) {
  Vec3 hi = mesh.X[0];
  lo_ = mesh.X[0];
  for (const auto& x : mesh.X) {
    lo_ = lo_.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  int target = std::max(4, (int)std::cbrt((double)mesh.tets.size()));
  nx_ = ny_ = nz_ = target;
  Vec3 span = hi - lo_;
  cell_ = Vec3(span.x() / nx_, span.y() / ny_, span.z() / nz_);
  for (int k = 0; k < 3; ++k)
    if (cell_[k] <= 0) cell_[k] = 1.0;
  bins_.assign((size_t)nx_ * ny_ * nz_, {});
  for (size_t t = 0; t < mesh.tets.size(); ++t) {
    Vec3 tlo = mesh.X[mesh.tets[t][0]], thi = tlo;
    for (int a = 1; a < 4; ++a) {
      tlo = tlo.cwiseMin(mesh.X[mesh.tets[t][a]]);
      thi = thi.cwiseMax(mesh.X[mesh.tets[t][a]]);
    }
    int i0 = std::clamp((int)((tlo.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
    int i1 = std::clamp((int)((thi.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
    int j0 = std::clamp((int)((tlo.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
    int j1 = std::clamp((int)((thi.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
    int k0 = std::clamp((int)((tlo.z() - lo_.z()) / cell_.z()), 0, nz_ - 1);
    int k1 = std::clamp((int)((thi.z() - lo_.z()) / cell_.z()), 0, nz_ - 1);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j)
        for (int k = k0; k <= k1; ++k)
          bins_[(size_t)(i * ny_ + j) * nz_ + k].push_back((int)t);
  }
}

int TetLocator::locate(const Vec3& x, Eigen::Vector4d* bary) const {
  int i = std::clamp((int)((x.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
  int j = std::clamp((int)((x.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
  int k = std::clamp((int)((x.z() - lo_.z()) / cell_.z()), 0, nz_ - 1);
  for (double tol : {1e-12, 1e-8, 1e-5}) {
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj)
        for (int dk = -1; dk <= 1; ++dk) {
          if (tol == 1e-12 && (di || dj || dk)) continue;
          int ii = i + di, jj = j + dj, kk = k + dk;
          if (ii < 0 || jj < 0 || kk < 0 || ii >= nx_ || jj >= ny_ ||
              kk >= nz_)
            continue;
          for (int t : bins_[(size_t)(ii * ny_ + jj) * nz_ + kk]) {
            const auto& T = mesh_->tets[t];
            Mat3 J;
            for (int m = 0; m < 3; ++m)
              J.col(m) = mesh_->X[T[m + 1]] - mesh_->X[T[0]];
            Vec3 b = J.inverse() * (x - mesh_->X[T[0]]);
            double b0 = 1.0 - b.sum();
            if (b.minCoeff() >= -tol && b0 >= -tol) {
              if (bary) *bary = Eigen::Vector4d(b0, b[0], b[1], b[2]);
              return t;
            }
          }
        }
  }
  return -1;
}

// ---------------------------------------------------------------------------
// FieldOnMesh
// ---------------------------------------------------------------------------

FieldOnMesh FieldOnMesh::build(std::shared_ptr<TetLocator> loc,
                               const Eigen::VectorXd& u) {
  FieldOnMesh f;
  f.loc = std::move(loc);
  f.u = u;
  const Mesh& m = f.loc->mesh();
  f.grad = Eigen::MatrixXd::Zero(9, m.n_nodes());
  Eigen::VectorXd wsum = Eigen::VectorXd::Zero(m.n_nodes());
  for (size_t t = 0; t < m.tets.size(); ++t) {
    std::array<Vec3, 4> v;
    for (int a = 0; a < 4; ++a) v[a] = m.X[m.tets[t][a]];
    auto g = grads_of(v);
    Mat3 G = Mat3::Zero();
    for (int a = 0; a < 4; ++a)
      G += u.segment<3>(3 * m.tets[t][a]) * g[a].transpose();
    double vol = tet_vol(v);
    for (int a = 0; a < 4; ++a) {
      f.grad.col(m.tets[t][a]) +=
          vol * Eigen::Map<Eigen::VectorXd>(G.data(), 9);
      wsum[m.tets[t][a]] += vol;
    }
  }
  for (int i = 0; i < m.n_nodes(); ++i) f.grad.col(i) /= wsum[i];
  return f;
}

Vec3 FieldOnMesh::value(const Vec3& x) const {
  Eigen::Vector4d b;
  int t = loc->locate(x, &b);
  if (t < 0) throw std::runtime_error("greens: point outside the mesh");
  const auto& T = loc->mesh().tets[t];
  Vec3 out = Vec3::Zero();
  for (int a = 0; a < 4; ++a) out += b[a] * u.segment<3>(3 * T[a]);
  return out;
}

Mat3 FieldOnMesh::gradient(const Vec3& x) const {
  Eigen::Vector4d b;
  int t = loc->locate(x, &b);
  if (t < 0) throw std::runtime_error("greens: point outside the mesh");
  const auto& T = loc->mesh().tets[t];
  Eigen::Matrix<double, 9, 1> g = Eigen::Matrix<double, 9, 1>::Zero();
  for (int a = 0; a < 4; ++a) g += b[a] * grad.col(T[a]);
  return Eigen::Map<const Mat3>(g.data());
}

// ---------------------------------------------------------------------------
// AugmentedDomain
// ---------------------------------------------------------------------------

AugmentedDomain AugmentedDomain::build(const Box& omega, int sigma_face,
                                       double r0, double zeta) {
  AugmentedDomain d;
  d.omega = omega;
  d.sigma_face = sigma_face;
  d.r0 = r0;
  d.zeta = zeta;
  d.r_sharp = zeta * r0;
  double depth = 4.5 * d.r_sharp;
  d.sharp = omega;
  int axis = sigma_face / 2;
  bool low = (sigma_face % 2) == 0;
  Vec3 face_center = 0.5 * (omega.lo + omega.hi);
  if (low) {
    d.sharp.lo[axis] -= depth;
    face_center[axis] = omega.lo[axis];
    d.P0 = face_center;
    d.P0[axis] -= 0.5 * depth;
  } else {
    d.sharp.hi[axis] += depth;
    face_center[axis] = omega.hi[axis];
    d.P0 = face_center;
    d.P0[axis] += 0.5 * depth;
  }
  return d;
}

bool AugmentedDomain::in_collar(const Vec3& x) const {
  return sharp.contains(x) && !omega.contains(x);
}

// ---------------------------------------------------------------------------
// GreenFunction evaluation
// ---------------------------------------------------------------------------

namespace {
IsotropicElastic kelvin_mat_of(const GreenFunction& G,
                               const BiphaseMaterial& mat) {
  return G.kind == SingularKind::KelvinInterior ? mat.interior : mat.exterior;
}
}  // namespace

Vec3 GreenFunction::gamma0(const Vec3& x) const {
  if (kind == SingularKind::Halfspace) {
    Vec3 xk = frame.transpose() * (x - frame_origin);
    Vec3 lk = frame.transpose() * l;
    return frame * (hk->gamma(xk) * lk);
  }
  return kelvin(x, y, kel_mat).gamma * l;
}

Mat3 GreenFunction::grad_gamma0(const Vec3& x) const {
  if (kind == SingularKind::Halfspace) {
    Vec3 xk = frame.transpose() * (x - frame_origin);
    Vec3 lk = frame.transpose() * l;
    Mat3 Gk = Mat3::Zero();
    for (int j = 0; j < 3; ++j) Gk += lk[j] * hk->grad_col(xk, j);
    return frame * Gk * frame.transpose();
  }
  KelvinEval ke = kelvin(x, y, kel_mat);
  Mat3 G;
  for (int k = 0; k < 3; ++k) G.col(k) = ke.grad[k] * l;
  return G;
}

// ---------------------------------------------------------------------------
// corrector_solve
// ---------------------------------------------------------------------------

GreenFunction corrector_solve(const AugmentedDomain& dom, const Polyhedron& D,
                              const BiphaseMaterial& mat, const Mesh& mesh,
                              const Vec3& y, const Vec3& l,
                              const DirichletSolver* solver,
                              std::shared_ptr<TetLocator> loc) {
  GreenFunction G;
  G.y = y;
  G.l = l;
  double d = D.dist_to_surface(y);
  bool inside = D.contains(y);
  double tol = 1e-9 * D.diameter();

  if (d >= dom.r_sharp) {
    G.kind = inside ? SingularKind::KelvinInterior : SingularKind::KelvinExterior;
    G.rbar = d;
    G.kel_mat = kelvin_mat_of(G, mat);
  } else {
    // nearest surface feature must be a face interior point
    int best_face = -1;
    double best = std::numeric_limits<double>::infinity();
    for (size_t f = 0; f < D.faces.size(); ++f) {
      double s = D.normals[f].dot(y - D.centroids[f]);
      if (std::fabs(std::fabs(s) - d) > tol + 1e-12) continue;
      // the foot of the perpendicular must lie strictly inside the face:
      // on the face plane and clear of every face edge
      Vec3 foot = y - s * D.normals[f];
      if (D.dist_to_surface(foot) >= tol + 1e-12) continue;
      double edge_clear = std::numeric_limits<double>::infinity();
      const auto& fl = D.faces[f];
      for (size_t k = 0; k < fl.size(); ++k) {
        Vec3 a = D.V[fl[k]], b = D.V[fl[(k + 1) % fl.size()]];
        Vec3 ab = b - a;
        double tt = std::clamp((foot - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        edge_clear = std::min(edge_clear, (foot - (a + tt * ab)).norm());
      }
      if (edge_clear > tol + 1e-12 && std::fabs(s) < best) {
        best = std::fabs(s);
        best_face = (int)f;
      }
    }
    if (best_face < 0)
      throw std::runtime_error(
          "greens: pole projects onto an edge of the inclusion");
    G.kind = SingularKind::Halfspace;
    double s = D.normals[best_face].dot(y - D.centroids[best_face]);
    Vec3 n_pole = s > 0 ? Vec3(D.normals[best_face]) : Vec3(-D.normals[best_face]);
    G.frame_origin = y - s * D.normals[best_face];
    Vec3 t1 = n_pole.unitOrthogonal();
    Vec3 t2 = n_pole.cross(t1);
    G.frame.col(0) = t1;
    G.frame.col(1) = t2;
    G.frame.col(2) = n_pole;
    // clearance from the face's edges bounds the matching ball
    G.rbar = std::numeric_limits<double>::infinity();
    const auto& loop = D.faces[best_face];
    for (size_t k = 0; k < loop.size(); ++k) {
      Vec3 a = D.V[loop[k]], b = D.V[loop[(k + 1) % loop.size()]];
      Vec3 ab = b - a;
      double tt = std::clamp((y - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      G.rbar = std::min(G.rbar, (y - (a + tt * ab)).norm());
    }
    const IsotropicElastic& pole_side = s > 0 ? mat.exterior : mat.interior;
    const IsotropicElastic& other_side = s > 0 ? mat.interior : mat.exterior;
    double max_R = 0.0;
    for (int cx = 0; cx < 2; ++cx)
      for (int cy = 0; cy < 2; ++cy)
        for (int cz = 0; cz < 2; ++cz) {
          Vec3 corner(cx ? dom.sharp.hi.x() : dom.sharp.lo.x(),
                      cy ? dom.sharp.hi.y() : dom.sharp.lo.y(),
                      cz ? dom.sharp.hi.z() : dom.sharp.lo.z());
          max_R = std::max(max_R, (corner - G.frame_origin).norm());
        }
    G.hk = &halfspace_kernel(pole_side, other_side, std::fabs(s),
                             1.05 * max_R, 28);
  }

  // frozen tensor per tet and corrector load
  auto frozen = [&](const Vec3& c) -> const IsotropicElastic& {
    if (G.kind == SingularKind::Halfspace)
      return (c - G.frame_origin).dot(G.frame.col(2)) > 0
                 ? (inside ? mat.interior : mat.exterior)
                 : (inside ? mat.exterior : mat.interior);
    return G.kel_mat;
  };

  Eigen::VectorXd load = Eigen::VectorXd::Zero(3 * mesh.n_nodes());
  for (size_t t = 0; t < mesh.tets.size(); ++t) {
    std::array<Vec3, 4> v;
    for (int a = 0; a < 4; ++a) v[a] = mesh.X[mesh.tets[t][a]];
    Vec3 c = 0.25 * (v[0] + v[1] + v[2] + v[3]);
    const IsotropicElastic& Cy = frozen(c);
    const IsotropicElastic& CD = mesh.region[t] ? mat.interior : mat.exterior;
    if (Cy == CD) continue;
    IsotropicElastic diff{Cy.lambda - CD.lambda, Cy.mu - CD.mu};
    auto g = grads_of(v);
    double vol = tet_vol(v);
    G.source_tets.push_back((int)t);
    for (const auto& q : qbary) {
      Vec3 x = q[0] * v[0] + q[1] * v[1] + q[2] * v[2] + q[3] * v[3];
      Mat3 S = diff.apply(G.grad_gamma0(x));
      for (int a = 0; a < 4; ++a)
        load.segment<3>(3 * mesh.tets[t][a]) -= 0.25 * vol * (S * g[a]);
    }
  }

  std::unique_ptr<DirichletSolver> own;
  if (!solver) {
    own = std::make_unique<DirichletSolver>(mesh, mat);
    solver = own.get();
  }
  std::vector<Vec3> bvals(solver->bnodes.size());
  for (size_t k = 0; k < bvals.size(); ++k)
    bvals[k] = -G.gamma0(mesh.X[solver->bnodes[k]]);
  DiscreteField w = solver->solve(bvals, load);
  if (!loc) loc = std::make_shared<TetLocator>(mesh);
  G.w = FieldOnMesh::build(std::move(loc), w.u);
  return G;
}

// ---------------------------------------------------------------------------
// S functional
// ---------------------------------------------------------------------------

namespace {

struct SQuad {
  const GreenFunction* G0;
  const GreenFunction* G1;
  const Polyhedron* D0;
  const Polyhedron* D1;
  IsotropicElastic diff;  // C^i - C^e
  double geo_tol;
  double acc = 0.0;

  void integrate(const std::array<Vec3, 4>& v, int depth) {
    Vec3 c = 0.25 * (v[0] + v[1] + v[2] + v[3]);
    double diam = tet_diam(v);
    // quick reject: cell far outside both polyhedra
    if (D0->dist_to_solid(c) > diam && D1->dist_to_solid(c) > diam) return;

    double p_dist = std::min((c - G0->y).norm(), (c - G1->y).norm());
    bool mixed = false;
    {
      bool i0 = D0->contains(v[0]), i1 = D1->contains(v[0]);
      for (int a = 1; a < 4 && !mixed; ++a)
        mixed = (D0->contains(v[a]) != i0) || (D1->contains(v[a]) != i1);
    }
    bool refine = depth < 14 && ((diam > 0.35 * p_dist && diam > 0.004) ||
                                 (mixed && diam > geo_tol));
    if (refine) {
      std::array<Vec3, 10> p;  // 4 vertices + 6 edge midpoints
      for (int a = 0; a < 4; ++a) p[a] = v[a];
      int m = 4;
      int e[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
      int mid[4][4];
      for (auto& row : mid) for (auto& x : row) x = -1;
      for (const auto& ed : e) {
        p[m] = 0.5 * (v[ed[0]] + v[ed[1]]);
        mid[ed[0]][ed[1]] = mid[ed[1]][ed[0]] = m++;
      }
      auto sub = [&](int a, int b, int cc, int d) {
        integrate({p[a], p[b], p[cc], p[d]}, depth + 1);
      };
      // 4 corners + central octahedron split along the 4-9 diagonal
      sub(0, mid[0][1], mid[0][2], mid[0][3]);
      sub(1, mid[0][1], mid[1][2], mid[1][3]);
      sub(2, mid[0][2], mid[1][2], mid[2][3]);
      sub(3, mid[0][3], mid[1][3], mid[2][3]);
      sub(mid[0][1], mid[0][2], mid[0][3], mid[2][3]);
      sub(mid[0][1], mid[0][2], mid[1][2], mid[2][3]);
      sub(mid[0][1], mid[1][2], mid[1][3], mid[2][3]);
      sub(mid[0][1], mid[0][3], mid[1][3], mid[2][3]);
      return;
    }
    int chi = (D0->contains(c) ? 1 : 0) - (D1->contains(c) ? 1 : 0);
    if (chi == 0) return;
    Mat3 Gu = G0->gradient(c);
    Mat3 Gv = G1->gradient(c);
    acc += chi * std::fabs(tet_vol(v)) *
           diff.apply(Gu).cwiseProduct(Gv).sum();
  }
};

}  // namespace

double S_functional(const GreenFunction& G0, const GreenFunction& G1,
                    const Polyhedron& D0, const Polyhedron& D1,
                    const BiphaseMaterial& mat, const Mesh& quad_mesh) {
  SQuad q;
  q.G0 = &G0;
  q.G1 = &G1;
  q.D0 = &D0;
  q.D1 = &D1;
  q.diff = IsotropicElastic{mat.interior.lambda - mat.exterior.lambda,
                            mat.interior.mu - mat.exterior.mu};
  q.geo_tol = 0.02 * D0.diameter() / 3.0;
  if (q.diff.lambda == 0.0 && q.diff.mu == 0.0) return 0.0;
  for (size_t t = 0; t < quad_mesh.tets.size(); ++t) {
    std::array<Vec3, 4> v;
    for (int a = 0; a < 4; ++a) v[a] = quad_mesh.X[quad_mesh.tets[t][a]];
    q.integrate(v, 0);
  }
  return q.acc;
}

// ---------------------------------------------------------------------------
// scaling experiment
// ---------------------------------------------------------------------------

double ScalingTable::slope(double lambda_w) const {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : rows) {
    if (std::fabs(r.lambda_w - lambda_w) > 1e-12 || r.S == 0.0) continue;
    double x = std::log(r.h), y = std::log(std::fabs(r.S));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  return n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
}

double ScalingTable::best_slope() const {
  std::vector<double> lws;
  for (const auto& r : rows)
    if (std::find_if(lws.begin(), lws.end(), [&](double v) {
          return std::fabs(v - r.lambda_w) < 1e-12;
        }) == lws.end())
      lws.push_back(r.lambda_w);
  double best = 0.0, bd = std::numeric_limits<double>::infinity();
  for (double lw : lws) {
    double s = slope(lw);
    if (std::fabs(s + 1.0) < bd) {
      bd = std::fabs(s + 1.0);
      best = s;
    }
  }
  return best;
}

std::string ScalingTable::to_csv() const {
  std::ostringstream os;
  os.precision(15);
  os << "h,lambda_w,S\n";
  for (const auto& r : rows)
    os << r.h << "," << r.lambda_w << "," << r.S << "\n";
  return os.str();
}

ScalingTable s_scaling_experiment(const AugmentedDomain& dom,
                                  const Polyhedron& D0, const Polyhedron& D1,
                                  const BiphaseMaterial& mat, const Vec3& P,
                                  const Vec3& n,
                                  const std::vector<double>& h_list,
                                  const std::vector<double>& lw_list,
                                  double h_mesh, const Vec3& l) {
  Mesh mesh0 = mesh_inclusion(dom.sharp, D0, h_mesh);
  Mesh mesh1 = mesh_inclusion(dom.sharp, D1, h_mesh);
  DirichletSolver solver0(mesh0, mat);
  DirichletSolver solver1(mesh1, mat);
  auto loc0 = std::make_shared<TetLocator>(mesh0);
  auto loc1 = std::make_shared<TetLocator>(mesh1);

  ScalingTable tab;
  for (double h : h_list) {
    GreenFunction G0 =
        corrector_solve(dom, D0, mat, mesh0, P + h * n, l, &solver0, loc0);
    for (double lw : lw_list) {
      GreenFunction G1 = corrector_solve(dom, D1, mat, mesh1, P + lw * h * n,
                                         l, &solver1, loc1);
      ScalingRow row;
      row.h = h;
      row.lambda_w = lw;
      row.S = S_functional(G0, G1, D0, D1, mat, mesh0);
      tab.rows.push_back(row);
    }
  }
  return tab;
}

}  // namespace elastlab
