#include "elastlab/shape_deriv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "elastlab/kernels.hpp"

namespace elastlab {

namespace {

// P1 gradients of the four barycentric hats on a tet.
std::array<Vec3, 4> tet_grads(const Mesh& m, int t) {
  const auto& T = m.tets[t];
  Mat3 J;
  for (int k = 0; k < 3; ++k) J.col(k) = m.X[T[k + 1]] - m.X[T[0]];
  Mat3 Ji = J.inverse();
  std::array<Vec3, 4> g;
  g[1] = Ji.row(0);
  g[2] = Ji.row(1);
  g[3] = Ji.row(2);
  g[0] = -(g[1] + g[2] + g[3]);
  return g;
}

Mat3 field_grad(const Mesh& m, int t, const Eigen::VectorXd& u) {
  auto g = tet_grads(m, t);
  Mat3 G = Mat3::Zero();
  for (int a = 0; a < 4; ++a)
    G += u.segment<3>(3 * m.tets[t][a]) * g[a].transpose();
  return G;
}

Mat3 nodal_grad(const Mesh& m, int t, const NodalField& U) {
  auto g = tet_grads(m, t);
  Mat3 G = Mat3::Zero();
  for (int a = 0; a < 4; ++a) G += U[m.tets[t][a]] * g[a].transpose();
  return G;
}

// { C Gu (div U I - DU^T) - C (Gu DU) }, to be contracted with Gv.
Mat3 integrand_matrix(const IsotropicElastic& C, const Mat3& Gu,
                      const Mat3& DU) {
  Mat3 geom = DU.trace() * Mat3::Identity() - DU.transpose();
  return C.apply(Gu) * geom - C.apply(Gu * DU);
}

std::vector<Vec3> boundary_values(const Mesh& mesh,
                                  const std::vector<int>& bnodes,
                                  const TraceFn& f) {
  std::vector<Vec3> vals(bnodes.size());
  for (size_t k = 0; k < bnodes.size(); ++k) vals[k] = f(mesh.X[bnodes[k]]);
  return vals;
}

NodalField scaled(const NodalField& U, double t) {
  NodalField s(U.size());
  for (size_t i = 0; i < U.size(); ++i) s[i] = t * U[i];
  return s;
}

double seg_dist(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 d = b - a;
  double s = d.squaredNorm();
  double t = s > 0 ? std::clamp((p - a).dot(d) / s, 0.0, 1.0) : 0.0;
  return (p - (a + t * d)).norm();
}

double edge_distance(const Polyhedron& P, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : P.edges)
    best = std::min(best, seg_dist(p, P.V[e.a], P.V[e.b]));
  return best;
}

}  // namespace

NodalField nodal_field(const Mesh& mesh,
                       const std::function<Vec3(const Vec3&)>& fn) {
  NodalField U(mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) U[i] = fn(mesh.X[i]);
  return U;
}

double F_value(const Mesh& mesh, const BiphaseMaterial& mat,
               const NodalField& U, double t, const TraceFn& f,
               const TraceFn& g) {
  Mesh m = (t == 0.0) ? mesh : mesh.moved(scaled(U, t));
  DirichletSolver solver(m, mat);
  DiscreteField uf = solver.solve(boundary_values(m, solver.bnodes, f));
  DiscreteField ug = solver.solve(boundary_values(m, solver.bnodes, g));
  return solver.energy(uf, ug);
}

double F_prime_distributed(const Mesh& mesh, const BiphaseMaterial& mat,
                           const NodalField& U, const TraceFn& f,
                           const TraceFn& g) {
  DirichletSolver solver(mesh, mat);
  DiscreteField uf = solver.solve(boundary_values(mesh, solver.bnodes, f));
  DiscreteField ug = solver.solve(boundary_values(mesh, solver.bnodes, g));
  double acc = 0.0;
  for (size_t t = 0; t < mesh.tets.size(); ++t) {
    const IsotropicElastic& C =
        mesh.region[t] ? mat.interior : mat.exterior;
    Mat3 DU = nodal_grad(mesh, (int)t, U);
    if (DU.squaredNorm() == 0.0) continue;
    Mat3 Gu = field_grad(mesh, (int)t, uf.u);
    Mat3 Gv = field_grad(mesh, (int)t, ug.u);
    acc += mesh.volume((int)t) *
           integrand_matrix(C, Gu, DU).cwiseProduct(Gv).sum();
  }
  return acc;
}

BoundaryDerivative F_prime_boundary(const Mesh& mesh, const Polyhedron& P,
                                    const BiphaseMaterial& mat,
                                    const NodalField& U, const TraceFn& f,
                                    const TraceFn& g, double edge_margin) {
  DirichletSolver solver(mesh, mat);
  DiscreteField uf = solver.solve(boundary_values(mesh, solver.bnodes, f));
  DiscreteField ug = solver.solve(boundary_values(mesh, solver.bnodes, g));

  // facet (sorted node triple) -> adjacent tets
  std::map<std::array<int, 3>, std::vector<int>> adj;
  for (size_t t = 0; t < mesh.tets.size(); ++t) {
    static const int F[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    for (const auto& fc : F) {
      std::array<int, 3> key = {mesh.tets[t][fc[0]], mesh.tets[t][fc[1]],
                                mesh.tets[t][fc[2]]};
      std::sort(key.begin(), key.end());
      adj[key].push_back((int)t);
    }
  }

  Vec3 bary = P.barycenter();
  BoundaryDerivative out;
  for (const auto& fct : mesh.interface) {
    Vec3 a = mesh.X[fct.v[0]], b = mesh.X[fct.v[1]], c = mesh.X[fct.v[2]];
    Vec3 cross = (b - a).cross(c - a);
    double area = 0.5 * cross.norm();
    Vec3 centroid = (a + b + c) / 3.0;
    Vec3 n = cross.normalized();
    if (n.dot(centroid - bary) < 0) n = -n;  // outward from the inclusion

    std::array<int, 3> key = {fct.v[0], fct.v[1], fct.v[2]};
    std::sort(key.begin(), key.end());
    const auto& tets = adj.at(key);
    Mat3 Gu = Mat3::Zero(), Gv = Mat3::Zero();
    int n_ext = 0;
    for (int t : tets)
      if (!mesh.region[t]) {
        Gu += field_grad(mesh, t, uf.u);
        Gv += field_grad(mesh, t, ug.u);
        ++n_ext;
      }
    if (n_ext == 0)
      throw std::runtime_error("shape_deriv: interface facet without exterior tet");
    Gu /= n_ext;
    Gv /= n_ext;

    Vec3 Uc = (U[fct.v[0]] + U[fct.v[1]] + U[fct.v[2]]) / 3.0;
    Mat3 Eu = 0.5 * (Gu + Gu.transpose());
    Mat3 Ev = 0.5 * (Gv + Gv.transpose());
    MomentTensor M = build_M(mat, n);
    double term = -(Uc.dot(n)) * M.apply(Eu).cwiseProduct(Ev).sum() * area;
    if (edge_distance(P, centroid) >= edge_margin) {
      out.value += term;
      ++out.n_used;
    } else {
      out.collar += std::fabs(term);
      ++out.n_excluded;
    }
  }
  if (out.n_used == 0)
    throw std::runtime_error("shape_deriv: edge collar covers the interface");
  return out;
}

DiscreteField material_derivative(const Mesh& mesh, const BiphaseMaterial& mat,
                                  const NodalField& U, const TraceFn& f) {
  DirichletSolver solver(mesh, mat);
  DiscreteField u0 = solver.solve(boundary_values(mesh, solver.bnodes, f));

  int n_in = 0;
  for (int i = 0; i < mesh.n_nodes(); ++i)
    if (solver.dof_of_node[i] >= 0) ++n_in;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(3 * n_in);
  for (size_t t = 0; t < mesh.tets.size(); ++t) {
    Mat3 DU = nodal_grad(mesh, (int)t, U);
    if (DU.squaredNorm() == 0.0) continue;
    const IsotropicElastic& C =
        mesh.region[t] ? mat.interior : mat.exterior;
    Mat3 S = integrand_matrix(C, field_grad(mesh, (int)t, u0.u), DU);
    double vol = mesh.volume((int)t);
    auto g = tet_grads(mesh, (int)t);
    for (int a = 0; a < 4; ++a) {
      int d = solver.dof_of_node[mesh.tets[t][a]];
      if (d < 0) continue;
      rhs.segment<3>(3 * d) -= vol * (S * g[a]);
    }
  }
  Eigen::VectorXd ui = solver.ldlt.solve(rhs);
  DiscreteField out;
  out.u = Eigen::VectorXd::Zero(3 * mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i)
    if (solver.dof_of_node[i] >= 0)
      out.u.segment<3>(3 * i) = ui.segment<3>(3 * solver.dof_of_node[i]);
  return out;
}

FdTable fd_validate(const Mesh& mesh, const BiphaseMaterial& mat,
                    const NodalField& U, const TraceFn& f, const TraceFn& g,
                    const std::vector<double>& t_list) {
  FdTable tab;
  tab.F0 = F_value(mesh, mat, U, 0.0, f, g);
  tab.Fprime = F_prime_distributed(mesh, mat, U, f, g);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (double t : t_list) {
    FdRow row;
    row.t = t;
    row.F = F_value(mesh, mat, U, t, f, g);
    row.R = std::fabs(row.F - tab.F0 - t * tab.Fprime);
    tab.rows.push_back(row);
    if (row.R > 0) {
      double x = std::log(t), y = std::log(row.R);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
  }
  tab.slope = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
  return tab;
}

std::string FdTable::to_csv() const {
  std::ostringstream os;
  os.precision(15);
  os << "t,F,R\n";
  os << 0.0 << "," << F0 << "," << 0.0 << "\n";
  for (const auto& r : rows) os << r.t << "," << r.F << "," << r.R << "\n";
  return os.str();
}

DivIdentityReport div_identity_check(const IsotropicElastic& C,
                                     const Mat3& A_affine, const Vec3& c_affine,
                                     const Vec3& pole_u, const Vec3& dir_u,
                                     const Vec3& pole_v, const Vec3& dir_v,
                                     int n_points, double fd_step,
                                     unsigned seed) {
  auto grad_of = [&](const Vec3& x, const Vec3& pole, const Vec3& l) {
    KelvinEval ke = kelvin(x, pole, C);
    Mat3 G;  // G(i,k) = d u_i / d x_k
    for (int k = 0; k < 3; ++k) G.col(k) = ke.grad[k] * l;
    return G;
  };
  auto b_at = [&](const Vec3& x) {
    Mat3 Gu = grad_of(x, pole_u, dir_u);
    Mat3 Gv = grad_of(x, pole_v, dir_v);
    return bfield(Gu, Gv, A_affine * x + c_affine, C);
  };
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  DivIdentityReport rep;
  rep.n_points = n_points;
  for (int k = 0; k < n_points; ++k) {
    Vec3 x(uni(rng), uni(rng), uni(rng));
    if ((x - pole_u).norm() < 0.5 || (x - pole_v).norm() < 0.5) {
      --k;
      continue;
    }
    double div_b = 0.0;
    for (int d = 0; d < 3; ++d) {
      Vec3 e = Vec3::Unit(d) * fd_step;
      div_b += (b_at(x + e)[d] - b_at(x - e)[d]) / (2.0 * fd_step);
    }
    Mat3 Gu = grad_of(x, pole_u, dir_u);
    Mat3 Gv = grad_of(x, pole_v, dir_v);
    double lhs = integrand_matrix(C, Gu, A_affine).cwiseProduct(Gv).sum();
    rep.max_abs_err = std::max(rep.max_abs_err, std::fabs(lhs - div_b));
    rep.scale = std::max({rep.scale, std::fabs(lhs), std::fabs(div_b)});
  }
  // Relative to the largest magnitude seen across the sample, so points
  // where both sides nearly vanish do not divide noise by noise.
  rep.max_rel_err = rep.scale > 0 ? rep.max_abs_err / rep.scale : 0.0;
  return rep;
}

DerivativeBundle derivative_bundle(const Mesh& mesh, const Polyhedron& P,
                                   const BiphaseMaterial& mat,
                                   const NodalField& U, const TraceFn& f,
                                   const TraceFn& g,
                                   const std::vector<double>& t_list,
                                   double edge_margin) {
  DerivativeBundle b;
  b.table = fd_validate(mesh, mat, U, f, g, t_list);
  b.F0 = b.table.F0;
  b.Fprime_distributed = b.table.Fprime;
  b.boundary = F_prime_boundary(mesh, P, mat, U, f, g, edge_margin);
  b.u_dot = material_derivative(mesh, mat, U, f);
  return b;
}

std::string DerivativeBundle::to_json() const {
  std::ostringstream os;
  os.precision(15);
  os << "{\n  \"F0\": " << F0
     << ",\n  \"Fprime_distributed\": " << Fprime_distributed
     << ",\n  \"Fprime_boundary\": " << boundary.value
     << ",\n  \"boundary_collar\": " << boundary.collar
     << ",\n  \"fd_slope\": " << table.slope << ",\n  \"fd\": [";
  for (size_t i = 0; i < table.rows.size(); ++i)
    os << (i ? ", " : "") << "{\"t\": " << table.rows[i].t
       << ", \"F\": " << table.rows[i].F << ", \"R\": " << table.rows[i].R
       << "}";
  os << "],\n  \"u_dot_norm\": " << u_dot.u.norm() << "\n}\n";
  return os.str();
}

}  // namespace elastlab
