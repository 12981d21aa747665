#include <cmath>
#include <stdexcept>

#include "elastlab/forward.hpp"

namespace elastlab {

namespace {

// Constant gradients of the four barycentric basis functions on a tet.
void tet_grads(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
               Vec3 g[4], double& vol) {
  Mat3 J;
  J.col(0) = b - a;
  J.col(1) = c - a;
  J.col(2) = d - a;
  vol = J.determinant() / 6.0;
  Mat3 Jinv = J.inverse();
  g[1] = Jinv.row(0);
  g[2] = Jinv.row(1);
  g[3] = Jinv.row(2);
  g[0] = -(g[1] + g[2] + g[3]);
}

// 12x12 element stiffness for isotropic (lambda, mu):
// a(u,v) = 2 mu eps(u):eps(v) + lambda div u div v.
void element_stiffness(const Vec3 x[4], const IsotropicElastic& m,
                       Eigen::Matrix<double, 12, 12>& Ke) {
  Vec3 g[4];
  double vol;
  tet_grads(x[0], x[1], x[2], x[3], g, vol);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
          double v = m.mu * (g[i].dot(g[j]) * (p == q ? 1.0 : 0.0) +
                             g[i][q] * g[j][p]) +
                     m.lambda * g[i][p] * g[j][q];
          Ke(3 * i + p, 3 * j + q) = vol * v;
        }
}

}  // namespace

Eigen::SparseMatrix<double> assemble_stiffness(const Mesh& mesh,
                                               const BiphaseMaterial& mat) {
  int n = 3 * mesh.n_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.tets.size() * 144);
  Eigen::Matrix<double, 12, 12> Ke;
  for (size_t t = 0; t < mesh.tets.size(); ++t) {
    const auto& T = mesh.tets[t];
    Vec3 x[4] = {mesh.X[T[0]], mesh.X[T[1]], mesh.X[T[2]], mesh.X[T[3]]};
    const IsotropicElastic& m =
        mesh.region[t] ? mat.interior : mat.exterior;
    element_stiffness(x, m, Ke);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int p = 0; p < 3; ++p)
          for (int q = 0; q < 3; ++q)
            trip.emplace_back(3 * T[i] + p, 3 * T[j] + q,
                              Ke(3 * i + p, 3 * j + q));
  }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

DirichletSolver::DirichletSolver(const Mesh& m, const BiphaseMaterial& mat)
    : mesh(m), K(assemble_stiffness(m, mat)), bnodes(m.boundary_nodes()) {
  int n = mesh.n_nodes();
  dof_of_node.assign(n, 0);
  for (int b : bnodes) dof_of_node[b] = -1;
  int ni = 0;
  for (int i = 0; i < n; ++i)
    if (dof_of_node[i] == 0) dof_of_node[i] = ni++;
  // interior-interior and interior-boundary blocks
  std::vector<Eigen::Triplet<double>> tii, tib;
  for (int col = 0; col < K.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
      int ri = dof_of_node[it.row() / 3], ci = dof_of_node[it.col() / 3];
      int rc = it.row() % 3, cc = it.col() % 3;
      if (ri >= 0 && ci >= 0)
        tii.emplace_back(3 * ri + rc, 3 * ci + cc, it.value());
    }
  std::vector<int> bidx(n, -1);
  for (size_t k = 0; k < bnodes.size(); ++k) bidx[bnodes[k]] = (int)k;
  for (int col = 0; col < K.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
      int ri = dof_of_node[it.row() / 3];
      int cb = bidx[it.col() / 3];
      if (ri >= 0 && cb >= 0)
        tib.emplace_back(3 * ri + it.row() % 3, 3 * cb + it.col() % 3,
                         it.value());
    }
  int nin = 0;
  for (int i = 0; i < n; ++i)
    if (dof_of_node[i] >= 0) ++nin;
  Eigen::SparseMatrix<double> Kii(3 * nin, 3 * nin);
  Kii.setFromTriplets(tii.begin(), tii.end());
  Kib.resize(3 * nin, 3 * (int)bnodes.size());
  Kib.setFromTriplets(tib.begin(), tib.end());
  ldlt.compute(Kii);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("fem: interior factorization failed");
}

DiscreteField DirichletSolver::solve(const std::vector<Vec3>& bvals) const {
  if (bvals.size() != bnodes.size())
    throw std::runtime_error("fem: boundary value count mismatch");
  Eigen::VectorXd g(3 * bnodes.size());
  for (size_t k = 0; k < bnodes.size(); ++k)
    g.segment<3>(3 * k) = bvals[k];
  Eigen::VectorXd ui = ldlt.solve(-(Kib * g));
  DiscreteField f;
  f.u.setZero(3 * mesh.n_nodes());
  for (size_t k = 0; k < bnodes.size(); ++k)
    f.u.segment<3>(3 * bnodes[k]) = g.segment<3>(3 * k);
  for (int i = 0; i < mesh.n_nodes(); ++i)
    if (dof_of_node[i] >= 0)
      f.u.segment<3>(3 * i) = ui.segment<3>(3 * dof_of_node[i]);
  return f;
}

DiscreteField DirichletSolver::solve(const std::vector<Vec3>& bvals,
                                     const Eigen::VectorXd& load) const {
  if (bvals.size() != bnodes.size())
    throw std::runtime_error("fem: boundary value count mismatch");
  if (load.size() != 3 * mesh.n_nodes())
    throw std::runtime_error("fem: load vector size mismatch");
  Eigen::VectorXd g(3 * bnodes.size());
  for (size_t k = 0; k < bnodes.size(); ++k)
    g.segment<3>(3 * k) = bvals[k];
  Eigen::VectorXd rhs = -(Kib * g);
  for (int i = 0; i < mesh.n_nodes(); ++i)
    if (dof_of_node[i] >= 0)
      rhs.segment<3>(3 * dof_of_node[i]) += load.segment<3>(3 * i);
  Eigen::VectorXd ui = ldlt.solve(rhs);
  DiscreteField f;
  f.u.setZero(3 * mesh.n_nodes());
  for (size_t k = 0; k < bnodes.size(); ++k)
    f.u.segment<3>(3 * bnodes[k]) = g.segment<3>(3 * k);
  for (int i = 0; i < mesh.n_nodes(); ++i)
    if (dof_of_node[i] >= 0)
      f.u.segment<3>(3 * i) = ui.segment<3>(3 * dof_of_node[i]);
  return f;
}

double DirichletSolver::energy(const DiscreteField& a,
                               const DiscreteField& b) const {
  return a.u.dot(K * b.u);
}

SolveReport solve_dirichlet(const Mesh& mesh, const BiphaseMaterial& mat,
                            const std::function<Vec3(const Vec3&)>& trace) {
  DirichletSolver S(mesh, mat);
  std::vector<Vec3> g(S.bnodes.size());
  for (size_t k = 0; k < S.bnodes.size(); ++k)
    g[k] = trace(mesh.X[S.bnodes[k]]);
  SolveReport rep;
  rep.field = S.solve(g);
  rep.energy = S.energy(rep.field, rep.field);
  // Galerkin residual on interior rows.
  Eigen::VectorXd r = S.K * rep.field.u;
  double rn = 0.0;
  for (int i = 0; i < mesh.n_nodes(); ++i)
    if (S.dof_of_node[i] >= 0) rn += r.segment<3>(3 * i).squaredNorm();
  rep.residual = std::sqrt(rn);
  rep.iterations = 1;  // direct factorization
  return rep;
}

}  // namespace elastlab
