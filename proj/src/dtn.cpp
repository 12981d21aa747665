#include <cmath>
#include <stdexcept>

#include "elastlab/forward.hpp"

namespace elastlab {

namespace {

// Scalar P1 mass and stiffness on the Sigma facet patch, restricted to the
// given node set (rim nodes dropped, i.e. their traces are zeroed).
void sigma_grams(const Mesh& mesh, int sigma_face,
                 const std::vector<int>& nodes, Eigen::MatrixXd& Ms,
                 Eigen::MatrixXd& Ks) {
  int m = (int)nodes.size();
  std::vector<int> local(mesh.n_nodes(), -1);
  for (int i = 0; i < m; ++i) local[nodes[i]] = i;
  Ms.setZero(m, m);
  Ks.setZero(m, m);
  for (const auto& f : mesh.boundary) {
    if (f.tag != sigma_face) continue;
    Vec3 a = mesh.X[f.v[0]], b = mesh.X[f.v[1]], c = mesh.X[f.v[2]];
    Vec3 e1 = b - a, e2 = c - a;
    double area = 0.5 * e1.cross(e2).norm();
    // in-plane gradients of the three hats
    Eigen::Matrix2d G;
    G << e1.dot(e1), e1.dot(e2), e2.dot(e1), e2.dot(e2);
    Eigen::Matrix2d Gi = G.inverse();
    Vec3 g[3];
    g[1] = Gi(0, 0) * e1 + Gi(0, 1) * e2;
    g[2] = Gi(1, 0) * e1 + Gi(1, 1) * e2;
    g[0] = -(g[1] + g[2]);
    for (int i = 0; i < 3; ++i) {
      int li = local[f.v[i]];
      if (li < 0) continue;
      for (int j = 0; j < 3; ++j) {
        int lj = local[f.v[j]];
        if (lj < 0) continue;
        Ms(li, lj) += area / 12.0 * (i == j ? 2.0 : 1.0);
        Ks(li, lj) += area * g[i].dot(g[j]);
      }
    }
  }
}

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& A, double pow_exp) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  Eigen::VectorXd d = es.eigenvalues();
  for (int i = 0; i < d.size(); ++i) {
    if (d[i] < 0) d[i] = 0;
    d[i] = std::pow(d[i], pow_exp);
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

DtNOperator dtn_assemble(const Mesh& mesh, const BiphaseMaterial& mat,
                         int sigma_face, double r0) {
  DtNOperator op;
  op.sigma_face = sigma_face;
  op.r0 = r0;
  op.sigma_nodes = mesh.face_interior_nodes(sigma_face);
  int m = (int)op.sigma_nodes.size();
  if (m == 0) throw std::runtime_error("dtn: empty sigma patch");

  DirichletSolver S(mesh, mat);
  std::vector<int> bidx(mesh.n_nodes(), -1);
  for (size_t k = 0; k < S.bnodes.size(); ++k) bidx[S.bnodes[k]] = (int)k;

  op.L.setZero(3 * m, 3 * m);
  std::vector<Vec3> g(S.bnodes.size(), Vec3::Zero());
  for (int j = 0; j < m; ++j) {
    int bj = bidx[op.sigma_nodes[j]];
    for (int q = 0; q < 3; ++q) {
      g[bj] = Vec3::Unit(q);
      DiscreteField u = S.solve(g);
      g[bj] = Vec3::Zero();
      Eigen::VectorXd r = S.K * u.u;
      for (int i = 0; i < 3 * m; ++i)
        op.L(i, 3 * j + q) = r[3 * op.sigma_nodes[i / 3] + i % 3];
    }
  }
  double sym = (op.L - op.L.transpose()).norm() /
               std::max(1e-300, op.L.norm());
  if (sym > 1e-8) throw std::runtime_error("dtn: symmetry violated");
  op.L = 0.5 * (op.L + op.L.transpose()).eval();

  // Discrete H^{1/2} gram: (1/r0^2) M^{1/2}(I + r0^2 W)^{1/2} M^{1/2} with
  // W = M^{-1/2} K M^{-1/2}, expanded per displacement component.
  Eigen::MatrixXd Ms, Ks;
  sigma_grams(mesh, sigma_face, op.sigma_nodes, Ms, Ks);
  Eigen::MatrixXd Mh = spd_sqrt(Ms, 0.5), Mhi = spd_sqrt(Ms, -0.5);
  Eigen::MatrixXd W = Mhi * Ks * Mhi;
  Eigen::MatrixXd core =
      spd_sqrt(Eigen::MatrixXd(Eigen::MatrixXd::Identity(m, m) + r0 * r0 * W),
               0.5);
  Eigen::MatrixXd N = (Mh * core * Mh) / (r0 * r0);
  N = 0.5 * (N + N.transpose()).eval();
  op.gram.setZero(3 * m, 3 * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int c = 0; c < 3; ++c) op.gram(3 * i + c, 3 * j + c) = N(i, j);
  return op;
}

double dtn_norm_diff(const DtNOperator& A, const DtNOperator& B) {
  if (A.L.rows() != B.L.rows() || A.sigma_nodes != B.sigma_nodes)
    throw std::runtime_error("dtn_norm_diff: incompatible operators");
  Eigen::MatrixXd D = A.L - B.L;
  Eigen::MatrixXd Gi = spd_sqrt(A.gram, -0.5);
  Eigen::MatrixXd E = Gi * D * Gi;
  E = 0.5 * (E + E.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(E);
  return std::max(std::fabs(es.eigenvalues()(0)),
                  std::fabs(es.eigenvalues()(es.eigenvalues().size() - 1)));
}

}  // namespace elastlab
