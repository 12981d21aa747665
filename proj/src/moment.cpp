#include "elastlab/moment.hpp"

#include <cmath>

namespace elastlab {

Mat3 sym_basis(int k) {
  Mat3 E = Mat3::Zero();
  const double s = 1.0 / std::sqrt(2.0);
  switch (k) {
    case 0: E(0, 0) = 1; break;
    case 1: E(1, 1) = 1; break;
    case 2: E(2, 2) = 1; break;
    case 3: E(0, 1) = E(1, 0) = s; break;
    case 4: E(0, 2) = E(2, 0) = s; break;
    default: E(1, 2) = E(2, 1) = s; break;
  }
  return E;
}

Vec6 sym_to_vec(const Mat3& A) {
  Vec6 v;
  const double s = std::sqrt(2.0);
  v << A(0, 0), A(1, 1), A(2, 2), s * A(0, 1), s * A(0, 2), s * A(1, 2);
  return v;
}

Mat3 vec_to_sym(const Vec6& v) {
  Mat3 A;
  const double s = 1.0 / std::sqrt(2.0);
  A << v(0), s * v(3), s * v(4),
       s * v(3), v(1), s * v(5),
       s * v(4), s * v(5), v(2);
  return A;
}

Mat3 build_Q(const IsotropicElastic& Ci, const Vec3& n) {
  Mat3 Qinv = Ci.mu * (Mat3::Identity() + n * n.transpose()) +
              Ci.lambda * n * n.transpose();
  return Qinv.inverse();
}

static Mat3 diff_apply(const BiphaseMaterial& m, const Mat3& A) {
  return m.exterior.apply(A) - m.interior.apply(A);
}

MomentTensor build_M(const BiphaseMaterial& mat, const Vec3& n) {
  Mat3 Q = build_Q(mat.interior, n);
  MomentTensor M;
  for (int k = 0; k < 6; ++k) {
    Mat3 A = sym_basis(k);
    Mat3 first = diff_apply(mat, A);
    Vec3 zeta = Q * (first * n);
    Mat3 out = first + diff_apply(mat, zeta * n.transpose());
    M.rep.col(k) = sym_to_vec(out);
  }
  return M;
}

double MomentTensor::min_abs_eigen() const {
  Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (rep + rep.transpose()));
  double lo = es.eigenvalues()(0), hi = es.eigenvalues()(5);
  // sign-definite under monotonicity; report the eigenvalue of +/-M nearest 0
  if (lo >= 0) return lo;
  if (hi <= 0) return -hi;
  return std::min(std::fabs(lo), std::fabs(hi));
}

Mat3 transmission(const Mat3& grad_ue, const BiphaseMaterial& mat,
                  const Vec3& n) {
  Mat3 sym_e = 0.5 * (grad_ue + grad_ue.transpose());
  Mat3 Q = build_Q(mat.interior, n);
  Vec3 delta =
      Q * ((mat.interior.apply(sym_e) - mat.exterior.apply(sym_e)) * n);
  return grad_ue - delta * n.transpose();
}

Vec3 bfield(const Mat3& grad_u, const Mat3& grad_v, const Vec3& U,
            const IsotropicElastic& C) {
  Mat3 Tu = C.apply(grad_u), Tv = C.apply(grad_v);
  double energy = (Tu.array() * grad_v.array()).sum();
  return energy * U - Tu * (grad_v * U) - Tv * (grad_u * U);
}

double bfield_jump(const Mat3& grad_ue, const Mat3& grad_ve, double U_dot_n,
                   const BiphaseMaterial& mat, const Vec3& n) {
  MomentTensor M = build_M(mat, n);
  Mat3 su = 0.5 * (grad_ue + grad_ue.transpose());
  Mat3 sv = 0.5 * (grad_ve + grad_ve.transpose());
  return -U_dot_n * (M.apply(su).array() * sv.array()).sum();
}

double bfield_jump_direct(const Mat3& grad_ue, const Mat3& grad_ve,
                          const Vec3& U, const BiphaseMaterial& mat,
                          const Vec3& n) {
  Mat3 grad_ui = transmission(grad_ue, mat, n);
  Mat3 grad_vi = transmission(grad_ve, mat, n);
  Vec3 be = bfield(grad_ue, grad_ve, U, mat.exterior);
  Vec3 bi = bfield(grad_ui, grad_vi, U, mat.interior);
  return (bi - be).dot(n);
}

}  // namespace elastlab
