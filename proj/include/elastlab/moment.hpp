#pragma once
#include <Eigen/Dense>

#include "elastlab/elasticity.hpp"

namespace elastlab {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// Orthonormal basis of Sym(3): diagonal units then sqrt(2)-scaled shears.
Mat3 sym_basis(int k);
Vec6 sym_to_vec(const Mat3& A);
Mat3 vec_to_sym(const Vec6& v);

// Q with Q^{-1} zeta . eta = C^i (zeta x n) . (eta x n);
// Q^{-1} = mu^i (I + n x n) + lambda^i n x n.
Mat3 build_Q(const IsotropicElastic& interior, const Vec3& n);

struct MomentTensor {
  Mat6 rep;  // on the orthonormal Sym(3) basis
  Mat3 apply(const Mat3& A_sym) const { return vec_to_sym(rep * sym_to_vec(A_sym)); }
  double symmetry_defect() const { return (rep - rep.transpose()).norm(); }
  double min_abs_eigen() const;  // min eigenvalue of +/- rep, sign-resolved
};

// M A = (C^e - C^i) A + (C^e - C^i)[ Q ((C^e - C^i) A n) x n ]
MomentTensor build_M(const BiphaseMaterial& mat, const Vec3& n);

// Interior gradient across a flat interface with normal n from the exterior
// one: grad_ui = grad_ue - delta x n, delta = Q((C^i - C^e) sym(grad_ue) n).
Mat3 transmission(const Mat3& grad_ue, const BiphaseMaterial& mat, const Vec3& n);

// b = (C grad u . grad v) U - (C grad u)(grad v U) - (C grad v)(grad u U)
Vec3 bfield(const Mat3& grad_u, const Mat3& grad_v, const Vec3& U,
            const IsotropicElastic& C);

// (b^i - b^e) . n = -(U . n) M sym(grad_ue) . sym(grad_ve), via build_M.
double bfield_jump(const Mat3& grad_ue, const Mat3& grad_ve, double U_dot_n,
                   const BiphaseMaterial& mat, const Vec3& n);

// The same jump assembled from the two one-sided b fields (oracle path).
double bfield_jump_direct(const Mat3& grad_ue, const Mat3& grad_ve,
                          const Vec3& U, const BiphaseMaterial& mat,
                          const Vec3& n);

}  // namespace elastlab
