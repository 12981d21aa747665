#pragma once
#include <string>
#include <vector>

#include "elastlab/polyhedra.hpp"

namespace elastlab {

// Piecewise-linear profile: 1 on [0, r0/8], 0 beyond r0/4.
double eta_cutoff(double t, double r0);

// Affine displacement on one flap triangle, solved in the flap frame
// (origin A, first axis along the base, second axis toward the apex).
struct FlapPiece {
  int face = -1, edge = -1;
  Vec3 A, B, E;        // source flap
  Vec3 dA, dB, dE;     // vertex displacements A'-A, B'-B, E'-E
  Vec3 e1, e2;         // flap frame axes (in the source face plane)
  Eigen::Matrix2d M = Eigen::Matrix2d::Zero();  // in-plane linear part
  Eigen::Vector2d v = Eigen::Vector2d::Zero();  // offset (reduced targets)
  double M_norm = 0.0;  // Frobenius norm of M
};

enum class FaceCase { Coplanar, Parallel, Rotation };

// Map between a matched pair of faces: a rigid motion S reducing the target
// plane onto the source plane, plus one affine piece per flap of the face.
struct FaceMap {
  int f0 = -1, f1 = -1;
  FaceCase kind = FaceCase::Coplanar;
  Mat3 S_R = Mat3::Identity();  // S(y) = S_R * y + S_t
  Vec3 S_t = Vec3::Zero();
  double sin_phi = 0.0;  // plane angle (rotation case)
  std::vector<FlapPiece> flaps;
  double lip = 0.0;  // measured Lipschitz bound over flap sample pairs

  // Displacement of a point on the given flap (x in the flap plane).
  Vec3 flap_displacement(const FlapPiece& fp, const Vec3& x) const;
  // In-plane derivative of the displacement along unit tangent t.
  Vec3 flap_tangent_deriv(const FlapPiece& fp, const Vec3& t) const;
};

struct HomotopyOptions {
  double delta0 = 0.45;      // vertex-matching regime bound (d_H <= delta0*r0)
  double C4 = 20.0;          // vertex displacement vs d_H factor
  double sample_pitch = -1;  // boundary sample grid pitch; <0 -> r0/16
  double hausdorff_resolution = -1;  // <0 -> 1e-4 * r0
  double boundary_tol = -1;          // on-surface detection; <0 -> 1e-9*diam
  double fd_step = -1;               // jacobian step; <0 -> 1e-6 * r0
};

// The vector field U: affine on flaps, Lipschitz-extended off them
// (per-component McShane over the boundary sample set), cut off at
// distance r0/4 from the source boundary.
struct HomotopyField {
  Polyhedron P0, P1;
  AdmissibilityParams prm;
  HomotopyOptions opt;
  std::vector<int> vmap;  // vertex i of P0 -> vmap[i] of P1
  std::vector<FaceMap> faces;

  // Global boundary sample set (flap vertices + per-face grids).
  std::vector<Vec3> sx;
  std::vector<Vec3> su;
  // Per-face 2D extension data: indices into sx/su restricted to flap
  // sample points of that face, plus the face Lipschitz constant.
  struct FaceSamples {
    std::vector<int> idx;
    double lip = 0.0;
  };
  std::vector<FaceSamples> fsam;

  double d_H = 0.0;
  double L_global = 0.0;    // secant Lipschitz constant of the sample set
  double U_inf = 0.0;       // sup |U| over boundary samples
  double DU_inf = 0.0;      // measured sup |DU| (finite differences)
  double Ctilde = 0.0;      // (U_inf + r0 * DU_inf) / d_H

  Vec3 eval(const Vec3& x) const;           // cutoff included
  Vec3 eval_boundary(const Vec3& x) const;  // x on the source boundary
  Mat3 jacobian(const Vec3& x) const;       // central differences
  std::string to_json() const;
};

// Case detection plus the per-flap affine solves for one matched face pair.
FaceMap build_face_map(const Polyhedron& P0, const Polyhedron& P1, int f0,
                       int f1, const std::vector<int>& vmap,
                       const std::vector<FlapTriangle>& flaps0,
                       const std::vector<FlapTriangle>& flaps1,
                       const AdmissibilityParams& prm);

HomotopyField build_field(const Polyhedron& P0, const Polyhedron& P1,
                          const AdmissibilityParams& prm,
                          const HomotopyOptions& opt = {});

// Phi_t(x) = x + t U(x) and its jacobian I + t DU.
Vec3 phi(const HomotopyField& field, double t, const Vec3& x);
Mat3 phi_jacobian(const HomotopyField& field, double t, const Vec3& x);

struct HomotopyReport {
  bool ok = false;
  double vertex_err = 0.0;       // max |Phi_1(V0) - V1|
  double face_residual = 0.0;    // max dist(Phi_1(boundary sample), bd D1)
  double min_det = 0.0, max_det = 0.0;  // det DPhi_t over samples
  double det_expansion_err = 0.0;  // |det - 1 - t div U| vs quadratic bound
  double injectivity_ratio = 0.0;  // min |Phi_1 x - Phi_1 y| / |x - y|
  std::string detail;
};

HomotopyReport verify_homotopy(const Polyhedron& P0, const Polyhedron& P1,
                               const HomotopyField& field,
                               double face_residual_tol,
                               int n_det_samples = 10000);

}  // namespace elastlab
