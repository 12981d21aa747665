#pragma once
#include <memory>
#include <string>
#include <vector>

#include "elastlab/forward.hpp"
#include "elastlab/kernels.hpp"

namespace elastlab {

// ---------------------------------------------------------------------------
// Numeric two-phase half-space fundamental solution.
//
// Two elastic half-spaces glued along z = 0, point load at (0, 0, offset)
// on the z > 0 side.  The field is split as Kelvin (top material, analytic)
// plus a correction solved by FEM on a large graded box with the plane
// interface resolved by construction; the correction gradient uses nodal
// patch recovery on the structured grid.
// ---------------------------------------------------------------------------
struct HalfspaceKernel {
  IsotropicElastic top;     // z > 0 (pole side)
  IsotropicElastic bottom;  // z < 0
  double offset = 1.0;      // pole height above the interface
  double R = 8.0;           // box half-width
  int n = 28;               // cells per axis
  double grading = 2.5;     // sinh grading strength

  // grid data
  std::vector<double> coord;               // n+1 graded axis coordinates
  std::vector<Eigen::VectorXd> c;          // correction field per load e_j
  // The correction gradient jumps across z = 0, so nodal recovery is done
  // one-sided: c_grad from the z > 0 tets, c_grad_bot from z < 0.
  std::vector<Eigen::MatrixXd> c_grad;      // 9 x N, top-side recovery
  std::vector<Eigen::MatrixXd> c_grad_bot;  // 9 x N, bottom-side recovery

  // Full kernel: value columns Gamma * e_j and gradient d(Gamma e_j)_i/dx_k.
  // Throws outside the box.
  Mat3 gamma(const Vec3& x) const;
  Mat3 grad_col(const Vec3& x, int j) const;
  bool inside(const Vec3& x) const;

  // 33-derivative probe matching the closed-form bimaterial restriction.
  double d33(const Vec3& x) const { return grad_col(x, 2)(2, 2); }
};

// Solve (or fetch from the in-process cache) the kernel for the given
// material pair and pole offset.
const HalfspaceKernel& halfspace_kernel(const IsotropicElastic& top,
                                        const IsotropicElastic& bottom,
                                        double offset, double R = 8.0,
                                        int n = 28, double grading = -1.0);

// ---------------------------------------------------------------------------
// Point location in an unstructured tet mesh via a uniform bin grid.
// ---------------------------------------------------------------------------
class TetLocator {
 public:
  explicit TetLocator(const Mesh& mesh);
  // Tet containing x (barycentric tolerance), or -1.
  int locate(const Vec3& x, Eigen::Vector4d* bary = nullptr) const;
  const Mesh& mesh() const { return *mesh_; }

 private:
  const Mesh* mesh_;
  Vec3 lo_, cell_;
  int nx_, ny_, nz_;
  std::vector<std::vector<int>> bins_;
};

// P1 field with nodal patch-recovered gradients for smooth evaluation.
struct FieldOnMesh {
  std::shared_ptr<TetLocator> loc;
  Eigen::VectorXd u;       // 3N nodal values
  Eigen::MatrixXd grad;    // 9 x N recovered gradients (column-major per node)

  static FieldOnMesh build(std::shared_ptr<TetLocator> loc,
                           const Eigen::VectorXd& u);
  Vec3 value(const Vec3& x) const;
  Mat3 gradient(const Vec3& x) const;  // d u_i / d x_k
};

// ---------------------------------------------------------------------------
// Augmented domain: the box plus a collar of the same cross-section glued
// through the measurement face, so the glued region is a box again and the
// Green functions vanish on the rest of the original boundary.
// ---------------------------------------------------------------------------
struct AugmentedDomain {
  Box omega;       // original box
  Box sharp;       // omega plus the collar
  int sigma_face;  // box face index 0..5 through which the collar attaches
  Vec3 P0;         // pole anchor inside the collar
  double r_sharp = 0.25;  // zeta * r0
  double zeta = 0.25;
  double r0 = 1.0;

  static AugmentedDomain build(const Box& omega, int sigma_face, double r0,
                               double zeta = 0.25);
  bool in_collar(const Vec3& x) const;
};

enum class SingularKind { KelvinInterior, KelvinExterior, Halfspace };

// G = Gamma0 + w: analytic (or numeric half-space) singular part plus a
// FEM corrector with trace -Gamma0 l on the augmented-domain boundary.
struct GreenFunction {
  Vec3 y;
  Vec3 l;
  SingularKind kind = SingularKind::KelvinExterior;
  double rbar = 0.0;  // radius of the ball where the frozen tensor matches

  // Kelvin material for the two non-interface kinds
  IsotropicElastic kel_mat;
  // half-space frame: x_world = frame_origin + frame * x_kernel
  Mat3 frame = Mat3::Identity();
  Vec3 frame_origin = Vec3::Zero();
  const HalfspaceKernel* hk = nullptr;

  FieldOnMesh w;                  // corrector on the augmented mesh
  std::vector<int> source_tets;   // tets carrying the corrector load

  Vec3 gamma0(const Vec3& x) const;
  Mat3 grad_gamma0(const Vec3& x) const;
  Vec3 value(const Vec3& x) const { return gamma0(x) + w.value(x); }
  Mat3 gradient(const Vec3& x) const { return grad_gamma0(x) + w.gradient(x); }
};

// Corrector solve on a mesh of the augmented box conforming to the
// inclusion.  The frozen tensor C_y is Kelvin interior/exterior when the
// pole has clearance dom.r_sharp from the inclusion surface, otherwise the
// half-space pair through the nearest face (poles whose nearest surface
// feature is an edge or vertex are rejected).  A prebuilt solver for
// (mesh, mat) may be passed to reuse its factorization.
GreenFunction corrector_solve(const AugmentedDomain& dom, const Polyhedron& D,
                              const BiphaseMaterial& mat, const Mesh& mesh,
                              const Vec3& y, const Vec3& l,
                              const DirichletSolver* solver = nullptr,
                              std::shared_ptr<TetLocator> loc = nullptr);

// Difference of inclusion-region integrals
//   int_{D0} (C^i - C^e) grad G0 l . grad G1 m  -  int_{D1} (same),
// by recursive tet subdivision refined toward the two poles and toward the
// region boundaries; quad_mesh supplies the integration cells.
double S_functional(const GreenFunction& G0, const GreenFunction& G1,
                    const Polyhedron& D0, const Polyhedron& D1,
                    const BiphaseMaterial& mat, const Mesh& quad_mesh);

struct ScalingRow {
  double h = 0.0;
  double lambda_w = 0.0;
  double S = 0.0;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  // log|S| vs log h slope for one lambda_w
  double slope(double lambda_w) const;
  // best slope over the lambda_w values present
  double best_slope() const;
  std::string to_csv() const;
};

// Pole-descent experiment at the face point P of D0 (outward normal n):
// y_h = P + h n for G0 (material layout of D0), w_h = P + lambda_w h n for
// G1 (layout of D1); reports S over the (h, lambda_w) grid.
ScalingTable s_scaling_experiment(const AugmentedDomain& dom,
                                  const Polyhedron& D0, const Polyhedron& D1,
                                  const BiphaseMaterial& mat, const Vec3& P,
                                  const Vec3& n,
                                  const std::vector<double>& h_list,
                                  const std::vector<double>& lw_list,
                                  double h_mesh, const Vec3& l);

}  // namespace elastlab
