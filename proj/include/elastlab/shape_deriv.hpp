#pragma once
#include <functional>
#include <string>
#include <vector>

#include "elastlab/forward.hpp"
#include "elastlab/moment.hpp"

namespace elastlab {

// Nodal sample of a displacement direction, one vector per mesh node.
using NodalField = std::vector<Vec3>;

NodalField nodal_field(const Mesh& mesh,
                       const std::function<Vec3(const Vec3&)>& fn);

using TraceFn = std::function<Vec3(const Vec3&)>;

// Energy pairing F(t) of the two Dirichlet solutions with traces f and g on
// the mesh whose nodes are displaced by t * U.  Boundary nodes must be fixed
// by U (the displacement direction vanishes near the box boundary), so the
// trace data is t-independent.
double F_value(const Mesh& mesh, const BiphaseMaterial& mat,
               const NodalField& U, double t, const TraceFn& f,
               const TraceFn& g);

// d/dt F(t) at t = 0 as a volume quadrature over the base mesh:
// sum_T vol { C grad u (div U I - DU^T) - C (grad u DU) } : grad v
// with U interpolated piecewise linearly.  This is the exact derivative of
// the node-displacement realization of F above.
double F_prime_distributed(const Mesh& mesh, const BiphaseMaterial& mat,
                           const NodalField& U, const TraceFn& f,
                           const TraceFn& g);

struct BoundaryDerivative {
  double value = 0.0;   // -sum (U.n) M sym(grad u_e) : sym(grad v_e) dA
  double collar = 0.0;  // magnitude accumulated on excluded edge-collar facets
  int n_used = 0;       // interface facets inside the margin
  int n_excluded = 0;
};

// Interface-integral form of F'(0): one-sided exterior gradient recovery on
// interface facets farther than edge_margin from every inclusion edge; the
// excluded collar contribution is reported separately as the uncontrolled
// remainder.
BoundaryDerivative F_prime_boundary(const Mesh& mesh, const Polyhedron& P,
                                    const BiphaseMaterial& mat,
                                    const NodalField& U, const TraceFn& f,
                                    const TraceFn& g, double edge_margin);

// Zero-trace solve for the material derivative of the state with trace f:
//   a(u_dot, psi) = -int { C grad u0 (div U I - DU^T) - C (grad u0 DU) } : grad psi.
DiscreteField material_derivative(const Mesh& mesh, const BiphaseMaterial& mat,
                                  const NodalField& U, const TraceFn& f);

struct FdRow {
  double t = 0.0;
  double F = 0.0;
  double R = 0.0;  // |F(t) - F(0) - t F'(0)|
};

struct FdTable {
  double F0 = 0.0;
  double Fprime = 0.0;
  std::vector<FdRow> rows;
  double slope = 0.0;  // log-log least-squares slope of R(t)
  std::string to_csv() const;
};

FdTable fd_validate(const Mesh& mesh, const BiphaseMaterial& mat,
                    const NodalField& U, const TraceFn& f, const TraceFn& g,
                    const std::vector<double>& t_list);

struct DivIdentityReport {
  double max_rel_err = 0.0;  // max |lhs - div b| over the sample-wide scale
  double max_abs_err = 0.0;
  double scale = 0.0;  // largest |lhs| or |div b| encountered
  int n_points = 0;
};

// Pointwise check that the derivative integrand equals div b for the flux
// b = (C grad u . grad v) U - (C grad u)(grad v U) - (C grad v)(grad u U),
// with u, v point-source solutions (poles outside the sample region) and an
// affine direction field x -> A x + c; the divergence is taken by central
// differences with the given step.
DivIdentityReport div_identity_check(const IsotropicElastic& C,
                                     const Mat3& A_affine, const Vec3& c_affine,
                                     const Vec3& pole_u, const Vec3& dir_u,
                                     const Vec3& pole_v, const Vec3& dir_v,
                                     int n_points, double fd_step,
                                     unsigned seed = 2024);

struct DerivativeBundle {
  double F0 = 0.0;
  double Fprime_distributed = 0.0;
  BoundaryDerivative boundary;
  DiscreteField u_dot;
  FdTable table;
  std::string to_json() const;
};

DerivativeBundle derivative_bundle(const Mesh& mesh, const Polyhedron& P,
                                   const BiphaseMaterial& mat,
                                   const NodalField& U, const TraceFn& f,
                                   const TraceFn& g,
                                   const std::vector<double>& t_list,
                                   double edge_margin);

}  // namespace elastlab
