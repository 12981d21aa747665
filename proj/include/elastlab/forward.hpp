#pragma once
#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "elastlab/polyhedra.hpp"

namespace elastlab {

// Conforming tetrahedral mesh of a box with an embedded convex inclusion.
// Structure: the subdivided inclusion surface is extruded inward to the
// inclusion centroid (shells) and outward to the box boundary (radial
// layers); prisms are split by the minimum-global-index diagonal rule, so
// neighbouring prisms always agree on shared quads.
struct Mesh {
  std::vector<Vec3> X;
  std::vector<std::array<int, 4>> tets;  // positive orientation
  std::vector<int> region;               // 1 inside the inclusion, 0 outside

  struct Facet {
    std::array<int, 3> v;
    int tag = -1;  // boundary: box face 0..5 (-x,+x,-y,+y,-z,+z), -1 chamfer
  };
  std::vector<Facet> boundary;   // facets on the box boundary
  std::vector<Facet> interface;  // facets on the inclusion boundary
  Box omega;
  double h = 0.0;

  int n_nodes() const { return (int)X.size(); }
  double volume(int t) const;
  double min_dihedral() const;  // radians, over all tets
  std::vector<int> boundary_nodes() const;
  // Nodes strictly inside the given box face (rim excluded).
  std::vector<int> face_interior_nodes(int boxface) const;
  void check() const;  // orientation + facet conformity; throws on defects

  // Re-derive region tags from a polyhedron (centroid containment).
  void retag(const Polyhedron& P);
  // Same connectivity, nodes displaced; throws if a tet inverts.
  Mesh moved(const std::vector<Vec3>& displacement) const;

  std::string to_text() const;
  static Mesh from_text(const std::string& text);
};

Mesh mesh_inclusion(const Box& omega, const Polyhedron& P, double h);

struct DiscreteField {
  Eigen::VectorXd u;  // 3 * n_nodes, node-major (3*i + component)
};

// Global stiffness of the piecewise-linear vector element for the biphase
// coefficient field (deterministic element order).
Eigen::SparseMatrix<double> assemble_stiffness(const Mesh& mesh,
                                               const BiphaseMaterial& mat);

struct SolveReport {
  DiscreteField field;
  double energy = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// Dirichlet solve with the trace prescribed at every box-boundary node.
SolveReport solve_dirichlet(const Mesh& mesh, const BiphaseMaterial& mat,
                            const std::function<Vec3(const Vec3&)>& trace);

// Reusable factorization of the interior block for multi-trace solves.
struct DirichletSolver {
  DirichletSolver(const Mesh& mesh, const BiphaseMaterial& mat);
  // Nodal boundary values, one Vec3 per boundary node (mesh order).
  DiscreteField solve(const std::vector<Vec3>& bvals) const;
  // Same with an added interior load vector (full 3N layout; boundary rows
  // ignored).
  DiscreteField solve(const std::vector<Vec3>& bvals,
                      const Eigen::VectorXd& load) const;
  double energy(const DiscreteField& a, const DiscreteField& b) const;

  const Mesh& mesh;
  Eigen::SparseMatrix<double> K;
  std::vector<int> bnodes;               // boundary node ids
  std::vector<int> dof_of_node;          // -1 for boundary, else interior idx
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::SparseMatrix<double> Kib;       // interior x boundary coupling
};

struct DtNOperator {
  std::vector<int> sigma_nodes;  // interior nodes of the chosen box face
  int sigma_face = -1;
  double r0 = 1.0;
  Eigen::MatrixXd L;       // DtN bilinear form on the sigma hat basis
  Eigen::MatrixXd gram;    // discrete H^{1/2} norm matrix on the same basis
};

DtNOperator dtn_assemble(const Mesh& mesh, const BiphaseMaterial& mat,
                         int sigma_face, double r0);

// Operator norm of (A.L - B.L) from the H^{1/2} gram to its dual
// (largest generalized singular value, dense).
double dtn_norm_diff(const DtNOperator& A, const DtNOperator& B);

}  // namespace elastlab
