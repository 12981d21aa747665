#pragma once
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "elastlab/elasticity.hpp"

namespace elastlab {

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  double diameter() const { return (hi - lo).norm(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  double dist_to_boundary(const Vec3& p) const;  // from an interior point
};

struct AdmissibilityParams {
  double r0 = 1.0;
  double M0 = 2.0;
  double M1 = 16.0;
  double theta0 = M_PI / 8.0;
  double flap_gamma() const;  // min{theta0/3, pi/2 - atan(M0)}
  double flap_h0() const;     // (r0/2) tan(flap_gamma)
};

// Closed polyhedral surface, faces stored as CCW-from-outside loops.
struct Polyhedron {
  std::vector<Vec3> V;
  std::vector<std::vector<int>> faces;

  struct Edge {
    int a, b;      // vertex ids, a < b
    int f0, f1;    // incident faces
  };
  std::vector<Edge> edges;
  std::vector<Vec3> normals;      // unit outward, per face
  std::vector<Vec3> centroids;    // per face
  double planarity_defect = 0.0;  // worst face, absolute

  // Validates closedness/orientability/Euler and computes derived data.
  // Throws std::runtime_error on structural defects or planarity beyond tol
  // (tol < 0 selects the default 1e-9 * diameter).
  void build(double planarity_tol = -1.0);

  static Polyhedron from_json(const std::string& text, double planarity_tol = -1.0);
  std::string to_json() const;
  static Polyhedron load(const std::string& path, double planarity_tol = -1.0);
  void save(const std::string& path) const;

  double diameter() const;
  Vec3 barycenter() const;
  bool contains(const Vec3& p) const;               // ray-cast over triangles
  double dist_to_surface(const Vec3& p) const;      // unsigned
  double dist_to_solid(const Vec3& p) const;        // 0 inside
  // Fan triangulation of every face: (vertex, vertex, vertex) triples.
  std::vector<std::array<Vec3, 3>> triangulated() const;
  // Surface points at roughly the given pitch (includes vertices).
  std::vector<Vec3> sample_surface(double pitch) const;
  // Interior dihedral angle (0, 2pi) at each edge, same indexing as edges.
  std::vector<double> dihedral_angles() const;
  // Interior polygon angles of face f, one per loop vertex.
  std::vector<double> face_angles(int f) const;

  Polyhedron translated(const Vec3& t) const;
  Polyhedron scaled(double s, const Vec3& center) const;
};

struct AdmissibilityReport {
  struct Check {
    std::string name;
    bool pass = false;
    double margin = 0.0;  // >= 0 when pass
  };
  std::vector<Check> checks;
  int n_vertices = 0, n_edges = 0, n_faces = 0;
  bool pass = false;
  std::string to_text() const;
  std::string to_json() const;
};

// (H1) + (H2-1..5) checks; (H2-5) via a sampled local graph/slope surrogate.
AdmissibilityReport validate_class_P(const Polyhedron& P, const Box& omega,
                                     const AdmissibilityParams& params);

// Directed/symmetric Hausdorff distance between boundaries and solids,
// adaptive sampling certified to the given resolution.
double hausdorff_boundary(const Polyhedron& P0, const Polyhedron& P1,
                          double resolution);
double hausdorff_solid(const Polyhedron& P0, const Polyhedron& P1,
                       double resolution);

// d_mu of the modified-distance definition: Hausdorff data restricted to the
// parts of each boundary reachable from the boundary of omega (voxel flood
// fill at the given resolution).
double modified_distance(const Polyhedron& P0, const Polyhedron& P1,
                         const Box& omega, double voxel, double resolution);

struct VertexPairing {
  std::vector<int> map01;  // vertex i of P0 -> map01[i] of P1
  double max_displacement = 0.0;
};

// Nearest-neighbour pairing; throws on ambiguity (second candidate within
// d_H) or on displacement beyond C4 * d_H.
VertexPairing match_vertices(const Polyhedron& P0, const Polyhedron& P1,
                             double d_H, double delta0, double C4,
                             double r0);

struct FlapTriangle {
  int face = -1;
  int edge = -1;         // index into Polyhedron::edges
  Vec3 A, B;             // base = the edge endpoints
  Vec3 E;                // apex, at depth h0 inside the face
  Vec3 inward;           // unit in-plane normal to the base, toward E
};

// One flap per (face, edge) incidence; asserts containment, per-face
// disjointness, and the separation bound for non-adjacent bases.
std::vector<FlapTriangle> flap_triangles(const Polyhedron& P,
                                         const AdmissibilityParams& params);

// Solve nbar = sum alpha_i n_i; throws when the triple is near-singular.
Vec3 decompose_normal(const Vec3& nbar, const Vec3& n1, const Vec3& n2,
                      const Vec3& n3);

// Angle between a line direction and a plane, in [0, pi/2].
double angle_line_plane(const Vec3& dir, const Vec3& plane_normal);

// Geometry primitives shared across modules.
double point_triangle_dist(const Vec3& p, const Vec3& a, const Vec3& b,
                           const Vec3& c);
double triangle_triangle_dist(const std::array<Vec3, 3>& t0,
                              const std::array<Vec3, 3>& t1);

// Axis-aligned box of side `side` centered at c.
Polyhedron make_cube(const Vec3& c, double side);
// Regular tetrahedron with given circumradius centered at c.
Polyhedron make_tetrahedron(const Vec3& c, double circumradius);

}  // namespace elastlab
