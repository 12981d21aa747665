#include "elastlab/polyhedra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace elastlab {

using json = nlohmann::json;

double Box::dist_to_boundary(const Vec3& p) const {
  double d = std::numeric_limits<double>::max();
  for (int k = 0; k < 3; ++k) {
    d = std::min(d, p[k] - lo[k]);
    d = std::min(d, hi[k] - p[k]);
  }
  return d;
}

double AdmissibilityParams::flap_gamma() const {
  return std::min(theta0 / 3.0, M_PI / 2.0 - std::atan(M0));
}

double AdmissibilityParams::flap_h0() const {
  return 0.5 * r0 * std::tan(flap_gamma());
}

void Polyhedron::build(double planarity_tol) {
  if (V.size() < 4 || faces.size() < 4)
    throw std::runtime_error("polyhedron: too few vertices or faces");
  for (const auto& f : faces) {
    if (f.size() < 3) throw std::runtime_error("polyhedron: degenerate face");
    for (int i : f)
      if (i < 0 || i >= (int)V.size())
        throw std::runtime_error("polyhedron: vertex index out of range");
  }

  // Half-edge pairing: every directed edge must occur once, its reverse once.
  std::map<std::pair<int, int>, int> half;  // (a,b) -> face
  for (int f = 0; f < (int)faces.size(); ++f) {
    const auto& loop = faces[f];
    for (size_t i = 0; i < loop.size(); ++i) {
      int a = loop[i], b = loop[(i + 1) % loop.size()];
      if (a == b) throw std::runtime_error("polyhedron: zero-length edge");
      if (!half.emplace(std::make_pair(a, b), f).second)
        throw std::runtime_error("polyhedron: repeated half-edge");
    }
  }
  edges.clear();
  for (const auto& [he, f] : half) {
    auto [a, b] = he;
    auto rev = half.find({b, a});
    if (rev == half.end())
      throw std::runtime_error("polyhedron: open or unoriented surface");
    if (a < b) edges.push_back({a, b, f, rev->second});
  }
  long chi = (long)V.size() - (long)edges.size() + (long)faces.size();
  if (chi != 2) throw std::runtime_error("polyhedron: Euler characteristic != 2");

  normals.resize(faces.size());
  centroids.resize(faces.size());
  planarity_defect = 0.0;
  for (int f = 0; f < (int)faces.size(); ++f) {
    const auto& loop = faces[f];
    Vec3 n = Vec3::Zero(), c = Vec3::Zero();
    for (size_t i = 0; i < loop.size(); ++i) {
      const Vec3& p = V[loop[i]];
      const Vec3& q = V[loop[(i + 1) % loop.size()]];
      n += p.cross(q);  // Newell
      c += p;
    }
    if (n.norm() <= 0.0) throw std::runtime_error("polyhedron: degenerate face normal");
    normals[f] = n.normalized();
    centroids[f] = c / (double)loop.size();
    for (int i : loop)
      planarity_defect = std::max(planarity_defect,
                                  std::fabs((V[i] - centroids[f]).dot(normals[f])));
  }
  double tol = planarity_tol >= 0.0 ? planarity_tol : 1e-9 * diameter();
  if (planarity_defect > tol)
    throw std::runtime_error("polyhedron: face planarity defect " +
                             std::to_string(planarity_defect));

  // Outward orientation: divergence-theorem volume must be positive.
  double vol6 = 0.0;
  for (const auto& t : triangulated()) vol6 += t[0].dot(t[1].cross(t[2]));
  if (vol6 <= 0.0)
    throw std::runtime_error("polyhedron: faces are not CCW-from-outside");
}

Polyhedron Polyhedron::from_json(const std::string& text, double planarity_tol) {
  json j = json::parse(text);
  Polyhedron P;
  for (const auto& v : j.at("vertices"))
    P.V.emplace_back(v.at(0).get<double>(), v.at(1).get<double>(),
                     v.at(2).get<double>());
  for (const auto& f : j.at("faces"))
    P.faces.push_back(f.get<std::vector<int>>());
  P.build(planarity_tol);
  return P;
}

std::string Polyhedron::to_json() const {
  json j;
  j["vertices"] = json::array();
  for (const auto& v : V) j["vertices"].push_back({v.x(), v.y(), v.z()});
  j["faces"] = faces;
  return j.dump(2);
}

Polyhedron Polyhedron::load(const std::string& path, double planarity_tol) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), planarity_tol);
}

void Polyhedron::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json() << "\n";
}

double Polyhedron::diameter() const {
  double d = 0.0;
  for (size_t i = 0; i < V.size(); ++i)
    for (size_t j = i + 1; j < V.size(); ++j)
      d = std::max(d, (V[i] - V[j]).norm());
  return d;
}

Vec3 Polyhedron::barycenter() const {
  Vec3 c = Vec3::Zero();
  for (const auto& v : V) c += v;
  return c / (double)V.size();
}

std::vector<std::array<Vec3, 3>> Polyhedron::triangulated() const {
  std::vector<std::array<Vec3, 3>> out;
  for (const auto& loop : faces)
    for (size_t i = 1; i + 1 < loop.size(); ++i)
      out.push_back({V[loop[0]], V[loop[i]], V[loop[i + 1]]});
  return out;
}

bool Polyhedron::contains(const Vec3& p) const {
  auto tris = triangulated();
  // Fallback ray directions in case a ray grazes an edge.
  for (int attempt = 0; attempt < 3; ++attempt) {
    Vec3 d = attempt == 0   ? Vec3(0.577350269189626, 0.577350269189626, 0.577350269189626)
             : attempt == 1 ? Vec3(0.267261241912424, 0.534522483824849, 0.801783725737273)
                            : Vec3(0.911684611677104, 0.410258030254897, 0.015024500454070).normalized();
    int crossings = 0;
    bool degenerate = false;
    for (const auto& t : tris) {
      Vec3 e1 = t[1] - t[0], e2 = t[2] - t[0];
      Vec3 h = d.cross(e2);
      double a = e1.dot(h);
      if (std::fabs(a) < 1e-14) continue;
      double inv = 1.0 / a;
      Vec3 s = p - t[0];
      double u = inv * s.dot(h);
      Vec3 q = s.cross(e1);
      double v = inv * d.dot(q);
      double w = 1.0 - u - v;
      double ray_t = inv * e2.dot(q);
      if (ray_t <= 1e-13) continue;
      double eps = 1e-10;
      if (u < -eps || v < -eps || w < -eps) continue;
      if (u < eps || v < eps || w < eps) { degenerate = true; break; }
      ++crossings;
    }
    if (!degenerate) return (crossings % 2) == 1;
  }
  return dist_to_surface(p) <= 1e-12;
}

double Polyhedron::dist_to_surface(const Vec3& p) const {
  double d = std::numeric_limits<double>::max();
  for (const auto& t : triangulated())
    d = std::min(d, point_triangle_dist(p, t[0], t[1], t[2]));
  return d;
}

double Polyhedron::dist_to_solid(const Vec3& p) const {
  if (contains(p)) return 0.0;
  return dist_to_surface(p);
}

std::vector<Vec3> Polyhedron::sample_surface(double pitch) const {
  std::vector<Vec3> out(V.begin(), V.end());
  for (const auto& e : edges) {
    Vec3 a = V[e.a], b = V[e.b];
    int n = std::max(1, (int)std::ceil((b - a).norm() / pitch));
    for (int i = 1; i < n; ++i) out.push_back(a + (b - a) * ((double)i / n));
  }
  for (int f = 0; f < (int)faces.size(); ++f) {
    // In-plane grid clipped to the polygon.
    Vec3 n = normals[f], u = Vec3::UnitX();
    if (std::fabs(n.x()) > 0.9) u = Vec3::UnitY();
    u = (u - u.dot(n) * n).normalized();
    Vec3 v = n.cross(u);
    std::vector<Eigen::Vector2d> poly;
    double ulo = 1e300, uhi = -1e300, vlo = 1e300, vhi = -1e300;
    for (int i : faces[f]) {
      Eigen::Vector2d q((V[i] - centroids[f]).dot(u), (V[i] - centroids[f]).dot(v));
      poly.push_back(q);
      ulo = std::min(ulo, q.x()); uhi = std::max(uhi, q.x());
      vlo = std::min(vlo, q.y()); vhi = std::max(vhi, q.y());
    }
    auto inside = [&](const Eigen::Vector2d& q) {
      bool in = false;
      for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        if ((poly[i].y() > q.y()) != (poly[j].y() > q.y())) {
          double xi = poly[j].x() + (poly[i].x() - poly[j].x()) *
                                        (q.y() - poly[j].y()) /
                                        (poly[i].y() - poly[j].y());
          if (q.x() < xi) in = !in;
        }
      }
      return in;
    };
    for (double a = ulo + 0.5 * pitch; a < uhi; a += pitch)
      for (double b = vlo + 0.5 * pitch; b < vhi; b += pitch)
        if (inside({a, b})) out.push_back(centroids[f] + a * u + b * v);
  }
  return out;
}

std::vector<double> Polyhedron::dihedral_angles() const {
  std::vector<double> out;
  out.reserve(edges.size());
  double eps = 1e-6 * diameter();
  for (const auto& e : edges) {
    Vec3 m = 0.5 * (V[e.a] + V[e.b]);
    Vec3 t = (V[e.b] - V[e.a]).normalized();
    auto into_face = [&](int f) {
      Vec3 w = centroids[f] - m;
      w -= w.dot(t) * t;
      w -= w.dot(normals[f]) * normals[f];
      return w.normalized();
    };
    Vec3 u0 = into_face(e.f0), u1 = into_face(e.f1);
    double ang = std::acos(std::clamp(u0.dot(u1), -1.0, 1.0));
    Vec3 bis = u0 + u1;
    if (bis.norm() < 1e-12) {
      out.push_back(M_PI);
      continue;
    }
    bis.normalize();
    if (!contains(m + eps * bis)) ang = 2.0 * M_PI - ang;
    out.push_back(ang);
  }
  return out;
}

std::vector<double> Polyhedron::face_angles(int f) const {
  const auto& loop = faces[f];
  const Vec3& n = normals[f];
  std::vector<double> out;
  for (size_t i = 0; i < loop.size(); ++i) {
    Vec3 v = V[loop[i]];
    Vec3 a = V[loop[(i + loop.size() - 1) % loop.size()]] - v;
    Vec3 b = V[loop[(i + 1) % loop.size()]] - v;
    double ang = std::atan2(b.cross(a).dot(n), a.dot(b));
    if (ang < 0) ang += 2.0 * M_PI;
    out.push_back(ang);
  }
  return out;
}

Polyhedron Polyhedron::translated(const Vec3& t) const {
  Polyhedron Q = *this;
  for (auto& v : Q.V) v += t;
  for (auto& c : Q.centroids) c += t;
  return Q;
}

Polyhedron Polyhedron::scaled(double s, const Vec3& center) const {
  Polyhedron Q = *this;
  for (auto& v : Q.V) v = center + s * (v - center);
  Q.build(1e300);  // refresh derived data; planarity unchanged by scaling
  return Q;
}

std::string AdmissibilityReport::to_text() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << "  V=" << n_vertices << " E=" << n_edges
     << " F=" << n_faces << "\n";
  for (const auto& c : checks)
    os << "  " << (c.pass ? "ok  " : "FAIL") << " " << c.name
       << "  margin=" << c.margin << "\n";
  return os.str();
}

std::string AdmissibilityReport::to_json() const {
  json j;
  j["pass"] = pass;
  j["vertices"] = n_vertices;
  j["edges"] = n_edges;
  j["faces"] = n_faces;
  j["checks"] = json::array();
  for (const auto& c : checks)
    j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"margin", c.margin}});
  return j.dump(2);
}

static bool angle_ok(double a, double theta0) {
  return (a > theta0 && a < M_PI - theta0) ||
         (a > M_PI + theta0 && a < 2.0 * M_PI - theta0);
}

static double angle_margin(double a, double theta0) {
  double m = std::min(a - theta0, M_PI - theta0 - a);
  double m2 = std::min(a - M_PI - theta0, 2.0 * M_PI - theta0 - a);
  return std::max(m, m2);
}

AdmissibilityReport validate_class_P(const Polyhedron& P, const Box& omega,
                                     const AdmissibilityParams& prm) {
  AdmissibilityReport rep;
  rep.n_vertices = (int)P.V.size();
  rep.n_edges = (int)P.edges.size();
  rep.n_faces = (int)P.faces.size();
  auto add = [&](const std::string& name, bool ok, double margin) {
    rep.checks.push_back({name, ok, margin});
  };

  add("H1 diam(Omega) <= M1 r0", omega.diameter() <= prm.M1 * prm.r0,
      prm.M1 * prm.r0 - omega.diameter());

  double clearance = std::numeric_limits<double>::max();
  for (const auto& v : P.V) {
    if (!omega.contains(v)) { clearance = -1.0; break; }
    clearance = std::min(clearance, omega.dist_to_boundary(v));
  }
  add("H2-1 dist(D, dOmega) >= r0", clearance >= prm.r0, clearance - prm.r0);

  double dihedral_m = std::numeric_limits<double>::max();
  bool dihedral_ok = true;
  for (double a : P.dihedral_angles()) {
    dihedral_ok = dihedral_ok && angle_ok(a, prm.theta0);
    dihedral_m = std::min(dihedral_m, angle_margin(a, prm.theta0));
  }
  add("H2-2 dihedral angles", dihedral_ok, dihedral_m);

  double edge_m = std::numeric_limits<double>::max();
  for (const auto& e : P.edges)
    edge_m = std::min(edge_m, (P.V[e.a] - P.V[e.b]).norm() - prm.r0);
  add("H2-3 edge length >= r0", edge_m >= 0.0, edge_m);

  double face_m = std::numeric_limits<double>::max();
  bool face_ok = true;
  for (int f = 0; f < (int)P.faces.size(); ++f)
    for (double a : P.face_angles(f)) {
      face_ok = face_ok && angle_ok(a, prm.theta0);
      face_m = std::min(face_m, angle_margin(a, prm.theta0));
    }
  add("H2-4 face angles", face_ok, face_m);

  // H2-5 surrogate: local graph slope over the best-fit plane at vertices and
  // edge midpoints, using samples within r0.
  auto samples = P.sample_surface(prm.r0 / 16.0);
  std::vector<Vec3> probes(P.V.begin(), P.V.end());
  for (const auto& e : P.edges) probes.push_back(0.5 * (P.V[e.a] + P.V[e.b]));
  double worst_slope = 0.0;
  for (const auto& p : probes) {
    std::vector<Vec3> local;
    for (const auto& s : samples)
      if ((s - p).norm() <= prm.r0) local.push_back(s);
    if (local.size() < 4) continue;
    Vec3 mean = Vec3::Zero();
    for (const auto& s : local) mean += s;
    mean /= (double)local.size();
    Mat3 cov = Mat3::Zero();
    for (const auto& s : local) cov += (s - mean) * (s - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    Vec3 nu = es.eigenvectors().col(0);  // smallest variance direction
    double h0 = (p - mean).dot(nu);
    for (const auto& s : local) {
      double h = (s - mean).dot(nu) - h0;
      Vec3 d = s - p;
      double rho = std::sqrt(std::max(d.squaredNorm() - std::pow(d.dot(nu), 2), 0.0));
      if (rho > prm.r0 / 32.0)
        worst_slope = std::max(worst_slope, std::fabs(h) / rho);
    }
  }
  add("H2-5 graph slope <= M0 (surrogate)", worst_slope <= prm.M0,
      prm.M0 - worst_slope);

  rep.pass = true;
  for (const auto& c : rep.checks) rep.pass = rep.pass && c.pass;
  return rep;
}

// Maximize f over the boundary of A, where f(x)=dist given by `target`;
// coarse grids per face plus local refinement down to `resolution`.
template <class F>
static double directed_max(const Polyhedron& A, double resolution, F&& f) {
  double best = 0.0;
  for (const auto& v : A.V) best = std::max(best, f(v));
  double diam = A.diameter();
  for (int face = 0; face < (int)A.faces.size(); ++face) {
    Vec3 n = A.normals[face], u = Vec3::UnitX();
    if (std::fabs(n.x()) > 0.9) u = Vec3::UnitY();
    u = (u - u.dot(n) * n).normalized();
    Vec3 v = n.cross(u);
    std::vector<Eigen::Vector2d> poly;
    double ulo = 1e300, uhi = -1e300, vlo = 1e300, vhi = -1e300;
    for (int i : A.faces[face]) {
      Eigen::Vector2d q((A.V[i] - A.centroids[face]).dot(u),
                        (A.V[i] - A.centroids[face]).dot(v));
      poly.push_back(q);
      ulo = std::min(ulo, q.x()); uhi = std::max(uhi, q.x());
      vlo = std::min(vlo, q.y()); vhi = std::max(vhi, q.y());
    }
    auto clamp_inside = [&](Eigen::Vector2d q) {
      // project onto the polygon if outside (walk all edges)
      bool in = false;
      for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        if ((poly[i].y() > q.y()) != (poly[j].y() > q.y())) {
          double xi = poly[j].x() + (poly[i].x() - poly[j].x()) *
                                        (q.y() - poly[j].y()) /
                                        (poly[i].y() - poly[j].y());
          if (q.x() < xi) in = !in;
        }
      }
      if (in) return q;
      double bd = 1e300;
      Eigen::Vector2d bq = q;
      for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        Eigen::Vector2d a = poly[j], b = poly[i], d = b - a;
        double t = std::clamp((q - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
        Eigen::Vector2d c = a + t * d;
        if ((q - c).norm() < bd) { bd = (q - c).norm(); bq = c; }
      }
      return bq;
    };
    auto eval2 = [&](const Eigen::Vector2d& q) {
      return f(A.centroids[face] + q.x() * u + q.y() * v);
    };
    double pitch = std::max(resolution, diam / 48.0);
    Eigen::Vector2d bq(0, 0);
    double bloc = -1.0;
    for (double a = ulo; a <= uhi + 0.5 * pitch; a += pitch)
      for (double b = vlo; b <= vhi + 0.5 * pitch; b += pitch) {
        Eigen::Vector2d q = clamp_inside({a, b});
        double val = eval2(q);
        if (val > bloc) { bloc = val; bq = q; }
      }
    while (pitch > resolution) {
      double np = pitch / 4.0;
      Eigen::Vector2d center = bq;
      for (int i = -4; i <= 4; ++i)
        for (int j = -4; j <= 4; ++j) {
          Eigen::Vector2d q = clamp_inside(center + Eigen::Vector2d(i * np, j * np));
          double val = eval2(q);
          if (val > bloc) { bloc = val; bq = q; }
        }
      pitch = np;
    }
    best = std::max(best, bloc);
  }
  return best;
}

double hausdorff_boundary(const Polyhedron& P0, const Polyhedron& P1,
                          double resolution) {
  double a = directed_max(P0, resolution,
                          [&](const Vec3& x) { return P1.dist_to_surface(x); });
  double b = directed_max(P1, resolution,
                          [&](const Vec3& x) { return P0.dist_to_surface(x); });
  return std::max(a, b);
}

double hausdorff_solid(const Polyhedron& P0, const Polyhedron& P1,
                       double resolution) {
  double a = directed_max(P0, resolution,
                          [&](const Vec3& x) { return P1.dist_to_solid(x); });
  double b = directed_max(P1, resolution,
                          [&](const Vec3& x) { return P0.dist_to_solid(x); });
  return std::max(a, b);
}

double modified_distance(const Polyhedron& P0, const Polyhedron& P1,
                         const Box& omega, double voxel, double resolution) {
  Vec3 ext = omega.hi - omega.lo;
  int nx = std::max(2, (int)std::ceil(ext.x() / voxel));
  int ny = std::max(2, (int)std::ceil(ext.y() / voxel));
  int nz = std::max(2, (int)std::ceil(ext.z() / voxel));
  auto center = [&](int i, int j, int k) {
    return Vec3(omega.lo.x() + (i + 0.5) * ext.x() / nx,
                omega.lo.y() + (j + 0.5) * ext.y() / ny,
                omega.lo.z() + (k + 0.5) * ext.z() / nz);
  };
  auto id = [&](int i, int j, int k) { return (i * ny + j) * nz + k; };
  std::vector<uint8_t> free_cell(nx * ny * nz, 0), reached(nx * ny * nz, 0);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        Vec3 c = center(i, j, k);
        free_cell[id(i, j, k)] = !P0.contains(c) && !P1.contains(c);
      }
  std::queue<std::array<int, 3>> q;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k)
        if ((i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 ||
             k == nz - 1) &&
            free_cell[id(i, j, k)] && !reached[id(i, j, k)]) {
          reached[id(i, j, k)] = 1;
          q.push({i, j, k});
        }
  const int d6[6][3] = {{1,0,0},{-1,0,0},{0,1,0},{0,-1,0},{0,0,1},{0,0,-1}};
  while (!q.empty()) {
    auto [i, j, k] = q.front();
    q.pop();
    for (auto& d : d6) {
      int a = i + d[0], b = j + d[1], c = k + d[2];
      if (a < 0 || b < 0 || c < 0 || a >= nx || b >= ny || c >= nz) continue;
      if (free_cell[id(a, b, c)] && !reached[id(a, b, c)]) {
        reached[id(a, b, c)] = 1;
        q.push({a, b, c});
      }
    }
  }
  auto near_G = [&](const Vec3& x) {
    int i0 = (int)std::floor((x.x() - omega.lo.x()) / (ext.x() / nx));
    int j0 = (int)std::floor((x.y() - omega.lo.y()) / (ext.y() / ny));
    int k0 = (int)std::floor((x.z() - omega.lo.z()) / (ext.z() / nz));
    for (int i = i0 - 2; i <= i0 + 2; ++i)
      for (int j = j0 - 2; j <= j0 + 2; ++j)
        for (int k = k0 - 2; k <= k0 + 2; ++k) {
          if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) continue;
          if (reached[id(i, j, k)] && (center(i, j, k) - x).norm() <= 2.0 * voxel)
            return true;
        }
    return false;
  };
  double best = 0.0;
  for (const auto& x : P0.sample_surface(resolution))
    if (near_G(x)) best = std::max(best, P1.dist_to_surface(x));
  for (const auto& x : P1.sample_surface(resolution))
    if (near_G(x)) best = std::max(best, P0.dist_to_surface(x));
  return best;
}

VertexPairing match_vertices(const Polyhedron& P0, const Polyhedron& P1,
                             double d_H, double delta0, double C4, double r0) {
  if (P0.V.size() != P1.V.size())
    throw std::runtime_error("match_vertices: vertex counts differ");
  if (d_H > delta0 * r0)
    throw std::runtime_error("match_vertices: d_H beyond the delta0 regime");
  VertexPairing out;
  out.map01.assign(P0.V.size(), -1);
  std::vector<int> used(P1.V.size(), 0);
  double amb = std::max(d_H, 1e-14 * std::max(P0.diameter(), 1.0));
  for (size_t i = 0; i < P0.V.size(); ++i) {
    double b1 = 1e300, b2 = 1e300;
    int arg = -1;
    for (size_t j = 0; j < P1.V.size(); ++j) {
      double d = (P0.V[i] - P1.V[j]).norm();
      if (d < b1) { b2 = b1; b1 = d; arg = (int)j; }
      else if (d < b2) b2 = d;
    }
    if (d_H > 0.0 && b2 <= amb)
      throw std::runtime_error("match_vertices: ambiguous pairing");
    if (b1 > C4 * d_H + 1e-14)
      throw std::runtime_error("match_vertices: displacement exceeds C4 d_H");
    if (used[arg]) throw std::runtime_error("match_vertices: not a bijection");
    used[arg] = 1;
    out.map01[i] = arg;
    out.max_displacement = std::max(out.max_displacement, b1);
  }
  return out;
}

std::vector<FlapTriangle> flap_triangles(const Polyhedron& P,
                                         const AdmissibilityParams& prm) {
  double h0 = prm.flap_h0();
  std::vector<FlapTriangle> out;
  for (int e = 0; e < (int)P.edges.size(); ++e) {
    for (int face : {P.edges[e].f0, P.edges[e].f1}) {
      FlapTriangle t;
      t.face = face;
      t.edge = e;
      // Base endpoints in the face's winding order.
      const auto& loop = P.faces[face];
      int a = P.edges[e].a, b = P.edges[e].b;
      for (size_t i = 0; i < loop.size(); ++i) {
        int p = loop[i], q = loop[(i + 1) % loop.size()];
        if ((p == a && q == b) || (p == b && q == a)) { a = p; b = q; break; }
      }
      t.A = P.V[a];
      t.B = P.V[b];
      Vec3 tangent = (t.B - t.A).normalized();
      t.inward = P.normals[face].cross(tangent).normalized();
      t.E = 0.5 * (t.A + t.B) + h0 * t.inward;
      out.push_back(t);
    }
  }
  // Containment: apex inside the face (distance to plane is zero by
  // construction; test the in-plane polygon).
  for (const auto& t : out) {
    Vec3 n = P.normals[t.face], u = Vec3::UnitX();
    if (std::fabs(n.x()) > 0.9) u = Vec3::UnitY();
    u = (u - u.dot(n) * n).normalized();
    Vec3 v = n.cross(u);
    std::vector<Eigen::Vector2d> poly;
    for (int i : P.faces[t.face])
      poly.emplace_back((P.V[i] - P.centroids[t.face]).dot(u),
                        (P.V[i] - P.centroids[t.face]).dot(v));
    Eigen::Vector2d q((t.E - P.centroids[t.face]).dot(u),
                      (t.E - P.centroids[t.face]).dot(v));
    bool in = false;
    for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
      if ((poly[i].y() > q.y()) != (poly[j].y() > q.y())) {
        double xi = poly[j].x() + (poly[i].x() - poly[j].x()) *
                                      (q.y() - poly[j].y()) /
                                      (poly[i].y() - poly[j].y());
        if (q.x() < xi) in = !in;
      }
    if (!in)
      throw std::runtime_error("flap_triangles: apex escapes its face");
  }
  // Separation for flaps whose bases share no vertex.
  double sep = prm.r0 * std::cos(std::atan(prm.M0));
  for (size_t i = 0; i < out.size(); ++i)
    for (size_t j = i + 1; j < out.size(); ++j) {
      const auto& s = out[i];
      const auto& t = out[j];
      const auto& es = P.edges[s.edge];
      const auto& et = P.edges[t.edge];
      bool share = es.a == et.a || es.a == et.b || es.b == et.a || es.b == et.b;
      if (share) continue;
      double d = triangle_triangle_dist({s.A, s.B, s.E}, {t.A, t.B, t.E});
      if (d < sep - 1e-12)
        throw std::runtime_error("flap_triangles: separation bound violated");
    }
  return out;
}

Vec3 decompose_normal(const Vec3& nbar, const Vec3& n1, const Vec3& n2,
                      const Vec3& n3) {
  Mat3 N;
  N.col(0) = n1;
  N.col(1) = n2;
  N.col(2) = n3;
  Eigen::JacobiSVD<Mat3> svd(N, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(2) < 1e-10 * svd.singularValues()(0))
    throw std::runtime_error("decompose_normal: near-singular normal triple");
  return svd.solve(nbar);
}

double angle_line_plane(const Vec3& dir, const Vec3& plane_normal) {
  double s = std::fabs(dir.normalized().dot(plane_normal.normalized()));
  return std::asin(std::clamp(s, 0.0, 1.0));
}

double point_triangle_dist(const Vec3& p, const Vec3& a, const Vec3& b,
                           const Vec3& c) {
  // Ericson, closest point on triangle.
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return ap.norm();
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return bp.norm();
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0)
    return (p - (a + (d1 / (d1 - d3)) * ab)).norm();
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return cp.norm();
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0)
    return (p - (a + (d2 / (d2 - d6)) * ac)).norm();
  double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return (p - (b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b))).norm();
  double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

static double seg_seg_dist(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                           const Vec3& q2) {
  Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s, t;
  if (a <= 1e-30 && e <= 1e-30) return r.norm();
  if (a <= 1e-30) { s = 0; t = std::clamp(f / e, 0.0, 1.0); }
  else {
    double c = d1.dot(r);
    if (e <= 1e-30) { t = 0; s = std::clamp(-c / a, 0.0, 1.0); }
    else {
      double b = d1.dot(d2), denom = a * e - b * b;
      s = denom > 1e-30 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) { t = 0; s = std::clamp(-c / a, 0.0, 1.0); }
      else if (t > 1) { t = 1; s = std::clamp((b - c) / a, 0.0, 1.0); }
    }
  }
  return ((p1 + s * d1) - (p2 + t * d2)).norm();
}

double triangle_triangle_dist(const std::array<Vec3, 3>& t0,
                              const std::array<Vec3, 3>& t1) {
  double d = 1e300;
  for (int i = 0; i < 3; ++i) {
    d = std::min(d, point_triangle_dist(t0[i], t1[0], t1[1], t1[2]));
    d = std::min(d, point_triangle_dist(t1[i], t0[0], t0[1], t0[2]));
    for (int j = 0; j < 3; ++j)
      d = std::min(d, seg_seg_dist(t0[i], t0[(i + 1) % 3], t1[j], t1[(j + 1) % 3]));
  }
  return d;
}

Polyhedron make_cube(const Vec3& c, double side) {
  double h = 0.5 * side;
  Polyhedron P;
  P.V = {c + Vec3(-h, -h, -h), c + Vec3(h, -h, -h), c + Vec3(h, h, -h),
         c + Vec3(-h, h, -h), c + Vec3(-h, -h, h), c + Vec3(h, -h, h),
         c + Vec3(h, h, h), c + Vec3(-h, h, h)};
  P.faces = {{0, 3, 2, 1},   // z = -h
             {4, 5, 6, 7},   // z = +h
             {0, 1, 5, 4},   // y = -h
             {2, 3, 7, 6},   // y = +h
             {1, 2, 6, 5},   // x = +h
             {0, 4, 7, 3}};  // x = -h
  P.build();
  return P;
}

Polyhedron make_tetrahedron(const Vec3& c, double R) {
  Polyhedron P;
  double s = R / std::sqrt(3.0);
  P.V = {c + s * Vec3(1, 1, 1), c + s * Vec3(1, -1, -1), c + s * Vec3(-1, 1, -1),
         c + s * Vec3(-1, -1, 1)};
  P.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  P.build();
  return P;
}

}  // namespace elastlab
