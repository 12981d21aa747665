#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "elastlab/forward.hpp"

namespace elastlab {

namespace {

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

struct NodeDedup {
  std::map<std::array<long long, 3>, int> seen;
  std::vector<Vec3>& X;
  double q;
  explicit NodeDedup(std::vector<Vec3>& nodes, double quantum)
      : X(nodes), q(quantum) {}
  int add(const Vec3& p) {
    std::array<long long, 3> key = {(long long)std::llround(p.x() / q),
                                    (long long)std::llround(p.y() / q),
                                    (long long)std::llround(p.z() / q)};
    auto it = seen.find(key);
    if (it != seen.end()) return it->second;
    int id = (int)X.size();
    X.push_back(p);
    seen[key] = id;
    return id;
  }
};

// Split the prism (a0,a1,a2 | b0,b1,b2) with vertical edges ai-bi into three
// tets; the minimum-global-index diagonal rule keeps quad faces conforming
// across neighbouring prisms.
void split_prism(std::array<int, 6> p, std::vector<std::array<int, 4>>& out) {
  int mpos = 0;
  for (int i = 1; i < 6; ++i)
    if (p[i] < p[mpos]) mpos = i;
  if (mpos >= 3) {
    // view the prism upside down (winding reversed to stay consistent)
    p = {p[3], p[5], p[4], p[0], p[2], p[1]};
    mpos = (mpos == 3) ? 0 : (mpos == 4 ? 2 : 1);
  }
  for (int r = 0; r < mpos; ++r) p = {p[1], p[2], p[0], p[4], p[5], p[3]};
  if (std::min(p[1], p[5]) < std::min(p[2], p[4])) {
    out.push_back({p[0], p[1], p[2], p[5]});
    out.push_back({p[0], p[1], p[5], p[4]});
    out.push_back({p[0], p[4], p[5], p[3]});
  } else {
    out.push_back({p[0], p[1], p[2], p[4]});
    out.push_back({p[0], p[4], p[2], p[5]});
    out.push_back({p[0], p[4], p[5], p[3]});
  }
}

int box_face_of(const Box& box, const Vec3& p, double tol) {
  if (std::fabs(p.x() - box.lo.x()) < tol) return 0;
  if (std::fabs(p.x() - box.hi.x()) < tol) return 1;
  if (std::fabs(p.y() - box.lo.y()) < tol) return 2;
  if (std::fabs(p.y() - box.hi.y()) < tol) return 3;
  if (std::fabs(p.z() - box.lo.z()) < tol) return 4;
  if (std::fabs(p.z() - box.hi.z()) < tol) return 5;
  return -1;
}

}  // namespace

double Mesh::volume(int t) const {
  const auto& T = tets[t];
  return tet_volume(X[T[0]], X[T[1]], X[T[2]], X[T[3]]);
}

double Mesh::min_dihedral() const {
  double best = 1e300;
  static const int e0[6] = {0, 0, 0, 1, 1, 2};
  static const int e1[6] = {1, 2, 3, 2, 3, 3};
  for (const auto& T : tets) {
    // dihedral at edge (i,j) between the two faces not containing it
    for (int e = 0; e < 6; ++e) {
      int i = T[e0[e]], j = T[e1[e]];
      int k = -1, l = -1;
      for (int m = 0; m < 4; ++m)
        if (T[m] != i && T[m] != j) (k < 0 ? k : l) = T[m];
      Vec3 d = (X[j] - X[i]).normalized();
      Vec3 u = X[k] - X[i];
      u -= u.dot(d) * d;
      Vec3 v = X[l] - X[i];
      v -= v.dot(d) * d;
      double ang = std::acos(std::clamp(
          u.normalized().dot(v.normalized()), -1.0, 1.0));
      best = std::min(best, ang);
    }
  }
  return best;
}

std::vector<int> Mesh::boundary_nodes() const {
  std::vector<char> on(X.size(), 0);
  for (const auto& f : boundary)
    for (int v : f.v) on[v] = 1;
  std::vector<int> out;
  for (size_t i = 0; i < X.size(); ++i)
    if (on[i]) out.push_back((int)i);
  return out;
}

std::vector<int> Mesh::face_interior_nodes(int boxface) const {
  double tol = 1e-9 * omega.diameter();
  std::vector<char> on(X.size(), 0), off(X.size(), 0);
  for (const auto& f : boundary)
    for (int v : f.v)
      (f.tag == boxface ? on[v] : off[v]) = 1;
  // also exclude nodes on the rim of the box face itself
  std::vector<int> out;
  for (size_t i = 0; i < X.size(); ++i) {
    if (!on[i] || off[i]) continue;
    int axis = boxface / 2;
    int cnt = 0;
    for (int a = 0; a < 3; ++a) {
      if (a == axis) continue;
      if (std::fabs(X[i][a] - omega.lo[a]) < tol ||
          std::fabs(X[i][a] - omega.hi[a]) < tol)
        ++cnt;
    }
    if (cnt == 0) out.push_back((int)i);
  }
  return out;
}

void Mesh::check() const {
  for (size_t t = 0; t < tets.size(); ++t)
    if (volume((int)t) <= 0.0)
      throw std::runtime_error("mesh: inverted or degenerate tet " +
                               std::to_string(t));
  // Facet incidence: every interior facet shared by exactly two tets.
  std::map<std::array<int, 3>, int> count;
  auto key = [](int a, int b, int c) {
    std::array<int, 3> k = {a, b, c};
    std::sort(k.begin(), k.end());
    return k;
  };
  for (const auto& T : tets) {
    count[key(T[0], T[1], T[2])]++;
    count[key(T[0], T[1], T[3])]++;
    count[key(T[0], T[2], T[3])]++;
    count[key(T[1], T[2], T[3])]++;
  }
  size_t n_open = 0;
  for (const auto& kv : count) {
    if (kv.second > 2) throw std::runtime_error("mesh: non-manifold facet");
    if (kv.second == 1) ++n_open;
  }
  if (n_open != boundary.size())
    throw std::runtime_error("mesh: boundary facet bookkeeping broken");
  for (const auto& f : boundary)
    if (count[key(f.v[0], f.v[1], f.v[2])] != 1)
      throw std::runtime_error("mesh: listed boundary facet is interior");
  for (const auto& f : interface)
    if (count[key(f.v[0], f.v[1], f.v[2])] != 2)
      throw std::runtime_error("mesh: interface facet not conforming");
}

void Mesh::retag(const Polyhedron& P) {
  for (size_t t = 0; t < tets.size(); ++t) {
    Vec3 c = 0.25 * (X[tets[t][0]] + X[tets[t][1]] + X[tets[t][2]] +
                     X[tets[t][3]]);
    region[t] = P.contains(c) ? 1 : 0;
  }
}

Mesh Mesh::moved(const std::vector<Vec3>& displacement) const {
  Mesh m = *this;
  for (size_t i = 0; i < X.size(); ++i) m.X[i] += displacement[i];
  for (size_t t = 0; t < tets.size(); ++t)
    if (m.volume((int)t) <= 0.0)
      throw std::runtime_error("mesh: displacement inverts tet " +
                               std::to_string(t));
  return m;
}

Mesh mesh_inclusion(const Box& omega, const Polyhedron& P, double h) {
  // Convexity: every vertex on or behind every face plane.
  for (size_t f = 0; f < P.faces.size(); ++f)
    for (const auto& v : P.V)
      if ((v - P.centroids[f]).dot(P.normals[f]) > 1e-9 * P.diameter())
        throw std::runtime_error("mesh_inclusion: inclusion is not convex");
  for (const auto& v : P.V)
    if (!omega.contains(v))
      throw std::runtime_error("mesh_inclusion: inclusion not inside the box");

  Vec3 C = P.barycenter();
  // Subdivided surface triangulation (centroid fan per face, uniform k).
  int k = 1;
  std::vector<std::array<Vec3, 3>> base;
  for (size_t f = 0; f < P.faces.size(); ++f) {
    const auto& loop = P.faces[f];
    Vec3 fc = P.centroids[f];
    for (size_t i = 0; i < loop.size(); ++i) {
      std::array<Vec3, 3> tri = {fc, P.V[loop[i]],
                                 P.V[loop[(i + 1) % loop.size()]]};
      base.push_back(tri);
      for (int e = 0; e < 3; ++e)
        k = std::max(k, (int)std::ceil((tri[e] - tri[(e + 1) % 3]).norm() / h));
    }
  }
  Mesh mesh;
  mesh.omega = omega;
  mesh.h = h;
  double quantum = 1e-9 * omega.diameter();
  NodeDedup dedup(mesh.X, quantum);

  // Surface nodes and triangles of the subdivided inclusion boundary.
  std::vector<Vec3> spos;
  std::map<std::array<long long, 3>, int> sid;
  auto surf_id = [&](const Vec3& p) {
    std::array<long long, 3> key = {(long long)std::llround(p.x() / quantum),
                                    (long long)std::llround(p.y() / quantum),
                                    (long long)std::llround(p.z() / quantum)};
    auto it = sid.find(key);
    if (it != sid.end()) return it->second;
    int id = (int)spos.size();
    spos.push_back(p);
    sid[key] = id;
    return id;
  };
  std::vector<std::array<int, 3>> stri;
  for (const auto& tri : base) {
    for (int i = 0; i < k; ++i)
      for (int j = 0; j + i < k; ++j) {
        auto at = [&](int a, int b) {
          return tri[0] + (tri[1] - tri[0]) * ((double)a / k) +
                 (tri[2] - tri[0]) * ((double)b / k);
        };
        stri.push_back(
            {surf_id(at(i, j)), surf_id(at(i + 1, j)), surf_id(at(i, j + 1))});
        if (j + i < k - 1)
          stri.push_back({surf_id(at(i + 1, j)), surf_id(at(i + 1, j + 1)),
                          surf_id(at(i, j + 1))});
      }
  }

  // Radial exit points on the box boundary and layer counts.
  int ns = (int)spos.size();
  std::vector<Vec3> exitp(ns);
  double max_out = 0.0, max_in = 0.0;
  for (int i = 0; i < ns; ++i) {
    Vec3 d = spos[i] - C;
    double s_exit = 1e300;
    for (int a = 0; a < 3; ++a) {
      if (d[a] > 1e-14) s_exit = std::min(s_exit, (omega.hi[a] - C[a]) / d[a]);
      if (d[a] < -1e-14) s_exit = std::min(s_exit, (omega.lo[a] - C[a]) / d[a]);
    }
    if (s_exit <= 1.0)
      throw std::runtime_error("mesh_inclusion: no clearance to the box");
    exitp[i] = C + s_exit * d;
    max_out = std::max(max_out, (exitp[i] - spos[i]).norm());
    max_in = std::max(max_in, d.norm());
  }
  int n_out = std::max(1, (int)std::ceil(max_out / h));
  int n_in = std::max(1, (int)std::ceil(max_in / h));

  // Global node table: shell m = 1..n_in inside, layers l = 1..n_out outside.
  int center = dedup.add(C);
  std::vector<std::vector<int>> shell(n_in + n_out + 1,
                                      std::vector<int>(ns, -1));
  for (int i = 0; i < ns; ++i) {
    for (int m = 1; m <= n_in; ++m)
      shell[m][i] = dedup.add(C + ((double)m / n_in) * (spos[i] - C));
    for (int l = 1; l <= n_out; ++l)
      shell[n_in + l][i] =
          dedup.add(spos[i] + ((double)l / n_out) * (exitp[i] - spos[i]));
  }

  auto push_tets = [&](std::vector<std::array<int, 4>>& tmp, int tag) {
    for (auto& T : tmp) {
      if (tet_volume(mesh.X[T[0]], mesh.X[T[1]], mesh.X[T[2]], mesh.X[T[3]]) <
          0.0)
        std::swap(T[2], T[3]);
      if (tet_volume(mesh.X[T[0]], mesh.X[T[1]], mesh.X[T[2]], mesh.X[T[3]]) <=
          0.0)
        throw std::runtime_error("mesh_inclusion: degenerate layer cell");
      mesh.tets.push_back(T);
      mesh.region.push_back(tag);
    }
    tmp.clear();
  };
  std::vector<std::array<int, 4>> tmp;
  for (const auto& t : stri) {
    // innermost fan onto the centroid
    tmp.push_back({center, shell[1][t[0]], shell[1][t[1]], shell[1][t[2]]});
    push_tets(tmp, 1);
    for (int m = 1; m < n_in + n_out; ++m) {
      split_prism({shell[m][t[0]], shell[m][t[1]], shell[m][t[2]],
                   shell[m + 1][t[0]], shell[m + 1][t[1]], shell[m + 1][t[2]]},
                  tmp);
      push_tets(tmp, m < n_in ? 1 : 0);
    }
  }

  double tol = 1e-7 * omega.diameter();
  for (const auto& t : stri) {
    Mesh::Facet fi;
    fi.v = {shell[n_in][t[0]], shell[n_in][t[1]], shell[n_in][t[2]]};
    fi.tag = -1;
    mesh.interface.push_back(fi);
    Mesh::Facet fb;
    fb.v = {shell[n_in + n_out][t[0]], shell[n_in + n_out][t[1]],
            shell[n_in + n_out][t[2]]};
    int f0 = box_face_of(omega, mesh.X[fb.v[0]], tol);
    int f1 = box_face_of(omega, mesh.X[fb.v[1]], tol);
    int f2 = box_face_of(omega, mesh.X[fb.v[2]], tol);
    // Facet tag = the box face containing the whole triangle; straddling
    // triangles at box edges stay untagged (chamfer strip).
    Vec3 cen =
        (mesh.X[fb.v[0]] + mesh.X[fb.v[1]] + mesh.X[fb.v[2]]) / 3.0;
    int fc = box_face_of(omega, cen, tol);
    fb.tag = (f0 == f1 && f1 == f2 && f0 == fc) ? f0 : -1;
    mesh.boundary.push_back(fb);
  }
  mesh.check();
  return mesh;
}

std::string Mesh::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << X.size() << "\n";
  for (const auto& p : X) os << p.x() << " " << p.y() << " " << p.z() << "\n";
  os << tets.size() << "\n";
  for (size_t t = 0; t < tets.size(); ++t)
    os << tets[t][0] << " " << tets[t][1] << " " << tets[t][2] << " "
       << tets[t][3] << " " << region[t] << "\n";
  auto facets = [&](const std::vector<Facet>& fs) {
    os << fs.size() << "\n";
    for (const auto& f : fs)
      os << f.v[0] << " " << f.v[1] << " " << f.v[2] << " " << f.tag << "\n";
  };
  facets(boundary);
  facets(interface);
  os << omega.lo.transpose() << " " << omega.hi.transpose() << " " << h
     << "\n";
  return os.str();
}

Mesh Mesh::from_text(const std::string& text) {
  std::istringstream is(text);
  Mesh m;
  size_t n;
  is >> n;
  m.X.resize(n);
  for (auto& p : m.X) is >> p.x() >> p.y() >> p.z();
  is >> n;
  m.tets.resize(n);
  m.region.resize(n);
  for (size_t t = 0; t < n; ++t)
    is >> m.tets[t][0] >> m.tets[t][1] >> m.tets[t][2] >> m.tets[t][3] >>
        m.region[t];
  auto facets = [&](std::vector<Facet>& fs) {
    size_t c;
    is >> c;
    fs.resize(c);
    for (auto& f : fs) is >> f.v[0] >> f.v[1] >> f.v[2] >> f.tag;
  };
  facets(m.boundary);
  facets(m.interface);
  is >> m.omega.lo.x() >> m.omega.lo.y() >> m.omega.lo.z() >>
      m.omega.hi.x() >> m.omega.hi.y() >> m.omega.hi.z() >> m.h;
  if (!is) throw std::runtime_error("mesh: malformed text");
  return m;
}

}  // namespace elastlab
