#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "elastlab/greens.hpp"

namespace elastlab {

namespace {

// sinh-graded axis: u in [-1,1] uniform -> R sinh(s u)/sinh(s)
std::vector<double> graded_axis(double R, int n, double s) {
  std::vector<double> x(n + 1);
  for (int k = 0; k <= n; ++k) {
    double u = -1.0 + 2.0 * k / n;
    x[k] = s > 1e-12 ? R * std::sinh(s * u) / std::sinh(s) : R * u;
  }
  x[n / 2] = 0.0;  // interface plane exactly on the grid
  return x;
}

// grading strength giving the requested spacing at the center
double grading_for(double center_h, double R, int n) {
  double target = center_h * (n / 2.0) / R;  // s/sinh(s)
  if (target >= 1.0) return 0.0;
  double lo = 1e-6, hi = 20.0;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    (mid / std::sinh(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct Grid {
  int n;
  std::vector<double> coord;
  int node(int i, int j, int k) const {
    return i + (n + 1) * (j + (n + 1) * k);
  }
};

// Kuhn subdivision: 6 tets per cube, consistent across neighbours.
const int kuhn_perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                             {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

Mesh structured_mesh(const Grid& g) {
  Mesh m;
  int n = g.n;
  m.X.reserve((n + 1) * (n + 1) * (n + 1));
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        m.X.push_back(Vec3(g.coord[i], g.coord[j], g.coord[k]));
  // note: node id layout must match Grid::node -> i fastest
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        int base[3] = {i, j, k};
        for (const auto& p : kuhn_perm) {
          int c[3] = {base[0], base[1], base[2]};
          std::array<int, 4> T;
          T[0] = g.node(c[0], c[1], c[2]);
          c[p[0]]++;
          T[1] = g.node(c[0], c[1], c[2]);
          c[p[1]]++;
          T[2] = g.node(c[0], c[1], c[2]);
          c[p[2]]++;
          T[3] = g.node(c[0], c[1], c[2]);
          Vec3 a = m.X[T[0]];
          if ((m.X[T[1]] - a).cross(m.X[T[2]] - a).dot(m.X[T[3]] - a) < 0)
            std::swap(T[2], T[3]);
          m.tets.push_back(T);
        }
      }
  m.region.assign(m.tets.size(), 0);
  for (size_t t = 0; t < m.tets.size(); ++t) {
    Vec3 c = (m.X[m.tets[t][0]] + m.X[m.tets[t][1]] + m.X[m.tets[t][2]] +
              m.X[m.tets[t][3]]) /
             4.0;
    m.region[t] = c.z() < 0.0 ? 1 : 0;
  }
  // boundary facets = tet faces appearing exactly once
  std::map<std::array<int, 3>, std::array<int, 3>> once;
  static const int F[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  for (const auto& T : m.tets)
    for (const auto& f : F) {
      std::array<int, 3> tri = {T[f[0]], T[f[1]], T[f[2]]};
      std::array<int, 3> key = tri;
      std::sort(key.begin(), key.end());
      auto it = once.find(key);
      if (it == once.end())
        once.emplace(key, tri);
      else
        once.erase(it);
    }
  for (const auto& [key, tri] : once) {
    Mesh::Facet fc;
    fc.v = tri;
    fc.tag = -1;
    m.boundary.push_back(fc);
  }
  m.omega.lo = Vec3(g.coord.front(), g.coord.front(), g.coord.front());
  m.omega.hi = Vec3(g.coord.back(), g.coord.back(), g.coord.back());
  m.h = g.coord[g.n / 2 + 1] - g.coord[g.n / 2];
  return m;
}

std::array<Vec3, 4> tet_grads(const Mesh& m, int t) {
  const auto& T = m.tets[t];
  Mat3 J;
  for (int k = 0; k < 3; ++k) J.col(k) = m.X[T[k + 1]] - m.X[T[0]];
  Mat3 Ji = J.inverse();
  std::array<Vec3, 4> g;
  g[1] = Ji.row(0);
  g[2] = Ji.row(1);
  g[3] = Ji.row(2);
  g[0] = -(g[1] + g[2] + g[3]);
  return g;
}

// 4-point degree-2 tet rule in barycentric coordinates
const double qa = 0.5854101966249685, qb = 0.1381966011250105;
const double qbary[4][4] = {{qa, qb, qb, qb},
                            {qb, qa, qb, qb},
                            {qb, qb, qa, qb},
                            {qb, qb, qb, qa}};

std::mutex cache_mutex;
std::map<std::string, std::unique_ptr<HalfspaceKernel>> cache;

std::string cache_key(const IsotropicElastic& top, const IsotropicElastic& bot,
                      double offset, double R, int n, double grading) {
  std::ostringstream os;
  os.precision(12);
  os << top.lambda << "," << top.mu << "," << bot.lambda << "," << bot.mu
     << "," << offset << "," << R << "," << n << "," << grading;
  return os.str();
}

std::unique_ptr<HalfspaceKernel> solve_kernel(const IsotropicElastic& top,
                                              const IsotropicElastic& bot,
                                              double offset, double R, int n,
                                              double grading) {
  if (n % 2) throw std::runtime_error("halfspace: n must be even");
  auto hk = std::make_unique<HalfspaceKernel>();
  hk->top = top;
  hk->bottom = bot;
  hk->offset = offset;
  hk->R = R;
  hk->n = n;
  hk->grading = grading;

  Grid g{n, graded_axis(R, n, grading)};
  hk->coord = g.coord;
  Mesh mesh = structured_mesh(g);

  BiphaseMaterial bm;
  bm.exterior = top;     // region 0: z > 0
  bm.interior = bot;     // region 1: z < 0
  DirichletSolver solver(mesh, bm);

  Vec3 pole(0, 0, offset);
  IsotropicElastic diff{bot.lambda - top.lambda, bot.mu - top.mu};

  // per-load boundary data and volume source
  for (int j = 0; j < 3; ++j) {
    std::vector<Vec3> bvals(solver.bnodes.size());
    for (size_t k = 0; k < bvals.size(); ++k) {
      KelvinEval ke = kelvin(mesh.X[solver.bnodes[k]], pole, top);
      bvals[k] = -ke.gamma.col(j);
    }
    Eigen::VectorXd load = Eigen::VectorXd::Zero(3 * mesh.n_nodes());
    for (size_t t = 0; t < mesh.tets.size(); ++t) {
      if (!mesh.region[t]) continue;  // source only where the tensor differs
      auto grads = tet_grads(mesh, (int)t);
      double vol = mesh.volume((int)t);
      const auto& T = mesh.tets[t];
      for (const auto& q : qbary) {
        Vec3 x = Vec3::Zero();
        for (int a = 0; a < 4; ++a) x += q[a] * mesh.X[T[a]];
        KelvinEval ke = kelvin(x, pole, top);
        Mat3 GK;
        for (int k = 0; k < 3; ++k) GK.col(k) = ke.grad[k].col(j);
        // GK(i,k) = d (Gamma e_j)_i / d x_k
        Mat3 S = diff.apply(GK);
        for (int a = 0; a < 4; ++a)
          load.segment<3>(3 * T[a]) -= 0.25 * vol * (S * grads[a]);
      }
    }
    DiscreteField c = solver.solve(bvals, load);
    hk->c.push_back(c.u);

    // volume-weighted nodal gradient recovery, one-sided per half-space:
    // the correction gradient jumps across z = 0 and mixing the two sides
    // at interface nodes would smear an O(1) jump over a cell layer.
    Eigen::MatrixXd rec[2] = {Eigen::MatrixXd::Zero(9, mesh.n_nodes()),
                              Eigen::MatrixXd::Zero(9, mesh.n_nodes())};
    Eigen::VectorXd wsum[2] = {Eigen::VectorXd::Zero(mesh.n_nodes()),
                               Eigen::VectorXd::Zero(mesh.n_nodes())};
    for (size_t t = 0; t < mesh.tets.size(); ++t) {
      int side = mesh.region[t];  // 0 top (z > 0), 1 bottom
      auto grads = tet_grads(mesh, (int)t);
      Mat3 G = Mat3::Zero();
      for (int a = 0; a < 4; ++a)
        G += c.u.segment<3>(3 * mesh.tets[t][a]) * grads[a].transpose();
      double vol = mesh.volume((int)t);
      for (int a = 0; a < 4; ++a) {
        rec[side].col(mesh.tets[t][a]) +=
            vol * Eigen::Map<Eigen::VectorXd>(G.data(), 9);
        wsum[side][mesh.tets[t][a]] += vol;
      }
    }
    for (int i = 0; i < mesh.n_nodes(); ++i) {
      for (int s = 0; s < 2; ++s)
        if (wsum[s][i] > 0.0) rec[s].col(i) /= wsum[s][i];
      // nodes with no tets on one side take the other side's recovery
      for (int s = 0; s < 2; ++s)
        if (wsum[s][i] == 0.0) rec[s].col(i) = rec[1 - s].col(i);
    }
    hk->c_grad.push_back(rec[0]);
    hk->c_grad_bot.push_back(rec[1]);
  }
  return hk;
}

// cell index along one graded axis
int axis_cell(const std::vector<double>& c, double x) {
  if (x < c.front() || x > c.back()) return -1;
  int lo = 0, hi = (int)c.size() - 1;
  while (hi - lo > 1) {
    int mid = (lo + hi) / 2;
    (c[mid] <= x ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

bool HalfspaceKernel::inside(const Vec3& x) const {
  return x.cwiseAbs().maxCoeff() <= R;
}

namespace {
// trilinear weights over one grid cell
struct CellInterp {
  int id[8];
  double w[8];
};

bool cell_interp(const HalfspaceKernel& hk, const Vec3& x, CellInterp& out) {
  int n = hk.n;
  int ix = axis_cell(hk.coord, x.x());
  int iy = axis_cell(hk.coord, x.y());
  int iz = axis_cell(hk.coord, x.z());
  if (ix < 0 || iy < 0 || iz < 0) return false;
  ix = std::min(ix, n - 1);
  iy = std::min(iy, n - 1);
  iz = std::min(iz, n - 1);
  double tx = (x.x() - hk.coord[ix]) / (hk.coord[ix + 1] - hk.coord[ix]);
  double ty = (x.y() - hk.coord[iy]) / (hk.coord[iy + 1] - hk.coord[iy]);
  double tz = (x.z() - hk.coord[iz]) / (hk.coord[iz + 1] - hk.coord[iz]);
  int m = 0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        out.id[m] = (ix + dx) + (n + 1) * ((iy + dy) + (n + 1) * (iz + dz));
        out.w[m] = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
        ++m;
      }
  return true;
}
}  // namespace

Mat3 HalfspaceKernel::gamma(const Vec3& x) const {
  CellInterp ci;
  if (!cell_interp(*this, x, ci))
    throw std::runtime_error("halfspace: evaluation outside the kernel box");
  KelvinEval ke = kelvin(x, Vec3(0, 0, offset), top);
  Mat3 out = ke.gamma;
  for (int j = 0; j < 3; ++j) {
    Vec3 cj = Vec3::Zero();
    for (int m = 0; m < 8; ++m)
      cj += ci.w[m] * c[j].segment<3>(3 * ci.id[m]);
    out.col(j) += cj;
  }
  return out;
}

Mat3 HalfspaceKernel::grad_col(const Vec3& x, int j) const {
  CellInterp ci;
  if (!cell_interp(*this, x, ci))
    throw std::runtime_error("halfspace: evaluation outside the kernel box");
  KelvinEval ke = kelvin(x, Vec3(0, 0, offset), top);
  Mat3 G;
  for (int k = 0; k < 3; ++k) G.col(k) = ke.grad[k].col(j);
  const Eigen::MatrixXd& side = x.z() >= 0.0 ? c_grad[j] : c_grad_bot[j];
  Eigen::Matrix<double, 9, 1> rec = Eigen::Matrix<double, 9, 1>::Zero();
  for (int m = 0; m < 8; ++m) rec += ci.w[m] * side.col(ci.id[m]);
  G += Eigen::Map<const Mat3>(rec.data());
  return G;
}

const HalfspaceKernel& halfspace_kernel(const IsotropicElastic& top,
                                        const IsotropicElastic& bottom,
                                        double offset, double R, int n,
                                        double grading) {
  if (grading < 0) grading = grading_for(offset / 8.0, R, n);
  std::string key = cache_key(top, bottom, offset, R, n, grading);
  {
    std::lock_guard<std::mutex> lk(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
  }
  auto hk = solve_kernel(top, bottom, offset, R, n, grading);
  std::lock_guard<std::mutex> lk(cache_mutex);
  auto [it, ok] = cache.emplace(key, std::move(hk));
  return *it->second;
}

}  // namespace elastlab
