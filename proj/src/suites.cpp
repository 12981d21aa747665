#include "elastlab/suites.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "elastlab/forward.hpp"
#include "elastlab/greens.hpp"
#include "elastlab/homotopy.hpp"
#include "elastlab/kernels.hpp"
#include "elastlab/shape_deriv.hpp"

namespace elastlab {

namespace {

constexpr const char* kSolverTag = "simplicial-ldlt";

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

IsotropicElastic from_mu_nu(double mu, double nu) {
  return {2.0 * mu * nu / (1.0 - 2.0 * nu), mu};
}

BiphaseMaterial material_from(const Config& cfg) {
  BiphaseMaterial m;
  m.exterior.mu = cfg.num("mu_e", 1.0);
  m.exterior.lambda = cfg.num("lambda_e", 1.0);
  m.interior.mu = cfg.num("mu_i", 1.9);
  m.interior.lambda = cfg.num("lambda_i", 1.6);
  m.eta0 = cfg.num("eta0", 1e-3);
  m.monotonicity = m.detect_monotonicity(cfg.num("alpha1", 0.05),
                                         cfg.num("gamma1", 0.05));
  return m;
}

AdmissibilityParams params_from(const Config& cfg) {
  AdmissibilityParams prm;
  prm.r0 = cfg.num("r0", 1.0);
  prm.M0 = cfg.num("M0", 3.0);
  prm.M1 = cfg.num("M1", 20.0);
  prm.theta0 = cfg.num("theta0", M_PI / 10.0);
  return prm;
}

Box box_from(const Config& cfg) {
  double half = cfg.num("omega_half", 2.0);
  return {-half * Vec3::Ones(), half * Vec3::Ones()};
}

// Cube of the given side centered at the origin with its bottom (-z) face
// pushed outward by `amp`.
Polyhedron offset_cube(double side, double amp) {
  Polyhedron P = make_cube(Vec3::Zero(), side);
  for (auto& v : P.V)
    if (v.z() < 0.0) v.z() -= amp;
  P.build();
  return P;
}

std::string out_path(const Config& cfg, const std::string& name) {
  std::filesystem::path dir(cfg.get("out_dir", "."));
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

struct Gate {
  std::ostringstream log;
  bool ok = true;
  void check(const std::string& name, bool pass, const std::string& info = "") {
    log << (pass ? "pass  " : "FAIL  ") << name;
    if (!info.empty()) log << "  (" << info << ")";
    log << "\n";
    ok = ok && pass;
  }
};

SuiteResult run_validate(const Config& cfg) {
  SuiteResult res;
  AdmissibilityParams prm = params_from(cfg);
  Box omega = box_from(cfg);
  Polyhedron D = offset_cube(cfg.num("side", 2.0), cfg.num("amplitude", 0.0));
  AdmissibilityReport rep = validate_class_P(D, omega, prm);

  std::ostringstream csv;
  csv << "suite,check,pass,margin\n";
  for (const auto& c : rep.checks)
    csv << "validate," << c.name << "," << (c.pass ? 1 : 0) << ","
        << fmt(c.margin) << "\n";
  std::string p1 = out_path(cfg, "validate.csv");
  write_file(p1, csv.str());
  std::string p2 = out_path(cfg, "validate.json");
  write_file(p2, rep.to_json());
  res.artifacts = {p1, p2};
  res.summary = rep.to_text();
  res.status = rep.pass ? 0 : 1;
  return res;
}

SuiteResult run_kernels(const Config& cfg) {
  SuiteResult res;
  int n = cfg.integer("n_grid", 24);
  double gamma = cfg.num("gamma", std::sqrt(2.0 / 3.0));
  double lo = cfg.num("nu_min", 0.01), hi = cfg.num("nu_max", 0.49);

  Gate g;
  double minC = 1e300;
  std::ostringstream csv;
  csv << "suite,nu,nup,gamma,A,B,C\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double nu = lo + (hi - lo) * i / (n - 1);
      double nup = lo + (hi - lo) * j / (n - 1);
      RongvedCoeffs c = rongved_coeffs(nu, nup, gamma);
      minC = std::min(minC, c.C);
      csv << "kernels," << fmt(nu) << "," << fmt(nup) << "," << fmt(gamma)
          << "," << fmt(c.A) << "," << fmt(c.B) << "," << fmt(c.C) << "\n";
    }
  g.check("min C >= 0 on the grid at the requested gamma", minC >= 0.0,
          "min C = " + fmt(minC));

  BimaterialConfig bc;
  bc.mu = cfg.num("mu_e", 1.0);
  bc.nu = cfg.num("nu_e", 0.3);
  bc.mup = cfg.num("mu_i", 2.0);
  bc.nup = cfg.num("nu_i", 0.2);
  bc.r = cfg.num("pole_r", 1.0);
  LowerBoundReport lb = verify_lower_bound(bc, cfg.integer("n_samples", 400));
  g.check("surface-derivative lower bound", lb.pass,
          "c = " + fmt(lb.c_measured));

  std::string p = out_path(cfg, "kernels.csv");
  write_file(p, csv.str());
  res.artifacts = {p};
  res.summary = g.log.str();
  res.status = g.ok ? 0 : 1;
  return res;
}

SuiteResult run_dtn(const Config& cfg) {
  SuiteResult res;
  BiphaseMaterial mat = material_from(cfg);
  BiphaseMaterial hom{mat.exterior, mat.exterior, 0.0, Monotonicity::None};
  Box omega = box_from(cfg);
  double h = cfg.num("mesh_h", 0.5);
  double r0 = cfg.num("r0", 1.0);
  int face = cfg.integer("sigma_face", 4);
  Polyhedron D = offset_cube(cfg.num("side", 2.0), 0.0);

  Mesh mesh = mesh_inclusion(omega, D, h);
  DtNOperator op_inc = dtn_assemble(mesh, mat, face, r0);
  DtNOperator op_hom = dtn_assemble(mesh, hom, face, r0);

  Gate g;
  std::ostringstream csv;
  csv << "suite,mesh_h,solver,check,value,tol,pass\n";
  auto row = [&](const std::string& name, double value, double tol,
                 bool pass) {
    csv << "dtn," << fmt(h) << "," << kSolverTag << "," << name << ","
        << fmt(value) << "," << fmt(tol) << "," << (pass ? 1 : 0) << "\n";
    g.check(name, pass, fmt(value));
  };

  double sym = (op_inc.L - op_inc.L.transpose()).norm() / op_inc.L.norm();
  row("symmetry defect", sym, 1e-10, sym <= 1e-10);

  // Equal phases: retagging with a different inclusion leaves the operator
  // unchanged.
  Mesh mesh2 = mesh;
  mesh2.retag(make_cube(Vec3(0.2, -0.1, 0.1), 1.4));
  DtNOperator op_hom2 = dtn_assemble(mesh2, hom, face, r0);
  double invis = dtn_norm_diff(op_hom, op_hom2);
  row("equal-phase invisibility", invis, 1e-9, invis <= 1e-9);

  // Pointwise larger tensor gives a larger quadratic form.
  std::mt19937 rng((unsigned)cfg.integer("seed", 7));
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::MatrixXd dL = op_inc.L - op_hom.L;
  if (mat.monotonicity == Monotonicity::ExtMinusInt) dL = -dL;
  double worst = 1e300;
  for (int k = 0; k < 40; ++k) {
    Eigen::VectorXd psi(dL.rows());
    for (int i = 0; i < psi.size(); ++i) psi[i] = N(rng);
    worst = std::min(worst, psi.dot(dL * psi) / psi.squaredNorm());
  }
  row("monotone quadratic-form sign", worst, 0.0, worst >= -1e-12);

  double nd = r0 * r0 * dtn_norm_diff(op_inc, op_hom);
  row("inclusion-vs-homogeneous norm (positive)", nd, 0.0, nd > 0.0);

  std::string p = out_path(cfg, "dtn.csv");
  write_file(p, csv.str());
  res.artifacts = {p};
  res.summary = g.log.str();
  res.status = g.ok ? 0 : 1;
  return res;
}

SuiteResult run_sderiv(const Config& cfg) {
  SuiteResult res;
  BiphaseMaterial mat = material_from(cfg);
  AdmissibilityParams prm = params_from(cfg);
  Box omega = box_from(cfg);
  double h = cfg.num("mesh_h", 0.25);
  double amp = cfg.num("amplitude", 0.02);
  double margin = cfg.num("edge_margin", prm.r0 / 8.0);
  std::vector<double> t_list = cfg.list("t_list", {0.2, 0.1, 0.05, 0.025});

  Polyhedron D0 = offset_cube(cfg.num("side", 2.0), 0.0);
  Polyhedron D1 = offset_cube(cfg.num("side", 2.0), amp);
  HomotopyField field = build_field(D0, D1, prm);
  Mesh mesh = mesh_inclusion(omega, D0, h);
  NodalField U = nodal_field(mesh, [&](const Vec3& x) { return field.eval(x); });

  TraceFn f = [](const Vec3& x) {
    return Vec3(0.1 * x.z(), 0.0, 0.2 * x.x() - 0.1);
  };
  TraceFn g_tr = [](const Vec3& x) {
    return Vec3(0.0, 0.15 * std::sin(x.x()) + 0.05 * x.y(), 0.1 * x.y() * x.z());
  };

  DerivativeBundle b =
      derivative_bundle(mesh, D0, mat, U, f, g_tr, t_list, margin);

  Gate g;
  g.check("difference-quotient remainder slope in [1.7, 2.3]",
          b.table.slope > 1.7 && b.table.slope < 2.3, fmt(b.table.slope));
  double scale = std::abs(b.Fprime_distributed);
  double tol = std::max(0.05 * scale, b.boundary.collar);
  g.check("interface form matches the volume form",
          std::abs(b.boundary.value - b.Fprime_distributed) <= tol,
          fmt(b.boundary.value) + " vs " + fmt(b.Fprime_distributed));

  std::ostringstream csv;
  csv << "suite,mesh_h,solver,t,F,remainder\n";
  for (const auto& r : b.table.rows)
    csv << "sderiv," << fmt(h) << "," << kSolverTag << "," << fmt(r.t) << ","
        << fmt(r.F) << "," << fmt(r.R) << "\n";
  std::string p1 = out_path(cfg, "sderiv.csv");
  write_file(p1, csv.str());
  std::string p2 = out_path(cfg, "sderiv.json");
  write_file(p2, b.to_json());
  res.artifacts = {p1, p2};
  res.summary = g.log.str();
  res.status = g.ok ? 0 : 1;
  return res;
}

SuiteResult run_sscale(const Config& cfg) {
  SuiteResult res;
  BiphaseMaterial mat = material_from(cfg);
  Box omega = box_from(cfg);
  double r0 = cfg.num("r0", 1.0);
  int face = cfg.integer("sigma_face", 4);
  double hm = cfg.num("mesh_h", 0.4);
  std::vector<double> h_list = cfg.list("h_list", {0.4, 0.2, 0.1, 0.05});
  std::vector<double> lw_list =
      cfg.list("lambda_w", {2.0 / 3.0, 3.0 / 4.0, 4.0 / 5.0});

  AugmentedDomain dom = AugmentedDomain::build(omega, face, r0);
  double side = cfg.num("side", 2.0);
  Polyhedron D0 = make_cube(Vec3::Zero(), side);
  Polyhedron D1 = offset_cube(side, -cfg.num("face_shift", 0.25));
  Vec3 P(0.0, 0.0, -side / 2.0);
  Vec3 n(0.0, 0.0, -1.0);

  ScalingTable table = s_scaling_experiment(dom, D0, D1, mat, P, n, h_list,
                                            lw_list, hm, Vec3::UnitZ());

  Gate g;
  double best = table.best_slope();
  g.check("log-log slope of |S| vs h in [-1.3, -0.7] for some lambda_w",
          best > -1.3 && best < -0.7, fmt(best));

  std::ostringstream csv;
  csv << "suite,mesh_h,solver,h,lambda_w,S\n";
  for (const auto& r : table.rows)
    csv << "sscale," << fmt(hm) << "," << kSolverTag << "," << fmt(r.h) << ","
        << fmt(r.lambda_w) << "," << fmt(r.S) << "\n";
  std::string p = out_path(cfg, "sscale.csv");
  write_file(p, csv.str());
  res.artifacts = {p};
  res.summary = g.log.str();
  res.status = g.ok ? 0 : 1;
  return res;
}

}  // namespace

std::string StabilityResult::to_csv() const {
  std::ostringstream csv;
  csv << "suite,amplitude,d_H,lam_norm\n";
  for (const auto& r : rows)
    csv << "stability," << fmt(r.amplitude) << "," << fmt(r.d_H) << ","
        << fmt(r.lam_norm) << "\n";
  return csv.str();
}

StabilityResult run_stability_sweep(const Config& cfg) {
  StabilityResult out;
  BiphaseMaterial mat = material_from(cfg);
  if (mat.monotonicity == Monotonicity::None) {
    out.status = 2;
    out.detail =
        "material pair is not monotone: neither C^e - C^i nor C^i - C^e is "
        "strongly convex with the required margins";
    return out;
  }
  AdmissibilityParams prm = params_from(cfg);
  Box omega = box_from(cfg);
  double r0 = prm.r0;
  double h = cfg.num("mesh_h", 0.4);
  int face = cfg.integer("sigma_face", 4);
  double side = cfg.num("side", 2.0);
  std::vector<double> amps = cfg.list("amplitudes", {0.005, 0.01, 0.02});
  double res = cfg.num("hausdorff_resolution", 1e-4 * r0);

  Polyhedron D0 = make_cube(Vec3::Zero(), side);
  Mesh mesh0 = mesh_inclusion(omega, D0, h);
  DtNOperator op0 = dtn_assemble(mesh0, mat, face, r0);

  std::ostringstream log;
  for (double a : amps) {
    double amp = a * r0;
    // inward offset: the base cube sits exactly at the minimum clearance
    // from the box boundary, so the perturbed face must move inward
    Polyhedron D1 = offset_cube(side, -amp);
    AdmissibilityReport rep = validate_class_P(D1, omega, prm);
    if (!rep.pass) {
      log << "amplitude " << fmt(amp) << " skipped: admissibility failed\n";
      continue;
    }
    HomotopyField field = build_field(D0, D1, prm);
    NodalField U(mesh0.n_nodes());
    for (int i = 0; i < mesh0.n_nodes(); ++i) U[i] = field.eval(mesh0.X[i]);
    Mesh mesh1 = mesh0.moved(U);
    DtNOperator op1 = dtn_assemble(mesh1, mat, face, r0);
    StabilityRow row;
    row.amplitude = amp;
    row.d_H = hausdorff_boundary(D0, D1, res);
    row.lam_norm = r0 * r0 * dtn_norm_diff(op0, op1);
    out.rows.push_back(row);
  }
  if (out.rows.size() < 2) {
    out.status = 2;
    out.detail = log.str() + "fewer than two usable pairs";
    return out;
  }

  double sxy = 0.0, sxx = 0.0, sx = 0.0, sy = 0.0, syy = 0.0;
  int n = (int)out.rows.size();
  for (const auto& r : out.rows) {
    sxy += r.lam_norm * r.d_H;
    sxx += r.lam_norm * r.lam_norm;
    syy += r.d_H * r.d_H;
    sx += r.lam_norm;
    sy += r.d_H;
  }
  out.slope = sxy / sxx;  // through the origin
  double cov = sxy - sx * sy / n;
  double vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  out.correlation = cov / std::sqrt(vx * vy);
  out.max_deviation = 0.0;
  for (const auto& r : out.rows)
    out.max_deviation = std::max(
        out.max_deviation, std::abs(r.d_H - out.slope * r.lam_norm) / r.d_H);

  bool ok = out.correlation >= 0.95 && out.max_deviation <= 0.15;
  out.status = ok ? 0 : 1;
  log << "slope (empirical Lipschitz constant) = " << fmt(out.slope) << "\n"
      << "correlation = " << fmt(out.correlation) << "\n"
      << "max relative deviation = " << fmt(out.max_deviation) << "\n";
  out.detail = log.str();
  return out;
}

SuiteResult run_suite(const std::string& name, const Config& cfg) {
  try {
    if (name == "validate") return run_validate(cfg);
    if (name == "kernels") return run_kernels(cfg);
    if (name == "dtn") return run_dtn(cfg);
    if (name == "sderiv") return run_sderiv(cfg);
    if (name == "sscale") return run_sscale(cfg);
    if (name == "stability") {
      StabilityResult sr = run_stability_sweep(cfg);
      SuiteResult res;
      res.status = sr.status;
      res.summary = sr.detail;
      if (!sr.rows.empty()) {
        std::string p = out_path(cfg, "stability.csv");
        write_file(p, sr.to_csv());
        res.artifacts = {p};
      }
      return res;
    }
    SuiteResult res;
    res.status = 2;
    res.summary = "unknown suite: " + name;
    return res;
  } catch (const std::exception& e) {
    SuiteResult res;
    res.status = 2;
    res.summary = std::string("error: ") + e.what();
    return res;
  }
}

}  // namespace elastlab
