#include "elastlab/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace elastlab {

KelvinEval kelvin(const Vec3& x, const Vec3& y, const IsotropicElastic& mat) {
  Vec3 d = x - y;
  double R = d.norm();
  if (R <= 0.0) throw std::runtime_error("kelvin: pole coincidence");
  double nu = mat.poisson();
  double pref = 1.0 / (16.0 * M_PI * mat.mu * (1.0 - nu));
  double k = 3.0 - 4.0 * nu;
  double R3 = R * R * R, R5 = R3 * R * R;
  KelvinEval out;
  out.gamma = pref * (k / R * Mat3::Identity() + d * d.transpose() / R3);
  for (int kk = 0; kk < 3; ++kk) {
    Mat3 g = -k * d[kk] / R3 * Mat3::Identity();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        g(i, j) += ((i == kk ? d[j] : 0.0) + (j == kk ? d[i] : 0.0)) / R3 -
                   3.0 * d[i] * d[j] * d[kk] / R5;
    out.grad[kk] = pref * g;
  }
  return out;
}

double rongved_d33(const Vec3& x, const BimaterialConfig& cfg) {
  double mu = cfg.mu, nu = cfg.nu, mup = cfg.mup, nup = cfg.nup, r = cfg.r;
  double x1 = x.x(), x2 = x.y(), x3 = x.z();
  double rho2 = x1 * x1 + x2 * x2;
  double zm = x3 - r, zp = x3 + r;
  double R1 = std::sqrt(rho2 + zm * zm), R2 = std::sqrt(rho2 + zp * zp);
  if (R1 <= 0.0) throw std::runtime_error("rongved_d33: pole coincidence");
  double R13 = R1 * R1 * R1, R15 = R13 * R1 * R1;
  double R23 = R2 * R2 * R2, R25 = R23 * R2 * R2, R27 = R25 * R2 * R2;
  double k = 3.0 - 4.0 * nu, kp = 3.0 - 4.0 * nup;
  double den1 = mu + mup * k;
  double kap = (mu - mup) / den1;

  // Monophase (Kelvin) part.
  double g = k * (-zm / R13) + 2.0 * zm / R13 - 3.0 * zm * zm * zm / R15;
  // Image terms carrying the (mu - mu') / (mu + mu'(3-4nu)) prefactor.
  g += k * kap * (k * (-zp / R23) - 6.0 * r * zp * zp / R25 + 2.0 * r / R23);
  g += kap * (k * 2.0 * x3 / R23 - 3.0 * k * (x3 * x3 - r * r) * zp / R25);
  // The 4(1-nu)mu/(mu-mu') sub-term: the (mu-mu') factors cancel against the
  // global prefactor, leaving a form regular at mu = mu'.
  double den2 = mup + mu * kp;
  double brk = (mu * (1.0 - 2.0 * nu) * kp - mup * (1.0 - 2.0 * nup) * k) / den2;
  g += 4.0 * (1.0 - nu) * mu / den1 * brk * zp / R23;
  g += kap * (-(2.0 * r / R25) * (rho2 - 2.0 * zp * zp) +
              10.0 * r * x3 * (rho2 - 2.0 * zp * zp) * zp / R27 +
              8.0 * r * x3 * zp / R25);
  return g / (16.0 * (1.0 - nu) * M_PI * mu);
}

RongvedCoeffs rongved_coeffs(double nu, double nup, double g) {
  double g3 = g * g * g, g5 = g3 * g * g;
  double k = 3.0 - 4.0 * nu, kp = 3.0 - 4.0 * nup;
  RongvedCoeffs out;
  out.A = 4.0 * nu * g3 * kp * (3.0 * g * g - 2.0 * nu);
  out.B = 4.0 * g3 * (2.0 - 8.0 * nu + 3.0 * g * g - 6.0 * nu * g * g + 8.0 * nu * nu);
  out.C = (3.0 * g5 + (1.0 - 4.0 * nu) * g3) * (1.0 + k * kp) +
          (4.0 * nup - 2.0) *
              (k * ((4.0 * nu - 1.0) * g3 - 6.0 * g5) + 15.0 * g5 -
               12.0 * nu * g5 - 2.0 * g3) -
          4.0 * g3 * (1.0 - nu) * (1.0 - 2.0 * nup) * k;
  return out;
}

double rongved_d33_from_coeffs(const BimaterialConfig& cfg, double g) {
  auto [A, B, C] = rongved_coeffs(cfg.nu, cfg.nup, g);
  double k = 3.0 - 4.0 * cfg.nu, kp = 3.0 - 4.0 * cfg.nup;
  double num = A * cfg.mu * cfg.mu + B * cfg.mup * cfg.mup + C * cfg.mu * cfg.mup;
  double den = 16.0 * cfg.r * cfg.r * (1.0 - cfg.nu) * M_PI * cfg.mu *
               (cfg.mu + cfg.mup * k) * (cfg.mup + cfg.mu * kp);
  return num / den;
}

LowerBoundReport verify_lower_bound(const BimaterialConfig& cfg, int n_samples,
                                    int n_grid) {
  LowerBoundReport rep;
  rep.c_measured = 1e300;
  double rmax = cfg.r / std::sqrt(2.0);
  for (int i = 0; i < n_samples; ++i) {
    double rho = rmax * i / (double)(n_samples - 1);
    double val = rongved_d33(Vec3(rho, 0.0, 0.0), cfg);
    rep.c_measured = std::min(rep.c_measured, val * cfg.r * cfg.r);
  }
  rep.min_A = rep.min_B = rep.min_C = 1e300;
  double g23 = std::sqrt(2.0 / 3.0);
  for (int gi = 0; gi < 2; ++gi) {
    double g = gi == 0 ? g23 : 1.0;
    for (int i = 0; i < n_grid; ++i)
      for (int j = 0; j < n_grid; ++j) {
        double nu = 0.49 * i / (double)(n_grid - 1);
        double nup = 0.49 * j / (double)(n_grid - 1);
        auto c = rongved_coeffs(nu, nup, g);
        rep.min_A = std::min(rep.min_A, c.A);
        rep.min_B = std::min(rep.min_B, c.B);
        rep.min_C = std::min(rep.min_C, c.C);
      }
  }
  rep.pass = rep.c_measured > 0.0 && rep.min_A >= -1e-14 &&
             rep.min_C >= -1e-14 && rep.min_B > 0.0;
  return rep;
}

}  // namespace elastlab
