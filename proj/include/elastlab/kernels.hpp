#pragma once
#include <array>

#include "elastlab/elasticity.hpp"

namespace elastlab {

struct KelvinEval {
  Mat3 gamma;                // Kelvin matrix
  std::array<Mat3, 3> grad;  // grad[k](i,j) = d Gamma_ij / d x_k
};

// Free-space fundamental matrix of the homogeneous isotropic operator,
// with its exact gradient.  Throws on x == y.
KelvinEval kelvin(const Vec3& x, const Vec3& y, const IsotropicElastic& mat);

// Two half-spaces glued along x3 = 0: (mu, nu) on the pole side x3 > 0,
// (mup, nup) on x3 < 0; unit point load at (0, 0, r), r > 0.
struct BimaterialConfig {
  double mu = 1.0, nu = 0.25;
  double mup = 1.0, nup = 0.25;
  double r = 1.0;
};

// d Gamma^R_33 / d x3 at x, closed form, valid on the closure x3 >= 0.
double rongved_d33(const Vec3& x, const BimaterialConfig& cfg);

struct RongvedCoeffs {
  double A, B, C;
};

// Quadratic-form coefficients of the x3 = 0 restriction at gamma = r/R.
RongvedCoeffs rongved_coeffs(double nu, double nup, double gamma);

// The same restriction evaluated through the quadratic form:
//   d33 = (A mu^2 + B mu'^2 + C mu mu') /
//         (16 r^2 (1-nu) pi mu (mu + mu'(3-4nu)) (mu' + mu(3-4nu')))
double rongved_d33_from_coeffs(const BimaterialConfig& cfg, double gamma);

struct LowerBoundReport {
  double c_measured = 0.0;  // min over samples of r^2 * d33 on rho <= r/sqrt(2)
  double min_A = 0.0, min_B = 0.0, min_C = 0.0;  // over the (nu, nu') grid
  bool pass = false;
};

// Positivity of d33 on the disc rho <= r/sqrt(2) plus sign of the
// coefficients on a (nu, nu') grid at gamma^2 >= 2/3.
LowerBoundReport verify_lower_bound(const BimaterialConfig& cfg, int n_samples,
                                    int n_grid = 50);

}  // namespace elastlab
