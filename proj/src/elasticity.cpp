#include "elastlab/elasticity.hpp"

#include <cmath>

namespace elastlab {

Mat3 IsotropicElastic::apply(const Mat3& A) const {
  Mat3 sym = 0.5 * (A + A.transpose());
  return 2.0 * mu * sym + lambda * A.trace() * Mat3::Identity();
}

double IsotropicElastic::poisson() const {
  return lambda / (2.0 * (lambda + mu));
}

ConvexityReport check_strong_convexity(const IsotropicElastic& C,
                                       double alpha0, double gamma0) {
  ConvexityReport r;
  r.xi0 = std::min(2.0 * alpha0, gamma0);
  r.margin_shear = C.mu - alpha0;
  r.margin_bulk = C.spherical_eig() - gamma0;
  r.pass = r.margin_shear >= 0.0 && r.margin_bulk >= 0.0;
  if (r.margin_shear < 0.0) r.violated = "mu < alpha0";
  else if (r.margin_bulk < 0.0) r.violated = "2mu+3lambda < gamma0";
  return r;
}

bool BiphaseMaterial::visible() const {
  double dl = interior.lambda - exterior.lambda;
  double dm = interior.mu - exterior.mu;
  return dl * dl + dm * dm >= eta0;
}

Monotonicity BiphaseMaterial::detect_monotonicity(double alpha1,
                                                  double gamma1) const {
  IsotropicElastic emi{exterior.lambda - interior.lambda,
                       exterior.mu - interior.mu};
  if (check_strong_convexity(emi, alpha1, gamma1).pass)
    return Monotonicity::ExtMinusInt;
  IsotropicElastic ime{-emi.lambda, -emi.mu};
  if (check_strong_convexity(ime, alpha1, gamma1).pass)
    return Monotonicity::IntMinusExt;
  return Monotonicity::None;
}

double BiphaseMaterial::sigma() const {
  double dm = exterior.mu - interior.mu;
  double dl = exterior.lambda - interior.lambda;
  return std::min(2.0 * std::fabs(dm), std::fabs(2.0 * dm + 3.0 * dl));
}

}  // namespace elastlab
