#pragma once
#include <Eigen/Dense>
#include <string>

namespace elastlab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Isotropic elastic tensor C A = 2 mu sym(A) + lambda tr(A) I.
struct IsotropicElastic {
  double lambda = 0.0;
  double mu = 0.0;

  Mat3 apply(const Mat3& A) const;
  double poisson() const;                 // lambda / (2 (lambda + mu))
  double spherical_eig() const { return 2.0 * mu + 3.0 * lambda; }

  bool operator==(const IsotropicElastic&) const = default;
};

struct ConvexityReport {
  bool pass = false;
  double xi0 = 0.0;         // min{2 alpha0, gamma0}
  double margin_shear = 0;  // mu - alpha0
  double margin_bulk = 0;   // 2 mu + 3 lambda - gamma0
  std::string violated;     // empty when pass
};

// Pass iff mu >= alpha0 and 2 mu + 3 lambda >= gamma0; then
// C A : A >= xi0 |A|^2 on symmetric A with xi0 = min{2 alpha0, gamma0}.
ConvexityReport check_strong_convexity(const IsotropicElastic& C,
                                       double alpha0, double gamma0);

enum class Monotonicity { None, ExtMinusInt, IntMinusExt };

struct BiphaseMaterial {
  IsotropicElastic interior;  // C^i
  IsotropicElastic exterior;  // C^e
  double eta0 = 0.0;
  Monotonicity monotonicity = Monotonicity::None;

  bool homogeneous() const { return interior == exterior; }
  // (lambda^i - lambda^e)^2 + (mu^i - mu^e)^2 >= eta0
  bool visible() const;
  // which of C^e - C^i / C^i - C^e is strongly convex with the given margins
  Monotonicity detect_monotonicity(double alpha1, double gamma1) const;
  // min{ 2|mu_e - mu_i|, |2(mu_e - mu_i) + 3(lambda_e - lambda_i)| }
  double sigma() const;
};

}  // namespace elastlab
