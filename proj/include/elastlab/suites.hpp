#pragma once
#include <string>
#include <vector>

#include "elastlab/config.hpp"

namespace elastlab {

// Batch pipelines behind the command-line front end.  Exit convention:
// 0 pass, 1 assertion failure, 2 configuration error.
struct SuiteResult {
  int status = 2;
  std::string summary;                  // human-readable report lines
  std::vector<std::string> artifacts;   // paths of files written
};

// name in {validate, kernels, dtn, sderiv, sscale, stability}.
SuiteResult run_suite(const std::string& name, const Config& cfg);

struct StabilityRow {
  double amplitude = 0.0;
  double d_H = 0.0;       // boundary Hausdorff distance of the pair
  double lam_norm = 0.0;  // r0^2 * operator norm of the DtN difference
};

struct StabilityResult {
  std::vector<StabilityRow> rows;
  double slope = 0.0;        // regression of d_H on lam_norm through 0
  double correlation = 0.0;  // Pearson correlation of the points
  double max_deviation = 0.0;  // worst relative residual of the fit
  int status = 2;
  std::string detail;
  std::string to_csv() const;
};

// Cube family with the bottom face offset by the listed amplitudes; the
// perturbed DtN operator is assembled on the homotopy-displaced copy of the
// base mesh so both operators share the measurement-face basis.  Refuses
// (status 2) when the material pair is not monotone.
StabilityResult run_stability_sweep(const Config& cfg);

}  // namespace elastlab
