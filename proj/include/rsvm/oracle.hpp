#pragma once

#include <utility>
#include <vector>

#include "rsvm/cccp.hpp"

namespace rsvm {
namespace oracle {

// Test-only reference implementations: slow, independent of the SMO path.
// Hard n <= 500 cap so nobody benchmarks them.

struct KktViolationReport {
  std::vector<double> violation;  // per-sample distance from the KKT case structure
  double max_violation = 0;
  double sum_alpha = 0;           // |sum alpha|
  double box_breach = 0;          // total bound violation
};

// grad_i = sum_j alpha_j K_ij + b - y_i; interior -> |grad|, at lower ->
// max(0, -grad), at upper -> max(0, grad). Kernel entries are evaluated
// directly (no cache involvement).
KktViolationReport check_kkt(const CilProblem& pr, const std::vector<double>& alpha,
                             double b, double bound_tol = -1.0);

// Projected-gradient reference solver for one CIL problem: exact Euclidean
// projection onto {sum = 0} /\ box (bisection on the hyperplane multiplier),
// FISTA acceleration with gradient restart, run until the KKT max violation
// drops below tol. No screening, no shrinking, no warm starts. Throws on
// non-convergence (fixture bug) or n > 500.
std::pair<std::vector<double>, double> solve_cil_reference(const CilProblem& pr,
                                                           double tol);

// Full CCCP with solve_cil_reference inside; every CIL starts from zero.
Model solve_rsvm_reference(const Dataset& ds, const TrainConfig& cfg,
                           double tol = 1e-8);

// Exposed for tests: exact projection onto {sum(a) = 0, lo <= a <= hi}.
std::vector<double> project_box_hyperplane(const std::vector<double>& z,
                                           const std::vector<double>& lo,
                                           const std::vector<double>& hi);

}  // namespace oracle
}  // namespace rsvm
