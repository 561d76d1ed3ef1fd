#pragma once

#include <vector>

#include "rsvm/kernel.hpp"

namespace rsvm {

// One convex inner-loop problem:
//   min_a  1/2 a^T H a - y^T a   s.t.  sum(a) = 0,  lower <= a <= upper
// with lower_i = min(0, C y_i) - mu_i y_i and upper_i = max(0, C y_i) - mu_i y_i,
// mu_i in {0, C}. alpha = 0 is always box-feasible.
struct CilProblem {
  const Dataset* data = nullptr;
  KernelCache* kernel = nullptr;
  double C = 1.0;
  std::vector<int> y;
  std::vector<double> mu;
  std::vector<double> lower;
  std::vector<double> upper;
  int n = 0;
};

// Throws if C <= 0 or any mu_i is outside {0, C}.
CilProblem build_problem(const Dataset& ds, KernelCache& kernel, double C,
                         std::vector<double> mu);

}  // namespace rsvm
