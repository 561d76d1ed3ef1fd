#include "rsvm/cil.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rsvm {

CilProblem build_problem(const Dataset& ds, KernelCache& kernel, double C,
                         std::vector<double> mu) {
  if (!(C > 0)) throw std::invalid_argument("build_problem: C must be > 0");
  const int n = ds.n();
  if (static_cast<int>(mu.size()) != n)
    throw std::invalid_argument("build_problem: mu length mismatch");
  if (kernel.n() != n)
    throw std::invalid_argument("build_problem: kernel bound to another dataset");

  CilProblem pr;
  pr.data = &ds;
  pr.kernel = &kernel;
  pr.C = C;
  pr.n = n;
  pr.y = ds.labels;
  pr.mu = std::move(mu);
  pr.lower.resize(n);
  pr.upper.resize(n);
  for (int i = 0; i < n; ++i) {
    const double m = pr.mu[i];
    if (m != 0.0 && m != C)
      throw std::invalid_argument("build_problem: mu[" + std::to_string(i) +
                                  "] must be 0 or C");
    const double cy = C * pr.y[i];
    pr.lower[i] = std::min(0.0, cy) - m * pr.y[i];
    pr.upper[i] = std::max(0.0, cy) - m * pr.y[i];
  }
  return pr;
}

}  // namespace rsvm
