#pragma once

// Shared instance generators for the unit and acceptance suites.

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "rsvm/cil.hpp"
#include "rsvm/dataset.hpp"
#include "rsvm/rng.hpp"

namespace fixtures {

// Random dataset with dense-ish sparse rows. For the linear kernel pass
// d >= n so the Gram matrix is positive definite (unique dual optimum).
inline rsvm::Dataset random_dataset(std::uint64_t seed, int n, int d,
                                    double scale = 1.0) {
  std::mt19937_64 gen(seed);
  rsvm::Dataset ds;
  for (int i = 0; i < n; ++i) {
    rsvm::SparseRow row;
    for (int j = 1; j <= d; ++j) {
      if (rsvm::unit_uniform(gen) < 0.8)
        row.push_back({j, scale * rsvm::uniform_in(gen, -1.0, 1.0)});
    }
    if (row.empty()) row.push_back({1, scale * rsvm::uniform_in(gen, -1.0, 1.0)});
    ds.rows.push_back(std::move(row));
    ds.labels.push_back(rsvm::bounded_u64(gen, 2) ? 1 : -1);
  }
  ds.max_feature = d;
  return ds;
}

inline std::vector<double> random_mu(std::uint64_t seed, int n, double C,
                                     double frac_C) {
  std::mt19937_64 gen(seed);
  std::vector<double> mu(n, 0.0);
  for (int i = 0; i < n; ++i)
    if (rsvm::unit_uniform(gen) < frac_C) mu[i] = C;
  return mu;
}

// Owns the dataset + kernel cache backing a CilProblem.
struct Instance {
  std::shared_ptr<rsvm::Dataset> ds;
  std::shared_ptr<rsvm::KernelCache> kernel;
  rsvm::CilProblem pr;
};

inline Instance make_instance(std::uint64_t seed, int n, rsvm::KernelSpec spec,
                              double C, double mu_frac_C = 0.0,
                              bool row_norms = false) {
  // Scale distances so the gaussian Gram matrix stays well conditioned for
  // small kappa.
  double scale = 1.0;
  if (spec.kind == rsvm::KernelKind::gaussian)
    scale = 1.0 / std::sqrt(std::max(spec.kappa, 0.05));
  const int d = spec.kind == rsvm::KernelKind::linear ? n + 10 : 6;
  auto ds = std::make_shared<rsvm::Dataset>(random_dataset(seed, n, d, scale));
  rsvm::KernelCacheConfig kc;
  kc.enable_row_norms = row_norms;
  auto kernel = std::make_shared<rsvm::KernelCache>(*ds, spec, kc);
  Instance inst{ds, kernel, {}};
  inst.pr = rsvm::build_problem(*ds, *kernel,  C,
                                random_mu(seed ^ 0x9e3779b97f4a7c15ull, n, C,
                                          mu_frac_C));
  return inst;
}

// The 2-sample separable toy: x1 = (1), y1 = +1; x2 = (-1), y2 = -1.
// Analytic optimum with C = 1, mu = 0: alpha = (0.5, -0.5), b = 0, F = -0.5.
inline Instance toy_two_sample(double C = 1.0) {
  auto ds = std::make_shared<rsvm::Dataset>();
  ds->rows = {{{1, 1.0}}, {{1, -1.0}}};
  ds->labels = {1, -1};
  ds->max_feature = 1;
  auto kernel = std::make_shared<rsvm::KernelCache>(
      *ds, rsvm::KernelSpec{rsvm::KernelKind::linear, 0.0});
  Instance inst{ds, kernel, {}};
  inst.pr = rsvm::build_problem(*ds, *kernel, C, std::vector<double>(2, 0.0));
  return inst;
}

// Three 1-D samples crafted so that, from alpha = (0.4, -1, 0.6), the maximal
// violating pair is (0, 2).
inline Instance toy_three_sample() {
  auto ds = std::make_shared<rsvm::Dataset>();
  ds->rows = {{{1, 1.0}}, {{1, 2.0}}, {{1, 3.0}}};
  ds->labels = {1, -1, 1};
  ds->max_feature = 1;
  auto kernel = std::make_shared<rsvm::KernelCache>(
      *ds, rsvm::KernelSpec{rsvm::KernelKind::linear, 0.0});
  Instance inst{ds, kernel, {}};
  inst.pr = rsvm::build_problem(*ds, *kernel, 1.0, std::vector<double>(3, 0.0));
  return inst;
}

}  // namespace fixtures
