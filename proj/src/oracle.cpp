#include "rsvm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rsvm {
namespace oracle {

namespace {

constexpr int kMaxN = 500;
constexpr long kMaxIters = 400000;

std::vector<double> dense_gram(const CilProblem& pr) {
  const int n = pr.n;
  const auto& rows = pr.data->rows;
  std::vector<double> H(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = kernel_eval(pr.kernel->spec(), rows[i], rows[j]);
      H[static_cast<std::size_t>(i) * n + j] = v;
      H[static_cast<std::size_t>(j) * n + i] = v;
    }
  }
  return H;
}

void gemv(const std::vector<double>& H, const std::vector<double>& x,
          std::vector<double>& out) {
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i) {
    const double* row = H.data() + static_cast<std::size_t>(i) * n;
    double s = 0;
    for (int j = 0; j < n; ++j) s += row[j] * x[j];
    out[i] = s;
  }
}

double lambda_max(const std::vector<double>& H, int n) {
  // Gershgorin bound is always valid for symmetric H.
  double gersh = 0;
  for (int i = 0; i < n; ++i) {
    double row = 0;
    for (int j = 0; j < n; ++j)
      row += std::fabs(H[static_cast<std::size_t>(i) * n + j]);
    gersh = std::max(gersh, row);
  }
  if (gersh == 0) return 1.0;
  // Power iteration from a non-uniform deterministic start sharpens it.
  std::vector<double> v(n), w(n);
  for (int i = 0; i < n; ++i) v[i] = std::sin(1.0 + i) + 0.5;
  double lam = gersh;
  for (int it = 0; it < 80; ++it) {
    gemv(H, v, w);
    double norm = 0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-300) return gersh;
    lam = norm;
    for (int i = 0; i < n; ++i) v[i] = w[i] / norm;
  }
  return std::min(gersh, lam * 1.1);
}

// Bias for the KKT check, independent reimplementation of the mean-of-free /
// interval-midpoint rule.
double reference_bias(const CilProblem& pr, const std::vector<double>& alpha,
                      const std::vector<double>& grad0, double bound_tol) {
  double sum = 0;
  int nfree = 0;
  for (int i = 0; i < pr.n; ++i) {
    if (alpha[i] > pr.lower[i] + bound_tol && alpha[i] < pr.upper[i] - bound_tol) {
      sum += pr.y[i] - grad0[i];  // -g_i = y_i - (H alpha)_i
      ++nfree;
    }
  }
  if (nfree > 0) return sum / nfree;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < pr.n; ++i) {
    const double neg_g = pr.y[i] - grad0[i];
    if (alpha[i] < pr.upper[i] - bound_tol) lo = std::max(lo, neg_g);
    if (alpha[i] > pr.lower[i] + bound_tol) hi = std::min(hi, neg_g);
  }
  if (std::isinf(lo) && std::isinf(hi)) return 0.0;
  if (std::isinf(lo)) return hi;
  if (std::isinf(hi)) return lo;
  return 0.5 * (lo + hi);
}

double case_violation(double alpha, double lower, double upper, double grad,
                      double bound_tol) {
  const bool at_lo = alpha <= lower + bound_tol;
  const bool at_hi = alpha >= upper - bound_tol;
  if (at_lo && at_hi) return 0.0;  // pinned box, no condition on the gradient
  if (at_lo) return std::max(0.0, -grad);
  if (at_hi) return std::max(0.0, grad);
  return std::fabs(grad);
}

double kkt_max_violation(const CilProblem& pr, const std::vector<double>& alpha,
                         const std::vector<double>& grad0, double b,
                         double bound_tol) {
  double worst = 0;
  for (int i = 0; i < pr.n; ++i) {
    const double grad = grad0[i] + b - pr.y[i];
    worst = std::max(worst,
                     case_violation(alpha[i], pr.lower[i], pr.upper[i], grad,
                                    bound_tol));
  }
  return worst;
}

}  // namespace

std::vector<double> project_box_hyperplane(const std::vector<double>& z,
                                           const std::vector<double>& lo,
                                           const std::vector<double>& hi) {
  const int n = static_cast<int>(z.size());
  auto sum_at = [&](double lam) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += std::clamp(z[i] - lam, lo[i], hi[i]);
    return s;
  };
  // sum_at is non-increasing in lambda; 0 is attainable because every box
  // straddles 0. Bracket and bisect.
  double a = z[0] - hi[0], b = z[0] - lo[0];
  for (int i = 1; i < n; ++i) {
    a = std::min(a, z[i] - hi[i]);
    b = std::max(b, z[i] - lo[i]);
  }
  double lam = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    const double s = sum_at(mid);
    lam = mid;
    if (std::fabs(s) <= 1e-13) break;
    if (s > 0)
      a = mid;
    else
      b = mid;
    if (b - a <= 1e-18 * std::max(1.0, std::fabs(a) + std::fabs(b))) {
      lam = 0.5 * (a + b);
      break;
    }
  }
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::clamp(z[i] - lam, lo[i], hi[i]);
  return out;
}

std::pair<std::vector<double>, double> solve_cil_reference(const CilProblem& pr,
                                                           double tol) {
  if (pr.n > kMaxN)
    throw std::invalid_argument("solve_cil_reference: n > 500 (reference only)");
  const int n = pr.n;
  const std::vector<double> H = dense_gram(pr);
  double L = lambda_max(H, n) * 1.02 + 1e-12;
  const double bound_tol = 1e-9 * (1.0 + pr.C);

  auto objective = [&](const std::vector<double>& a,
                       const std::vector<double>& Ha) {
    double f = 0;
    for (int i = 0; i < n; ++i) f += 0.5 * a[i] * Ha[i] - pr.y[i] * a[i];
    return f;
  };

  std::vector<double> x(n, 0.0), x_prev(n, 0.0), v(n, 0.0), grad(n), z(n),
      grad0(n), x_best(n, 0.0);
  double t = 1.0;
  double f_best = 0.0;  // objective at alpha = 0
  for (long it = 0; it < kMaxIters; ++it) {
    gemv(H, v, grad);
    for (int i = 0; i < n; ++i) grad[i] -= pr.y[i];
    for (int i = 0; i < n; ++i) z[i] = v[i] - grad[i] / L;
    x_prev = x;
    x = project_box_hyperplane(z, pr.lower, pr.upper);

    // Gradient restart keeps FISTA monotone enough.
    double restart = 0;
    for (int i = 0; i < n; ++i) restart += (v[i] - x[i]) * (x[i] - x_prev[i]);
    if (restart > 0) {
      t = 1.0;
      v = x;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_next;
      for (int i = 0; i < n; ++i) v[i] = x[i] + beta * (x[i] - x_prev[i]);
      t = t_next;
    }

    if (it % 25 == 24 || it == kMaxIters - 1) {
      gemv(H, x, grad0);
      const double b = reference_bias(pr, x, grad0, bound_tol);
      if (kkt_max_violation(pr, x, grad0, b, bound_tol) <= tol)
        return {x, b};
      const double f_now = objective(x, grad0);
      if (f_now > f_best + 1e-10 * (1.0 + std::fabs(f_best))) {
        // step too long for this spectrum: back off and restart momentum
        L *= 2.0;
        x = x_best;
        v = x_best;
        t = 1.0;
      } else if (f_now < f_best) {
        f_best = f_now;
        x_best = x;
      }
    }
  }
  throw std::runtime_error("solve_cil_reference: no convergence (fixture bug)");
}

KktViolationReport check_kkt(const CilProblem& pr, const std::vector<double>& alpha,
                             double b, double bound_tol) {
  if (bound_tol < 0) bound_tol = 1e-9 * (1.0 + pr.C);
  const int n = pr.n;
  const auto& rows = pr.data->rows;
  KktViolationReport rep;
  rep.violation.resize(n);
  double sum = 0, breach = 0;
  for (int i = 0; i < n; ++i) {
    double grad = b - pr.y[i];
    for (int j = 0; j < n; ++j) {
      if (alpha[j] != 0.0)
        grad += alpha[j] * kernel_eval(pr.kernel->spec(), rows[i], rows[j]);
    }
    const double v =
        case_violation(alpha[i], pr.lower[i], pr.upper[i], grad, bound_tol);
    rep.violation[i] = v;
    rep.max_violation = std::max(rep.max_violation, v);
    sum += alpha[i];
    breach += std::max(0.0, pr.lower[i] - alpha[i]) +
              std::max(0.0, alpha[i] - pr.upper[i]);
  }
  rep.sum_alpha = std::fabs(sum);
  rep.box_breach = breach;
  return rep;
}

Model solve_rsvm_reference(const Dataset& ds, const TrainConfig& cfg, double tol) {
  if (ds.n() > kMaxN)
    throw std::invalid_argument("solve_rsvm_reference: n > 500 (reference only)");
  const int n = ds.n();
  KernelCache kernel(ds, cfg.kernel, cfg.cache);
  std::vector<double> mu(n, 0.0);

  CilProblem pr = build_problem(ds, kernel, cfg.C, mu);
  auto [alpha, b] = solve_cil_reference(pr, tol);
  int outer = 0;

  const std::vector<double> H = dense_gram(pr);
  std::vector<double> f(n);
  for (int k = 1; k < cfg.outer_cap; ++k) {
    gemv(H, alpha, f);
    std::vector<double> mu_next(n, 0.0);
    int flips = 0;
    for (int i = 0; i < n; ++i) {
      if (ds.labels[i] * (f[i] + b) < cfg.s) mu_next[i] = cfg.C;
      flips += (mu_next[i] != pr.mu[i]);
    }
    if (flips == 0) break;
    pr = build_problem(ds, kernel, cfg.C, std::move(mu_next));
    std::tie(alpha, b) = solve_cil_reference(pr, tol);
    outer = k;
  }

  Model model;
  model.kernel = cfg.kernel;
  model.C = cfg.C;
  model.s = cfg.s;
  model.bias = b;
  model.outer_iterations = outer + 1;
  for (int i = 0; i < n; ++i) {
    if (alpha[i] != 0.0) {
      model.sv_index.push_back(i);
      model.sv_alpha.push_back(alpha[i]);
      model.sv_row.push_back(ds.rows[i]);
    }
  }
  return model;
}

}  // namespace oracle
}  // namespace rsvm
