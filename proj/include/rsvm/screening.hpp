#pragma once

#include <vector>

#include "rsvm/solver.hpp"

namespace rsvm {

struct ScreeningReport {
  ScreenRule rule = ScreenRule::dynamic;
  long iter = 0;
  double gap = 0;
  int screened_low = 0;
  int screened_high = 0;
  int deferred = 0;
  int kept = 0;
  double screened_fraction = 0;  // cumulative fixed share after this pass
  std::vector<ScreenDecision> decisions;  // filled when audit is on
};

// True iff iter >= warmup and (iter - warmup) % cadence == 0.
bool schedule(long iter, int warmup, int cadence);

// Dynamic rule at the current state: with r_i = sqrt(K_ii * gap) and
// grad_i = g_i + bias, grad_i > r_i pins alpha*_i = lower and
// grad_i < -r_i pins alpha*_i = upper. Decisions are evaluated on a snapshot
// of the active set, then executed through fix_and_compensate; fixes without
// partner capacity are parked on st.pending_fixes for the next pass.
// A gap below -1e-10 is an invariant breach and throws.
ScreeningReport dynamic_screen(SolverState& st, const CilProblem& pr, double gap,
                               bool audit);

// Warm start for the next CIL problem: alpha_i += y_i (mu^k_i - mu^{k+1}_i) on
// the changed set, equality repaired, gradients updated incrementally, bias
// carried over, and the gap re-evaluated against the next problem.
struct WarmStart {
  SolverState state;
  std::vector<int> changed;
  double displacement_norm = 0;  // ||alpha_warm - alpha_prev||_2, repair included
};

WarmStart make_warm_start(const SolverState& prev, const CilProblem& pr_prev,
                          const CilProblem& pr_next);

struct PropagationBounds {
  double m = 0;    // bound on ||alpha^{k+1} - alpha^k||_2 (exact warm value)
  double n_b = 0;  // bound on |b'^{k+1} - b'^k| (0: bias carried over)
  std::vector<double> q;  // sqrt(K_ii * |G_D(warm) - G_D(prev)|)
  std::vector<int> changed;  // indices where mu changed
  double gap_prev = 0;
  double gap_warm = 0;
};

PropagationBounds compute_propagation_bounds(const SolverState& prev,
                                             const CilProblem& pr_next,
                                             const WarmStart& warm);

// Propagation rule between successive CIL problems, evaluated on the previous
// converged state: screened_low when
//   grad^k_i - sqrt(K_ii G^k) - m ||I_i|| - n_b - q_i > 0,
// screened_high when
//   grad^k_i + sqrt(K_ii G^k) + m ||I_i|| + n_b + q_i < 0.
// Screened samples enter the next solve pre-fixed at the new problem's bound.
struct PropagationResult {
  ScreeningReport report;
  std::vector<PendingFix> prefix;
};

PropagationResult propagate_screen(const SolverState& prev, const CilProblem& pr_next,
                                   const PropagationBounds& bounds,
                                   const std::vector<double>& row_norms, bool audit);

}  // namespace rsvm
