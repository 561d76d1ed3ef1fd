#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "rsvm/cil.hpp"

namespace rsvm {

enum class SampleStatus : unsigned char {
  active,
  fixed_low,    // safe-screened, alpha pinned at lower
  fixed_high,   // safe-screened, alpha pinned at upper
  shrunk_low,   // heuristically parked at lower (unsafe, un-shrunk before exit)
  shrunk_high,
};

enum class ScreenRule : unsigned char { dynamic, propagation };
enum class FixOutcome { fixed, deferred };

struct SolverConfig {
  double eps = 1e-8;        // KKT violation tolerance
  long max_iter = 0;        // 0 -> 200 * n
  double target_gap = 0.0;  // >0: keep tightening eps until the gap drops below

  bool screening = false;   // dynamic safe rule on the scheduler below
  int screen_warmup = 50;
  int screen_every = 10;

  bool shrinking = false;   // unsafe heuristic, two-strike rule
  int shrink_warmup = 50;
  int shrink_every = 100;
  double shrink_threshold = 0.01;

  // >0 (shrink+safe protocol): screening until gap <= handoff_gap, shrinking
  // only afterwards.
  double handoff_gap = 0.0;

  bool audit = false;        // per-sample screening decision log
  bool debug_checks = false; // gradient re-derivation, step monotonicity, ...
};

struct ScreenDecision {
  int sample;
  ScreenRule rule;
  bool to_upper;   // false: alpha* = lower, true: alpha* = upper
  double radius;
  double gap;
  long iter;
};

struct TrajectoryPoint {
  int outer = 0;  // stamped by the CCCP driver
  long iter = 0;
  double gap = 0;
  int active = 0;
  int fixed_low = 0;
  int fixed_high = 0;
  int shrunk = 0;
  int deferred = 0;
  ScreenRule rule = ScreenRule::dynamic;
};

struct SolverCounters {
  long iterations = 0;
  long gap_evals = 0;
  long screen_passes = 0;
  long fixed_dynamic = 0;
  long fixed_propagation = 0;
  long deferrals = 0;
  long shrunk_events = 0;
  long unshrink_resumes = 0;
  std::uint64_t kernel_evals = 0;  // raw kernel evaluations during this solve
  std::uint64_t kernel_rows = 0;   // kernel rows built during this solve
  double max_step_obj_increase = 0;  // debug: largest dual-objective increase per step
  double max_abs_sum_alpha = 0;      // largest |sum alpha| seen at checkpoints
};

struct PendingFix {
  int sample;
  bool to_upper;
  ScreenRule rule;
};

struct SolverState {
  std::vector<double> alpha;
  std::vector<double> g;  // g_i = sum_j alpha_j H_ij - y_i, maintained for all i
  std::vector<SampleStatus> status;
  std::vector<int> active;  // ascending indices with status == active
  std::vector<PendingFix> pending_fixes;  // deferred screening fixes, retried

  double bias = 0.0;
  bool bias_degenerate = false;
  double gap = std::numeric_limits<double>::infinity();
  long iter = 0;
  bool hit_iter_cap = false;

  SolverCounters counters;
  std::vector<TrajectoryPoint> trajectory;
  std::vector<ScreenDecision> audit_log;

  int n() const { return static_cast<int>(alpha.size()); }
  int fixed_low_count() const;
  int fixed_high_count() const;
  int shrunk_count() const;
};

SolverState make_initial_state(const CilProblem& pr);  // alpha = 0

// State from explicit alphas; gradients are rebuilt from kernel rows (O(n rows)).
SolverState make_state_from(const CilProblem& pr, std::vector<double> alpha,
                            double bias = 0.0);

// Maximal violating pair over the active set: i = argmax_{a<upper}(-g),
// j = argmin_{a>lower}(-g); nullopt once (-g_i) - (-g_j) <= eps or either
// candidate set is empty. Ties break to the lowest index.
std::optional<std::pair<int, int>> select_working_pair(const SolverState& st,
                                                       const CilProblem& pr,
                                                       double eps);

// Mean of -g over free variables; with no free variables, the midpoint of the
// KKT-consistent interval [max_{a<upper}(-g), min_{a>lower}(-g)]. With no
// candidates at all returns 0 and sets *degenerate.
double estimate_bias(const SolverState& st, const CilProblem& pr,
                     bool* degenerate = nullptr);

// Duality gap at the state's alpha with an explicit bias choice.
double gap_with_bias(const SolverState& st, const CilProblem& pr, double bias);

// Refreshes st.bias (estimate_bias) and st.gap; returns the gap.
double compute_gap(SolverState& st, const CilProblem& pr);

// 1/2 a^T H a - y^T a, from the maintained gradients.
double dual_objective(const SolverState& st, const CilProblem& pr);

double sum_alpha(const SolverState& st);

// Restores sum(alpha) = 0 by distributing the deficit over active samples
// proportionally to their slack in the needed direction (largest slack takes
// the float residue); refreshes gradients for every touched sample.
void repair_equality(SolverState& st, const CilProblem& pr);

// Pins alpha_i at the requested bound, moving the offset onto active partners
// (largest slack first) so that sum(alpha) is preserved; gradients follow.
// Returns deferred when the partners cannot absorb the offset.
FixOutcome fix_and_compensate(SolverState& st, const CilProblem& pr, int i,
                              bool to_upper, ScreenRule rule);

// SMO driver. Starts from `warm` (repairing sum(alpha) if needed), optionally
// pre-fixing `prefix` samples (propagation screening), then runs analytic
// pairwise steps with the configured screening/shrinking schedules until the
// KKT violation drops below eps (and, if set, the gap below target_gap).
// Iteration-cap exhaustion is flagged on the state, not thrown.
SolverState solve(const CilProblem& pr, SolverState warm, const SolverConfig& cfg,
                  const std::vector<PendingFix>* prefix = nullptr);

inline SolverState solve(const CilProblem& pr, const SolverConfig& cfg) {
  return solve(pr, make_initial_state(pr), cfg);
}

}  // namespace rsvm
