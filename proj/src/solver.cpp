#include "rsvm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rsvm/screening.hpp"

namespace rsvm {

namespace {

constexpr double kTau = 1e-12;       // degenerate pairwise-direction guard
constexpr double kGapFloor = -1e-10; // weak-duality breach threshold

double feasibility_tol(const CilProblem& pr) {
  return 1e-8 * std::max(1.0, pr.C) * std::sqrt(static_cast<double>(pr.n));
}

bool is_shrunk(SampleStatus s) {
  return s == SampleStatus::shrunk_low || s == SampleStatus::shrunk_high;
}

void remove_from_active(SolverState& st, int i) {
  auto it = std::lower_bound(st.active.begin(), st.active.end(), i);
  if (it != st.active.end() && *it == i) st.active.erase(it);
}

void insert_into_active(SolverState& st, int i) {
  auto it = std::lower_bound(st.active.begin(), st.active.end(), i);
  if (it == st.active.end() || *it != i) st.active.insert(it, i);
}

// g += delta * K_row(k) for every sample.
void apply_gradient_delta(SolverState& st, const CilProblem& pr, int k,
                          double delta) {
  if (delta == 0.0) return;
  auto row = pr.kernel->row(k);
  const double* h = row->data();
  double* g = st.g.data();
  const int n = pr.n;
  for (int t = 0; t < n; ++t) g[t] += delta * h[t];
}

void verify_gradients(const SolverState& st, const CilProblem& pr, int samples) {
  const int n = pr.n;
  const int step = std::max(1, n / std::max(1, samples));
  for (int i = 0; i < n; i += step) {
    auto row = pr.kernel->row(i);
    double gi = -pr.y[i];
    for (int j = 0; j < n; ++j) gi += st.alpha[j] * (*row)[j];
    if (std::fabs(gi - st.g[i]) > 1e-8)
      throw std::runtime_error("solver: maintained gradient drifted beyond 1e-8");
  }
}

}  // namespace

int SolverState::fixed_low_count() const {
  int c = 0;
  for (auto s : status) c += (s == SampleStatus::fixed_low);
  return c;
}

int SolverState::fixed_high_count() const {
  int c = 0;
  for (auto s : status) c += (s == SampleStatus::fixed_high);
  return c;
}

int SolverState::shrunk_count() const {
  int c = 0;
  for (auto s : status) c += is_shrunk(s);
  return c;
}

SolverState make_initial_state(const CilProblem& pr) {
  SolverState st;
  st.alpha.assign(pr.n, 0.0);
  st.g.resize(pr.n);
  for (int i = 0; i < pr.n; ++i) st.g[i] = -static_cast<double>(pr.y[i]);
  st.status.assign(pr.n, SampleStatus::active);
  st.active.resize(pr.n);
  std::iota(st.active.begin(), st.active.end(), 0);
  return st;
}

SolverState make_state_from(const CilProblem& pr, std::vector<double> alpha,
                            double bias) {
  if (static_cast<int>(alpha.size()) != pr.n)
    throw std::invalid_argument("make_state_from: alpha length mismatch");
  SolverState st = make_initial_state(pr);
  st.bias = bias;
  st.alpha = std::move(alpha);
  for (int j = 0; j < pr.n; ++j) {
    if (st.alpha[j] < pr.lower[j] - 1e-12 || st.alpha[j] > pr.upper[j] + 1e-12)
      throw std::invalid_argument("make_state_from: alpha outside the box");
    apply_gradient_delta(st, pr, j, st.alpha[j]);
  }
  return st;
}

std::optional<std::pair<int, int>> select_working_pair(const SolverState& st,
                                                       const CilProblem& pr,
                                                       double eps) {
  int best_i = -1, best_j = -1;
  double best_up = -std::numeric_limits<double>::infinity();
  double best_dn = std::numeric_limits<double>::infinity();
  for (int k : st.active) {
    const double neg_g = -st.g[k];
    if (st.alpha[k] < pr.upper[k] && neg_g > best_up) {
      best_up = neg_g;
      best_i = k;
    }
    if (st.alpha[k] > pr.lower[k] && neg_g < best_dn) {
      best_dn = neg_g;
      best_j = k;
    }
  }
  if (best_i < 0 || best_j < 0) return std::nullopt;
  if (best_up - best_dn <= eps) return std::nullopt;
  return std::make_pair(best_i, best_j);
}

double estimate_bias(const SolverState& st, const CilProblem& pr,
                     bool* degenerate) {
  if (degenerate) *degenerate = false;
  double sum = 0;
  int nfree = 0;
  const int n = pr.n;
  for (int i = 0; i < n; ++i) {
    if (pr.lower[i] < st.alpha[i] && st.alpha[i] < pr.upper[i]) {
      sum += -st.g[i];
      ++nfree;
    }
  }
  if (nfree > 0) return sum / nfree;

  // Midpoint of the KKT-consistent interval [max_{a<up}(-g), min_{a>lo}(-g)].
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (st.alpha[i] < pr.upper[i]) lo = std::max(lo, -st.g[i]);
    if (st.alpha[i] > pr.lower[i]) hi = std::min(hi, -st.g[i]);
  }
  if (std::isinf(lo) && std::isinf(hi)) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  if (std::isinf(lo)) return hi;
  if (std::isinf(hi)) return lo;
  return 0.5 * (lo + hi);
}

double gap_with_bias(const SolverState& st, const CilProblem& pr, double bias) {
  const int n = pr.n;
  double wnorm2 = 0, hinge_sum = 0, mu_yf = 0, mu_sum = 0, ya = 0;
  for (int i = 0; i < n; ++i) {
    const double y = pr.y[i];
    wnorm2 += (st.g[i] + y) * st.alpha[i];
    const double yf = y * (st.g[i] + bias) + 1.0;
    hinge_sum += std::max(0.0, 1.0 - yf);
    if (pr.mu[i] != 0.0) {
      mu_yf += pr.mu[i] * yf;
      mu_sum += pr.mu[i];
    }
    ya += y * st.alpha[i];
  }
  const double primal = 0.5 * wnorm2 + pr.C * hinge_sum + mu_yf;
  const double dual = -0.5 * wnorm2 + ya + mu_sum;
  return primal - dual;
}

double compute_gap(SolverState& st, const CilProblem& pr) {
  st.bias = estimate_bias(st, pr, &st.bias_degenerate);
  st.gap = gap_with_bias(st, pr, st.bias);
  st.counters.gap_evals++;
  st.counters.max_abs_sum_alpha =
      std::max(st.counters.max_abs_sum_alpha, std::fabs(sum_alpha(st)));
  return st.gap;
}

double dual_objective(const SolverState& st, const CilProblem& pr) {
  double wnorm2 = 0, ya = 0;
  for (int i = 0; i < pr.n; ++i) {
    wnorm2 += (st.g[i] + pr.y[i]) * st.alpha[i];
    ya += pr.y[i] * st.alpha[i];
  }
  return 0.5 * wnorm2 - ya;
}

double sum_alpha(const SolverState& st) {
  double s = 0;
  for (double a : st.alpha) s += a;
  return s;
}

void repair_equality(SolverState& st, const CilProblem& pr) {
  const double tol = 1e-14 * std::max(1.0, pr.C) * pr.n;
  for (int round = 0; round < 4; ++round) {
    const double deficit = -sum_alpha(st);
    if (std::fabs(deficit) <= tol) break;
    const bool up = deficit > 0;
    double total = 0;
    int widest = -1;
    double widest_cap = 0;
    for (int j : st.active) {
      const double cap = up ? pr.upper[j] - st.alpha[j] : st.alpha[j] - pr.lower[j];
      total += cap;
      if (cap > widest_cap) {
        widest_cap = cap;
        widest = j;
      }
    }
    if (total < std::fabs(deficit) || widest < 0)
      throw std::runtime_error("repair_equality: no slack left (infeasible state)");
    for (int j : st.active) {
      const double cap = up ? pr.upper[j] - st.alpha[j] : st.alpha[j] - pr.lower[j];
      if (cap <= 0) continue;
      double move = deficit * (cap / total);
      move = up ? std::min(move, cap) : std::max(move, -cap);
      if (move == 0.0) continue;
      st.alpha[j] += move;
      apply_gradient_delta(st, pr, j, move);
    }
    // Float residue lands on the widest box.
    const double residue = -sum_alpha(st);
    if (std::fabs(residue) > tol && widest >= 0) {
      double move = residue;
      const double cap =
          residue > 0 ? pr.upper[widest] - st.alpha[widest]
                      : -(st.alpha[widest] - pr.lower[widest]);
      move = residue > 0 ? std::min(move, cap) : std::max(move, cap);
      st.alpha[widest] += move;
      apply_gradient_delta(st, pr, widest, move);
    }
  }
}

FixOutcome fix_and_compensate(SolverState& st, const CilProblem& pr, int i,
                              bool to_upper, ScreenRule rule) {
  if (st.status[i] == SampleStatus::fixed_low ||
      st.status[i] == SampleStatus::fixed_high)
    return FixOutcome::fixed;  // already pinned
  if (is_shrunk(st.status[i])) {
    // A safe fix supersedes the heuristic parking.
    st.status[i] = SampleStatus::active;
    insert_into_active(st, i);
  }

  const double target = to_upper ? pr.upper[i] : pr.lower[i];
  const double delta = target - st.alpha[i];
  if (delta != 0.0) {
    // Partners absorb -delta without leaving their boxes, largest slack first.
    struct Cap {
      double cap;
      int j;
    };
    std::vector<Cap> caps;
    double total = 0;
    for (int j : st.active) {
      if (j == i) continue;
      const double cap =
          delta > 0 ? st.alpha[j] - pr.lower[j] : pr.upper[j] - st.alpha[j];
      if (cap > 0) {
        caps.push_back({cap, j});
        total += cap;
      }
    }
    if (total < std::fabs(delta)) return FixOutcome::deferred;
    std::sort(caps.begin(), caps.end(), [](const Cap& a, const Cap& b) {
      if (a.cap != b.cap) return a.cap > b.cap;
      return a.j < b.j;
    });
    double remaining = std::fabs(delta);
    for (const Cap& c : caps) {
      if (remaining <= 0) break;
      const double take = std::min(c.cap, remaining);
      remaining -= take;
      double moved;
      if (delta > 0) {
        if (take == c.cap) {
          moved = pr.lower[c.j] - st.alpha[c.j];
          st.alpha[c.j] = pr.lower[c.j];
        } else {
          moved = -take;
          st.alpha[c.j] -= take;
        }
      } else {
        if (take == c.cap) {
          moved = pr.upper[c.j] - st.alpha[c.j];
          st.alpha[c.j] = pr.upper[c.j];
        } else {
          moved = take;
          st.alpha[c.j] += take;
        }
      }
      apply_gradient_delta(st, pr, c.j, moved);
    }
    st.alpha[i] = target;
    apply_gradient_delta(st, pr, i, delta);
  } else {
    st.alpha[i] = target;
  }

  st.status[i] = to_upper ? SampleStatus::fixed_high : SampleStatus::fixed_low;
  remove_from_active(st, i);
  if (rule == ScreenRule::dynamic)
    st.counters.fixed_dynamic++;
  else
    st.counters.fixed_propagation++;
  return FixOutcome::fixed;
}

namespace {

// Analytic two-variable step along e_i - e_j; returns the objective change.
double smo_step(SolverState& st, const CilProblem& pr, int i, int j) {
  auto row_i = pr.kernel->row(i);
  auto row_j = pr.kernel->row(j);
  double eta = pr.kernel->diag(i) + pr.kernel->diag(j) - 2.0 * (*row_i)[j];
  if (eta < kTau) eta = kTau;

  const double gi = st.g[i], gj = st.g[j];
  const double room_i = pr.upper[i] - st.alpha[i];
  const double room_j = st.alpha[j] - pr.lower[j];
  double delta = (gj - gi) / eta;
  delta = std::min(delta, std::min(room_i, room_j));
  if (!std::isfinite(delta))
    throw std::runtime_error("solver: non-finite step (NaN in gradient?)");

  if (delta == room_i)
    st.alpha[i] = pr.upper[i];
  else
    st.alpha[i] += delta;
  if (delta == room_j)
    st.alpha[j] = pr.lower[j];
  else
    st.alpha[j] -= delta;

  const double* hi = row_i->data();
  const double* hj = row_j->data();
  double* g = st.g.data();
  const int n = pr.n;
  for (int t = 0; t < n; ++t) g[t] += delta * (hi[t] - hj[t]);

  return delta * (gi - gj) + 0.5 * delta * delta * eta;
}

void retry_pending(SolverState& st, const CilProblem& pr) {
  if (st.pending_fixes.empty()) return;
  std::vector<PendingFix> keep;
  for (const PendingFix& p : st.pending_fixes) {
    if (st.status[p.sample] == SampleStatus::fixed_low ||
        st.status[p.sample] == SampleStatus::fixed_high)
      continue;
    if (fix_and_compensate(st, pr, p.sample, p.to_upper, p.rule) ==
        FixOutcome::deferred)
      keep.push_back(p);
  }
  st.pending_fixes = std::move(keep);
}

void push_trajectory(SolverState& st, double gap, ScreenRule rule) {
  TrajectoryPoint tp;
  tp.iter = st.iter;
  tp.gap = gap;
  tp.active = static_cast<int>(st.active.size());
  tp.fixed_low = st.fixed_low_count();
  tp.fixed_high = st.fixed_high_count();
  tp.shrunk = st.shrunk_count();
  tp.deferred = static_cast<int>(st.pending_fixes.size());
  tp.rule = rule;
  st.trajectory.push_back(tp);
}

// Two-strike shrinking: a sample pressed against its bound with margin above
// the threshold on two consecutive checks is parked there until un-shrinking.
void shrink_pass(SolverState& st, const CilProblem& pr, double threshold,
                 std::vector<signed char>& strikes) {
  const double b = estimate_bias(st, pr);
  std::vector<int> snapshot = st.active;
  for (int i : snapshot) {
    const double grad = st.g[i] + b;
    signed char next = 0;
    if (st.alpha[i] == pr.lower[i] && grad > threshold)
      next = static_cast<signed char>(strikes[i] >= 0 ? strikes[i] + 1 : 1);
    else if (st.alpha[i] == pr.upper[i] && grad < -threshold)
      next = static_cast<signed char>(strikes[i] <= 0 ? strikes[i] - 1 : -1);
    strikes[i] = next;
    if (next >= 2) {
      st.status[i] = SampleStatus::shrunk_low;
      remove_from_active(st, i);
      st.counters.shrunk_events++;
      strikes[i] = 0;
    } else if (next <= -2) {
      st.status[i] = SampleStatus::shrunk_high;
      remove_from_active(st, i);
      st.counters.shrunk_events++;
      strikes[i] = 0;
    }
  }
}

bool unshrink_all(SolverState& st, std::vector<signed char>& strikes) {
  bool any = false;
  for (int i = 0; i < st.n(); ++i) {
    if (is_shrunk(st.status[i])) {
      st.status[i] = SampleStatus::active;
      insert_into_active(st, i);
      any = true;
    }
  }
  if (any) std::fill(strikes.begin(), strikes.end(), 0);
  return any;
}

}  // namespace

SolverState solve(const CilProblem& pr, SolverState st, const SolverConfig& cfg,
                  const std::vector<PendingFix>* prefix) {
  if (st.n() != pr.n) throw std::invalid_argument("solve: state size mismatch");
  for (int i = 0; i < pr.n; ++i) {
    if (st.alpha[i] < pr.lower[i] - 1e-9 * std::max(1.0, pr.C) ||
        st.alpha[i] > pr.upper[i] + 1e-9 * std::max(1.0, pr.C))
      throw std::invalid_argument("solve: warm alpha outside the box");
  }
  const long cap = cfg.max_iter > 0 ? cfg.max_iter : 200L * pr.n;
  const std::uint64_t evals0 = pr.kernel->eval_count();
  const std::uint64_t rows0 = pr.kernel->row_builds();

  if (std::fabs(sum_alpha(st)) > feasibility_tol(pr)) repair_equality(st, pr);

  if (prefix) {
    for (const PendingFix& p : *prefix) {
      if (fix_and_compensate(st, pr, p.sample, p.to_upper, p.rule) ==
          FixOutcome::deferred) {
        st.pending_fixes.push_back(p);
        st.counters.deferrals++;
      }
    }
  }

  std::vector<signed char> strikes(pr.n, 0);
  double eff_eps = cfg.eps;
  // Backed off whenever an un-shrink pass proves the heuristic wrong, so a
  // borderline sample cannot be parked and released in a cycle.
  double shrink_threshold = cfg.shrink_threshold;
  bool handoff_crossed = false;
  const bool has_handoff = cfg.handoff_gap > 0;

  auto safe_phase = [&] { return cfg.screening && !(has_handoff && handoff_crossed); };
  auto shrink_phase = [&] {
    return cfg.shrinking && (!has_handoff || handoff_crossed);
  };

  for (;;) {
    if (st.iter >= cap) {
      st.hit_iter_cap = true;
      break;
    }
    auto pair = select_working_pair(st, pr, eff_eps);
    if (!pair) {
      if (st.shrunk_count() > 0 && unshrink_all(st, strikes)) {
        pair = select_working_pair(st, pr, eff_eps);
        if (pair) {
          st.counters.unshrink_resumes++;
          shrink_threshold *= 4.0;
        }
      }
      if (!pair) {
        if (cfg.target_gap > 0) {
          const double g = compute_gap(st, pr);
          if (g > cfg.target_gap && eff_eps > 1e-14) {
            eff_eps = std::max(eff_eps * 0.1, 1e-14);
            continue;
          }
        }
        break;
      }
    }

    const double dobj = smo_step(st, pr, pair->first, pair->second);
    st.iter++;
    st.counters.iterations = st.iter;
    if (cfg.debug_checks) {
      st.counters.max_step_obj_increase =
          std::max(st.counters.max_step_obj_increase, dobj);
      if (st.iter % 100 == 0) verify_gradients(st, pr, 8);
    }

    if (safe_phase() && schedule(st.iter, cfg.screen_warmup, cfg.screen_every)) {
      const double gap = compute_gap(st, pr);
      if (gap < kGapFloor)
        throw std::runtime_error("solver: duality gap below -1e-10");
      retry_pending(st, pr);
      dynamic_screen(st, pr, gap, cfg.audit);
      push_trajectory(st, gap, ScreenRule::dynamic);
      if (has_handoff && gap <= cfg.handoff_gap) handoff_crossed = true;
    }
    if (shrink_phase() && schedule(st.iter, cfg.shrink_warmup, cfg.shrink_every))
      shrink_pass(st, pr, shrink_threshold, strikes);
  }

  if (st.shrunk_count() > 0) unshrink_all(st, strikes);  // iteration-cap exit

  double final_gap = compute_gap(st, pr);
  if (final_gap < kGapFloor)
    throw std::runtime_error("solver: duality gap below -1e-10");
  if (cfg.screening && !st.hit_iter_cap && safe_phase()) {
    retry_pending(st, pr);
    dynamic_screen(st, pr, final_gap, cfg.audit);
    final_gap = compute_gap(st, pr);  // fixes may have nudged partners
    if (final_gap < kGapFloor)
      throw std::runtime_error("solver: duality gap below -1e-10");
  }
  push_trajectory(st, final_gap, ScreenRule::dynamic);
  st.counters.kernel_evals = pr.kernel->eval_count() - evals0;
  st.counters.kernel_rows = pr.kernel->row_builds() - rows0;
  if (cfg.debug_checks) verify_gradients(st, pr, 8);
  return st;
}

}  // namespace rsvm
