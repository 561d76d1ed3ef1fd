#include "rsvm/screening.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rsvm {

bool schedule(long iter, int warmup, int cadence) {
  if (iter < warmup) return false;
  if (cadence <= 0) return true;
  return (iter - warmup) % cadence == 0;
}

ScreeningReport dynamic_screen(SolverState& st, const CilProblem& pr, double gap,
                               bool audit) {
  if (gap < -1e-10)
    throw std::runtime_error("dynamic_screen: negative duality gap (invariant breach)");
  const double gpos = std::max(gap, 0.0);

  ScreeningReport rep;
  rep.rule = ScreenRule::dynamic;
  rep.iter = st.iter;
  rep.gap = gap;

  // Evaluate on a snapshot of the active set, then execute fixes serially.
  struct Hit {
    int sample;
    bool to_upper;
    double radius;
  };
  std::vector<Hit> hits;
  for (int i : st.active) {
    const double radius = std::sqrt(pr.kernel->diag(i) * gpos);
    const double grad = st.g[i] + st.bias;
    if (grad > radius)
      hits.push_back({i, false, radius});
    else if (grad < -radius)
      hits.push_back({i, true, radius});
  }
  rep.kept = static_cast<int>(st.active.size() - hits.size());

  for (const Hit& h : hits) {
    const FixOutcome out =
        fix_and_compensate(st, pr, h.sample, h.to_upper, ScreenRule::dynamic);
    if (out == FixOutcome::deferred) {
      st.pending_fixes.push_back({h.sample, h.to_upper, ScreenRule::dynamic});
      st.counters.deferrals++;
      rep.deferred++;
    } else {
      h.to_upper ? rep.screened_high++ : rep.screened_low++;
    }
    if (audit) {
      ScreenDecision d{h.sample, ScreenRule::dynamic, h.to_upper, h.radius, gap,
                       st.iter};
      st.audit_log.push_back(d);
      rep.decisions.push_back(d);
    }
  }

  rep.screened_fraction =
      static_cast<double>(st.fixed_low_count() + st.fixed_high_count()) / pr.n;
  st.counters.screen_passes++;
  return rep;
}

WarmStart make_warm_start(const SolverState& prev, const CilProblem& pr_prev,
                          const CilProblem& pr_next) {
  if (prev.n() != pr_next.n)
    throw std::invalid_argument("make_warm_start: size mismatch");

  WarmStart w;
  SolverState st;
  st.alpha = prev.alpha;
  st.g = prev.g;
  st.status.assign(pr_next.n, SampleStatus::active);
  st.active.resize(pr_next.n);
  std::iota(st.active.begin(), st.active.end(), 0);
  st.bias = prev.bias;

  // alpha^{k+1,0}_i = alpha^k_i + y_i (mu^k_i - mu^{k+1}_i); beta stays in
  // [0, C] so the shifted point is box-feasible for the new bounds.
  for (int i = 0; i < pr_next.n; ++i) {
    const double dmu = pr_prev.mu[i] - pr_next.mu[i];
    if (dmu != 0.0) {
      st.alpha[i] += pr_next.y[i] * dmu;
      st.alpha[i] = std::clamp(st.alpha[i], pr_next.lower[i], pr_next.upper[i]);
      w.changed.push_back(i);
    }
  }

  // Fold the shift into the gradients, then repair the equality constraint
  // (repair_equality keeps gradients in step with its own moves).
  for (int i : w.changed) {
    const double d = st.alpha[i] - prev.alpha[i];
    if (d != 0.0) {
      auto row = pr_next.kernel->row(i);
      const double* h = row->data();
      for (int t = 0; t < pr_next.n; ++t) st.g[t] += d * h[t];
    }
  }
  repair_equality(st, pr_next);

  double disp2 = 0;
  for (int i = 0; i < pr_next.n; ++i) {
    const double d = st.alpha[i] - prev.alpha[i];
    disp2 += d * d;
  }
  w.displacement_norm = std::sqrt(disp2);

  // Gap at the warm point with the carried bias (n_b = 0 relies on it).
  st.gap = gap_with_bias(st, pr_next, st.bias);
  w.state = std::move(st);
  return w;
}

PropagationBounds compute_propagation_bounds(const SolverState& prev,
                                             const CilProblem& pr_next,
                                             const WarmStart& warm) {
  PropagationBounds b;
  b.m = warm.displacement_norm;
  b.n_b = 0.0;
  b.changed = warm.changed;
  b.gap_prev = prev.gap;
  b.gap_warm = warm.state.gap;
  const double dgap = std::fabs(b.gap_warm - b.gap_prev);
  b.q.resize(pr_next.n);
  for (int i = 0; i < pr_next.n; ++i)
    b.q[i] = std::sqrt(pr_next.kernel->diag(i) * dgap);
  return b;
}

PropagationResult propagate_screen(const SolverState& prev, const CilProblem& pr_next,
                                   const PropagationBounds& bounds,
                                   const std::vector<double>& row_norms,
                                   bool audit) {
  if (static_cast<int>(row_norms.size()) != pr_next.n)
    throw std::invalid_argument(
        "propagate_screen: row norms missing; enable row-norm precomputation "
        "on the kernel cache");
  PropagationResult res;
  res.report.rule = ScreenRule::propagation;
  res.report.iter = prev.iter;
  res.report.gap = prev.gap;

  const double gpos = std::max(prev.gap, 0.0);
  for (int i = 0; i < pr_next.n; ++i) {
    const double grad = prev.g[i] + prev.bias;
    const double radius = std::sqrt(pr_next.kernel->diag(i) * gpos);
    const double slack = bounds.m * row_norms[i] + bounds.n_b + bounds.q[i];
    bool screened = false, to_upper = false;
    if (grad - radius - slack > 0) {
      screened = true;
      to_upper = false;
    } else if (grad + radius + slack < 0) {
      screened = true;
      to_upper = true;
    }
    if (screened) {
      res.prefix.push_back({i, to_upper, ScreenRule::propagation});
      to_upper ? res.report.screened_high++ : res.report.screened_low++;
      if (audit)
        res.report.decisions.push_back(
            {i, ScreenRule::propagation, to_upper, radius + slack, prev.gap,
             prev.iter});
    } else {
      res.report.kept++;
    }
  }
  res.report.screened_fraction =
      static_cast<double>(res.report.screened_low + res.report.screened_high) /
      pr_next.n;
  return res;
}

}  // namespace rsvm
