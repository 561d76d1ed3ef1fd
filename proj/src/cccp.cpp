#include "rsvm/cccp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rsvm {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::none: return "none";
    case Mode::safe: return "safe";
    case Mode::shrink: return "shrink";
    case Mode::shrink_safe: return "shrink+safe";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "none") return Mode::none;
  if (s == "safe") return Mode::safe;
  if (s == "shrink") return Mode::shrink;
  if (s == "shrink+safe" || s == "shrink_safe") return Mode::shrink_safe;
  throw std::invalid_argument("unknown mode: " + s);
}

double hinge(double s, double z) { return std::max(0.0, s - z); }

double ramp_loss(double s, double z) { return hinge(1.0, z) - hinge(s, z); }

std::vector<double> compute_mu(const SolverState& st, const CilProblem& pr,
                               double s, double C) {
  std::vector<double> mu(pr.n, 0.0);
  for (int i = 0; i < pr.n; ++i) {
    const double yf = pr.y[i] * (st.g[i] + st.bias) + 1.0;
    if (yf < s) mu[i] = C;
  }
  return mu;
}

double ramp_objective(const SolverState& st, const CilProblem& pr, double s) {
  double wnorm2 = 0, loss = 0;
  for (int i = 0; i < pr.n; ++i) {
    wnorm2 += (st.g[i] + pr.y[i]) * st.alpha[i];
    const double yf = pr.y[i] * (st.g[i] + st.bias) + 1.0;
    loss += ramp_loss(s, yf);
  }
  return 0.5 * wnorm2 + pr.C * loss;
}

namespace {

void validate_train_config(const Dataset& ds, const TrainConfig& cfg) {
  if (ds.n() < 1) throw std::invalid_argument("train: empty dataset");
  if (!(cfg.C > 0)) throw std::invalid_argument("train: C must be > 0");
  if (!(cfg.s <= 0)) throw std::invalid_argument("train: s must be <= 0");
  if (!(cfg.eps > 0)) throw std::invalid_argument("train: eps must be > 0");
  if (cfg.kernel.kind == KernelKind::gaussian && !(cfg.kernel.kappa > 0))
    throw std::invalid_argument("train: gaussian kappa must be > 0");
}

bool propagation_active(const TrainConfig& cfg) {
  return cfg.propagation &&
         (cfg.mode == Mode::safe || cfg.mode == Mode::shrink_safe);
}

SolverConfig solver_config_for(const TrainConfig& cfg) {
  SolverConfig s;
  s.eps = cfg.eps;
  s.max_iter = cfg.max_inner_iter;
  s.target_gap = cfg.target_gap;
  s.screen_warmup = cfg.screen_warmup;
  s.screen_every = cfg.screen_every;
  s.shrink_warmup = cfg.shrink_warmup;
  s.shrink_every = cfg.shrink_every;
  s.shrink_threshold = cfg.shrink_threshold;
  s.audit = cfg.audit;
  s.debug_checks = cfg.debug_checks;
  switch (cfg.mode) {
    case Mode::none: break;
    case Mode::safe: s.screening = true; break;
    case Mode::shrink: s.shrinking = true; break;
    case Mode::shrink_safe:
      s.screening = true;
      s.shrinking = true;
      s.handoff_gap = cfg.handoff_gap;
      break;
  }
  return s;
}

void absorb_outer(CccpTrace& trace, SolverState& st, const CilProblem& pr,
                  const TrainConfig& cfg, int outer, int flips, double wall_sec) {
  OuterRecord rec;
  rec.outer = outer;
  rec.mu_flips = flips;
  rec.ramp_objective = ramp_objective(st, pr, cfg.s);
  rec.cil_iterations = st.iter;
  rec.hit_iter_cap = st.hit_iter_cap;
  rec.fixed_dynamic = static_cast<int>(st.counters.fixed_dynamic);
  rec.fixed_propagation = static_cast<int>(st.counters.fixed_propagation);
  rec.shrunk = static_cast<int>(st.counters.shrunk_events);
  rec.final_gap = st.gap;
  rec.wall_sec = wall_sec;
  trace.outer.push_back(rec);

  for (TrajectoryPoint tp : st.trajectory) {
    tp.outer = outer;
    trace.trajectory.push_back(tp);
  }
  if (cfg.audit) {
    for (const ScreenDecision& d : st.audit_log)
      trace.audit_decisions.push_back({outer, d});
    trace.mu_history.push_back(pr.mu);
  }
}

// Tangent upper bound of the concave part: for each sample,
// -C H_s(z_new) <= mu (z_new - z_old) - C H_s(z_old) + slack.
void check_tangent_majorization(const std::vector<double>& z_old,
                                const SolverState& st, const CilProblem& pr,
                                double s) {
  for (int i = 0; i < pr.n; ++i) {
    const double z_new = pr.y[i] * (st.g[i] + st.bias) + 1.0;
    const double lhs = -pr.C * hinge(s, z_new);
    const double rhs = pr.mu[i] * (z_new - z_old[i]) - pr.C * hinge(s, z_old[i]);
    if (lhs > rhs + 1e-8)
      throw std::runtime_error("cccp: tangent majorization violated");
  }
}

}  // namespace

std::pair<Model, CccpTrace> train(const Dataset& ds, const TrainConfig& cfg) {
  validate_train_config(ds, cfg);
  const int n = ds.n();

  KernelCacheConfig kc = cfg.cache;
  if (propagation_active(cfg)) kc.enable_row_norms = true;
  KernelCache kernel(ds, cfg.kernel, kc);
  const SolverConfig scfg = solver_config_for(cfg);

  CccpTrace trace;
  std::vector<double> mu(n, 0.0);  // first CIL is the plain hinge SVM
  CilProblem pr = build_problem(ds, kernel, cfg.C, mu);

  auto tick = [] { return std::chrono::steady_clock::now(); };
  auto secs = [](auto a, auto b) {
    return std::chrono::duration<double>(b - a).count();
  };

  auto t0 = tick();
  SolverState st = solve(pr, make_initial_state(pr), scfg);
  absorb_outer(trace, st, pr, cfg, 0, 0, secs(t0, tick()));

  int outer = 0;
  for (int k = 1; k <= cfg.outer_cap; ++k) {
    std::vector<double> mu_next = compute_mu(st, pr, cfg.s, cfg.C);
    int flips = 0;
    for (int i = 0; i < n; ++i) flips += (mu_next[i] != pr.mu[i]);
    if (flips == 0) break;
    if (k == cfg.outer_cap) {
      trace.outer_cap_hit = true;
      break;
    }

    CilProblem pr_next = build_problem(ds, kernel, cfg.C, std::move(mu_next));

    std::vector<double> z_old;
    if (cfg.debug_checks || cfg.audit) {
      z_old.resize(n);
      for (int i = 0; i < n; ++i)
        z_old[i] = pr.y[i] * (st.g[i] + st.bias) + 1.0;
    }

    auto t1 = tick();
    WarmStart warm = make_warm_start(st, pr, pr_next);
    std::vector<PendingFix> prefix;
    if (propagation_active(cfg)) {
      PropagationBounds bounds = compute_propagation_bounds(st, pr_next, warm);
      PropagationResult res =
          propagate_screen(st, pr_next, bounds, kernel.row_norms(), cfg.audit);
      prefix = std::move(res.prefix);
      if (cfg.audit)
        for (const ScreenDecision& d : res.report.decisions)
          trace.audit_decisions.push_back({k, d});
      TrajectoryPoint tp;
      tp.outer = k;
      tp.iter = 0;
      tp.gap = warm.state.gap;
      tp.active = n - static_cast<int>(prefix.size());
      tp.fixed_low = res.report.screened_low;
      tp.fixed_high = res.report.screened_high;
      tp.rule = ScreenRule::propagation;
      trace.trajectory.push_back(tp);
    }

    st = solve(pr_next, std::move(warm.state), scfg, &prefix);
    pr = std::move(pr_next);
    outer = k;
    if (cfg.debug_checks || cfg.audit)
      check_tangent_majorization(z_old, st, pr, cfg.s);
    absorb_outer(trace, st, pr, cfg, k, flips, secs(t1, tick()));
  }

  Model model;
  model.kernel = cfg.kernel;
  model.C = cfg.C;
  model.s = cfg.s;
  model.bias = st.bias;
  model.outer_iterations = outer + 1;
  model.final_gap = st.gap;
  for (int i = 0; i < n; ++i) {
    if (st.alpha[i] != 0.0) {
      model.sv_index.push_back(i);
      model.sv_alpha.push_back(st.alpha[i]);
      model.sv_row.push_back(ds.rows[i]);
    }
  }
  return {std::move(model), std::move(trace)};
}

double predict_score(const Model& model, const SparseRow& x) {
  double s = model.bias;
  for (int k = 0; k < model.sv_count(); ++k)
    s += model.sv_alpha[k] * kernel_eval(model.kernel, model.sv_row[k], x);
  return s;
}

int predict_label(double score) { return score >= 0 ? 1 : -1; }

void save_model(const Model& model, std::ostream& out) {
  char buf[512];
  out << "rsvm-model v1\n";
  if (model.kernel.kind == KernelKind::linear) {
    out << "kernel linear\n";
  } else {
    std::snprintf(buf, sizeof buf, "kernel gaussian %.17g\n", model.kernel.kappa);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "C %.17g\ns %.17g\nbias %.17g\nnsv %d\n",
                model.C, model.s, model.bias, model.sv_count());
  out << buf;
  for (int k = 0; k < model.sv_count(); ++k) {
    std::snprintf(buf, sizeof buf, "%d %.17g", model.sv_index[k],
                  model.sv_alpha[k]);
    out << buf;
    for (const Feature& f : model.sv_row[k]) {
      std::snprintf(buf, sizeof buf, " %d:%.17g", f.index, f.value);
      out << buf;
    }
    out << '\n';
  }
}

namespace {

[[noreturn]] void model_fail(const std::string& what) {
  throw std::runtime_error("model file: " + what);
}

}  // namespace

Model load_model(std::istream& in) {
  Model m;
  std::string line, word;
  if (!std::getline(in, line) || line != "rsvm-model v1")
    model_fail("missing 'rsvm-model v1' header");

  int nsv = -1;
  while (nsv < 0 && std::getline(in, line)) {
    std::istringstream ls(line);
    if (!(ls >> word)) model_fail("empty header line");
    if (word == "kernel") {
      std::string kind;
      if (!(ls >> kind)) model_fail("bad kernel line");
      if (kind == "linear") {
        m.kernel.kind = KernelKind::linear;
      } else if (kind == "gaussian") {
        m.kernel.kind = KernelKind::gaussian;
        if (!(ls >> m.kernel.kappa)) model_fail("bad gaussian width");
      } else {
        model_fail("unknown kernel kind " + kind);
      }
    } else if (word == "C") {
      if (!(ls >> m.C)) model_fail("bad C");
    } else if (word == "s") {
      if (!(ls >> m.s)) model_fail("bad s");
    } else if (word == "bias") {
      if (!(ls >> m.bias)) model_fail("bad bias");
    } else if (word == "nsv") {
      if (!(ls >> nsv) || nsv < 0) model_fail("bad nsv");
    } else {
      model_fail("unknown header field " + word);
    }
  }
  if (nsv < 0) model_fail("truncated header");

  for (int k = 0; k < nsv; ++k) {
    if (!std::getline(in, line)) model_fail("truncated SV list");
    std::istringstream ls(line);
    int idx;
    double alpha;
    if (!(ls >> idx >> alpha)) model_fail("bad SV line");
    SparseRow row;
    std::string tok;
    int prev = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) model_fail("bad feature token " + tok);
      const int fi = std::stoi(tok.substr(0, colon));
      const double fv = std::stod(tok.substr(colon + 1));
      if (fi <= prev) model_fail("non-increasing feature indices");
      prev = fi;
      row.push_back({fi, fv});
    }
    m.sv_index.push_back(idx);
    m.sv_alpha.push_back(alpha);
    m.sv_row.push_back(std::move(row));
  }
  return m;
}

void save_model_file(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  save_model(model, out);
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_model(in);
}

}  // namespace rsvm
