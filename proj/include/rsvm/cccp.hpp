#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rsvm/screening.hpp"

namespace rsvm {

enum class Mode { none, safe, shrink, shrink_safe };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);  // "none", "safe", "shrink", "shrink+safe"

struct TrainConfig {
  KernelSpec kernel;
  double C = 1.0;
  double s = 0.0;  // ramp knee, must be <= 0
  double eps = 1e-8;
  Mode mode = Mode::safe;
  bool propagation = true;  // propagation rule between CILs (safe modes only)
  int outer_cap = 20;
  long max_inner_iter = 0;  // per-CIL pairwise-step cap; 0 -> 200 * n
  double target_gap = 0.0;

  int screen_warmup = 50;
  int screen_every = 10;
  int shrink_warmup = 50;
  int shrink_every = 100;
  double shrink_threshold = 0.01;
  double handoff_gap = 1e-4;  // shrink+safe switchover

  KernelCacheConfig cache;
  bool audit = false;
  bool debug_checks = false;
};

struct OuterRecord {
  int outer = 0;
  int mu_flips = 0;          // entries of mu changed going into this CIL
  double ramp_objective = 0; // at this CIL's solution
  long cil_iterations = 0;
  bool hit_iter_cap = false;
  int fixed_dynamic = 0;
  int fixed_propagation = 0;
  int shrunk = 0;
  double final_gap = 0;
  double wall_sec = 0;
};

struct AuditDecision {
  int outer;  // CIL problem the decision binds to
  ScreenDecision d;
};

struct CccpTrace {
  std::vector<OuterRecord> outer;
  std::vector<TrajectoryPoint> trajectory;
  std::vector<AuditDecision> audit_decisions;   // audit only
  std::vector<std::vector<double>> mu_history;  // audit only: mu per outer iter
  bool outer_cap_hit = false;
};

struct Model {
  KernelSpec kernel;
  double C = 1.0;
  double s = 0.0;
  double bias = 0.0;
  std::vector<int> sv_index;      // training indices
  std::vector<double> sv_alpha;
  std::vector<SparseRow> sv_row;
  int outer_iterations = 0;
  double final_gap = 0.0;

  int sv_count() const { return static_cast<int>(sv_alpha.size()); }
};

// mu_i = C iff y_i f(x_i) < s (strict), with f_i = g_i + y_i + bias.
std::vector<double> compute_mu(const SolverState& st, const CilProblem& pr,
                               double s, double C);

// 1/2 ||w||^2 + C sum_i R_s(y_i f_i) with R_s(z) = H_1(z) - H_s(z)
// (the clipped hinge, capped at 1 - s).
double ramp_objective(const SolverState& st, const CilProblem& pr, double s);

double hinge(double s, double z);      // max(0, s - z)
double ramp_loss(double s, double z);  // H_1(z) - H_s(z)

// CCCP driver: mu^0 = 0, solve CILs until the mu set stops changing (or
// outer_cap, flagged on the trace). Successive CILs are warm-started; in safe
// modes the propagation rule pre-fixes samples of the next CIL.
std::pair<Model, CccpTrace> train(const Dataset& ds, const TrainConfig& cfg);

double predict_score(const Model& model, const SparseRow& x);
int predict_label(double score);  // sign, sign(0) = +1

// Versioned plain-text model format (see README for the grammar).
void save_model(const Model& model, std::ostream& out);
Model load_model(std::istream& in);
void save_model_file(const Model& model, const std::string& path);
Model load_model_file(const std::string& path);

}  // namespace rsvm
