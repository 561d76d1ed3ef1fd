#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsvm/cccp.hpp"

namespace rsvm {

// Command-level plumbing shared by the CLI binary and the tests.

struct SyntheticSpec {
  int n = 0;
  double flip = 0.0;
  double sep = 6.0;

  std::string name() const;
};

// Parses "n=1000,flip=0.05,sep=6.0" (sep optional).
SyntheticSpec parse_synthetic_spec(const std::string& text);

struct RunConfig {
  std::string data_path;  // mutually exclusive with synth
  SyntheticSpec synth;
  bool use_synth = false;
  int subsample_m = 0;  // 0: use everything
  std::uint64_t seed = 1;
  TrainConfig train;
  std::string out_dir = ".";
};

// Trains per config and writes model.txt, metrics.json, trajectory.csv and
// trace_outer.csv into out_dir. Returns a process exit status.
int cmd_train(const RunConfig& cfg);

struct PredictConfig {
  std::string model_path;
  std::string data_path;
  std::string out_csv;  // empty: <out_dir>/predictions.csv next to model
  bool has_kernel_flags = false;
  KernelSpec kernel_flags;  // must match the model when given
};

int cmd_predict(const PredictConfig& cfg);

struct BenchConfig {
  std::vector<std::string> data_paths;
  std::vector<SyntheticSpec> synths;
  std::vector<double> Cs;
  std::vector<double> kappas;  // ignored for the linear kernel
  KernelKind kind = KernelKind::gaussian;
  std::vector<Mode> modes;
  int reps = 1;
  int subsample_m = 0;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  TrainConfig base;  // eps, schedules, cache, s
};

// Runs the full grid (datasets x C x kappa x modes x reps), one row per cell
// in bench.csv plus a per-cell trajectory CSV. Cell failures are recorded in
// the status column and the harness continues.
int cmd_bench(const BenchConfig& cfg);

// Helpers shared with tests.
Dataset load_run_dataset(const RunConfig& cfg);
std::string metrics_json(const Model& model, const CccpTrace& trace,
                         const TrainConfig& cfg, int n, double wall_sec);
void write_trajectory_csv(const std::vector<TrajectoryPoint>& traj, int n,
                          std::ostream& out);
void write_outer_trace_csv(const CccpTrace& trace, std::ostream& out);
void write_text_file_atomic(const std::string& path, const std::string& content);

}  // namespace rsvm
