#include "rsvm/run.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rsvm/dataset.hpp"

namespace rsvm {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* rule_name(ScreenRule r) {
  return r == ScreenRule::dynamic ? "dynamic" : "propagation";
}

}  // namespace

std::string SyntheticSpec::name() const {
  std::ostringstream os;
  os << "synthetic_n" << n << "_flip" << flip << "_sep" << sep;
  return os.str();
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  SyntheticSpec spec;
  std::istringstream in(text);
  std::string item;
  bool have_n = false;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("synthetic spec: expected key=value, got " + item);
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    if (key == "n") {
      spec.n = std::stoi(val);
      have_n = true;
    } else if (key == "flip") {
      spec.flip = std::stod(val);
    } else if (key == "sep") {
      spec.sep = std::stod(val);
    } else {
      throw std::invalid_argument("synthetic spec: unknown key " + key);
    }
  }
  if (!have_n) throw std::invalid_argument("synthetic spec: n is required");
  return spec;
}

Dataset load_run_dataset(const RunConfig& cfg) {
  Dataset ds = cfg.use_synth
                   ? make_synthetic(cfg.synth.n, cfg.synth.flip, cfg.synth.sep,
                                    cfg.seed)
                   : load_libsvm_file(cfg.data_path);
  if (cfg.subsample_m > 0 && cfg.subsample_m < ds.n())
    ds = subsample(ds, cfg.subsample_m, cfg.seed);
  return ds;
}

void write_text_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
  }
  fs::rename(tmp, path);
}

std::string metrics_json(const Model& model, const CccpTrace& trace,
                         const TrainConfig& cfg, int n, double wall_sec) {
  long inner = 0;
  long shrunk = 0;
  bool any_cap = trace.outer_cap_hit;
  for (const OuterRecord& r : trace.outer) {
    inner += r.cil_iterations;
    shrunk += r.shrunk;
    any_cap = any_cap || r.hit_iter_cap;
  }
  const OuterRecord& last = trace.outer.back();

  json j;
  j["schema"] = "rsvm-metrics-v1";
  j["mode"] = to_string(cfg.mode);
  j["kernel"] = cfg.kernel.kind == KernelKind::linear ? "linear" : "gaussian";
  j["kappa"] = cfg.kernel.kappa;
  j["C"] = cfg.C;
  j["s"] = cfg.s;
  j["eps"] = cfg.eps;
  j["n"] = n;
  j["outer_iterations"] = model.outer_iterations;
  j["outer_cap_hit"] = trace.outer_cap_hit;
  j["iter_cap_hit"] = any_cap;
  j["inner_iterations"] = inner;
  j["final_gap"] = model.final_gap;
  j["sv_count"] = model.sv_count();
  // by-rule fractions of the final CIL, where the returned model lives
  j["screened_fraction_dynamic"] = static_cast<double>(last.fixed_dynamic) / n;
  j["screened_fraction_propagation"] =
      static_cast<double>(last.fixed_propagation) / n;
  j["screened_fraction_final"] =
      static_cast<double>(last.fixed_dynamic + last.fixed_propagation) / n;
  j["shrunk_events"] = shrunk;
  j["ramp_objective"] = last.ramp_objective;
  j["wall_time_sec"] = wall_sec;
  return j.dump(2) + "\n";
}

void write_trajectory_csv(const std::vector<TrajectoryPoint>& traj, int n,
                          std::ostream& out) {
  out << "# rsvm-trajectory v1\n";
  out << "outer,iter,rule,gap,active,fixed_low,fixed_high,shrunk,deferred,"
         "screened_fraction\n";
  for (const TrajectoryPoint& tp : traj) {
    const double frac = static_cast<double>(tp.fixed_low + tp.fixed_high) / n;
    out << tp.outer << ',' << tp.iter << ',' << rule_name(tp.rule) << ','
        << fmt(tp.gap) << ',' << tp.active << ',' << tp.fixed_low << ','
        << tp.fixed_high << ',' << tp.shrunk << ',' << tp.deferred << ','
        << fmt(frac) << '\n';
  }
}

void write_outer_trace_csv(const CccpTrace& trace, std::ostream& out) {
  out << "# rsvm-outer-trace v1\n";
  out << "outer,mu_flips,ramp_objective,cil_iterations,fixed_dynamic,"
         "fixed_propagation,shrunk,final_gap,wall_sec\n";
  for (const OuterRecord& r : trace.outer) {
    out << r.outer << ',' << r.mu_flips << ',' << fmt(r.ramp_objective) << ','
        << r.cil_iterations << ',' << r.fixed_dynamic << ','
        << r.fixed_propagation << ',' << r.shrunk << ',' << fmt(r.final_gap)
        << ',' << fmt(r.wall_sec) << '\n';
  }
}

int cmd_train(const RunConfig& cfg) {
  try {
    const Dataset ds = load_run_dataset(cfg);
    fs::create_directories(cfg.out_dir);

    const auto t0 = std::chrono::steady_clock::now();
    auto [model, trace] = train(ds, cfg.train);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    std::ostringstream model_text;
    save_model(model, model_text);
    write_text_file_atomic((fs::path(cfg.out_dir) / "model.txt").string(),
                           model_text.str());
    write_text_file_atomic((fs::path(cfg.out_dir) / "metrics.json").string(),
                           metrics_json(model, trace, cfg.train, ds.n(), wall));
    std::ostringstream traj;
    write_trajectory_csv(trace.trajectory, ds.n(), traj);
    write_text_file_atomic((fs::path(cfg.out_dir) / "trajectory.csv").string(),
                           traj.str());
    std::ostringstream outer;
    write_outer_trace_csv(trace, outer);
    write_text_file_atomic((fs::path(cfg.out_dir) / "trace_outer.csv").string(),
                           outer.str());

    std::cout << "trained: n=" << ds.n() << " mode=" << to_string(cfg.train.mode)
              << " outer=" << model.outer_iterations
              << " sv=" << model.sv_count() << " gap=" << fmt(model.final_gap)
              << " wall=" << fmt(wall) << "s\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

int cmd_predict(const PredictConfig& cfg) {
  try {
    const Model model = load_model_file(cfg.model_path);
    if (cfg.has_kernel_flags) {
      const bool kind_ok = cfg.kernel_flags.kind == model.kernel.kind;
      const bool kappa_ok = model.kernel.kind == KernelKind::linear ||
                            cfg.kernel_flags.kappa == model.kernel.kappa;
      if (!kind_ok || !kappa_ok)
        throw std::invalid_argument(
            "kernel flags do not match the model's kernel");
    }
    const Dataset ds = load_libsvm_file(cfg.data_path);

    std::ostringstream out;
    out << "# rsvm-predictions v1\n";
    out << "index,score,label\n";
    long correct = 0;
    for (int i = 0; i < ds.n(); ++i) {
      const double score = predict_score(model, ds.rows[i]);
      const int label = predict_label(score);
      correct += (label == ds.labels[i]);
      out << i << ',' << fmt(score) << ',' << label << '\n';
    }
    const std::string path =
        cfg.out_csv.empty() ? "predictions.csv" : cfg.out_csv;
    write_text_file_atomic(path, out.str());
    std::cout << "accuracy " << fmt(static_cast<double>(correct) / ds.n())
              << " (" << correct << "/" << ds.n() << ")\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

int cmd_bench(const BenchConfig& cfg) {
  try {
    if (cfg.modes.empty()) throw std::invalid_argument("bench: no modes");
    if (cfg.Cs.empty()) throw std::invalid_argument("bench: no C values");
    fs::create_directories(cfg.out_dir);

    struct Cell {
      std::string dataset;
      bool synth;
      SyntheticSpec spec;
      std::string path;
    };
    std::vector<Cell> datasets;
    for (const auto& s : cfg.synths) datasets.push_back({s.name(), true, s, ""});
    for (const auto& p : cfg.data_paths)
      datasets.push_back({fs::path(p).filename().string(), false, {}, p});
    if (datasets.empty()) throw std::invalid_argument("bench: no datasets");

    std::vector<double> kappas = cfg.kappas;
    if (cfg.kind == KernelKind::linear || kappas.empty()) kappas = {0.0};

    std::ostringstream csv;
    csv << "# rsvm-bench v1\n";
    csv << "dataset,C,kappa,mode,rep,status,wall_time_sec,outer_iters,"
           "inner_iters,final_gap,sv_count,screened_fraction\n";

    int cell_id = 0;
    for (const Cell& dcell : datasets) {
      Dataset ds;
      if (dcell.synth)
        ds = make_synthetic(dcell.spec.n, dcell.spec.flip, dcell.spec.sep,
                            cfg.seed);
      else
        ds = load_libsvm_file(dcell.path);
      if (cfg.subsample_m > 0 && cfg.subsample_m < ds.n())
        ds = subsample(ds, cfg.subsample_m, cfg.seed);

      for (double C : cfg.Cs) {
        for (double kappa : kappas) {
          for (Mode mode : cfg.modes) {
            for (int rep = 0; rep < std::max(1, cfg.reps); ++rep) {
              TrainConfig tc = cfg.base;
              tc.kernel.kind = cfg.kind;
              tc.kernel.kappa = kappa;
              tc.C = C;
              tc.mode = mode;
              const std::string cell = "cell" + std::to_string(cell_id++);
              std::string status = "ok";
              double wall = 0, final_gap = 0, frac = 0;
              int outer = 0, svs = 0;
              long inner = 0;
              try {
                const auto t0 = std::chrono::steady_clock::now();
                auto [model, trace] = train(ds, tc);
                wall = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
                outer = model.outer_iterations;
                svs = model.sv_count();
                final_gap = model.final_gap;
                for (const OuterRecord& r : trace.outer)
                  inner += r.cil_iterations;
                const OuterRecord& last = trace.outer.back();
                frac = static_cast<double>(last.fixed_dynamic +
                                           last.fixed_propagation) /
                       ds.n();
                std::ostringstream traj;
                write_trajectory_csv(trace.trajectory, ds.n(), traj);
                write_text_file_atomic(
                    (fs::path(cfg.out_dir) / (cell + "_trajectory.csv")).string(),
                    traj.str());
              } catch (const std::exception& e) {
                status = "error";
                std::cerr << "bench cell " << cell << " failed: " << e.what()
                          << '\n';
              }
              csv << dcell.dataset << ',' << fmt(C) << ',' << fmt(kappa) << ','
                  << to_string(mode) << ',' << rep << ',' << status << ','
                  << fmt(wall) << ',' << outer << ',' << inner << ','
                  << fmt(final_gap) << ',' << svs << ',' << fmt(frac) << '\n';
            }
          }
        }
      }
    }
    write_text_file_atomic((fs::path(cfg.out_dir) / "bench.csv").string(),
                           csv.str());
    std::cout << "bench done: " << cell_id << " cells -> " << cfg.out_dir
              << "/bench.csv\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace rsvm
