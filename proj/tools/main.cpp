#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsvm/run.hpp"

namespace {

rsvm::KernelKind kernel_from_flag(const std::string& s) {
  if (s == "linear") return rsvm::KernelKind::linear;
  if (s == "rbf" || s == "gaussian") return rsvm::KernelKind::gaussian;
  throw CLI::ValidationError("--kernel", "expected 'linear' or 'rbf'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rsvm - ramp-loss SVM trainer with safe sample screening"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a model");
  std::string data_path, synth_spec, kernel_name = "rbf", mode_name = "safe";
  rsvm::RunConfig rc;
  train->add_option("--data", data_path, "LIBSVM training file");
  train->add_option("--synthetic", synth_spec,
                    "synthetic data, e.g. n=1000,flip=0.05,sep=6.0");
  train->add_option("--subsample", rc.subsample_m,
                    "train on a seeded subset of this size");
  train->add_option("--kernel", kernel_name, "linear | rbf")
      ->capture_default_str();
  train->add_option("--gamma", rc.train.kernel.kappa,
                    "gaussian width (K = exp(-gamma*|a-b|^2))");
  train->add_option("--C", rc.train.C, "regularization weight")
      ->capture_default_str();
  train->add_option("--s", rc.train.s, "ramp knee (<= 0)")->capture_default_str();
  train->add_option("--eps", rc.train.eps, "KKT tolerance")->capture_default_str();
  train->add_option("--mode", mode_name, "safe | shrink | shrink+safe | none")
      ->capture_default_str();
  train->add_option("--screen-warmup", rc.train.screen_warmup)
      ->capture_default_str();
  train->add_option("--screen-every", rc.train.screen_every)
      ->capture_default_str();
  train->add_option("--shrink-warmup", rc.train.shrink_warmup)
      ->capture_default_str();
  train->add_option("--shrink-every", rc.train.shrink_every)
      ->capture_default_str();
  train->add_option("--shrink-threshold", rc.train.shrink_threshold)
      ->capture_default_str();
  train->add_option("--handoff-gap", rc.train.handoff_gap,
                    "shrink+safe switchover gap")
      ->capture_default_str();
  train->add_option("--max-iter", rc.train.max_inner_iter,
                    "pairwise-step cap per CIL solve (0: 200*n)")
      ->capture_default_str();
  train->add_option("--seed", rc.seed, "RNG seed")->capture_default_str();
  train->add_option("--out-dir", rc.out_dir, "output directory")
      ->capture_default_str();
  train->add_option("--cache-rows", rc.train.cache.lru_capacity,
                    "kernel rows kept above the full-matrix threshold")
      ->capture_default_str();
  train->add_option("--full-matrix-threshold",
                    rc.train.cache.full_matrix_threshold)
      ->capture_default_str();
  bool no_propagation = false;
  train->add_flag("--no-propagation", no_propagation,
                  "disable the propagation rule between CCCP iterations");

  // predict
  auto* predict = app.add_subcommand("predict", "score a dataset with a model");
  rsvm::PredictConfig pc;
  std::string p_kernel, p_out;
  double p_gamma = 0;
  predict->add_option("--model", pc.model_path, "model file")->required();
  predict->add_option("--data", pc.data_path, "LIBSVM file")->required();
  predict->add_option("--out", p_out, "predictions CSV path");
  predict->add_option("--kernel", p_kernel, "must match the model when given");
  auto* p_gamma_opt = predict->add_option("--gamma", p_gamma);

  // bench
  auto* bench = app.add_subcommand("bench", "mode-comparison grid");
  rsvm::BenchConfig bc;
  std::vector<std::string> b_synths;
  std::string b_kernel = "rbf", b_modes = "safe,shrink,shrink+safe,none";
  std::vector<double> b_Cs{1.0}, b_kappas{0.5};
  bench->add_option("--data", bc.data_paths, "LIBSVM files (repeatable)");
  bench->add_option("--synthetic", b_synths, "synthetic specs (repeatable)");
  bench->add_option("--subsample", bc.subsample_m);
  bench->add_option("--kernel", b_kernel)->capture_default_str();
  bench->add_option("--C", b_Cs, "C grid")->delimiter(',');
  bench->add_option("--gamma", b_kappas, "kappa grid")->delimiter(',');
  bench->add_option("--modes", b_modes, "comma-separated mode list")
      ->capture_default_str();
  bench->add_option("--reps", bc.reps)->capture_default_str();
  bench->add_option("--seed", bc.seed)->capture_default_str();
  bench->add_option("--out-dir", bc.out_dir)->capture_default_str();
  bench->add_option("--eps", bc.base.eps)->capture_default_str();
  bench->add_option("--s", bc.base.s)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train)) {
      if (data_path.empty() == synth_spec.empty()) {
        std::fprintf(stderr,
                     "usage error: exactly one of --data / --synthetic\n");
        return 1;
      }
      if (!synth_spec.empty()) {
        rc.synth = rsvm::parse_synthetic_spec(synth_spec);
        rc.use_synth = true;
      } else {
        rc.data_path = data_path;
      }
      rc.train.kernel.kind = kernel_from_flag(kernel_name);
      rc.train.mode = rsvm::mode_from_string(mode_name);
      rc.train.propagation = !no_propagation;
      return rsvm::cmd_train(rc);
    }
    if (app.got_subcommand(predict)) {
      pc.out_csv = p_out;
      if (!p_kernel.empty() || p_gamma_opt->count() > 0) {
        pc.has_kernel_flags = true;
        pc.kernel_flags.kind = p_kernel.empty()
                                   ? rsvm::KernelKind::gaussian
                                   : kernel_from_flag(p_kernel);
        pc.kernel_flags.kappa = p_gamma;
      }
      return rsvm::cmd_predict(pc);
    }
    // bench
    for (const auto& s : b_synths)
      bc.synths.push_back(rsvm::parse_synthetic_spec(s));
    bc.kind = kernel_from_flag(b_kernel);
    bc.Cs = b_Cs;
    bc.kappas = b_kappas;
    {
      std::stringstream ms(b_modes);
      std::string tok;
      while (std::getline(ms, tok, ','))
        bc.modes.push_back(rsvm::mode_from_string(tok));
    }
    return rsvm::cmd_bench(bc);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  }
}
