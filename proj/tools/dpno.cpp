// dpno: dataset generation, training and evaluation for the operator models.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "dpno/dataset.hpp"
#include "dpno/fft.hpp"
#include "dpno/training.hpp"

namespace {

std::size_t default_resolution(dpno::Problem p) { return p == dpno::Problem::burgers ? 128 : 64; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-path neural operators: data generation, training, evaluation"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a dataset bundle");
  std::string gen_problem = "burgers", gen_out;
  std::size_t n_train = 1000, n_test = 200, resolution = 0, solve_resolution = 0;
  std::uint64_t gen_seed = 0;
  double gen_dt = 0.0;
  bool gen_force = false;
  gen->add_option("--problem", gen_problem, "burgers, darcy or ns")->capture_default_str();
  gen->add_option("--n-train", n_train, "Training samples")->capture_default_str();
  gen->add_option("--n-test", n_test, "Test samples")->capture_default_str();
  gen->add_option("--resolution", resolution, "Stored grid size (default: burgers 128, darcy/ns 64)");
  gen->add_option("--solve-resolution", solve_resolution,
                  "Solver grid size (default: burgers 1024, darcy 128, ns 64, or the stored size if finer)");
  gen->add_option("--dt", gen_dt, "Solver time step (default: per-solver rule)");
  gen->add_option("--seed", gen_seed, "Base seed; sample i uses seed + i")->capture_default_str();
  gen->add_option("--out", gen_out, "Output bundle directory")->required();
  gen->add_flag("--force", gen_force, "Overwrite an existing bundle");

  // train
  auto* tr = app.add_subcommand("train", "Train a model on a bundle");
  dpno::TrainConfig cfg;
  std::string model_name = "dp-fno", merge_name = "full", data_dir, run_dir;
  bool train_force = false, quiet = false;
  tr->add_option("--data", data_dir, "Bundle directory")->required();
  tr->add_option("--out", run_dir, "Run directory")->required();
  tr->add_option("--model", model_name, "fno, deeponet, dp-fno or dp-deeponet")->capture_default_str();
  tr->add_option("--epochs", cfg.epochs)->capture_default_str();
  tr->add_option("--lr", cfg.lr)->capture_default_str();
  tr->add_option("--test-every", cfg.test_every)->capture_default_str();
  tr->add_option("--batch-size", cfg.batch_size)->capture_default_str();
  tr->add_option("--weight-decay", cfg.weight_decay)->capture_default_str();
  tr->add_option("--seed", cfg.seed)->capture_default_str();
  tr->add_option("--width", cfg.width, "Block width d_v (default: FNO 32, DeepONet 128)");
  tr->add_option("--modes", cfg.modes, "Retained modes per axis (default: burgers 16, otherwise 12)");
  tr->add_option("--basis", cfg.basis, "DeepONet basis count p")->capture_default_str();
  tr->add_option("--depth", cfg.depth, "DeepONet MLP depth")->capture_default_str();
  tr->add_option("--res-blocks", cfg.res_blocks)->capture_default_str();
  tr->add_option("--dense-blocks", cfg.dense_blocks)->capture_default_str();
  tr->add_option("--merge-hidden", cfg.merge_hidden)->capture_default_str();
  tr->add_option("--merge-input", merge_name, "Dense features seen by the merge: full or last")
      ->capture_default_str();
  tr->add_option("--lr-decay-every", cfg.lr_decay_every, "Step decay period in epochs (0 = off)")
      ->capture_default_str();
  tr->add_option("--lr-decay-gamma", cfg.lr_decay_gamma)->capture_default_str();
  tr->add_option("--precision", cfg.precision, "Only f64 is supported")->capture_default_str();
  tr->add_flag("--force", train_force, "Overwrite an existing run directory");
  tr->add_flag("--quiet", quiet, "Only print the final summary");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a trained run on a bundle");
  std::string eval_run, eval_data, split = "test", dump_dir;
  bool eval_force = false;
  ev->add_option("--run", eval_run, "Run directory written by train")->required();
  ev->add_option("--data", eval_data, "Bundle directory")->required();
  ev->add_option("--split", split, "train or test")->capture_default_str();
  ev->add_option("--dump-error-fields", dump_dir, "Write per-sample |pred - true| fields here");
  ev->add_flag("--force", eval_force, "Overwrite an existing error-field directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; malformed command lines exit 2.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const dpno::Problem p = dpno::parse_problem(gen_problem);
      if (resolution == 0) resolution = default_resolution(p);
      if (!dpno::fft::is_power_of_two(resolution))
        throw std::invalid_argument("--resolution must be a power of two, got " + std::to_string(resolution));
      dpno::PdeProblemSpec spec = dpno::default_problem_spec(p, resolution);
      if (solve_resolution != 0) spec.solve_resolution = solve_resolution;
      spec.n_train = n_train;
      spec.n_test = n_test;
      spec.base_seed = gen_seed;
      spec.dt = gen_dt;
      spec.validate();
      if (std::filesystem::exists(gen_out) && !std::filesystem::is_empty(gen_out) && !gen_force)
        throw std::runtime_error("bundle directory " + gen_out + " already exists; pass --force to overwrite");
      const dpno::DatasetBundle b = dpno::build_dataset(spec);
      dpno::save_bundle(b, gen_out, gen_force);
      std::cout << "wrote " << gen_out << ": " << dpno::to_string(p) << ", train " << dpno::to_string(b.a_train.shape())
                << " -> " << dpno::to_string(b.u_train.shape()) << ", test " << dpno::to_string(b.a_test.shape())
                << " -> " << dpno::to_string(b.u_test.shape()) << " (solved at " << spec.solve_resolution << ")\n";
    } else if (*tr) {
      cfg.model = dpno::parse_model_kind(model_name);
      if (merge_name == "full")
        cfg.merge_input = dpno::MergeInput::full_stack;
      else if (merge_name == "last")
        cfg.merge_input = dpno::MergeInput::last_only;
      else
        throw std::invalid_argument("--merge-input must be full or last, got " + merge_name);
      const auto result = dpno::run_training(data_dir, run_dir, cfg, train_force, [&](const dpno::EpochMetrics& m) {
        if (quiet) return;
        if (m.test_loss || m.epoch == 1)
          std::cout << "epoch " << m.epoch << "  train " << m.train_loss
                    << (m.test_loss ? "  test " + std::to_string(*m.test_loss) : std::string()) << "  ("
                    << m.wall_clock_s << " s)\n"
                    << std::flush;
      });
      std::cout << "final train rel L2 " << dpno::format_double(result.final_train_loss) << ", test rel L2 "
                << dpno::format_double(result.final_test_loss) << "; wrote " << run_dir << "\n";
    } else if (*ev) {
      const auto report = dpno::run_eval(eval_run, eval_data, split, dump_dir, eval_force);
      std::cout << "mean " << split << " rel L2 " << dpno::format_double(report.mean_rel_l2) << " over "
                << report.per_sample.size() << " samples\n";
      if (!dump_dir.empty()) std::cout << "error fields written to " << dump_dir << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "dpno: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
