#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpno/dataset.hpp"
#include "dpno/models.hpp"

namespace dpno {

struct TrainConfig {
  ModelKind model = ModelKind::dp_fno;
  std::size_t epochs = 1000;
  double lr = 1e-3;
  std::size_t test_every = 20;
  std::size_t batch_size = 20;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  /// 0 selects the per-problem default.
  std::size_t width = 0;
  std::size_t modes = 0;
  std::size_t basis = 128;
  std::size_t depth = 4;
  std::size_t res_blocks = 4;
  std::size_t dense_blocks = 3;
  std::size_t merge_hidden = 128;
  std::size_t projection_hidden = 128;
  MergeInput merge_input = MergeInput::full_stack;
  /// Multiply the learning rate by lr_decay_gamma every lr_decay_every epochs (0 = off).
  std::size_t lr_decay_every = 0;
  double lr_decay_gamma = 0.5;
  std::string precision = "f64";

  void validate() const;
};

/// Everything needed to rebuild a model; echoed next to each checkpoint.
struct ModelConfig {
  ModelKind kind = ModelKind::fno;
  Problem problem = Problem::burgers;
  std::size_t resolution = 64;
  std::size_t width = 32;
  std::size_t modes = 16;
  std::size_t basis = 128;
  std::size_t depth = 4;
  std::size_t res_blocks = 4;
  std::size_t dense_blocks = 3;
  std::size_t merge_hidden = 128;
  std::size_t projection_hidden = 128;
  MergeInput merge_input = MergeInput::full_stack;
  std::uint64_t seed = 0;

  KeyValues to_key_values() const;
  static ModelConfig from_key_values(const KeyValues& kv);
};

/// Fills per-problem defaults (FNO width 32; modes 16 for Burgers, 12 otherwise).
ModelConfig resolve_model_config(const TrainConfig& cfg, Problem problem, std::size_t resolution);

std::unique_ptr<OperatorModel> build_model(const ModelConfig& cfg);

/// Bundle layout <-> model layout. FNO models take channels-last fields
/// (Navier-Stokes time snapshots become channels); DeepONet models take
/// flattened sensor vectors and predict at every grid point (and time).
Tensor to_model_layout(const Tensor& bundle_tensor, Problem problem, ModelKind kind);
Tensor to_bundle_layout(const Tensor& model_tensor, Problem problem, ModelKind kind, const Shape& bundle_shape);

/// DeepONet query coordinates in the flattening order of the bundle targets:
/// x for Burgers, (x, y) for Darcy, (x, y, t) for Navier-Stokes.
Tensor deeponet_queries(Problem problem, std::size_t resolution);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> test_loss;
  double wall_clock_s = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  /// Full-split evaluations after the last epoch.
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
};

/// Relative L2 of every sample of a split, predicted in batches.
std::vector<double> per_sample_errors(OperatorModel& model, const Tensor& inputs, const Tensor& targets,
                                      std::size_t batch_size);
/// Mean of per_sample_errors.
double evaluate(OperatorModel& model, const Tensor& inputs, const Tensor& targets, std::size_t batch_size);

/// Shuffled mini-batch AdamW on relative L2; the test split is evaluated every
/// test_every epochs. Throws on a non-finite loss, naming the epoch.
TrainResult train(OperatorModel& model, const Tensor& x_train, const Tensor& y_train, const Tensor& x_test,
                  const Tensor& y_test, const TrainConfig& cfg,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

void save_model(OperatorModel& model, const std::filesystem::path& path);
/// Loads parameters by name; every model parameter must be present with a matching shape.
void load_model(OperatorModel& model, const std::filesystem::path& path);

/// train subcommand: writes config.txt, metrics.csv, checkpoint.dpno and summary.txt to run_dir.
TrainResult run_training(const std::filesystem::path& bundle_dir, const std::filesystem::path& run_dir,
                         const TrainConfig& cfg, bool force,
                         const std::function<void(const EpochMetrics&)>& progress = {});

struct EvalReport {
  double mean_rel_l2 = 0.0;
  std::vector<double> per_sample;
};

/// eval subcommand. split is "train" or "test"; a non-empty dump_dir receives
/// |pred - true| per sample plus manifest.csv.
EvalReport run_eval(const std::filesystem::path& run_dir, const std::filesystem::path& bundle_dir,
                    const std::string& split, const std::filesystem::path& dump_dir, bool force);

/// One metrics CSV row (no trailing newline); header is kMetricsHeader.
inline constexpr const char* kMetricsHeader = "epoch,train_rel_l2,test_rel_l2,wall_clock_s";
std::string metrics_row(const EpochMetrics& m);

}  // namespace dpno
