#include "dpno/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "dpno/adamw.hpp"
#include "dpno/kernels.hpp"
#include "dpno/tensor_io.hpp"

namespace dpno {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (test_every == 0) throw std::invalid_argument("test-every must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be non-negative");
  if (!(lr_decay_gamma > 0.0)) throw std::invalid_argument("learning-rate decay factor must be positive");
  if (precision != "f64")
    throw std::invalid_argument("precision '" + precision + "' is not supported; training runs in f64 only");
}

namespace {

bool is_fno_family(ModelKind k) { return k == ModelKind::fno || k == ModelKind::dp_fno; }

std::size_t spatial_rank(Problem p) { return p == Problem::burgers ? 1 : 2; }

std::size_t field_channels(Problem p) { return p == Problem::navier_stokes ? kNsSteps : 1; }

Shape bundle_sample_shape(Problem p, std::size_t r) {
  switch (p) {
    case Problem::burgers: return {r};
    case Problem::darcy: return {r, r};
    case Problem::navier_stokes: return {kNsSteps, r, r};
  }
  return {};
}

std::string merge_name(MergeInput m) { return m == MergeInput::full_stack ? "full" : "last"; }

MergeInput parse_merge(const std::string& s) {
  if (s == "full") return MergeInput::full_stack;
  if (s == "last") return MergeInput::last_only;
  throw std::invalid_argument("unknown merge input '" + s + "' (expected full or last)");
}

}  // namespace

KeyValues ModelConfig::to_key_values() const {
  return {
      {"model", to_string(kind)},
      {"problem", to_string(problem)},
      {"resolution", std::to_string(resolution)},
      {"width", std::to_string(width)},
      {"modes", std::to_string(modes)},
      {"basis", std::to_string(basis)},
      {"depth", std::to_string(depth)},
      {"res_blocks", std::to_string(res_blocks)},
      {"dense_blocks", std::to_string(dense_blocks)},
      {"merge_hidden", std::to_string(merge_hidden)},
      {"projection_hidden", std::to_string(projection_hidden)},
      {"merge_input", merge_name(merge_input)},
      {"seed", std::to_string(seed)},
  };
}

ModelConfig ModelConfig::from_key_values(const KeyValues& kv) {
  auto get = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("run config is missing '" + key + "'");
    return it->second;
  };
  ModelConfig c;
  c.kind = parse_model_kind(get("model"));
  c.problem = parse_problem(get("problem"));
  c.resolution = std::stoul(get("resolution"));
  c.width = std::stoul(get("width"));
  c.modes = std::stoul(get("modes"));
  c.basis = std::stoul(get("basis"));
  c.depth = std::stoul(get("depth"));
  c.res_blocks = std::stoul(get("res_blocks"));
  c.dense_blocks = std::stoul(get("dense_blocks"));
  c.merge_hidden = std::stoul(get("merge_hidden"));
  c.projection_hidden = std::stoul(get("projection_hidden"));
  c.merge_input = parse_merge(get("merge_input"));
  c.seed = std::stoull(get("seed"));
  return c;
}

ModelConfig resolve_model_config(const TrainConfig& cfg, Problem problem, std::size_t resolution) {
  ModelConfig c;
  c.kind = cfg.model;
  c.problem = problem;
  c.resolution = resolution;
  c.width = cfg.width ? cfg.width : (is_fno_family(cfg.model) ? 32 : 128);
  c.modes = cfg.modes ? cfg.modes : (problem == Problem::burgers ? 16 : 12);
  c.basis = cfg.basis;
  c.depth = cfg.depth;
  c.res_blocks = cfg.res_blocks;
  c.dense_blocks = cfg.dense_blocks;
  c.merge_hidden = cfg.merge_hidden;
  c.projection_hidden = cfg.projection_hidden;
  c.merge_input = cfg.merge_input;
  c.seed = cfg.seed;
  if (is_fno_family(c.kind) && c.modes > resolution / 2 + 1)
    throw std::invalid_argument("modes " + std::to_string(c.modes) + " exceed the " + std::to_string(resolution / 2 + 1) +
                                " available at resolution " + std::to_string(resolution));
  return c;
}

Tensor deeponet_queries(Problem problem, std::size_t r) {
  const double rd = static_cast<double>(r);
  switch (problem) {
    case Problem::burgers: {
      Tensor q({r, 1});
      for (std::size_t j = 0; j < r; ++j) q[j] = double(j) / rd;
      return q;
    }
    case Problem::darcy: {
      Tensor q({r * r, 2});
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) {
          q[(i * r + j) * 2] = double(i) / rd;
          q[(i * r + j) * 2 + 1] = double(j) / rd;
        }
      return q;
    }
    case Problem::navier_stokes: {
      Tensor q({kNsSteps * r * r, 3});
      for (std::size_t t = 0; t < kNsSteps; ++t)
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < r; ++j) {
            const std::size_t p = (t * r + i) * r + j;
            q[p * 3] = double(i) / rd;
            q[p * 3 + 1] = double(j) / rd;
            q[p * 3 + 2] = double(t + 1) / double(kNsSteps);
          }
      return q;
    }
  }
  throw std::logic_error("unhandled problem");
}

std::unique_ptr<OperatorModel> build_model(const ModelConfig& c) {
  const std::size_t rank = spatial_rank(c.problem);
  const std::size_t ch = field_channels(c.problem);
  const FnoSpec fno{ch, ch, c.width, std::vector<std::size_t>(rank, c.modes), c.projection_hidden, 4};
  const DualPathSpec dual{c.res_blocks, c.dense_blocks, c.merge_hidden, c.merge_input};
  const Tensor queries = deeponet_queries(c.problem, c.resolution);
  const DeepONetSpec don{numel(bundle_sample_shape(c.problem, c.resolution)), queries.dim(1), c.width, c.depth, c.basis,
                         false};
  switch (c.kind) {
    case ModelKind::fno: return std::make_unique<StackedFno>(fno, c.seed);
    case ModelKind::dp_fno: return std::make_unique<DualPathFno>(fno, dual, c.seed);
    case ModelKind::deeponet: return std::make_unique<DeepONetModel>(don, queries, c.seed);
    case ModelKind::dp_deeponet: return std::make_unique<DualPathDeepONet>(don, dual, queries, c.seed);
  }
  throw std::logic_error("unhandled model kind");
}

Tensor to_model_layout(const Tensor& t, Problem problem, ModelKind kind) {
  const Shape& s = t.shape();
  if (!is_fno_family(kind)) return t.reshaped({s[0], t.size() / s[0]});
  if (problem == Problem::navier_stokes) {
    const std::size_t perm[] = {0, 2, 3, 1};
    return permute(t, perm);
  }
  Shape out = s;
  out.push_back(1);
  return t.reshaped(out);
}

Tensor to_bundle_layout(const Tensor& t, Problem problem, ModelKind kind, const Shape& bundle_shape) {
  if (is_fno_family(kind) && problem == Problem::navier_stokes) {
    const std::size_t perm[] = {0, 3, 1, 2};
    return permute(t, perm);
  }
  return t.reshaped(bundle_shape);
}

std::vector<double> per_sample_errors(OperatorModel& model, const Tensor& inputs, const Tensor& targets,
                                      std::size_t batch_size) {
  const std::size_t n = inputs.dim(0);
  if (targets.dim(0) != n) throw ShapeError("inputs and targets disagree on the sample count");
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t start = 0; start < n; start += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, n - start));
    std::iota(idx.begin(), idx.end(), start);
    const Tensor pred = model.predict(take_rows(inputs, idx));
    const Tensor truth = take_rows(targets, idx);
    if (pred.shape() != truth.shape())
      throw ShapeError("prediction " + to_string(pred.shape()) + " does not match target " + to_string(truth.shape()));
    const std::size_t block = pred.size() / idx.size();
    for (std::size_t b = 0; b < idx.size(); ++b) {
      double diff = 0.0, ref = 0.0;
      for (std::size_t k = b * block; k < (b + 1) * block; ++k) {
        diff += (pred[k] - truth[k]) * (pred[k] - truth[k]);
        ref += truth[k] * truth[k];
      }
      if (ref == 0.0) throw std::domain_error("relative L2 undefined for a zero target (sample " +
                                              std::to_string(start + b) + ")");
      out.push_back(std::sqrt(diff) / std::sqrt(ref));
    }
  }
  return out;
}

double evaluate(OperatorModel& model, const Tensor& inputs, const Tensor& targets, std::size_t batch_size) {
  const auto errs = per_sample_errors(model, inputs, targets, batch_size);
  double s = 0.0;
  for (double e : errs) s += e;
  return s / static_cast<double>(errs.size());
}

TrainResult train(OperatorModel& model, const Tensor& x_train, const Tensor& y_train, const Tensor& x_test,
                  const Tensor& y_test, const TrainConfig& cfg,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
  cfg.validate();
  const std::size_t n = x_train.dim(0);
  if (y_train.dim(0) != n) throw ShapeError("training inputs and targets disagree on the sample count");
  auto params = model.parameters();
  AdamW opt(params, AdamWConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  opt.zero_grad();
  Rng shuffle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.lr_decay_every > 0)
      opt.set_lr(cfg.lr * std::pow(cfg.lr_decay_gamma, static_cast<double>((epoch - 1) / cfg.lr_decay_every)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(cfg.batch_size, n - start));
      double value = 0.0;
      try {
        Tape tape;
        const Var pred = model.forward(tape, take_rows(x_train, idx));
        const Var loss = relative_l2(pred, tape.constant(take_rows(y_train, idx)));
        value = loss.value().item();
        tape.backward(loss);
      } catch (const NumericError& e) {
        throw NumericError("non-finite values at epoch " + std::to_string(epoch) + ": " + e.what());
      }
      if (!std::isfinite(value)) throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
      opt.step();
      opt.zero_grad();
      loss_sum += value * static_cast<double>(idx.size());
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(n);
    if (epoch % cfg.test_every == 0) m.test_loss = evaluate(model, x_test, y_test, cfg.batch_size);
    m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  result.final_train_loss = evaluate(model, x_train, y_train, cfg.batch_size);
  result.final_test_loss = evaluate(model, x_test, y_test, cfg.batch_size);
  return result;
}

void save_model(OperatorModel& model, const fs::path& path) {
  std::vector<io::NamedTensor> tensors;
  for (auto* p : model.parameters()) tensors.push_back({p->name, p->value});
  io::save_checkpoint(path, tensors);
}

void load_model(OperatorModel& model, const fs::path& path) {
  const auto tensors = io::load_checkpoint(path);
  std::map<std::string, const Tensor*> by_name;
  for (const auto& nt : tensors) by_name[nt.name] = &nt.value;
  auto params = model.parameters();
  // Validate everything before touching the model.
  for (auto* p : params) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint has no tensor named '" + p->name + "'");
    if (it->second->shape() != p->value.shape())
      throw ShapeError("checkpoint tensor '" + p->name + "' has shape " + to_string(it->second->shape()) +
                       ", model expects " + to_string(p->value.shape()));
  }
  if (by_name.size() != params.size())
    throw std::runtime_error("checkpoint holds " + std::to_string(by_name.size()) + " tensors, model has " +
                             std::to_string(params.size()));
  for (auto* p : params) p->value = *by_name.at(p->name);
}

std::string metrics_row(const EpochMetrics& m) {
  std::ostringstream os;
  os << m.epoch << ',' << format_double(m.train_loss) << ',';
  if (m.test_loss) os << format_double(*m.test_loss);
  os << ',' << std::fixed << std::setprecision(3) << m.wall_clock_s;
  return os.str();
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  io::write_file(path, std::vector<char>(text.begin(), text.end()));
}

std::string read_text(const fs::path& path) {
  const auto bytes = io::read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace

TrainResult run_training(const fs::path& bundle_dir, const fs::path& run_dir, const TrainConfig& cfg, bool force,
                         const std::function<void(const EpochMetrics&)>& progress) {
  cfg.validate();
  const DatasetBundle bundle = load_bundle(bundle_dir);
  const ModelConfig mc = resolve_model_config(cfg, bundle.spec.problem, bundle.spec.resolution);
  ensure_writable_dir(run_dir, force, "run");
  auto model = build_model(mc);

  KeyValues config = mc.to_key_values();
  config["epochs"] = std::to_string(cfg.epochs);
  config["lr"] = format_double(cfg.lr);
  config["test_every"] = std::to_string(cfg.test_every);
  config["batch_size"] = std::to_string(cfg.batch_size);
  config["weight_decay"] = format_double(cfg.weight_decay);
  config["lr_decay_every"] = std::to_string(cfg.lr_decay_every);
  config["lr_decay_gamma"] = format_double(cfg.lr_decay_gamma);
  config["precision"] = cfg.precision;
  config["bundle"] = fs::absolute(bundle_dir).lexically_normal().string();
  write_text(run_dir / "config.txt", format_key_values(config));

  const Problem p = bundle.spec.problem;
  const Tensor x_train = to_model_layout(bundle.a_train, p, mc.kind);
  const Tensor y_train = to_model_layout(bundle.u_train, p, mc.kind);
  const Tensor x_test = to_model_layout(bundle.a_test, p, mc.kind);
  const Tensor y_test = to_model_layout(bundle.u_test, p, mc.kind);

  std::ofstream csv(run_dir / "metrics.csv", std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + (run_dir / "metrics.csv").string());
  csv << kMetricsHeader << '\n' << std::flush;
  const TrainResult result = train(*model, x_train, y_train, x_test, y_test, cfg, [&](const EpochMetrics& m) {
    csv << metrics_row(m) << '\n' << std::flush;
    if (progress) progress(m);
  });
  save_model(*model, run_dir / "checkpoint.dpno");

  const KeyValues summary{
      {"final_train_rel_l2", format_double(result.final_train_loss)},
      {"final_test_rel_l2", format_double(result.final_test_loss)},
      {"parameters", std::to_string(model->parameter_count())},
      {"epochs", std::to_string(cfg.epochs)},
      {"threads", std::to_string(kernels::max_threads())},
      {"wall_clock_s", result.history.empty() ? "0" : format_double(result.history.back().wall_clock_s)},
  };
  write_text(run_dir / "summary.txt", format_key_values(summary));
  return result;
}

EvalReport run_eval(const fs::path& run_dir, const fs::path& bundle_dir, const std::string& split,
                    const fs::path& dump_dir, bool force) {
  if (split != "train" && split != "test") throw std::invalid_argument("split must be train or test, got " + split);
  const ModelConfig mc = ModelConfig::from_key_values(parse_key_values(read_text(run_dir / "config.txt")));
  const DatasetBundle bundle = load_bundle(bundle_dir);
  if (bundle.spec.problem != mc.problem)
    throw std::invalid_argument("checkpoint was trained on " + to_string(mc.problem) + " but the bundle holds " +
                                to_string(bundle.spec.problem));
  if (!is_fno_family(mc.kind) && bundle.spec.resolution != mc.resolution)
    throw std::invalid_argument("DeepONet checkpoint expects resolution " + std::to_string(mc.resolution) +
                                ", bundle has " + std::to_string(bundle.spec.resolution));
  if (is_fno_family(mc.kind) && mc.modes > bundle.spec.resolution / 2 + 1)
    throw std::invalid_argument("bundle resolution " + std::to_string(bundle.spec.resolution) +
                                " is too coarse for " + std::to_string(mc.modes) + " modes");
  auto model = build_model(mc);
  load_model(*model, run_dir / "checkpoint.dpno");

  const Tensor& a = split == "train" ? bundle.a_train : bundle.a_test;
  const Tensor& u = split == "train" ? bundle.u_train : bundle.u_test;
  const Tensor x = to_model_layout(a, mc.problem, mc.kind);
  const Tensor y = to_model_layout(u, mc.problem, mc.kind);

  std::size_t batch = 20;
  const auto cfg = parse_key_values(read_text(run_dir / "config.txt"));
  if (auto it = cfg.find("batch_size"); it != cfg.end()) batch = std::stoul(it->second);

  EvalReport report;
  report.per_sample = per_sample_errors(*model, x, y, batch);
  for (double e : report.per_sample) report.mean_rel_l2 += e;
  report.mean_rel_l2 /= static_cast<double>(report.per_sample.size());

  if (!dump_dir.empty()) {
    ensure_writable_dir(dump_dir, force, "error-field");
    std::string manifest = "sample,file,rel_l2\n";
    const Shape sample_shape(u.shape().begin() + 1, u.shape().end());
    const std::size_t n = x.dim(0);
    for (std::size_t start = 0; start < n; start += batch) {
      std::vector<std::size_t> idx(std::min(batch, n - start));
      std::iota(idx.begin(), idx.end(), start);
      Shape bundle_shape{idx.size()};
      bundle_shape.insert(bundle_shape.end(), sample_shape.begin(), sample_shape.end());
      const Tensor pred = to_bundle_layout(model->predict(take_rows(x, idx)), mc.problem, mc.kind, bundle_shape);
      const Tensor truth = take_rows(u, idx);
      const std::size_t block = numel(sample_shape);
      for (std::size_t b = 0; b < idx.size(); ++b) {
        Tensor err(sample_shape);
        for (std::size_t k = 0; k < block; ++k) err[k] = std::abs(pred[b * block + k] - truth[b * block + k]);
        std::ostringstream name;
        name << "error_" << std::setw(5) << std::setfill('0') << idx[b] << ".dpno";
        io::save_tensor(dump_dir / name.str(), err);
        manifest += std::to_string(idx[b]) + "," + name.str() + "," + format_double(report.per_sample[idx[b]]) + "\n";
      }
    }
    write_text(dump_dir / "manifest.csv", manifest);
  }
  return report;
}

}  // namespace dpno
