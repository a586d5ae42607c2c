#include "dpno/dataset.hpp"

#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dpno/fft.hpp"
#include "dpno/pde.hpp"
#include "dpno/tensor_io.hpp"

namespace dpno {

namespace fs = std::filesystem;

std::string to_string(Problem p) {
  switch (p) {
    case Problem::burgers: return "burgers";
    case Problem::darcy: return "darcy";
    case Problem::navier_stokes: return "ns";
  }
  return "?";
}

Problem parse_problem(const std::string& s) {
  if (s == "burgers") return Problem::burgers;
  if (s == "darcy") return Problem::darcy;
  if (s == "ns" || s == "navier-stokes") return Problem::navier_stokes;
  throw std::invalid_argument("unknown problem '" + s + "' (expected burgers, darcy, ns)");
}

void PdeProblemSpec::validate() const {
  if (resolution < 4 || !fft::is_power_of_two(resolution))
    throw std::invalid_argument("resolution must be a power of two >= 4, got " + std::to_string(resolution));
  if (solve_resolution < resolution || solve_resolution % resolution != 0)
    throw std::invalid_argument("resolution " + std::to_string(resolution) + " must divide the solve resolution " +
                                std::to_string(solve_resolution));
  if (problem != Problem::darcy && !(nu > 0.0)) throw std::invalid_argument("viscosity must be positive");
  if (n_train == 0 || n_test == 0) throw std::invalid_argument("need at least one training and one test sample");
}

PdeProblemSpec default_problem_spec(Problem p, std::size_t resolution) {
  PdeProblemSpec s;
  s.problem = p;
  s.resolution = resolution;
  switch (p) {
    case Problem::burgers:
      s.nu = 0.01;
      s.final_time = 1.0;
      s.solve_resolution = std::max<std::size_t>(1024, resolution);
      break;
    case Problem::darcy:
      s.nu = 0.0;
      s.final_time = 0.0;
      s.solve_resolution = std::max<std::size_t>(128, resolution);
      break;
    case Problem::navier_stokes:
      s.nu = 1e-3;
      s.final_time = 20.0;
      s.solve_resolution = std::max<std::size_t>(64, resolution);
      break;
  }
  return s;
}

std::pair<Tensor, Tensor> generate_sample(const PdeProblemSpec& spec, std::size_t index) {
  const std::uint64_t seed = spec.base_seed + index;
  const std::size_t n = spec.solve_resolution;
  const std::size_t r = n / spec.resolution;
  switch (spec.problem) {
    case Problem::burgers: {
      const Tensor u0 = pde::grf_sample(pde::burgers_grf(n), seed);
      const Tensor u1 = pde::solve_burgers(u0, {spec.nu, spec.final_time, spec.dt});
      return {pde::downsample(u0, r, 1), pde::downsample(u1, r, 1)};
    }
    case Problem::darcy: {
      const Tensor a = pde::psi_threshold(pde::grf_sample(pde::darcy_grf(n), seed));
      const Tensor u = pde::solve_darcy(a).u;
      return {pde::downsample(a, r, 2), pde::downsample(u, r, 2)};
    }
    case Problem::navier_stokes: {
      Tensor w0 = pde::grf_sample(pde::navier_stokes_grf(n), seed);
      double mean = 0.0;
      for (double v : w0.data()) mean += v;
      mean /= static_cast<double>(w0.size());
      for (auto& v : w0.data()) v -= mean;
      pde::NsOptions opts;
      opts.nu = spec.nu;
      opts.dt = spec.dt;
      opts.snapshot_times.clear();
      for (std::size_t t = 1; t <= 2 * kNsSteps; ++t) opts.snapshot_times.push_back(double(t));
      const Tensor snaps = pde::downsample(pde::solve_navier_stokes(w0, opts), r, 2);
      const std::size_t block = kNsSteps * spec.resolution * spec.resolution;
      const Shape half{kNsSteps, spec.resolution, spec.resolution};
      return {Tensor(half, std::vector<double>(snaps.ptr(), snaps.ptr() + block)),
              Tensor(half, std::vector<double>(snaps.ptr() + block, snaps.ptr() + 2 * block))};
    }
  }
  throw std::logic_error("unhandled problem");
}

DatasetBundle build_dataset(const PdeProblemSpec& spec) {
  spec.validate();
  const std::size_t total = spec.n_train + spec.n_test;
  std::vector<Tensor> inputs(total), targets(total);
  std::vector<std::string> errors(total);
  const auto count = static_cast<long>(total);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    try {
      auto [a, u] = generate_sample(spec, static_cast<std::size_t>(i));
      inputs[i] = std::move(a);
      targets[i] = std::move(u);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < total; ++i)
    if (!errors[i].empty())
      throw std::runtime_error("sample " + std::to_string(i) + " (seed " + std::to_string(spec.base_seed + i) +
                               "): " + errors[i]);

  auto stack = [&](std::size_t begin, std::size_t end, const std::vector<Tensor>& src) {
    Shape shape{end - begin};
    const Shape& one = src.front().shape();
    shape.insert(shape.end(), one.begin(), one.end());
    Tensor out(shape);
    const std::size_t block = src.front().size();
    for (std::size_t i = begin; i < end; ++i) std::copy_n(src[i].ptr(), block, out.ptr() + (i - begin) * block);
    return out;
  };
  DatasetBundle b;
  b.spec = spec;
  b.a_train = stack(0, spec.n_train, inputs);
  b.u_train = stack(0, spec.n_train, targets);
  b.a_test = stack(spec.n_train, total, inputs);
  b.u_test = stack(spec.n_train, total, targets);
  return b;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed key=value line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

void ensure_writable_dir(const fs::path& dir, bool force, const std::string& what) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !force)
      throw std::runtime_error(what + " directory " + dir.string() + " already exists; pass --force to overwrite");
  }
  fs::create_directories(dir);
}

namespace {

const char* const kBundleFiles[] = {"a_train.dpno", "u_train.dpno", "a_test.dpno", "u_test.dpno"};

KeyValues bundle_metadata(const DatasetBundle& b) {
  const auto& s = b.spec;
  return {
      {"format", "dpno-bundle-1"},
      {"problem", to_string(s.problem)},
      {"nu", format_double(s.nu)},
      {"solve_resolution", std::to_string(s.solve_resolution)},
      {"resolution", std::to_string(s.resolution)},
      {"final_time", format_double(s.final_time)},
      {"dt", format_double(s.dt)},
      {"n_train", std::to_string(s.n_train)},
      {"n_test", std::to_string(s.n_test)},
      {"base_seed", std::to_string(s.base_seed)},
      {"input_shape", to_string(b.a_train.shape())},
      {"target_shape", to_string(b.u_train.shape())},
  };
}

}  // namespace

void save_bundle(const DatasetBundle& b, const fs::path& dir, bool force) {
  ensure_writable_dir(dir, force, "bundle");
  const Tensor* parts[] = {&b.a_train, &b.u_train, &b.a_test, &b.u_test};
  for (std::size_t i = 0; i < 4; ++i) io::save_tensor(dir / kBundleFiles[i], *parts[i]);
  const std::string meta = format_key_values(bundle_metadata(b));
  io::write_file(dir / "metadata.txt", std::vector<char>(meta.begin(), meta.end()));
}

DatasetBundle load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("bundle directory " + dir.string() + " does not exist");
  const auto raw = io::read_file(dir / "metadata.txt");
  const KeyValues kv = parse_key_values(std::string(raw.begin(), raw.end()));
  auto get = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("bundle metadata is missing '" + key + "'");
    return it->second;
  };
  DatasetBundle b;
  b.spec.problem = parse_problem(get("problem"));
  b.spec.nu = std::stod(get("nu"));
  b.spec.solve_resolution = std::stoul(get("solve_resolution"));
  b.spec.resolution = std::stoul(get("resolution"));
  b.spec.final_time = std::stod(get("final_time"));
  b.spec.dt = std::stod(get("dt"));
  b.spec.n_train = std::stoul(get("n_train"));
  b.spec.n_test = std::stoul(get("n_test"));
  b.spec.base_seed = std::stoull(get("base_seed"));
  Tensor* parts[] = {&b.a_train, &b.u_train, &b.a_test, &b.u_test};
  for (std::size_t i = 0; i < 4; ++i) *parts[i] = io::load_tensor(dir / kBundleFiles[i]);

  const std::size_t r = b.spec.resolution;
  Shape sample;
  switch (b.spec.problem) {
    case Problem::burgers: sample = {r}; break;
    case Problem::darcy: sample = {r, r}; break;
    case Problem::navier_stokes: sample = {kNsSteps, r, r}; break;
  }
  auto expect = [&](const Tensor& t, std::size_t count, const char* name) {
    Shape s{count};
    s.insert(s.end(), sample.begin(), sample.end());
    if (t.shape() != s)
      throw ShapeError(std::string("bundle ") + name + " has shape " + to_string(t.shape()) + ", metadata implies " +
                       to_string(s));
  };
  expect(b.a_train, b.spec.n_train, "a_train");
  expect(b.u_train, b.spec.n_train, "u_train");
  expect(b.a_test, b.spec.n_test, "a_test");
  expect(b.u_test, b.spec.n_test, "u_test");
  return b;
}

}  // namespace dpno
