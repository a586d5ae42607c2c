#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "dpno/tensor.hpp"

namespace dpno {

enum class Problem { burgers, darcy, navier_stokes };

/// "burgers", "darcy", "ns".
std::string to_string(Problem p);
Problem parse_problem(const std::string& s);

struct PdeProblemSpec {
  Problem problem = Problem::burgers;
  double nu = 0.01;
  /// Grid the solver runs on; must be a multiple of `resolution`.
  std::size_t solve_resolution = 1024;
  /// Grid stored in the bundle.
  std::size_t resolution = 128;
  double final_time = 1.0;
  /// Solver step; 0 selects the solver default for the solve grid.
  double dt = 0.0;
  std::size_t n_train = 1000;
  std::size_t n_test = 200;
  std::uint64_t base_seed = 0;

  void validate() const;
};

/// Desk-scale defaults for a problem stored at `resolution`: Burgers solved at
/// 1024, Darcy at 128, Navier-Stokes at 64 (or at `resolution` if finer).
PdeProblemSpec default_problem_spec(Problem p, std::size_t resolution);

/// Navier-Stokes snapshots: inputs at t = 1..10, targets at t = 11..20.
inline constexpr std::size_t kNsSteps = 10;

/// Input and target of sample i, drawn with seed base_seed + i. Layouts:
/// Burgers [R], Darcy [R, R], Navier-Stokes [10, R, R].
std::pair<Tensor, Tensor> generate_sample(const PdeProblemSpec& spec, std::size_t index);

struct DatasetBundle {
  PdeProblemSpec spec;
  Tensor a_train, u_train, a_test, u_test;
};

/// Generates every sample (in parallel over samples; the result does not
/// depend on scheduling).
DatasetBundle build_dataset(const PdeProblemSpec& spec);

/// Writes a_train/u_train/a_test/u_test.dpno and metadata.txt. Refuses to
/// touch an existing non-empty directory unless `force`.
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir, bool force);
DatasetBundle load_bundle(const std::filesystem::path& dir);

/// key=value text helpers used for metadata and run configs.
using KeyValues = std::map<std::string, std::string>;
std::string format_key_values(const KeyValues& kv);
KeyValues parse_key_values(const std::string& text);
std::string format_double(double v);

/// Throws unless `dir` is absent or empty, or `force` is set.
void ensure_writable_dir(const std::filesystem::path& dir, bool force, const std::string& what);

}  // namespace dpno
