#pragma once

// DPNO tensor container:
//   "DPNO" | u32 version (1) | u32 dtype (0 = f32, 1 = f64) | u32 ndim |
//   ndim x u64 dims | row-major payload
// All integers and payload values are little-endian. A checkpoint is a
// sequence of (u32 name length, name bytes, tensor record).

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpno/tensor.hpp"

namespace dpno::io {

enum class DType : std::uint32_t { f32 = 0, f64 = 1 };

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Serialized bytes of one tensor record.
std::vector<char> encode_tensor(const Tensor& t, DType dtype = DType::f64);
/// Parses one record starting at `offset`, advancing it. Throws FormatError.
Tensor decode_tensor(const std::vector<char>& bytes, std::size_t& offset);

void save_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype = DType::f64);
Tensor load_tensor(const std::filesystem::path& path);

struct NamedTensor {
  std::string name;
  Tensor value;
};

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
/// All-or-nothing: the file is parsed completely before anything is returned.
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

/// Whole-file helpers shared by the artifact writers.
std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<char>& bytes);

}  // namespace dpno::io
