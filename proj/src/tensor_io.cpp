#include "dpno/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace dpno::io {

namespace {

constexpr char kMagic[4] = {'D', 'P', 'N', 'O'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::vector<char>& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <class T>
T take(const std::vector<char>& in, std::size_t& offset, const char* what) {
  if (in.size() < offset + sizeof(T))
    throw FormatError(std::string("truncated tensor data while reading ") + what);
  char buf[sizeof(T)];
  std::memcpy(buf, in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  offset += sizeof(T);
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

std::vector<char> encode_tensor(const Tensor& t, DType dtype) {
  std::vector<char> out(kMagic, kMagic + 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dtype));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.ndim()));
  for (auto d : t.shape()) put<std::uint64_t>(out, d);
  out.reserve(out.size() + t.size() * (dtype == DType::f64 ? 8 : 4));
  for (double v : t.data()) {
    if (dtype == DType::f64)
      put<double>(out, v);
    else
      put<float>(out, static_cast<float>(v));
  }
  return out;
}

Tensor decode_tensor(const std::vector<char>& bytes, std::size_t& offset) {
  if (bytes.size() < offset + 4 || std::memcmp(bytes.data() + offset, kMagic, 4) != 0)
    throw FormatError("bad magic: not a DPNO tensor record");
  std::size_t pos = offset + 4;
  const auto version = take<std::uint32_t>(bytes, pos, "version");
  if (version != kVersion) throw FormatError("unsupported DPNO version " + std::to_string(version));
  const auto dtype = take<std::uint32_t>(bytes, pos, "dtype");
  if (dtype > 1) throw FormatError("unknown dtype code " + std::to_string(dtype));
  const auto ndim = take<std::uint32_t>(bytes, pos, "ndim");
  Shape shape(ndim);
  std::size_t count = 1;
  for (auto& d : shape) {
    d = take<std::uint64_t>(bytes, pos, "dims");
    if (d != 0 && count > (std::size_t(1) << 40) / d) throw FormatError("implausible tensor size");
    count *= d;
  }
  const std::size_t width = dtype == 1 ? 8 : 4;
  if (bytes.size() - pos < count * width)
    throw FormatError("truncated payload: need " + std::to_string(count * width) + " bytes, have " +
                      std::to_string(bytes.size() - pos));
  std::vector<double> values(count);
  for (auto& v : values) v = dtype == 1 ? take<double>(bytes, pos, "payload") : take<float>(bytes, pos, "payload");
  offset = pos;
  return Tensor(std::move(shape), std::move(values));
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void save_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype) {
  write_file(path, encode_tensor(t, dtype));
}

Tensor load_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t offset = 0;
  Tensor t = decode_tensor(bytes, offset);
  if (offset != bytes.size()) throw FormatError(path.string() + ": trailing bytes after tensor record");
  return t;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::vector<char> out;
  for (const auto& nt : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(nt.name.size()));
    out.insert(out.end(), nt.name.begin(), nt.name.end());
    const auto rec = encode_tensor(nt.value);
    out.insert(out.end(), rec.begin(), rec.end());
  }
  write_file(path, out);
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::vector<NamedTensor> out;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto len = take<std::uint32_t>(bytes, pos, "name length");
    if (bytes.size() - pos < len) throw FormatError(path.string() + ": truncated tensor name");
    std::string name(bytes.data() + pos, len);
    pos += len;
    Tensor t = decode_tensor(bytes, pos);
    out.push_back({std::move(name), std::move(t)});
  }
  return out;
}

}  // namespace dpno::io
