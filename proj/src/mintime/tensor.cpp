#include "mintime/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mintime/errors.hpp"

namespace mintime {

int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("negative dimension in tensor shape");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_numel(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != static_cast<int64_t>(data_.size()))
    throw ShapeError("tensor data length does not match shape " + shape_str());
}

Tensor Tensor::full(std::vector<int64_t> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
  os << "]";
  return os.str();
}

Tensor TensorF32::to_tensor() const {
  std::vector<double> d(data.size());
  for (size_t i = 0; i < data.size(); ++i) d[i] = static_cast<double>(data[i]);
  return Tensor(shape, std::move(d));
}

TensorF32 TensorF32::from_tensor(const Tensor& t) {
  TensorF32 f;
  f.shape = t.shape();
  f.data.resize(static_cast<size_t>(t.numel()));
  for (int64_t i = 0; i < t.numel(); ++i) f.data[static_cast<size_t>(i)] = static_cast<float>(t[i]);
  return f;
}

namespace {

constexpr char kMagic[4] = {'M', 'N', 'T', 'T'};

void put_u32_le(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_tensor_file(const std::string& path, const TensorF32& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open tensor file for writing: " + path);
  os.write(kMagic, 4);
  if (t.shape.size() > 255) throw ShapeError("tensor rank exceeds format limit");
  const unsigned char rank = static_cast<unsigned char>(t.shape.size());
  os.write(reinterpret_cast<const char*>(&rank), 1);
  int64_t n = 1;
  for (int64_t d : t.shape) {
    if (d < 0 || d > 0xffffffffll) throw ShapeError("dimension out of range for tensor file");
    put_u32_le(os, static_cast<uint32_t>(d));
    n *= d;
  }
  if (n != static_cast<int64_t>(t.data.size()))
    throw ShapeError("tensor payload length does not match dims");
  static_assert(sizeof(float) == 4);
  // Little-endian host assumed for the f32 payload blit.
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!os) throw DataError("short write on tensor file: " + path);
}

void save_tensor_file(const std::string& path, const Tensor& t) {
  save_tensor_file(path, TensorF32::from_tensor(t));
}

TensorF32 load_tensor_file_f32(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open tensor file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("bad magic in tensor file: " + path);
  unsigned char rank = 0;
  is.read(reinterpret_cast<char*>(&rank), 1);
  TensorF32 t;
  int64_t n = 1;
  for (int r = 0; r < rank; ++r) {
    const uint32_t d = get_u32_le(is);
    t.shape.push_back(static_cast<int64_t>(d));
    n *= static_cast<int64_t>(d);
  }
  if (!is) throw DataError("truncated tensor header: " + path);
  t.data.resize(static_cast<size_t>(n));
  is.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!is) throw DataError("truncated tensor payload: " + path);
  return t;
}

Tensor load_tensor_file(const std::string& path) { return load_tensor_file_f32(path).to_tensor(); }

}  // namespace mintime
