#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mintime {

// Dense row-major tensor of doubles. All training and test math runs in
// 64-bit; 32-bit only appears in file payloads.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape);
  Tensor(std::vector<int64_t> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int64_t> shape, double v);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const std::vector<int64_t>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // 2-D accessors; only valid when rank()==2.
  int64_t rows() const { return shape_[0]; }
  int64_t cols() const { return shape_[1]; }
  double& at(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * shape_[1] + c)]; }
  double at(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * shape_[1] + c)]; }

  bool all_finite() const;
  void fill(double v);
  std::string shape_str() const;

 private:
  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

int64_t shape_numel(const std::vector<int64_t>& shape);

// Raw tensor file: magic "MNTT", u8 rank, little-endian u32 dims, then
// little-endian f32 payload, row-major.
struct TensorF32 {
  std::vector<int64_t> shape;
  std::vector<float> data;

  Tensor to_tensor() const;
  static TensorF32 from_tensor(const Tensor& t);
};

void save_tensor_file(const std::string& path, const TensorF32& t);
void save_tensor_file(const std::string& path, const Tensor& t);
TensorF32 load_tensor_file_f32(const std::string& path);
Tensor load_tensor_file(const std::string& path);

}  // namespace mintime
