#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mintime/tensor.hpp"

namespace mintime {

// Learnable tensor plus its gradient accumulator. Addresses are stable for
// the lifetime of the owning ParamStore, so graphs can bind raw pointers.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool decay = true;  // included in weight decay

  void zero_grad() { grad.fill(0.0); }
};

class ParamStore {
 public:
  Parameter& create(const std::string& name, Tensor init, bool decay = true);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  size_t count() const { return items_.size(); }
  int64_t total_elements() const;
  void zero_grads();

 private:
  std::vector<std::unique_ptr<Parameter>> items_;
};

// Reverse-mode tape over dense tensors. Node ids are creation-ordered, which
// is already a topological order; backward() walks them once in reverse.
// One graph per inference/training context; a graph is not thread-safe but
// independent graphs may run in parallel.
class Graph {
 public:
  // Leaves.
  int input(Tensor v);
  int param(Parameter& p);

  // Elementwise and broadcast.
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int scale(int a, double c);
  int add_rowvec(int a, int v);  // [m x n] + [n]

  // Linear algebra (rank 2).
  int matmul(int a, int b);
  int transpose(int a);

  // Indexing. A row/element index of -1 reads as zero and receives no
  // gradient; used for padding and for "no embedding" rows.
  int gather_rows(int a, std::vector<int64_t> rows);
  int gather(int a, std::vector<int64_t> flat_index, std::vector<int64_t> out_shape);
  int slice_cols(int a, int64_t first, int64_t count);
  int concat_rows(const std::vector<int>& parts);
  int concat_cols(const std::vector<int>& parts);

  // Nonlinearities and normalization.
  int masked_softmax(int a, std::vector<uint8_t> mask);  // rows over last dim
  int softmax(int a);
  int layer_norm(int a, int gain, int bias, double eps = 1e-5);
  int gelu(int a);
  int sigmoid(int a);

  // Reductions and losses.
  int sum(int a);
  int mean(int a);
  int bce_with_logits(int logit, double label);  // scalar logit node

  const Tensor& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  // Gradient of the last backward() loss w.r.t. node id (zeros if untouched).
  Tensor grad_of(int id) const;

  // loss must be a scalar node; accumulates into bound Parameter::grad
  // unless param accumulation is off (parallel trainers read leaf grads
  // through param_bindings instead, so shared Parameters stay untouched).
  void backward(int loss);
  void set_param_accumulation(bool on) { accumulate_params_ = on; }
  const std::vector<std::pair<Parameter*, int>>& param_bindings() const { return bindings_; }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily during backward
    bool needs_grad = false;
    Parameter* bound = nullptr;
    std::function<void(Graph&)> back;
  };

  int push(Tensor value, bool needs_grad, std::function<void(Graph&)> back);
  Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }
  Tensor& grad_buf(int id);
  bool wants(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }

  std::vector<Node> nodes_;
  std::vector<std::pair<Parameter*, int>> bindings_;
  bool accumulate_params_ = true;
};

namespace detail {
// C = A * B and C += A * B over row-major buffers.
void mm(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
void mm_acc(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
double gelu_scalar(double x);
double gelu_grad_scalar(double x);
double sigmoid_scalar(double x);
}  // namespace detail

}  // namespace mintime
