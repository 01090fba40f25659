#include "mintime/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mintime/errors.hpp"

namespace mintime {

Parameter& ParamStore::create(const std::string& name, Tensor init, bool decay) {
  if (find(name)) throw ConfigError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = Tensor::zeros(init.shape());
  p->value = std::move(init);
  p->decay = decay;
  items_.push_back(std::move(p));
  return *items_.back();
}

Parameter* ParamStore::find(const std::string& name) {
  for (auto& p : items_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParamStore::find(const std::string& name) const {
  for (auto& p : items_)
    if (p->name == name) return p.get();
  return nullptr;
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  out.reserve(items_.size());
  for (auto& p : items_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(items_.size());
  for (auto& p : items_) out.push_back(p.get());
  return out;
}

int64_t ParamStore::total_elements() const {
  int64_t n = 0;
  for (auto& p : items_) n += p->value.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& p : items_) p->zero_grad();
}

namespace detail {

void mm(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  std::fill(c, c + m * n, 0.0);
  mm_acc(a, b, c, m, k, n);
}

void mm_acc(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  // i-k-j order: inner loop runs over contiguous rows of b and c, which the
  // compiler vectorizes. Accumulation over k stays in ascending order, the
  // same order a naive triple loop uses.
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (int64_t kk = 0; kk < k; ++kk) {
      const double av = ai[kk];
      if (av == 0.0) continue;
      const double* bk = b + kk * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bk[j];
    }
  }
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad_scalar(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779399460599344;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

int Graph::push(Tensor value, bool needs_grad, std::function<void(Graph&)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Graph::grad_buf(int id) {
  Node& n = node(id);
  if (n.grad.empty() && n.value.numel() > 0) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

Tensor Graph::grad_of(int id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.empty()) return Tensor::zeros(n.value.shape());
  return n.grad;
}

int Graph::input(Tensor v) { return push(std::move(v), false, nullptr); }

int Graph::param(Parameter& p) {
  const int id = push(p.value, true, nullptr);
  node(id).bound = &p;
  bindings_.emplace_back(&p, id);
  return id;
}

static void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

static void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + t.shape_str());
}

int Graph::add(int a, int b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "add");
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = va[i] + vb[i];
  const bool ng = wants(a) || wants(b);
  return push(std::move(out), ng, [a, b, id = static_cast<int>(nodes_.size())](Graph& g) {
    const Tensor& go = g.node(id).grad;
    if (g.wants(a)) {
      Tensor& ga = g.grad_buf(a);
      for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
    }
    if (g.wants(b)) {
      Tensor& gb = g.grad_buf(b);
      for (int64_t i = 0; i < go.numel(); ++i) gb[i] += go[i];
    }
  });
}

int Graph::sub(int a, int b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "sub");
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = va[i] - vb[i];
  const bool ng = wants(a) || wants(b);
  return push(std::move(out), ng, [a, b, id = static_cast<int>(nodes_.size())](Graph& g) {
    const Tensor& go = g.node(id).grad;
    if (g.wants(a)) {
      Tensor& ga = g.grad_buf(a);
      for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
    }
    if (g.wants(b)) {
      Tensor& gb = g.grad_buf(b);
      for (int64_t i = 0; i < go.numel(); ++i) gb[i] -= go[i];
    }
  });
}

int Graph::mul(int a, int b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "mul");
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = va[i] * vb[i];
  const bool ng = wants(a) || wants(b);
  return push(std::move(out), ng, [a, b, id = static_cast<int>(nodes_.size())](Graph& g) {
    const Tensor& go = g.node(id).grad;
    const Tensor& va = g.value(a);
    const Tensor& vb = g.value(b);
    if (g.wants(a)) {
      Tensor& ga = g.grad_buf(a);
      for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * vb[i];
    }
    if (g.wants(b)) {
      Tensor& gb = g.grad_buf(b);
      for (int64_t i = 0; i < go.numel(); ++i) gb[i] += go[i] * va[i];
    }
  });
}

int Graph::scale(int a, double c) {
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = va[i] * c;
  return push(std::move(out), wants(a), [a, c, id = static_cast<int>(nodes_.size())](Graph& g) {
    if (!g.wants(a)) return;
    const Tensor& go = g.node(id).grad;
    Tensor& ga = g.grad_buf(a);
    for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * c;
  });
}

int Graph::add_rowvec(int a, int v) {
  const Tensor& va = value(a);
  const Tensor& vv = value(v);
  require_rank2(va, "add_rowvec");
  if (vv.rank() != 1 || vv.dim(0) != va.cols())
    throw ShapeError("add_rowvec: vector length " + vv.shape_str() + " does not match " + va.shape_str());
  Tensor out(va.shape());
  const int64_t rows = va.rows(), cols = va.cols();
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cols; ++c) out.at(r, c) = va.at(r, c) + vv[c];
  const bool ng = wants(a) || wants(v);
  return push(std::move(out), ng, [a, v, id = static_cast<int>(nodes_.size())](Graph& g) {
    const Tensor& go = g.node(id).grad;
    const int64_t rows = go.rows(), cols = go.cols();
    if (g.wants(a)) {
      Tensor& ga = g.grad_buf(a);
      for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
    }
    if (g.wants(v)) {
      Tensor& gv = g.grad_buf(v);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t c = 0; c < cols; ++c) gv[c] += go.at(r, c);
    }
  });
}

int Graph::matmul(int a, int b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_rank2(va, "matmul");
  require_rank2(vb, "matmul");
  if (va.cols() != vb.rows())
    throw ShapeError("matmul: inner dimensions differ, " + va.shape_str() + " x " + vb.shape_str());
  const int64_t m = va.rows(), k = va.cols(), n = vb.cols();
  Tensor out({m, n});
  detail::mm(va.data(), vb.data(), out.data(), m, k, n);
  const bool ng = wants(a) || wants(b);
  return push(std::move(out), ng, [a, b, m, k, n, id = static_cast<int>(nodes_.size())](Graph& g) {
    const Tensor& go = g.node(id).grad;
    const Tensor& va = g.value(a);
    const Tensor& vb = g.value(b);
    if (g.wants(a)) {
      // dA += dC * B^T
      Tensor bt({n, k});
      for (int64_t r = 0; r < k; ++r)
        for (int64_t c = 0; c < n; ++c) bt.at(c, r) = vb.at(r, c);
      detail::mm_acc(go.data(), bt.data(), g.grad_buf(a).data(), m, n, k);
    }
    if (g.wants(b)) {
      // dB += A^T * dC
      Tensor at({k, m});
      for (int64_t r = 0; r < m; ++r)
        for (int64_t c = 0; c < k; ++c) at.at(c, r) = va.at(r, c);
      detail::mm_acc(at.data(), go.data(), g.grad_buf(b).data(), k, m, n);
    }
  });
}

int Graph::transpose(int a) {
  const Tensor& va = value(a);
  require_rank2(va, "transpose");
  const int64_t m = va.rows(), n = va.cols();
  Tensor out({n, m});
  for (int64_t r = 0; r < m; ++r)
    for (int64_t c = 0; c < n; ++c) out.at(c, r) = va.at(r, c);
  return push(std::move(out), wants(a), [a, m, n, id = static_cast<int>(nodes_.size())](Graph& g) {
    if (!g.wants(a)) return;
    const Tensor& go = g.node(id).grad;
    Tensor& ga = g.grad_buf(a);
    for (int64_t r = 0; r < m; ++r)
      for (int64_t c = 0; c < n; ++c) ga.at(r, c) += go.at(c, r);
  });
}

int Graph::gather_rows(int a, std::vector<int64_t> rows) {
  const Tensor& va = value(a);
  require_rank2(va, "gather_rows");
  const int64_t cols = va.cols();
  Tensor out({static_cast<int64_t>(rows.size()), cols});
  for (size_t r = 0; r < rows.size(); ++r) {
    const int64_t src = rows[r];
    if (src < -1 || src >= va.rows())
      throw ShapeError("gather_rows: index out of range");
    if (src < 0) continue;  // stays zero
    for (int64_t c = 0; c < cols; ++c) out.at(static_cast<int64_t>(r), c) = va.at(src, c);
  }
  return push(std::move(out), wants(a),
              [a, rows = std::move(rows), cols, id = static_cast<int>(nodes_.size())](Graph& g) {
                if (!g.wants(a)) return;
                const Tensor& go = g.node(id).grad;
                Tensor& ga = g.grad_buf(a);
                for (size_t r = 0; r < rows.size(); ++r) {
                  const int64_t src = rows[r];
                  if (src < 0) continue;
                  for (int64_t c = 0; c < cols; ++c)
                    ga.at(src, c) += go.at(static_cast<int64_t>(r), c);
                }
              });
}

int Graph::gather(int a, std::vector<int64_t> flat_index, std::vector<int64_t> out_shape) {
  const Tensor& va = value(a);
  const int64_t out_n = shape_numel(out_shape);
  if (out_n != static_cast<int64_t>(flat_index.size()))
    throw ShapeError("gather: index count does not match output shape");
  Tensor out(std::move(out_shape));
  for (int64_t i = 0; i < out_n; ++i) {
    const int64_t src = flat_index[static_cast<size_t>(i)];
    if (src < -1 || src >= va.numel()) throw ShapeError("gather: index out of range");
    out[i] = src < 0 ? 0.0 : va[src];
  }
  return push(std::move(out), wants(a),
              [a, idx = std::move(flat_index), id = static_cast<int>(nodes_.size())](Graph& g) {
                if (!g.wants(a)) return;
                const Tensor& go = g.node(id).grad;
                Tensor& ga = g.grad_buf(a);
                for (int64_t i = 0; i < go.numel(); ++i) {
                  const int64_t src = idx[static_cast<size_t>(i)];
                  if (src >= 0) ga[src] += go[i];
                }
              });
}

int Graph::slice_cols(int a, int64_t first, int64_t count) {
  const Tensor& va = value(a);
  require_rank2(va, "slice_cols");
  if (first < 0 || count < 0 || first + count > va.cols())
    throw ShapeError("slice_cols: range out of bounds");
  const int64_t rows = va.rows();
  Tensor out({rows, count});
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < count; ++c) out.at(r, c) = va.at(r, first + c);
  return push(std::move(out), wants(a),
              [a, first, count, rows, id = static_cast<int>(nodes_.size())](Graph& g) {
                if (!g.wants(a)) return;
                const Tensor& go = g.node(id).grad;
                Tensor& ga = g.grad_buf(a);
                for (int64_t r = 0; r < rows; ++r)
                  for (int64_t c = 0; c < count; ++c) ga.at(r, first + c) += go.at(r, c);
              });
}

int Graph::concat_rows(const std::vector<int>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  int64_t rows = 0;
  const int64_t cols = value(parts[0]).cols();
  bool ng = false;
  for (int p : parts) {
    require_rank2(value(p), "concat_rows");
    if (value(p).cols() != cols) throw ShapeError("concat_rows: column mismatch");
    rows += value(p).rows();
    ng = ng || wants(p);
  }
  Tensor out({rows, cols});
  int64_t at = 0;
  for (int p : parts) {
    const Tensor& vp = value(p);
    std::copy(vp.data(), vp.data() + vp.numel(), out.data() + at * cols);
    at += vp.rows();
  }
  return push(std::move(out), ng,
              [parts, cols, id = static_cast<int>(nodes_.size())](Graph& g) {
                const Tensor& go = g.node(id).grad;
                int64_t at = 0;
                for (int p : parts) {
                  const int64_t pr = g.value(p).rows();
                  if (g.wants(p)) {
                    Tensor& gp = g.grad_buf(p);
                    for (int64_t i = 0; i < pr * cols; ++i) gp[i] += go[at * cols + i];
                  }
                  at += pr;
                }
              });
}

int Graph::concat_cols(const std::vector<int>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  const int64_t rows = value(parts[0]).rows();
  int64_t cols = 0;
  bool ng = false;
  for (int p : parts) {
    require_rank2(value(p), "concat_cols");
    if (value(p).rows() != rows) throw ShapeError("concat_cols: row mismatch");
    cols += value(p).cols();
    ng = ng || wants(p);
  }
  Tensor out({rows, cols});
  int64_t at = 0;
  for (int p : parts) {
    const Tensor& vp = value(p);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < vp.cols(); ++c) out.at(r, at + c) = vp.at(r, c);
    at += vp.cols();
  }
  return push(std::move(out), ng,
              [parts, rows, id = static_cast<int>(nodes_.size())](Graph& g) {
                const Tensor& go = g.node(id).grad;
                int64_t at = 0;
                for (int p : parts) {
                  const int64_t pc = g.value(p).cols();
                  if (g.wants(p)) {
                    Tensor& gp = g.grad_buf(p);
                    for (int64_t r = 0; r < rows; ++r)
                      for (int64_t c = 0; c < pc; ++c) gp.at(r, c) += go.at(r, at + c);
                  }
                  at += pc;
                }
              });
}

int Graph::masked_softmax(int a, std::vector<uint8_t> mask) {
  const Tensor& va = value(a);
  if (va.rank() < 1) throw ShapeError("masked_softmax: rank must be >= 1");
  const int64_t n = va.dim(va.rank() - 1);
  if (n != static_cast<int64_t>(mask.size()))
    throw ShapeError("masked_softmax: mask length does not match last dimension");
  bool any = false;
  for (uint8_t m : mask) any = any || (m != 0);
  if (!any) throw NumericError("masked_softmax: all positions masked");
  const int64_t rows = va.numel() / n;
  Tensor out(va.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = va.data() + r * n;
    double* y = out.data() + r * n;
    // Max and sum run over unmasked entries only; masked outputs are exact
    // zeros and never touch the masked logits, so results are bit-for-bit
    // independent of masked inputs.
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t i = 0; i < n; ++i)
      if (mask[static_cast<size_t>(i)] && x[i] > mx) mx = x[i];
    double z = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      if (mask[static_cast<size_t>(i)]) {
        y[i] = std::exp(x[i] - mx);
        z += y[i];
      } else {
        y[i] = 0.0;
      }
    }
    for (int64_t i = 0; i < n; ++i)
      if (mask[static_cast<size_t>(i)]) y[i] /= z;
  }
  return push(std::move(out), wants(a),
              [a, mask = std::move(mask), n, rows, id = static_cast<int>(nodes_.size())](Graph& g) {
                if (!g.wants(a)) return;
                const Tensor& go = g.node(id).grad;
                const Tensor& y = g.value(id);
                Tensor& ga = g.grad_buf(a);
                for (int64_t r = 0; r < rows; ++r) {
                  const double* yr = y.data() + r * n;
                  const double* gr = go.data() + r * n;
                  double dot = 0.0;
                  for (int64_t i = 0; i < n; ++i)
                    if (mask[static_cast<size_t>(i)]) dot += gr[i] * yr[i];
                  double* gar = ga.data() + r * n;
                  for (int64_t i = 0; i < n; ++i)
                    if (mask[static_cast<size_t>(i)]) gar[i] += yr[i] * (gr[i] - dot);
                }
              });
}

int Graph::softmax(int a) {
  const Tensor& va = value(a);
  const int64_t n = va.dim(va.rank() - 1);
  return masked_softmax(a, std::vector<uint8_t>(static_cast<size_t>(n), 1));
}

int Graph::layer_norm(int a, int gain, int bias, double eps) {
  const Tensor& va = value(a);
  const Tensor& vg = value(gain);
  const Tensor& vb = value(bias);
  if (va.rank() < 1) throw ShapeError("layer_norm: rank must be >= 1");
  const int64_t n = va.dim(va.rank() - 1);
  if (vg.numel() != n || vb.numel() != n)
    throw ShapeError("layer_norm: gain/bias length does not match last dimension");
  const int64_t rows = va.numel() / n;
  Tensor out(va.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = va.data() + r * n;
    double* y = out.data() + r * n;
    double mean = 0.0;
    for (int64_t i = 0; i < n; ++i) mean += x[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (int64_t i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean);
    var /= static_cast<double>(n);
    const double rstd = 1.0 / std::sqrt(var + eps);
    for (int64_t i = 0; i < n; ++i) y[i] = (x[i] - mean) * rstd * vg[i] + vb[i];
  }
  const bool ng = wants(a) || wants(gain) || wants(bias);
  return push(std::move(out), ng,
              [a, gain, bias, eps, n, rows, id = static_cast<int>(nodes_.size())](Graph& g) {
                const Tensor& go = g.node(id).grad;
                const Tensor& va = g.value(a);
                const Tensor& vg = g.value(gain);
                const double inv_n = 1.0 / static_cast<double>(n);
                for (int64_t r = 0; r < rows; ++r) {
                  const double* x = va.data() + r * n;
                  const double* dy = go.data() + r * n;
                  double mean = 0.0;
                  for (int64_t i = 0; i < n; ++i) mean += x[i];
                  mean *= inv_n;
                  double var = 0.0;
                  for (int64_t i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean);
                  var *= inv_n;
                  const double rstd = 1.0 / std::sqrt(var + eps);
                  if (g.wants(gain)) {
                    Tensor& gg = g.grad_buf(gain);
                    for (int64_t i = 0; i < n; ++i) gg[i] += dy[i] * (x[i] - mean) * rstd;
                  }
                  if (g.wants(bias)) {
                    Tensor& gb = g.grad_buf(bias);
                    for (int64_t i = 0; i < n; ++i) gb[i] += dy[i];
                  }
                  if (g.wants(a)) {
                    Tensor& ga = g.grad_buf(a);
                    double sum_dyg = 0.0, sum_dyg_xhat = 0.0;
                    for (int64_t i = 0; i < n; ++i) {
                      const double xhat = (x[i] - mean) * rstd;
                      const double dyg = dy[i] * vg[i];
                      sum_dyg += dyg;
                      sum_dyg_xhat += dyg * xhat;
                    }
                    double* gar = ga.data() + r * n;
                    for (int64_t i = 0; i < n; ++i) {
                      const double xhat = (x[i] - mean) * rstd;
                      const double dyg = dy[i] * vg[i];
                      gar[i] += rstd * (dyg - inv_n * sum_dyg - xhat * inv_n * sum_dyg_xhat);
                    }
                  }
                }
              });
}

int Graph::gelu(int a) {
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = detail::gelu_scalar(va[i]);
  return push(std::move(out), wants(a), [a, id = static_cast<int>(nodes_.size())](Graph& g) {
    if (!g.wants(a)) return;
    const Tensor& go = g.node(id).grad;
    const Tensor& va = g.value(a);
    Tensor& ga = g.grad_buf(a);
    for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * detail::gelu_grad_scalar(va[i]);
  });
}

int Graph::sigmoid(int a) {
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = detail::sigmoid_scalar(va[i]);
  return push(std::move(out), wants(a), [a, id = static_cast<int>(nodes_.size())](Graph& g) {
    if (!g.wants(a)) return;
    const Tensor& go = g.node(id).grad;
    const Tensor& y = g.value(id);
    Tensor& ga = g.grad_buf(a);
    for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * y[i] * (1.0 - y[i]);
  });
}

int Graph::sum(int a) {
  const Tensor& va = value(a);
  double s = 0.0;
  for (int64_t i = 0; i < va.numel(); ++i) s += va[i];
  return push(Tensor::scalar(s), wants(a), [a, id = static_cast<int>(nodes_.size())](Graph& g) {
    if (!g.wants(a)) return;
    const double go = g.node(id).grad[0];
    Tensor& ga = g.grad_buf(a);
    for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += go;
  });
}

int Graph::mean(int a) {
  const Tensor& va = value(a);
  if (va.numel() == 0) throw ShapeError("mean: empty tensor");
  const double inv_n = 1.0 / static_cast<double>(va.numel());
  double s = 0.0;
  for (int64_t i = 0; i < va.numel(); ++i) s += va[i];
  return push(Tensor::scalar(s * inv_n), wants(a),
              [a, inv_n, id = static_cast<int>(nodes_.size())](Graph& g) {
                if (!g.wants(a)) return;
                const double go = g.node(id).grad[0] * inv_n;
                Tensor& ga = g.grad_buf(a);
                for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += go;
              });
}

int Graph::bce_with_logits(int logit, double label) {
  const Tensor& vz = value(logit);
  if (vz.numel() != 1) throw ShapeError("bce_with_logits: logit must be scalar");
  const double z = vz[0];
  // max(z,0) - z*y + log1p(exp(-|z|)) is the stable form.
  const double loss = std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
  return push(Tensor::scalar(loss), wants(logit),
              [logit, label, id = static_cast<int>(nodes_.size())](Graph& g) {
                if (!g.wants(logit)) return;
                const double go = g.node(id).grad[0];
                const double z = g.value(logit)[0];
                g.grad_buf(logit)[0] += go * (detail::sigmoid_scalar(z) - label);
              });
}

void Graph::backward(int loss) {
  Node& ln = node(loss);
  if (ln.value.numel() != 1)
    throw NumericError("backward: loss must be a scalar node, got " + ln.value.shape_str());
  grad_buf(loss)[0] = 1.0;
  for (int id = loss; id >= 0; --id) {
    Node& n = node(id);
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.back) n.back(*this);
    if (n.bound && accumulate_params_) {
      Tensor& pg = n.bound->grad;
      for (int64_t i = 0; i < pg.numel(); ++i) pg[i] += n.grad[i];
    }
  }
}

}  // namespace mintime
