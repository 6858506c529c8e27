#include "acd/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace acd {

namespace {

thread_local bool g_grad_enabled = true;
thread_local std::uint64_t g_matmul_madds = 0;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

using detail::Node;

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

Shape mat(std::size_t r, std::size_t c) { return Shape{r, c}; }

void require_rank2(const Tensor& a, const char* op) {
  if (a.shape().size() > 2)
    throw dimension_error(std::string(op) + ": expected rank <= 2, got " + shape_str(a.shape()));
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw dimension_error(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                        shape_str(b.shape()));
}

enum class Bcast { same, row, scalar };

Bcast classify(const char* op, const Tensor& a, const Tensor& b) {
  require_rank2(a, op);
  require_rank2(b, op);
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Bcast::same;
  if (b.size() == 1) return Bcast::scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Bcast::row;
  mismatch(op, a, b);
}

// Reduces a gradient of a's shape down to b's broadcast shape and accumulates.
void reduce_into(Bcast kind, std::span<const double> g, std::size_t cols, std::vector<double>& dst,
                 const std::function<double(std::size_t)>& factor) {
  switch (kind) {
    case Bcast::same:
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * factor(i);
      break;
    case Bcast::row:
      for (std::size_t i = 0; i < g.size(); ++i) dst[i % cols] += g[i] * factor(i);
      break;
    case Bcast::scalar: {
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * factor(i);
      dst[0] += s;
      break;
    }
  }
}

inline std::size_t bidx(Bcast kind, std::size_t i, std::size_t cols) {
  switch (kind) {
    case Bcast::same: return i;
    case Bcast::row: return i % cols;
    default: return 0;
  }
}

template <class F, class G>
Tensor unary(const char* op, const Tensor& a, F fwd, G dfdx_from_xy) {
  require_rank2(a, op);
  auto x = a.data();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  return make_result(a.shape(), std::move(y), op, {a}, [dfdx_from_xy](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * dfdx_from_xy(p.value[i], self.value[i]);
  });
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

std::uint64_t matmul_multiply_adds() { return g_matmul_madds; }
void reset_matmul_multiply_adds() { g_matmul_madds = 0; }

// ---------------------------------------------------------------- Tensor

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return full(rows, cols, 0.0, requires_grad);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double v, bool requires_grad) {
  return from(rows, cols, std::vector<double>(rows * cols, v), requires_grad);
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad) {
  return from_shape(mat(rows, cols), std::move(data), requires_grad);
}

Tensor Tensor::from_shape(Shape shape, std::vector<double> data, bool requires_grad) {
  if (numel(shape) != data.size())
    throw dimension_error("tensor: data length " + std::to_string(data.size()) +
                          " does not match shape " + shape_str(shape));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from(1, 1, {v}, requires_grad); }

double Tensor::item() const {
  if (size() != 1) throw dimension_error("item: tensor has shape " + shape_str(shape()));
  return node_->value[0];
}

Tensor Tensor::detach() const {
  return from_shape(node_->shape, node_->value, false);
}

Tensor make_result(Shape shape, std::vector<double> value, const char* op,
                   std::vector<Tensor> const& inputs, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = op;
  if (g_grad_enabled) {
    bool any = false;
    for (auto const& t : inputs) any = any || t.requires_grad();
    if (any) {
      n->requires_grad = true;
      n->parents.reserve(inputs.size());
      for (auto const& t : inputs) n->parents.push_back(t.node_ptr());
      n->backward = std::move(backward);
    }
  }
  return Tensor(std::move(n));
}

bool grad_enabled() { return g_grad_enabled; }
NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void backward(const Tensor& output) {
  if (output.size() != 1)
    throw dimension_error("backward: output must be scalar, got " + shape_str(output.shape()));
  if (!output.requires_grad()) return;

  // Iterative post-order DFS gives a deterministic topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(output.node(), 0);
  seen.insert(output.node());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  Node* out = output.node();
  if (out->backward) {
    out->grad.assign(1, 1.0);
  } else {
    out->ensure_grad()[0] += 1.0;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward) continue;
    if (n->grad.size() != n->value.size()) continue;  // unreachable branch
    n->backward(*n);
    std::vector<double>().swap(n->grad);
  }
}

// ---------------------------------------------------------------- structure

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) mismatch("matmul", a, b);
  const std::size_t r = a.rows(), k = a.cols(), c = b.cols();
  g_matmul_madds += static_cast<std::uint64_t>(r) * k * c;
  std::vector<double> out(r * c, 0.0);
  if (r && c && k) {
    Map(out.data(), r, c).noalias() = MapC(a.data().data(), r, k) * MapC(b.data().data(), k, c);
  }
  return make_result(mat(r, c), std::move(out), "matmul", {a, b}, [r, k, c](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (!r || !c || !k) return;
    MapC g(self.grad.data(), r, c);
    if (pa.requires_grad) {
      Map(pa.ensure_grad().data(), r, k).noalias() += g * MapC(pb.value.data(), k, c).transpose();
    }
    if (pb.requires_grad) {
      Map(pb.ensure_grad().data(), k, c).noalias() += MapC(pa.value.data(), r, k).transpose() * g;
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  auto x = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  return make_result(mat(c, r), std::move(out), "transpose", {a}, [r, c](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw dimension_error("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::vector<std::size_t> offs;
  std::size_t c = 0;
  for (auto const& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.rows() != r) mismatch("concat_cols", parts[0], p);
    offs.push_back(c);
    c += p.cols();
  }
  std::vector<double> out(r * c);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto x = parts[k].data();
    const std::size_t pc = parts[k].cols();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(x.data() + i * pc, pc, out.data() + i * c + offs[k]);
  }
  return make_result(mat(r, c), std::move(out), "concat_cols", parts, [r, c, offs](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = *self.parents[k];
      if (!p.requires_grad) continue;
      auto& g = p.ensure_grad();
      const std::size_t pc = p.cols();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < pc; ++j) g[i * pc + j] += self.grad[i * c + offs[k] + j];
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw dimension_error("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::vector<std::size_t> offs;
  std::size_t r = 0;
  for (auto const& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.cols() != c) mismatch("concat_rows", parts[0], p);
    offs.push_back(r * c);
    r += p.rows();
  }
  std::vector<double> out;
  out.reserve(r * c);
  for (auto const& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result(mat(r, c), std::move(out), "concat_rows", parts, [offs](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = *self.parents[k];
      if (!p.requires_grad) continue;
      auto& g = p.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offs[k] + i];
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_rows");
  if (begin > end || end > a.rows())
    throw dimension_error("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                          ") out of bounds for " + shape_str(a.shape()));
  const std::size_t c = a.cols();
  std::vector<double> out(a.data().begin() + begin * c, a.data().begin() + end * c);
  return make_result(mat(end - begin, c), std::move(out), "slice_rows", {a}, [begin, c](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * c + i] += self.grad[i];
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_cols");
  if (begin > end || end > a.cols())
    throw dimension_error("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                          ") out of bounds for " + shape_str(a.shape()));
  const std::size_t r = a.rows(), c = a.cols(), w = end - begin;
  std::vector<double> out(r * w);
  auto x = a.data();
  for (std::size_t i = 0; i < r; ++i) std::copy_n(x.data() + i * c + begin, w, out.data() + i * w);
  return make_result(mat(r, w), std::move(out), "slice_cols", {a}, [r, c, w, begin](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * c + begin + j] += self.grad[i * w + j];
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  require_rank2(a, "gather_rows");
  const std::size_t c = a.cols(), n = a.rows();
  std::vector<std::size_t> idx(index.begin(), index.end());
  std::vector<double> out(idx.size() * c);
  auto x = a.data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n)
      throw dimension_error("gather_rows: index " + std::to_string(idx[i]) + " out of range for " +
                            shape_str(a.shape()));
    std::copy_n(x.data() + idx[i] * c, c, out.data() + i * c);
  }
  const Shape shape = mat(idx.size(), c);
  return make_result(shape, std::move(out), "gather_rows", {a},
                     [idx = std::move(idx), c](Node& self) {
                       Node& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       auto& g = p.ensure_grad();
                       for (std::size_t i = 0; i < idx.size(); ++i)
                         for (std::size_t j = 0; j < c; ++j) g[idx[i] * c + j] += self.grad[i * c + j];
                     });
}

Tensor scatter_add_rows(const Tensor& a, std::span<const std::size_t> index, std::size_t n_out) {
  require_rank2(a, "scatter_add_rows");
  if (index.size() != a.rows())
    throw dimension_error("scatter_add_rows: " + std::to_string(index.size()) + " indices for " +
                          shape_str(a.shape()));
  const std::size_t c = a.cols();
  std::vector<std::size_t> idx(index.begin(), index.end());
  std::vector<double> out(n_out * c, 0.0);
  auto x = a.data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n_out)
      throw dimension_error("scatter_add_rows: index " + std::to_string(idx[i]) + " >= " +
                            std::to_string(n_out));
    for (std::size_t j = 0; j < c; ++j) out[idx[i] * c + j] += x[i * c + j];
  }
  return make_result(mat(n_out, c), std::move(out), "scatter_add_rows", {a},
                     [idx = std::move(idx), c](Node& self) {
                       Node& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       auto& g = p.ensure_grad();
                       for (std::size_t i = 0; i < idx.size(); ++i)
                         for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[idx[i] * c + j];
                     });
}

Tensor broadcast_rows(const Tensor& row, std::size_t n) {
  require_rank2(row, "broadcast_rows");
  if (row.rows() != 1) throw dimension_error("broadcast_rows: expected a row, got " + shape_str(row.shape()));
  const std::size_t c = row.cols();
  std::vector<double> out(n * c);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(row.data().data(), c, out.data() + i * c);
  return make_result(mat(n, c), std::move(out), "broadcast_rows", {row}, [n, c](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
  });
}

Tensor scale_rows(const Tensor& a, std::span<const double> w) {
  require_rank2(a, "scale_rows");
  if (w.size() != a.rows())
    throw dimension_error("scale_rows: " + std::to_string(w.size()) + " weights for " + shape_str(a.shape()));
  const std::size_t c = a.cols();
  std::vector<double> ws(w.begin(), w.end());
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < ws.size(); ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] *= ws[i];
  return make_result(a.shape(), std::move(out), "scale_rows", {a}, [ws = std::move(ws), c](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < ws.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[i * c + j] * ws[i];
  });
}

// ---------------------------------------------------------------- elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  const Bcast kind = classify("add", a, b);
  const std::size_t c = a.cols();
  std::vector<double> out(a.data().begin(), a.data().end());
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[bidx(kind, i, c)];
  return make_result(a.shape(), std::move(out), "add", {a, b}, [kind, c](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) reduce_into(kind, self.grad, c, pb.ensure_grad(), [](std::size_t) { return 1.0; });
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const Bcast kind = classify("sub", a, b);
  const std::size_t c = a.cols();
  std::vector<double> out(a.data().begin(), a.data().end());
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[bidx(kind, i, c)];
  return make_result(a.shape(), std::move(out), "sub", {a, b}, [kind, c](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) reduce_into(kind, self.grad, c, pb.ensure_grad(), [](std::size_t) { return -1.0; });
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Bcast kind = classify("mul", a, b);
  const std::size_t c = a.cols();
  std::vector<double> out(a.data().begin(), a.data().end());
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[bidx(kind, i, c)];
  return make_result(a.shape(), std::move(out), "mul", {a, b}, [kind, c](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[bidx(kind, i, c)];
    }
    if (pb.requires_grad) {
      const auto& av = pa.value;
      reduce_into(kind, self.grad, c, pb.ensure_grad(), [&av](std::size_t i) { return av[i]; });
    }
  });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double s) {
  return unary("scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary("add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

// ---------------------------------------------------------------- reductions

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result(mat(1, 1), {s}, "sum", {a}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw dimension_error("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor sum_rows(const Tensor& a) {
  require_rank2(a, "sum_rows");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(c, 0.0);
  auto x = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += x[i * c + j];
  return make_result(mat(1, c), std::move(out), "sum_rows", {a}, [r, c](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j];
  });
}

Tensor mean_rows(const Tensor& a) {
  if (a.rows() == 0) throw dimension_error("mean_rows: no rows in " + shape_str(a.shape()));
  return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows()));
}

// ---------------------------------------------------------------- nonlinearities

Tensor exp(const Tensor& a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor reciprocal(const Tensor& a) {
  return unary("reciprocal", a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; });
}

Tensor relu(const Tensor& a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

namespace {
double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
}  // namespace

Tensor sigmoid(const Tensor& a) {
  return unary("sigmoid", a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor log_sigmoid(const Tensor& a) {
  return unary("log_sigmoid", a, [](double x) { return -stable_softplus(-x); },
               [](double x, double) { return stable_sigmoid(-x); });
}

Tensor softplus(const Tensor& a) {
  return unary("softplus", a, stable_softplus, [](double x, double) { return stable_sigmoid(x); });
}

Tensor prelu(const Tensor& a, const Tensor& slope) {
  require_rank2(a, "prelu");
  const std::size_t c = a.cols();
  Bcast kind;
  if (slope.size() == 1) kind = Bcast::scalar;
  else if (slope.rows() == 1 && slope.cols() == c) kind = Bcast::row;
  else mismatch("prelu", a, slope);
  auto x = a.data();
  auto s = slope.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0 ? x[i] : s[bidx(kind, i, c)] * x[i];
  return make_result(a.shape(), std::move(out), "prelu", {a, slope}, [kind, c](Node& self) {
    Node& px = *self.parents[0];
    Node& ps = *self.parents[1];
    if (px.requires_grad) {
      auto& g = px.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] += self.grad[i] * (px.value[i] > 0 ? 1.0 : ps.value[bidx(kind, i, c)]);
    }
    if (ps.requires_grad) {
      const auto& xv = px.value;
      reduce_into(kind, self.grad, c, ps.ensure_grad(),
                  [&xv](std::size_t i) { return xv[i] > 0 ? 0.0 : xv[i]; });
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  require_rank2(a, "softmax_rows");
  const std::size_t r = a.rows(), c = a.cols();
  if (c == 0) throw dimension_error("softmax_rows: empty axis in " + shape_str(a.shape()));
  auto x = a.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < r; ++i) {
    const double* xi = x.data() + i * c;
    double* yi = out.data() + i * c;
    const double m = *std::max_element(xi, xi + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (yi[j] = std::exp(xi[j] - m));
    for (std::size_t j = 0; j < c; ++j) yi[j] /= z;
  }
  return make_result(a.shape(), std::move(out), "softmax_rows", {a}, [r, c](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      const double* y = self.value.data() + i * c;
      const double* gy = self.grad.data() + i * c;
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += y[j] * (gy[j] - dot);
    }
  });
}

Tensor log_softmax_rows(const Tensor& a) {
  require_rank2(a, "log_softmax_rows");
  const std::size_t r = a.rows(), c = a.cols();
  if (c == 0) throw dimension_error("log_softmax_rows: empty axis in " + shape_str(a.shape()));
  auto x = a.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < r; ++i) {
    const double* xi = x.data() + i * c;
    const double m = *std::max_element(xi, xi + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(xi[j] - m);
    const double lse = m + std::log(z);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xi[j] - lse;
  }
  return make_result(a.shape(), std::move(out), "log_softmax_rows", {a}, [r, c](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      const double* ly = self.value.data() + i * c;
      const double* gy = self.grad.data() + i * c;
      double gs = 0.0;
      for (std::size_t j = 0; j < c; ++j) gs += gy[j];
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += gy[j] - std::exp(ly[j]) * gs;
    }
  });
}

Tensor batch_normalize(const Tensor& x, double eps, BatchStats* observed) {
  require_rank2(x, "batch_normalize");
  const std::size_t r = x.rows(), c = x.cols();
  if (r == 0) throw dimension_error("batch_normalize: no rows");
  auto v = x.data();
  std::vector<double> mu(c, 0.0), var(c, 0.0), inv(c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) mu[j] += v[i * c + j];
  for (auto& m : mu) m /= static_cast<double>(r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double d = v[i * c + j] - mu[j];
      var[j] += d * d;
    }
  for (std::size_t j = 0; j < c; ++j) {
    var[j] /= static_cast<double>(r);
    inv[j] = 1.0 / std::sqrt(var[j] + eps);
  }
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = (v[i * c + j] - mu[j]) * inv[j];
  if (observed) *observed = BatchStats{mu, var};
  return make_result(x.shape(), std::move(out), "batch_normalize", {x},
                     [r, c, inv = std::move(inv)](Node& self) {
                       Node& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       auto& g = p.ensure_grad();
                       const double n = static_cast<double>(r);
                       std::vector<double> sg(c, 0.0), sgx(c, 0.0);
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < c; ++j) {
                           sg[j] += self.grad[i * c + j];
                           sgx[j] += self.grad[i * c + j] * self.value[i * c + j];
                         }
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < c; ++j) {
                           const std::size_t k = i * c + j;
                           g[k] += inv[j] / n * (n * self.grad[k] - sg[j] - self.value[k] * sgx[j]);
                         }
                     });
}

Tensor fixed_normalize(const Tensor& x, std::span<const double> mean, std::span<const double> var, double eps) {
  require_rank2(x, "fixed_normalize");
  const std::size_t r = x.rows(), c = x.cols();
  if (mean.size() != c || var.size() != c)
    throw dimension_error("fixed_normalize: statistics width does not match " + shape_str(x.shape()));
  std::vector<double> mu(mean.begin(), mean.end()), inv(c);
  for (std::size_t j = 0; j < c; ++j) inv[j] = 1.0 / std::sqrt(var[j] + eps);
  auto v = x.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = (v[i * c + j] - mu[j]) * inv[j];
  return make_result(x.shape(), std::move(out), "fixed_normalize", {x}, [r, c, inv = std::move(inv)](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[i * c + j] * inv[j];
  });
}

}  // namespace acd
