#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices of doubles. Every op records its parents and a closure that
// pushes the output gradient back to them; `backward` walks the graph in
// reverse topological order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "chgat/error.hpp"

namespace chgat::ad {

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;

  std::size_t size() const noexcept { return rows * cols; }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols) throw ShapeMismatch("constant value count");
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->value = std::move(values);
    return Var(std::move(n));
  }

  static Var zeros(std::size_t rows, std::size_t cols) {
    return constant(rows, cols, std::vector<double>(rows * cols, 0.0));
  }

  /// A trainable leaf; its gradient accumulates across backward passes.
  static Var parameter(std::size_t rows, std::size_t cols) {
    Var v = zeros(rows, cols);
    v.node_->requires_grad = true;
    v.node_->ensure_grad();
    return v;
  }

  bool defined() const noexcept { return node_ != nullptr; }
  std::size_t rows() const noexcept { return node_->rows; }
  std::size_t cols() const noexcept { return node_->cols; }
  std::size_t size() const noexcept { return node_->size(); }
  bool requires_grad() const noexcept { return node_->requires_grad; }

  const std::vector<double>& value() const noexcept { return node_->value; }
  std::vector<double>& mutable_value() noexcept { return node_->value; }
  const std::vector<double>& grad() const noexcept { return node_->grad; }
  std::vector<double>& mutable_grad() noexcept { return node_->grad; }

  double at(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
  double item() const {
    if (size() != 1) throw ShapeMismatch("item() on non-scalar");
    return node_->value[0];
  }

  Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node>& shared() const noexcept { return node_; }

  /// Seeds d(self)/d(self) = 1 for a scalar and propagates to every leaf.
  void backward() const {
    if (size() != 1) throw ShapeMismatch("backward() needs a scalar");
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->parents.size()) {
        Node* p = n->parents[next++].get();
        if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = *it;
      if (n->backward_fn) n->backward_fn(*n);
    }
  }

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {

inline Var make_result(std::size_t rows, std::size_t cols, std::vector<double> value, std::vector<Var> parents,
                       std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(value);
  for (const auto& p : parents) n->requires_grad = n->requires_grad || p.requires_grad();
  if (n->requires_grad) {
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.shared());
    n->backward_fn = std::move(backward);
  }
  return Var(std::move(n));
}

// Gradient buffer of parent `i`, or nullptr when it does not need one.
inline double* parent_grad(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return nullptr;
  p.ensure_grad();
  return p.grad.data();
}

inline std::string shape(const Var& v) { return std::to_string(v.rows()) + "x" + std::to_string(v.cols()); }

// Row/column broadcasting of `b` against `a`: same shape, 1xC, Rx1 or 1x1.
struct Broadcast {
  std::size_t rows, cols;
  bool row_scalar, col_scalar;
  std::size_t index(std::size_t r, std::size_t c) const {
    return (row_scalar ? 0 : r) * (col_scalar ? 1 : cols) + (col_scalar ? 0 : c);
  }
};

inline Broadcast broadcast(const Var& a, const Var& b, const char* op) {
  const bool rs = b.rows() == 1;
  const bool cs = b.cols() == 1;
  if ((b.rows() != a.rows() && !rs) || (b.cols() != a.cols() && !cs)) {
    throw ShapeMismatch(std::string(op) + " " + shape(a) + " with " + shape(b));
  }
  return {a.rows(), a.cols(), rs && a.rows() != 1, cs && a.cols() != 1};
}

}  // namespace detail

/// a + b with `b` broadcast over rows and/or columns.
inline Var add(const Var& a, const Var& b) {
  const auto bc = detail::broadcast(a, b, "add");
  std::vector<double> out(a.value());
  const auto& bv = b.value();
  for (std::size_t r = 0; r < bc.rows; ++r)
    for (std::size_t c = 0; c < bc.cols; ++c) out[r * bc.cols + c] += bv[bc.index(r, c)];
  return detail::make_result(a.rows(), a.cols(), std::move(out), {a, b}, [bc](Node& self) {
    if (double* ga = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < self.size(); ++i) ga[i] += self.grad[i];
    if (double* gb = detail::parent_grad(self, 1))
      for (std::size_t r = 0; r < bc.rows; ++r)
        for (std::size_t c = 0; c < bc.cols; ++c) gb[bc.index(r, c)] += self.grad[r * bc.cols + c];
  });
}

/// Elementwise a * b with `b` broadcast like `add`.
inline Var mul(const Var& a, const Var& b) {
  const auto bc = detail::broadcast(a, b, "mul");
  std::vector<double> out(a.value());
  const auto& bv = b.value();
  for (std::size_t r = 0; r < bc.rows; ++r)
    for (std::size_t c = 0; c < bc.cols; ++c) out[r * bc.cols + c] *= bv[bc.index(r, c)];
  return detail::make_result(a.rows(), a.cols(), std::move(out), {a, b}, [bc](Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    double* ga = detail::parent_grad(self, 0);
    double* gb = detail::parent_grad(self, 1);
    for (std::size_t r = 0; r < bc.rows; ++r)
      for (std::size_t c = 0; c < bc.cols; ++c) {
        const std::size_t i = r * bc.cols + c;
        const std::size_t j = bc.index(r, c);
        if (ga) ga[i] += self.grad[i] * bv[j];
        if (gb) gb[j] += self.grad[i] * av[i];
      }
  });
}

inline Var scale(const Var& a, double s) {
  std::vector<double> out(a.value());
  for (auto& x : out) x *= s;
  return detail::make_result(a.rows(), a.cols(), std::move(out), {a}, [s](Node& self) {
    if (double* ga = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < self.size(); ++i) ga[i] += s * self.grad[i];
  });
}

/// (m x k) * (k x n).
inline Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw ShapeMismatch("matmul " + detail::shape(a) + " * " + detail::shape(b));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      const double* brow = &bv[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += x * brow[j];
    }
  return detail::make_result(m, n, std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    const double* g = self.grad.data();
    if (double* ga = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
          ga[i * k + p] += acc;
        }
    if (double* gb = detail::parent_grad(self, 1))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double x = av[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += x * g[i * n + j];
        }
  });
}

/// (m x k) * (n x k)^T, the usual layout for x W^T with W stored out x in.
inline Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw ShapeMismatch("matmul_nt " + detail::shape(a) + " * " + detail::shape(b) + "^T");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> out(m * n, 0.0);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += av[i * k + p] * bv[j * k + p];
      out[i * n + j] = acc;
    }
  return detail::make_result(m, n, std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    const double* g = self.grad.data();
    double* ga = detail::parent_grad(self, 0);
    double* gb = detail::parent_grad(self, 1);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double gij = g[i * n + j];
        if (gij == 0.0) continue;
        if (ga)
          for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gij * bv[j * k + p];
        if (gb)
          for (std::size_t p = 0; p < k; ++p) gb[j * k + p] += gij * av[i * k + p];
      }
  });
}

inline Var transpose(const Var& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.value()[i * n + j];
  return detail::make_result(n, m, std::move(out), {a}, [m, n](Node& self) {
    if (double* ga = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
  });
}

namespace detail {

template <class F, class DF>
Var unary(const Var& a, F f, DF df) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.value()[i]);
  return make_result(a.rows(), a.cols(), std::move(out), {a}, [df](Node& self) {
    if (double* ga = parent_grad(self, 0)) {
      const auto& x = self.parents[0]->value;
      for (std::size_t i = 0; i < self.size(); ++i) ga[i] += self.grad[i] * df(x[i], self.value[i]);
    }
  });
}

}  // namespace detail

inline Var tanh(const Var& a) {
  return detail::unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

inline Var leaky_relu(const Var& a, double slope = 0.2) {
  return detail::unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

inline Var elu(const Var& a) {
  return detail::unary(
      a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
      [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

inline Var relu(const Var& a) {
  return detail::unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

/// tanh approximation of GELU.
inline Var gelu(const Var& a) {
  constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  return detail::unary(
      a,
      [](double x) { return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x))); },
      [](double x, double) {
        const double u = k * (x + 0.044715 * x * x * x);
        const double t = std::tanh(u);
        const double du = k * (1.0 + 3.0 * 0.044715 * x * x);
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
      });
}

/// Softmax over each row, max-shifted.
inline Var softmax_rows(const Var& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = &a.value()[i * n];
    double* y = &out[i * n];
    const double mx = *std::max_element(x, x + n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < n; ++j) y[j] /= sum;
  }
  return detail::make_result(m, n, std::move(out), {a}, [m, n](Node& self) {
    if (double* ga = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < m; ++i) {
        const double* y = &self.value[i * n];
        const double* g = &self.grad[i * n];
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += y[j] * (g[j] - dot);
      }
  });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols of nothing");
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.rows() != m) throw ShapeMismatch("concat_cols row count");
    offsets.push_back(n);
    n += p.cols();
  }
  std::vector<double> out(m * n);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t w = parts[k].cols();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(&parts[k].value()[i * w], w, &out[i * n + offsets[k]]);
  }
  return detail::make_result(m, n, std::move(out), parts, [m, n, offsets](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      double* g = detail::parent_grad(self, k);
      if (!g) continue;
      const std::size_t w = self.parents[k]->cols;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) g[i * w + j] += self.grad[i * n + offsets[k] + j];
    }
  });
}

inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_rows of nothing");
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    if (p.cols() != n) throw ShapeMismatch("concat_rows column count " + detail::shape(p));
    m += p.rows();
  }
  std::vector<double> out;
  out.reserve(m * n);
  for (const auto& p : parts) out.insert(out.end(), p.value().begin(), p.value().end());
  return detail::make_result(m, n, std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      const std::size_t len = self.parents[k]->size();
      if (double* g = detail::parent_grad(self, k))
        for (std::size_t i = 0; i < len; ++i) g[i] += self.grad[offset + i];
      offset += len;
    }
  });
}

inline Var slice_cols(const Var& a, std::size_t start, std::size_t len) {
  if (start + len > a.cols()) throw ShapeMismatch("slice_cols out of range");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * len);
  for (std::size_t i = 0; i < m; ++i) std::copy_n(&a.value()[i * n + start], len, &out[i * len]);
  return detail::make_result(m, len, std::move(out), {a}, [m, n, start, len](Node& self) {
    if (double* ga = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < len; ++j) ga[i * n + start + j] += self.grad[i * len + j];
  });
}

/// Mean over rows: (m x n) -> (1 x n).
inline Var mean_rows(const Var& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += a.value()[i * n + j];
  for (auto& x : out) x /= static_cast<double>(m);
  return detail::make_result(1, n, std::move(out), {a}, [m, n](Node& self) {
    if (double* ga = detail::parent_grad(self, 0)) {
      const double inv = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j] * inv;
    }
  });
}

inline Var sum(const Var& a) {
  double s = 0.0;
  for (double x : a.value()) s += x;
  return detail::make_result(1, 1, {s}, {a}, [](Node& self) {
    if (double* ga = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < self.parents[0]->size(); ++i) ga[i] += self.grad[0];
  });
}

/// Rows of `table` at `indices`.
inline Var gather_rows(const Var& table, const std::vector<std::size_t>& indices) {
  const std::size_t n = table.cols();
  std::vector<double> out(indices.size() * n);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= table.rows()) throw ShapeMismatch("gather index out of range");
    std::copy_n(&table.value()[indices[k] * n], n, &out[k * n]);
  }
  return detail::make_result(indices.size(), n, std::move(out), {table}, [indices, n](Node& self) {
    if (double* gt = detail::parent_grad(self, 0))
      for (std::size_t k = 0; k < indices.size(); ++k)
        for (std::size_t j = 0; j < n; ++j) gt[indices[k] * n + j] += self.grad[k * n + j];
  });
}

/// Row-wise layer normalization with learned gain and bias (both 1 x n).
inline Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5) {
  const std::size_t m = x.rows(), n = x.cols();
  if (gamma.size() != n || beta.size() != n) throw ShapeMismatch("layer_norm parameters");
  std::vector<double> xhat(m * n), inv_std(m), out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = &x.value()[i * n];
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mean) * inv_std[i];
      out[i * n + j] = xhat[i * n + j] * gamma.value()[j] + beta.value()[j];
    }
  }
  return detail::make_result(
      m, n, std::move(out), {x, gamma, beta}, [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        const auto& g = self.grad;
        const auto& gam = self.parents[1]->value;
        if (double* gg = detail::parent_grad(self, 1))
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gg[j] += g[i * n + j] * xhat[i * n + j];
        if (double* gb = detail::parent_grad(self, 2))
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
        if (double* gx = detail::parent_grad(self, 0))
          for (std::size_t i = 0; i < m; ++i) {
            double mean_dy = 0.0, mean_dy_xhat = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double dy = g[i * n + j] * gam[j];
              mean_dy += dy;
              mean_dy_xhat += dy * xhat[i * n + j];
            }
            mean_dy /= static_cast<double>(n);
            mean_dy_xhat /= static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
              const double dy = g[i * n + j] * gam[j];
              gx[i * n + j] += inv_std[i] * (dy - mean_dy - xhat[i * n + j] * mean_dy_xhat);
            }
          }
      });
}

/// Inverted dropout; identity when `p == 0`.
inline Var dropout(const Var& a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  std::vector<double> mask(a.size());
  const double keep = 1.0 / (1.0 - p);
  for (auto& m : mask) m = (static_cast<double>(rng() >> 11) * 0x1.0p-53) < p ? 0.0 : keep;
  return mul(a, Var::constant(a.rows(), a.cols(), std::move(mask)));
}

/// Summed weighted binary cross-entropy over a batch of two-class logits
/// (B x 2). The positive-class probability is softmax(logits)[1], clamped
/// to [eps, 1 - eps].
inline Var binary_cross_entropy(const Var& logits, const std::vector<int>& labels, const std::vector<double>& weights,
                                double eps = 1e-7) {
  if (logits.cols() != 2) throw ShapeMismatch("logits must have 2 columns, got " + detail::shape(logits));
  if (labels.size() != logits.rows() || weights.size() != logits.rows()) {
    throw ShapeMismatch("batch of " + std::to_string(logits.rows()) + " logits vs " +
                        std::to_string(labels.size()) + " labels");
  }
  const std::size_t b = logits.rows();
  std::vector<double> prob(b);
  std::vector<bool> clamped(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("labels must be 0 or 1");
    const double z = logits.value()[i * 2 + 1] - logits.value()[i * 2];
    const double p = 1.0 / (1.0 + std::exp(-z));
    const double pc = std::clamp(p, eps, 1.0 - eps);
    clamped[i] = pc != p;
    prob[i] = p;
    const double y = labels[i];
    total -= weights[i] * (y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
  }
  return detail::make_result(1, 1, {total}, {logits}, [b, prob, clamped, labels, weights](Node& self) {
    if (double* gl = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < b; ++i) {
        if (clamped[i]) continue;
        const double dz = self.grad[0] * weights[i] * (prob[i] - labels[i]);
        gl[i * 2 + 1] += dz;
        gl[i * 2] -= dz;
      }
  });
}

}  // namespace chgat::ad
