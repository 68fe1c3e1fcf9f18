#pragma once

// Differentiable tensor operations. All tensors are 2-D; vectors are 1 x n.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scenegnn/tensor.hpp"

namespace scenegnn::nn {

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

inline ConstMap view(const std::vector<double>& v, Shape s) { return ConstMap(v.data(), static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)); }
inline MutMap view(std::vector<double>& v, Shape s) { return MutMap(v.data(), static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)); }

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorKind::ShapeMismatch, std::string(op) + ": " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

inline bool wants_grad(const Node& n) { return n.requires_grad; }

/// Elementwise unary op: forward f, local derivative df(x, y).
template <typename F, typename DF>
Tensor unary(const Tensor& a, F f, DF df) {
  std::vector<double> out(a.size());
  const auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(a.shape(), std::move(out), {a}, [df](Node& self) {
    Node& x = *self.parents[0];
    auto& gx = x.ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * df(x.value[i], self.value[i]);
  });
}

}  // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "matmul: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  const Shape out_shape{a.rows(), b.cols()};
  std::vector<double> out(out_shape.size());
  detail::view(out, out_shape).noalias() =
      detail::view(a.node()->value, a.shape()) * detail::view(b.node()->value, b.shape());
  return detail::make_result(out_shape, std::move(out), {a, b}, [](detail::Node& self) {
    detail::Node& x = *self.parents[0];
    detail::Node& y = *self.parents[1];
    const auto g = detail::view(self.grad, self.shape);
    if (x.requires_grad) detail::view(x.ensure_grad(), x.shape).noalias() += g * detail::view(y.value, y.shape).transpose();
    if (y.requires_grad) detail::view(y.ensure_grad(), y.shape).noalias() += detail::view(x.value, x.shape).transpose() * g;
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (int k = 0; k < 2; ++k) {
      detail::Node& p = *self.parents[k];
      if (!p.requires_grad) continue;
      auto& g = p.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (int k = 0; k < 2; ++k) {
      detail::Node& p = *self.parents[k];
      if (!p.requires_grad) continue;
      const double sign = k == 0 ? 1.0 : -1.0;
      auto& g = p.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

/// a (n x c) + b (1 x c), b broadcast over rows.
inline Tensor add_bias(const Tensor& a, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "add_bias: " + to_string(a.shape()) + " vs bias " + to_string(bias.shape()));
  }
  const std::size_t c = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + bias.values()[i % c];
  return detail::make_result(a.shape(), std::move(out), {a, bias}, [c](detail::Node& self) {
    detail::Node& x = *self.parents[0];
    detail::Node& b = *self.parents[1];
    if (x.requires_grad) {
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (b.requires_grad) {
      auto& g = b.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % c] += self.grad[i];
    }
  });
}

/// ReLU with subgradient 0 at 0.
inline Tensor relu(const Tensor& a) {
  return detail::unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor sigmoid(const Tensor& a) {
  return detail::unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

/// exp(-x)
inline Tensor exp_neg(const Tensor& a) {
  return detail::unary(
      a, [](double x) { return std::exp(-x); }, [](double, double y) { return -y; });
}

/// log(1 + exp(x)), computed without overflow.
inline Tensor softplus(const Tensor& a) {
  return detail::unary(
      a, [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

/// x^p elementwise for a constant exponent p.
inline Tensor scalar_pow(const Tensor& a, double p) {
  return detail::unary(
      a, [p](double x) { return std::pow(x, p); }, [p](double x, double) { return p == 0.0 ? 0.0 : p * std::pow(x, p - 1.0); });
}

inline Tensor scale(const Tensor& a, double s) {
  return detail::unary(
      a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

inline Tensor add_scalar(const Tensor& a, double s) {
  return detail::unary(
      a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

inline Tensor neg(const Tensor& a) { return scale(a, -1.0); }

/// a * s where s is a tracked 1 x 1 tensor.
inline Tensor scale_by(const Tensor& a, const Tensor& s) {
  if (s.size() != 1) throw Error(ErrorKind::ShapeMismatch, "scale_by: factor " + to_string(s.shape()) + " is not 1x1");
  const double k = s.values()[0];
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * k;
  return detail::make_result(a.shape(), std::move(out), {a, s}, [k](detail::Node& self) {
    detail::Node& x = *self.parents[0];
    detail::Node& f = *self.parents[1];
    if (x.requires_grad) {
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * k;
    }
    if (f.requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * x.value[i];
      f.ensure_grad()[0] += acc;
    }
  });
}

inline Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape("elementwise_mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    detail::Node& x = *self.parents[0];
    detail::Node& y = *self.parents[1];
    if (x.requires_grad) {
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y.value[i];
    }
    if (y.requires_grad) {
      auto& g = y.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x.value[i];
    }
  });
}

inline Tensor elementwise_div(const Tensor& a, const Tensor& b) {
  detail::require_same_shape("elementwise_div", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] / b.values()[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    detail::Node& x = *self.parents[0];
    detail::Node& y = *self.parents[1];
    if (x.requires_grad) {
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / y.value[i];
    }
    if (y.requires_grad) {
      auto& g = y.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i] * self.value[i] / y.value[i];
    }
  });
}

/// Horizontal concatenation; all parts share the row count.
inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error(ErrorKind::ShapeMismatch, "concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw Error(ErrorKind::ShapeMismatch, "concat_cols: " + to_string(parts.front().shape()) + " vs " + to_string(p.shape()));
    }
    offsets.push_back(cols);
    cols += p.cols();
  }
  std::vector<double> out(rows * cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto v = parts[k].values();
    const std::size_t pc = parts[k].cols();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * pc), pc, out.begin() + static_cast<std::ptrdiff_t>(r * cols + offsets[k]));
  }
  return detail::make_result({rows, cols}, std::move(out), parts, [offsets, rows, cols](detail::Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      detail::Node& p = *self.parents[k];
      if (!p.requires_grad) continue;
      auto& g = p.ensure_grad();
      const std::size_t pc = p.shape.cols;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < pc; ++c) g[r * pc + c] += self.grad[r * cols + offsets[k] + c];
    }
  });
}

/// Column sums: (n x c) -> (1 x c).
inline Tensor sum_rows(const Tensor& a) {
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  std::vector<double> out(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c] += a.values()[r * cols + c];
  return detail::make_result({1, cols}, std::move(out), {a}, [cols](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i % cols];
  });
}

inline Tensor mean_rows(const Tensor& a) {
  if (a.rows() == 0) throw Error(ErrorKind::ShapeMismatch, "mean_rows: no rows");
  return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows()));
}

/// Sum of all entries, as a 1 x 1 tensor.
inline Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return detail::make_result({1, 1}, {acc}, {a}, [](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& gi : g) gi += self.grad[0];
  });
}

/// Entry (r, c) as a 1 x 1 tensor.
inline Tensor pick(const Tensor& a, std::size_t r, std::size_t c) {
  if (r >= a.rows() || c >= a.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "pick: index out of range for " + to_string(a.shape()));
  }
  const std::size_t idx = r * a.cols() + c;
  return detail::make_result({1, 1}, {a.values()[idx]}, {a}, [idx](detail::Node& self) {
    self.parents[0]->ensure_grad()[idx] += self.grad[0];
  });
}

/// Constant block-diagonal matrix; block b covers rows/cols offsets[b]..offsets[b+1].
struct BlockDiagonal {
  std::vector<Matrix> blocks;
  std::vector<std::size_t> offsets{0};

  void append(Matrix block) {
    offsets.push_back(offsets.back() + block.rows);
    blocks.push_back(std::move(block));
  }
  std::size_t size() const { return offsets.back(); }
};

/// A (block diagonal, N x N) times h (N x c).
inline Tensor block_matmul(const BlockDiagonal& a, const Tensor& h) {
  if (a.size() != h.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "block_matmul: (" + std::to_string(a.size()) + "x" + std::to_string(a.size()) +
                                              ") vs " + to_string(h.shape()));
  }
  const std::size_t c = h.cols();
  std::vector<double> out(h.size(), 0.0);
  const auto hv = h.values();
  for (std::size_t b = 0; b < a.blocks.size(); ++b) {
    const Matrix& m = a.blocks[b];
    const std::size_t o = a.offsets[b];
    for (std::size_t i = 0; i < m.rows; ++i)
      for (std::size_t j = 0; j < m.cols; ++j) {
        const double w = m(i, j);
        if (w == 0.0) continue;
        const double* src = hv.data() + (o + j) * c;
        double* dst = out.data() + (o + i) * c;
        for (std::size_t k = 0; k < c; ++k) dst[k] += w * src[k];
      }
  }
  return detail::make_result(h.shape(), std::move(out), {h}, [a, c](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t b = 0; b < a.blocks.size(); ++b) {
      const Matrix& m = a.blocks[b];
      const std::size_t o = a.offsets[b];
      for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) {
          const double w = m(i, j);
          if (w == 0.0) continue;
          const double* up = self.grad.data() + (o + i) * c;
          double* dst = g.data() + (o + j) * c;
          for (std::size_t k = 0; k < c; ++k) dst[k] += w * up[k];
        }
    }
  });
}

/// Per-segment column sums: rows offsets[b]..offsets[b+1] of h -> row b.
inline Tensor segment_sum(const Tensor& h, const std::vector<std::size_t>& offsets) {
  if (offsets.empty() || offsets.back() != h.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "segment_sum: segments do not cover " + to_string(h.shape()));
  }
  const std::size_t segs = offsets.size() - 1;
  const std::size_t c = h.cols();
  std::vector<double> out(segs * c, 0.0);
  for (std::size_t b = 0; b < segs; ++b)
    for (std::size_t r = offsets[b]; r < offsets[b + 1]; ++r)
      for (std::size_t k = 0; k < c; ++k) out[b * c + k] += h.values()[r * c + k];
  return detail::make_result({segs, c}, std::move(out), {h}, [offsets, segs, c](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t b = 0; b < segs; ++b)
      for (std::size_t r = offsets[b]; r < offsets[b + 1]; ++r)
        for (std::size_t k = 0; k < c; ++k) g[r * c + k] += self.grad[b * c + k];
  });
}

/// Per-segment column means. Segments must be nonempty.
inline Tensor segment_mean(const Tensor& h, const std::vector<std::size_t>& offsets) {
  const Tensor s = segment_sum(h, offsets);
  const std::size_t c = s.cols();
  std::vector<double> inv(s.size());
  for (std::size_t b = 0; b + 1 < offsets.size(); ++b) {
    const std::size_t n = offsets[b + 1] - offsets[b];
    if (n == 0) throw Error(ErrorKind::ShapeMismatch, "segment_mean: empty segment");
    for (std::size_t k = 0; k < c; ++k) inv[b * c + k] = 1.0 / static_cast<double>(n);
  }
  return elementwise_mul(s, Tensor(s.shape(), std::move(inv)));
}

/// out[r] = a[r, index[r]], as an r x 1 column.
inline Tensor select_per_row(const Tensor& a, const std::vector<int>& index) {
  if (index.size() != a.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "select_per_row: " + std::to_string(index.size()) + " indices for " + to_string(a.shape()));
  }
  const std::size_t c = a.cols();
  std::vector<double> out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    if (index[r] < 0 || static_cast<std::size_t>(index[r]) >= c) {
      throw Error(ErrorKind::ShapeMismatch, "select_per_row: column index out of range");
    }
    out[r] = a.values()[r * c + static_cast<std::size_t>(index[r])];
  }
  return detail::make_result({a.rows(), 1}, std::move(out), {a}, [index, c](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < index.size(); ++r) g[r * c + static_cast<std::size_t>(index[r])] += self.grad[r];
  });
}

/// Row-wise log-softmax, shifted by the row max for stability.
inline Tensor log_softmax(const Tensor& a) {
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.values().data() + r * cols;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      if (!std::isfinite(x[c])) throw Error(ErrorKind::NonFinite, "log_softmax: non-finite input");
      m = std::max(m, x[c]);
    }
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += std::exp(x[c] - m);
    const double lse = std::log(s);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = x[c] - m - lse;
  }
  return detail::make_result(a.shape(), std::move(out), {a}, [rows, cols](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < cols; ++c) gs += self.grad[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        g[i] += self.grad[i] - std::exp(self.value[i]) * gs;
      }
    }
  });
}

}  // namespace scenegnn::nn
