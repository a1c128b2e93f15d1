#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "argnn/numerics/matrix.hpp"

namespace argnn::ad {

struct Var {
  std::size_t id = 0;
};

/// Append-only record of matrix operations. Nodes are created after their
/// parents, so the reverse creation order is a reverse topological order and
/// backward() visits each node once. A tape belongs to a single thread.
class Tape {
 public:
  Var leaf(Matrix value, bool requires_grad = false) {
    return push(std::move(value), requires_grad, nullptr);
  }

  const Matrix& value(Var v) const { return nodes_[v.id].value; }

  /// Gradient of the last backward() target; zeros for nodes that were not
  /// reached.
  Matrix grad(Var v) const {
    const auto& n = nodes_[v.id];
    if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  bool requires_grad(Var v) const { return nodes_[v.id].needs_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  void backward(Var loss) {
    if (value(loss).rows() != 1 || value(loss).cols() != 1) throw UsageError("backward needs a scalar loss");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[loss.id].grad = Matrix::Ones(1, 1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.needs_grad || n.grad.size() == 0 || !n.back) continue;
      n.back(*this, i);
    }
  }

  // Used by operations.
  using Backward = std::function<void(Tape&, std::size_t)>;

  Var push(Matrix value, bool needs_grad, Backward back) {
    nodes_.push_back({std::move(value), Matrix(), needs_grad, needs_grad ? std::move(back) : Backward{}});
    return Var{nodes_.size() - 1};
  }

  const Matrix& upstream(std::size_t id) const { return nodes_[id].grad; }

  Matrix& grad_slot(Var v) {
    auto& n = nodes_[v.id];
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  /// grad(v) += expr, assigning on first contribution.
  template <typename Expr>
  void accumulate(Var v, const Expr& expr) {
    auto& n = nodes_[v.id];
    if (n.grad.size() == 0)
      n.grad.noalias() = expr;
    else
      n.grad.noalias() += expr;
  }

  bool wants(Var v) const { return nodes_[v.id].needs_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad;
    Backward back;
  };
  std::vector<Node> nodes_;
};

inline bool any_grad(const Tape& t, std::initializer_list<Var> vs) {
  for (Var v : vs)
    if (t.wants(v)) return true;
  return false;
}

inline Var matmul(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.cols() != B.rows()) throw UsageError("matmul: inner dimensions differ");
  Matrix C = A * B;
  return t.push(std::move(C), any_grad(t, {a, b}), [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.wants(a)) tp.accumulate(a, g * tp.value(b).transpose());
    if (tp.wants(b)) tp.accumulate(b, tp.value(a).transpose() * g);
  });
}

inline Var add(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw UsageError("add: shape mismatch");
  return t.push(A + B, any_grad(t, {a, b}), [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.wants(a)) tp.accumulate(a, g);
    if (tp.wants(b)) tp.accumulate(b, g);
  });
}

/// a (r x c) plus a 1 x c row broadcast over rows.
inline Var add_row(Tape& t, Var a, Var row) {
  const Matrix& A = t.value(a);
  const Matrix& R = t.value(row);
  if (R.rows() != 1 || R.cols() != A.cols()) throw UsageError("add_row: shape mismatch");
  Matrix C = A.rowwise() + R.row(0);
  return t.push(std::move(C), any_grad(t, {a, row}), [a, row](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.wants(a)) tp.accumulate(a, g);
    if (tp.wants(row)) tp.accumulate(row, g.colwise().sum());
  });
}

inline Var mul(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw UsageError("mul: shape mismatch");
  return t.push(A.cwiseProduct(B), any_grad(t, {a, b}), [a, b](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.wants(a)) tp.accumulate(a, g.cwiseProduct(tp.value(b)));
    if (tp.wants(b)) tp.accumulate(b, g.cwiseProduct(tp.value(a)));
  });
}

inline Var relu(Tape& t, Var a) {
  Matrix Y = t.value(a).cwiseMax(0.0);
  return t.push(std::move(Y), t.wants(a), [a](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    tp.accumulate(a, (tp.value(a).array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

inline Var sigmoid(Tape& t, Var a) {
  Matrix Y = t.value(a).unaryExpr([](double x) { return argnn::sigmoid(x); });
  return t.push(std::move(Y), t.wants(a), [a](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    const Matrix& y = tp.value(Var{self});
    tp.accumulate(a, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

inline Var tanh(Tape& t, Var a) {
  Matrix Y = t.value(a).array().tanh().matrix();
  return t.push(std::move(Y), t.wants(a), [a](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    const Matrix& y = tp.value(Var{self});
    tp.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

inline Var scale(Tape& t, Var a, double k) {
  return t.push(t.value(a) * k, t.wants(a), [a, k](Tape& tp, std::size_t self) {
    tp.accumulate(a, tp.upstream(self) * k);
  });
}

inline Var concat_cols(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.rows() != B.rows()) throw UsageError("concat_cols: row mismatch");
  Matrix C(A.rows(), A.cols() + B.cols());
  C << A, B;
  const auto ca = A.cols(), cb = B.cols();
  return t.push(std::move(C), any_grad(t, {a, b}), [a, b, ca, cb](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.wants(a)) tp.grad_slot(a) += g.leftCols(ca);
    if (tp.wants(b)) tp.grad_slot(b) += g.rightCols(cb);
  });
}

inline Var concat_rows(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.cols() != B.cols()) throw UsageError("concat_rows: column mismatch");
  Matrix C(A.rows() + B.rows(), A.cols());
  C << A, B;
  const auto ra = A.rows(), rb = B.rows();
  return t.push(std::move(C), any_grad(t, {a, b}), [a, b, ra, rb](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.wants(a)) tp.grad_slot(a) += g.topRows(ra);
    if (tp.wants(b)) tp.grad_slot(b) += g.bottomRows(rb);
  });
}

inline Var slice_cols(Tape& t, Var a, Eigen::Index start, Eigen::Index width) {
  const Matrix& A = t.value(a);
  if (start < 0 || width < 0 || start + width > A.cols()) throw UsageError("slice_cols: out of range");
  Matrix C = A.middleCols(start, width);
  return t.push(std::move(C), t.wants(a), [a, start, width](Tape& tp, std::size_t self) {
    tp.grad_slot(a).middleCols(start, width) += tp.upstream(self);
  });
}

inline Var slice_rows(Tape& t, Var a, Eigen::Index start, Eigen::Index height) {
  const Matrix& A = t.value(a);
  if (start < 0 || height < 0 || start + height > A.rows()) throw UsageError("slice_rows: out of range");
  Matrix C = A.middleRows(start, height);
  return t.push(std::move(C), t.wants(a), [a, start, height](Tape& tp, std::size_t self) {
    tp.grad_slot(a).middleRows(start, height) += tp.upstream(self);
  });
}

/// out[k] = a[index[k]].
inline Var gather_rows(Tape& t, Var a, std::span<const std::uint32_t> index) {
  const Matrix& A = t.value(a);
  Matrix C(static_cast<Eigen::Index>(index.size()), A.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= A.rows()) throw UsageError("gather_rows: index out of range");
    C.row(static_cast<Eigen::Index>(k)) = A.row(index[k]);
  }
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return t.push(std::move(C), t.wants(a), [a, idx = std::move(idx)](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    Matrix& ga = tp.grad_slot(a);
    for (std::size_t k = 0; k < idx.size(); ++k) ga.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
  });
}

/// out[index[k]] += a[k] for k in order, over `rows` zero-initialised rows.
/// Rows never indexed stay zero.
inline Var scatter_add_rows(Tape& t, Var a, std::span<const std::uint32_t> index, Eigen::Index rows) {
  const Matrix& A = t.value(a);
  if (static_cast<std::size_t>(A.rows()) != index.size()) throw UsageError("scatter_add_rows: index size mismatch");
  Matrix C = Matrix::Zero(rows, A.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= rows) throw UsageError("scatter_add_rows: index out of range");
    C.row(index[k]) += A.row(static_cast<Eigen::Index>(k));
  }
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return t.push(std::move(C), t.wants(a), [a, idx = std::move(idx)](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    Matrix& ga = tp.grad_slot(a);
    for (std::size_t k = 0; k < idx.size(); ++k) ga.row(static_cast<Eigen::Index>(k)) += g.row(idx[k]);
  });
}

/// Mean binary cross entropy of logits (n x 1) against 0/1 targets, in the
/// stable form max(o,0) - o*y + log(1 + exp(-|o|)).
inline Var bce_with_logits(Tape& t, Var logits, std::span<const double> targets) {
  const Matrix& O = t.value(logits);
  if (O.cols() != 1 || static_cast<std::size_t>(O.rows()) != targets.size())
    throw UsageError("bce_with_logits: shape mismatch");
  const auto n = O.rows();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double o = O(i, 0), y = targets[static_cast<std::size_t>(i)];
    sum += std::max(o, 0.0) - o * y + std::log1p(std::exp(-std::abs(o)));
  }
  Matrix L(1, 1);
  L(0, 0) = n ? sum / static_cast<double>(n) : 0.0;
  std::vector<double> y(targets.begin(), targets.end());
  return t.push(std::move(L), t.wants(logits), [logits, y = std::move(y)](Tape& tp, std::size_t self) {
    const double g = tp.upstream(self)(0, 0);
    const Matrix& O = tp.value(logits);
    Matrix& go = tp.grad_slot(logits);
    const double inv = 1.0 / static_cast<double>(O.rows());
    for (Eigen::Index i = 0; i < O.rows(); ++i)
      go(i, 0) += g * inv * (argnn::sigmoid(O(i, 0)) - y[static_cast<std::size_t>(i)]);
  });
}

/// Mean of 1 x 1 values.
inline Var mean(Tape& t, std::span<const Var> scalars) {
  if (scalars.empty()) throw UsageError("mean of nothing");
  double s = 0.0;
  bool need = false;
  for (Var v : scalars) {
    s += t.value(v)(0, 0);
    need |= t.wants(v);
  }
  const double inv = 1.0 / static_cast<double>(scalars.size());
  Matrix M(1, 1);
  M(0, 0) = s * inv;
  std::vector<Var> vs(scalars.begin(), scalars.end());
  return t.push(std::move(M), need, [vs = std::move(vs), inv](Tape& tp, std::size_t self) {
    const double g = tp.upstream(self)(0, 0);
    for (Var v : vs)
      if (tp.wants(v)) tp.grad_slot(v)(0, 0) += g * inv;
  });
}

/// Sum of all entries, as a 1 x 1 value.
inline Var sum(Tape& t, Var a) {
  Matrix M(1, 1);
  M(0, 0) = t.value(a).sum();
  return t.push(std::move(M), t.wants(a), [a](Tape& tp, std::size_t self) {
    tp.grad_slot(a).array() += tp.upstream(self)(0, 0);
  });
}

}  // namespace argnn::ad
