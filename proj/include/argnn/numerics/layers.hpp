#pragma once

#include <utility>

#include "argnn/numerics/matrix.hpp"
#include "argnn/numerics/tape.hpp"

namespace argnn {

/// Two affine maps with a ReLU in between: out = relu(in W1 + b1) W2 + b2.
/// Weights are stored input-major (in x out) so rows of a batch multiply on
/// the left.
struct MlpParams {
  Matrix w1, b1, w2, b2;

  static MlpParams init(Eigen::Index in, Eigen::Index hidden, Eigen::Index out, Rng& rng) {
    return {xavier_uniform(in, hidden, rng), Matrix::Zero(1, hidden), xavier_uniform(hidden, out, rng),
            Matrix::Zero(1, out)};
  }
  static MlpParams zeros(Eigen::Index in, Eigen::Index hidden, Eigen::Index out) {
    return {Matrix::Zero(in, hidden), Matrix::Zero(1, hidden), Matrix::Zero(hidden, out), Matrix::Zero(1, out)};
  }

  Eigen::Index input_dim() const { return w1.rows(); }
  Eigen::Index output_dim() const { return w2.cols(); }

  void check() const {
    require_shape(b1, 1, w1.cols(), "mlp b1");
    require_shape(w2, w1.cols(), w2.cols(), "mlp w2");
    require_shape(b2, 1, w2.cols(), "mlp b2");
  }
};

inline RowVector mlp_forward(const MlpParams& p, const RowVector& in) {
  p.check();
  if (in.cols() != p.input_dim()) throw UsageError("mlp_forward: input dimension mismatch");
  RowVector h = (in * p.w1 + p.b1).cwiseMax(0.0);
  return h * p.w2 + p.b2;
}

/// Gated recurrent cell with input, forget, cell-candidate and output gates
/// (columns in that order) computed from [input; hidden].
struct LstmParams {
  Matrix w_input;   // in x 4h
  Matrix w_hidden;  // h x 4h
  Matrix bias;      // 1 x 4h

  static LstmParams init(Eigen::Index in, Eigen::Index hidden, Rng& rng) {
    LstmParams p{xavier_uniform(in, 4 * hidden, rng), xavier_uniform(hidden, 4 * hidden, rng),
                 Matrix::Zero(1, 4 * hidden)};
    p.bias.middleCols(hidden, hidden).setOnes();
    return p;
  }
  static LstmParams zeros(Eigen::Index in, Eigen::Index hidden) {
    return {Matrix::Zero(in, 4 * hidden), Matrix::Zero(hidden, 4 * hidden), Matrix::Zero(1, 4 * hidden)};
  }

  Eigen::Index hidden_dim() const { return w_hidden.rows(); }
  Eigen::Index input_dim() const { return w_input.rows(); }

  void check() const {
    const auto h = hidden_dim();
    require_shape(w_input, w_input.rows(), 4 * h, "lstm w_input");
    require_shape(w_hidden, h, 4 * h, "lstm w_hidden");
    require_shape(bias, 1, 4 * h, "lstm bias");
  }
};

struct CellState {
  RowVector hidden;
  RowVector cell;
};

/// One step of the cell. Returns (output, new state); output equals the new
/// hidden vector.
inline std::pair<RowVector, CellState> gated_recurrent_cell(const LstmParams& p, const CellState& state,
                                                            const RowVector& input) {
  p.check();
  const auto h = p.hidden_dim();
  if (input.cols() != p.input_dim() || state.hidden.cols() != h || state.cell.cols() != h)
    throw UsageError("gated_recurrent_cell: dimension mismatch");
  const RowVector z = input * p.w_input + state.hidden * p.w_hidden + p.bias;
  auto sig = [](const RowVector& v) { return RowVector(v.unaryExpr([](double x) { return sigmoid(x); })); };
  const RowVector i = sig(z.middleCols(0, h));
  const RowVector f = sig(z.middleCols(h, h));
  const RowVector g = z.middleCols(2 * h, h).array().tanh().matrix();
  const RowVector o = sig(z.middleCols(3 * h, h));
  CellState next;
  next.cell = f.cwiseProduct(state.cell) + i.cwiseProduct(g);
  next.hidden = o.cwiseProduct(RowVector(next.cell.array().tanh().matrix()));
  RowVector out = next.hidden;
  return {std::move(out), std::move(next)};
}

namespace ad {

struct MlpVars {
  Var w1, b1, w2, b2;
};

inline MlpVars leaves(Tape& t, const MlpParams& p, bool grad) {
  return {t.leaf(p.w1, grad), t.leaf(p.b1, grad), t.leaf(p.w2, grad), t.leaf(p.b2, grad)};
}

inline Var mlp(Tape& t, const MlpVars& p, Var in) {
  Var h = relu(t, add_row(t, matmul(t, in, p.w1), p.b1));
  return add_row(t, matmul(t, h, p.w2), p.b2);
}

struct LstmVars {
  Var w_input, w_hidden, bias;
};

inline LstmVars leaves(Tape& t, const LstmParams& p, bool grad) {
  return {t.leaf(p.w_input, grad), t.leaf(p.w_hidden, grad), t.leaf(p.bias, grad)};
}

struct CellVars {
  Var hidden, cell;
};

/// Cell step given the precomputed input projection (input W_input + bias).
inline CellVars lstm_step(Tape& t, const LstmVars& p, Eigen::Index h, const CellVars& state, Var projected_input) {
  Var z = add(t, projected_input, matmul(t, state.hidden, p.w_hidden));
  Var i = sigmoid(t, slice_cols(t, z, 0, h));
  Var f = sigmoid(t, slice_cols(t, z, h, h));
  Var g = tanh(t, slice_cols(t, z, 2 * h, h));
  Var o = sigmoid(t, slice_cols(t, z, 3 * h, h));
  Var c = add(t, mul(t, f, state.cell), mul(t, i, g));
  Var hn = mul(t, o, tanh(t, c));
  return {hn, c};
}

}  // namespace ad

}  // namespace argnn
