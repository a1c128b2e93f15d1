#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "argnn/numerics/layers.hpp"
#include "argnn/numerics/optim.hpp"
#include "argnn/numerics/tape.hpp"
#include "oracle.hpp"

using namespace argnn;

namespace {

double scalar_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Plain-loop evaluation of relu(x W1 + b1) W2 + b2.
std::vector<double> loop_mlp(const MlpParams& p, const std::vector<double>& x) {
  std::vector<double> h(static_cast<std::size_t>(p.w1.cols()), 0.0);
  for (Eigen::Index j = 0; j < p.w1.cols(); ++j) {
    double s = p.b1(0, j);
    for (Eigen::Index i = 0; i < p.w1.rows(); ++i) s += x[static_cast<std::size_t>(i)] * p.w1(i, j);
    h[static_cast<std::size_t>(j)] = s > 0 ? s : 0;
  }
  std::vector<double> out(static_cast<std::size_t>(p.w2.cols()), 0.0);
  for (Eigen::Index j = 0; j < p.w2.cols(); ++j) {
    double s = p.b2(0, j);
    for (Eigen::Index i = 0; i < p.w2.rows(); ++i) s += h[static_cast<std::size_t>(i)] * p.w2(i, j);
    out[static_cast<std::size_t>(j)] = s;
  }
  return out;
}

RowVector row(std::initializer_list<double> v) {
  RowVector r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

// Checks d(loss)/d(input) of a tape-built scalar function against central
// differences on every input coordinate.
void check_gradient(const std::function<ad::Var(ad::Tape&, ad::Var)>& build, const Matrix& x0, double tol = 1e-6) {
  ad::Tape t;
  const ad::Var x = t.leaf(x0, true);
  const ad::Var loss = build(t, x);
  t.backward(loss);
  const Matrix g = t.grad(x);
  auto eval = [&](const Matrix& x1) {
    ad::Tape u;
    const ad::Var v = u.leaf(x1, true);
    return u.value(build(u, v))(0, 0);
  };
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    const double fd = oracle::central_difference(
        [&](double xi) {
          Matrix x1 = x0;
          x1.data()[i] = xi;
          return eval(x1);
        },
        x0.data()[i]);
    EXPECT_NEAR(g.data()[i], fd, tol * std::max(1.0, std::abs(fd))) << "coordinate " << i;
  }
}

}  // namespace

TEST(Mlp, IdentityWeights) {
  MlpParams p = MlpParams::zeros(2, 2, 2);
  p.w1.setIdentity();
  p.w2.setIdentity();
  const RowVector out = mlp_forward(p, row({1, -1}));
  EXPECT_EQ(out, row({1, 0}));
}

TEST(Mlp, ZeroWeightsGiveOutputBias) {
  MlpParams p = MlpParams::zeros(3, 4, 2);
  p.b2 = row({0.25, -2});
  EXPECT_EQ(mlp_forward(p, row({5, 6, 7})), p.b2);
}

TEST(Mlp, MatchesLoopEvaluation) {
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    MlpParams p = MlpParams::init(5, 7, 3, rng);
    p.b1 = uniform_matrix(1, 7, 0.5, rng);
    p.b2 = uniform_matrix(1, 3, 0.5, rng);
    const RowVector x = uniform_matrix(1, 5, 2.0, rng);
    const auto ref = loop_mlp(p, std::vector<double>(x.data(), x.data() + 5));
    const RowVector out = mlp_forward(p, x);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(out(j), ref[static_cast<std::size_t>(j)], 1e-12);
  }
  EXPECT_THROW(mlp_forward(MlpParams::zeros(2, 2, 2), row({1, 2, 3})), UsageError);
}

TEST(Cell, ZeroParametersGiveZeroOutput) {
  const LstmParams p = LstmParams::zeros(3, 2);
  const CellState s{RowVector::Zero(2), RowVector::Zero(2)};
  const auto [out, next] = gated_recurrent_cell(p, s, row({1, 2, 3}));
  EXPECT_EQ(out, RowVector::Zero(2));
  EXPECT_EQ(next.cell, RowVector::Zero(2));
}

TEST(Cell, SaturatedForgetGateKeepsCell) {
  // Forget bias +inf-like, input gate bias -inf-like.
  LstmParams p = LstmParams::zeros(2, 2);
  p.bias.middleCols(0, 2).setConstant(-1e3);
  p.bias.middleCols(2, 2).setConstant(1e3);
  const CellState s{row({0.3, -0.4}), row({0.7, -1.5})};
  const auto [out, next] = gated_recurrent_cell(p, s, row({0.9, -0.2}));
  EXPECT_EQ(next.cell, s.cell);
  EXPECT_EQ(out, next.hidden);
}

TEST(Cell, MatchesLoopEvaluation) {
  Rng rng(8);
  const Eigen::Index in = 3, h = 4;
  for (int rep = 0; rep < 10; ++rep) {
    const LstmParams p{uniform_matrix(in, 4 * h, 0.8, rng), uniform_matrix(h, 4 * h, 0.8, rng),
                       uniform_matrix(1, 4 * h, 0.8, rng)};
    const CellState s{uniform_matrix(1, h, 1.0, rng), uniform_matrix(1, h, 1.0, rng)};
    const RowVector x = uniform_matrix(1, in, 1.0, rng);
    const auto [out, next] = gated_recurrent_cell(p, s, x);
    for (Eigen::Index j = 0; j < h; ++j) {
      double z[4];
      for (int gate = 0; gate < 4; ++gate) {
        const Eigen::Index c = gate * h + j;
        double acc = p.bias(0, c);
        for (Eigen::Index k = 0; k < in; ++k) acc += x(k) * p.w_input(k, c);
        for (Eigen::Index k = 0; k < h; ++k) acc += s.hidden(k) * p.w_hidden(k, c);
        z[gate] = acc;
      }
      const double c = scalar_sigmoid(z[1]) * s.cell(j) + scalar_sigmoid(z[0]) * std::tanh(z[2]);
      const double hv = scalar_sigmoid(z[3]) * std::tanh(c);
      EXPECT_NEAR(next.cell(j), c, 1e-12);
      EXPECT_NEAR(out(j), hv, 1e-12);
    }
  }
}

TEST(Cell, ForgetBiasInitialisedToOne) {
  Rng rng(1);
  const auto p = LstmParams::init(4, 3, rng);
  EXPECT_EQ(p.bias.middleCols(3, 3), Matrix::Ones(1, 3));
  EXPECT_EQ(p.bias.middleCols(0, 3), Matrix::Zero(1, 3));
}

TEST(Tape, SquareAtThree) {
  ad::Tape t;
  const ad::Var x = t.leaf(Matrix::Constant(1, 1, 3.0), true);
  t.backward(ad::sum(t, ad::mul(t, x, x)));
  EXPECT_EQ(t.grad(x)(0, 0), 6.0);
}

TEST(Tape, SigmoidAtZero) {
  ad::Tape t;
  const ad::Var x = t.leaf(Matrix::Zero(1, 1), true);
  t.backward(ad::sum(t, ad::sigmoid(t, x)));
  EXPECT_EQ(t.grad(x)(0, 0), 0.25);
}

TEST(Tape, BackwardNeedsScalar) {
  ad::Tape t;
  const ad::Var x = t.leaf(Matrix::Zero(2, 1), true);
  EXPECT_THROW(t.backward(x), UsageError);
}

TEST(Tape, UnreachedLeafHasZeroGradient) {
  ad::Tape t;
  const ad::Var x = t.leaf(Matrix::Ones(2, 2), true);
  const ad::Var y = t.leaf(Matrix::Ones(2, 2), true);
  t.backward(ad::sum(t, x));
  EXPECT_EQ(t.grad(y), Matrix::Zero(2, 2));
  EXPECT_EQ(t.grad(x), Matrix::Ones(2, 2));
}

TEST(Tape, OperationGradientsMatchFiniteDifferences) {
  Rng rng(21);
  const Matrix x0 = uniform_matrix(3, 4, 1.5, rng);
  const Matrix w = uniform_matrix(4, 2, 1.0, rng);
  const Matrix r = uniform_matrix(1, 4, 1.0, rng);
  const Matrix other = uniform_matrix(3, 4, 1.0, rng);
  const std::vector<std::uint32_t> idx{2, 0, 2, 1, 0};
  const std::vector<std::uint32_t> scatter{1, 1, 0};
  const std::vector<double> y{1, 0, 1, 1};

  using B = std::function<ad::Var(ad::Tape&, ad::Var)>;
  const std::vector<std::pair<const char*, B>> cases{
      {"matmul", [&](ad::Tape& t, ad::Var x) { return ad::sum(t, ad::matmul(t, x, t.leaf(w))); }},
      {"matmul_right",
       [&](ad::Tape& t, ad::Var x) {
         return ad::sum(t, ad::tanh(t, ad::matmul(t, t.leaf(Matrix(other.transpose())), x)));
       }},
      {"add", [&](ad::Tape& t, ad::Var x) { return ad::sum(t, ad::mul(t, ad::add(t, x, x), x)); }},
      {"add_row",
       [&](ad::Tape& t, ad::Var x) {
         return ad::sum(t, ad::tanh(t, ad::add_row(t, t.leaf(other), ad::slice_rows(t, x, 1, 1))));
       }},
      {"relu", [&](ad::Tape& t, ad::Var x) { return ad::sum(t, ad::mul(t, ad::relu(t, x), t.leaf(other))); }},
      {"sigmoid", [&](ad::Tape& t, ad::Var x) { return ad::sum(t, ad::mul(t, ad::sigmoid(t, x), x)); }},
      {"tanh", [&](ad::Tape& t, ad::Var x) { return ad::sum(t, ad::mul(t, ad::tanh(t, x), t.leaf(other))); }},
      {"scale", [&](ad::Tape& t, ad::Var x) { return ad::sum(t, ad::mul(t, ad::scale(t, x, -2.5), x)); }},
      {"concat_cols",
       [&](ad::Tape& t, ad::Var x) {
         return ad::sum(t, ad::tanh(t, ad::matmul(t, ad::concat_cols(t, x, x), t.leaf(Matrix::Ones(8, 1)))));
       }},
      {"concat_rows",
       [&](ad::Tape& t, ad::Var x) {
         return ad::sum(t, ad::sigmoid(t, ad::concat_rows(t, x, ad::slice_rows(t, x, 0, 2))));
       }},
      {"slice_cols", [&](ad::Tape& t, ad::Var x) { return ad::sum(t, ad::tanh(t, ad::slice_cols(t, x, 1, 2))); }},
      {"gather_rows",
       [&](ad::Tape& t, ad::Var x) { return ad::sum(t, ad::tanh(t, ad::gather_rows(t, x, idx))); }},
      {"scatter_add_rows",
       [&](ad::Tape& t, ad::Var x) { return ad::sum(t, ad::tanh(t, ad::scatter_add_rows(t, x, scatter, 2))); }},
      {"bce",
       [&](ad::Tape& t, ad::Var x) {
         return ad::bce_with_logits(t, ad::matmul(t, ad::slice_rows(t, x, 0, 1), t.leaf(Matrix::Ones(4, 1))),
                                    std::vector<double>{1});
       }},
      {"bce_column",
       [&](ad::Tape& t, ad::Var x) {
         return ad::bce_with_logits(t, ad::matmul(t, t.leaf(Matrix(w.transpose().leftCols(3))), ad::slice_cols(t, x, 0, 1)),
                                    std::vector<double>{1, 0});
       }},
      {"mean",
       [&](ad::Tape& t, ad::Var x) {
         const std::vector<ad::Var> parts{ad::sum(t, ad::tanh(t, x)), ad::sum(t, ad::mul(t, x, x))};
         return ad::mean(t, parts);
       }},
  };
  (void)r;
  (void)y;
  for (const auto& [name, build] : cases) {
    SCOPED_TRACE(name);
    check_gradient(build, x0);
  }
}

TEST(Loss, BceFixtures) {
  const std::vector<double> zeros(7, 0.0);
  EXPECT_NEAR(bce_loss(zeros, std::vector<double>{1, 0, 1, 0, 1, 1, 0}), std::numbers::ln2, 1e-12);
  EXPECT_NEAR(bce_loss(std::vector<double>{20}, std::vector<double>{1}), 2.06115362e-9, 1e-15);
  EXPECT_NEAR(bce_loss(std::vector<double>{-20}, std::vector<double>{1}), 20.0, 1e-8);
  EXPECT_TRUE(std::isfinite(bce_loss(std::vector<double>{-1e4, 1e4}, std::vector<double>{1, 0})));
  EXPECT_THROW(bce_loss(std::vector<double>{1}, std::vector<double>{}), UsageError);
}

TEST(Loss, TapeBceMatchesScalar) {
  const std::vector<double> o{-3, 0.5, 2, 0}, y{0, 1, 0, 1};
  ad::Tape t;
  Matrix m(4, 1);
  for (int i = 0; i < 4; ++i) m(i, 0) = o[static_cast<std::size_t>(i)];
  EXPECT_NEAR(t.value(ad::bce_with_logits(t, t.leaf(m), y))(0, 0), bce_loss(o, y), 1e-15);
}

TEST(AdamW, ZeroGradientLeavesParameters) {
  Matrix p = Matrix::Constant(2, 2, 1.5);
  OptimizerState st;
  st.config.weight_decay = 0.0;
  std::vector<Matrix*> params{&p};
  std::vector<Matrix> grads{Matrix::Zero(2, 2)};
  adamw_step(params, grads, st, 0.1);
  EXPECT_EQ(p, Matrix::Constant(2, 2, 1.5));
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  Matrix p = Matrix::Constant(1, 3, 2.0);
  OptimizerState st;
  st.config.weight_decay = 0.0;
  std::vector<Matrix*> params{&p};
  std::vector<Matrix> grads{Matrix::Ones(1, 3)};
  adamw_step(params, grads, st, 0.1);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p(0, i), 1.9, 1e-7);
}

TEST(AdamW, DecoupledDecay) {
  Matrix p = Matrix::Constant(1, 2, 3.0);
  OptimizerState st;
  st.config.weight_decay = 0.01;
  std::vector<Matrix*> params{&p};
  std::vector<Matrix> grads{Matrix::Zero(1, 2)};
  adamw_step(params, grads, st, 0.1);
  EXPECT_DOUBLE_EQ(p(0, 0), 3.0 * (1 - 0.1 * 0.01));
  EXPECT_EQ(st.step, 1u);
}

TEST(AdamW, ShapeMismatch) {
  Matrix p = Matrix::Zero(1, 2);
  OptimizerState st;
  std::vector<Matrix*> params{&p};
  std::vector<Matrix> grads{Matrix::Zero(2, 1)};
  EXPECT_THROW(adamw_step(params, grads, st, 0.1), UsageError);
}

TEST(Schedule, CosineCycle) {
  const std::uint64_t L = 1000;
  EXPECT_DOUBLE_EQ(cosine_cyclic_lr(0, 2e-4, 1e-7, L), 2e-4);
  EXPECT_NEAR(cosine_cyclic_lr(L - 1, 2e-4, 1e-7, L), 1e-7, 1e-9);
  EXPECT_NEAR(cosine_cyclic_lr(L / 2, 2e-4, 1e-7, L), (2e-4 + 1e-7) / 2, 1e-15);
  EXPECT_DOUBLE_EQ(cosine_cyclic_lr(L, 2e-4, 1e-7, L), 2e-4);
  for (std::uint64_t s = 1; s < L; ++s) EXPECT_LE(cosine_cyclic_lr(s, 2e-4, 1e-7, L), cosine_cyclic_lr(s - 1, 2e-4, 1e-7, L));
  EXPECT_THROW(cosine_cyclic_lr(0, 1, 0, 0), UsageError);
}

TEST(Clip, ScalesToMaxNorm) {
  std::vector<Matrix> g{Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, 4.0)};
  EXPECT_EQ(clip_global_norm(g, 0.5), 5.0);
  EXPECT_EQ(g[0](0, 0), 0.3);
  EXPECT_EQ(g[1](0, 0), 0.4);
}

TEST(Clip, SmallAndZeroUnchanged) {
  std::vector<Matrix> g{Matrix::Constant(1, 1, 0.15), Matrix::Constant(1, 1, 0.2)};
  clip_global_norm(g, 0.5);
  EXPECT_EQ(g[0](0, 0), 0.15);
  EXPECT_EQ(g[1](0, 0), 0.2);
  std::vector<Matrix> z{Matrix::Zero(2, 2)};
  EXPECT_EQ(clip_global_norm(z, 0.5), 0.0);
  EXPECT_EQ(z[0], Matrix::Zero(2, 2));
}
