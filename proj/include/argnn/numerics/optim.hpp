#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "argnn/numerics/matrix.hpp"

namespace argnn {

/// Mean binary cross entropy over logits, stable for any finite logit.
inline double bce_loss(std::span<const double> logits, std::span<const double> targets) {
  if (logits.size() != targets.size()) throw UsageError("bce_loss: length mismatch");
  if (logits.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double o = logits[i];
    s += std::max(o, 0.0) - o * targets[i] + std::log1p(std::exp(-std::abs(o)));
  }
  return s / static_cast<double>(logits.size());
}

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-9;
};

struct OptimizerState {
  AdamWConfig config;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;
};

/// Bias-corrected Adam update with decoupled weight decay:
/// theta <- theta - lr * mhat / (sqrt(vhat) + eps) - lr * lambda * theta.
inline void adamw_step(std::span<Matrix* const> params, std::span<const Matrix> grads, OptimizerState& state,
                       double lr) {
  if (params.size() != grads.size()) throw UsageError("adamw_step: parameter/gradient count mismatch");
  if (state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.first_moment.size() != params.size()) throw UsageError("adamw_step: optimizer state size mismatch");
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(c.beta1, t);
  const double corr2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = grads[k];
    if (g.rows() != p.rows() || g.cols() != p.cols()) throw UsageError("adamw_step: gradient shape mismatch");
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double mhat = m.data()[i] / corr1;
      const double vhat = v.data()[i] / corr2;
      const double theta = p.data()[i];
      p.data()[i] = theta - lr * (mhat / (std::sqrt(vhat) + c.epsilon)) - lr * c.weight_decay * theta;
    }
  }
}

/// Cosine schedule restarting every cycle_len steps, from lr_max down
/// towards lr_min.
inline double cosine_cyclic_lr(std::uint64_t step, double lr_max = 2e-4, double lr_min = 1e-7,
                               std::uint64_t cycle_len = 1000) {
  if (cycle_len < 1) throw UsageError("cycle length must be at least 1");
  const double phase = static_cast<double>(step % cycle_len) / static_cast<double>(cycle_len);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * phase));
}

inline double global_norm(std::span<const Matrix> grads) {
  double s = 0.0;
  for (const auto& g : grads) s += g.squaredNorm();
  return std::sqrt(s);
}

/// Rescales grads in place to norm max_norm when their joint norm exceeds
/// it. Returns the norm before clipping.
inline double clip_global_norm(std::span<Matrix> grads, double max_norm = 0.5) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    for (auto& g : grads) g = (g * max_norm) / norm;
  }
  return norm;
}

}  // namespace argnn
