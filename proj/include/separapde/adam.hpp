#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>

#include "separapde/error.hpp"
#include "separapde/tridiag.hpp"

namespace separapde {

/// How mode/nodal coefficients are updated by the r-adaptive solvers.
enum class CoefficientUpdate {
  block,  // exact minimization over coefficients (per-axis block solves) between position steps
  adam,   // coefficients and positions advanced together by Adam
};

struct OptimizerConfig {
  double learning_rate = 1e-3;            // coefficients
  double position_learning_rate = 1e-4;   // nodal positions
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t max_iterations = 20000;
  double gradient_tolerance = 1e-8;
  std::uint64_t seed = 42;
  CoefficientUpdate coefficient_update = CoefficientUpdate::block;

  void validate() const {
    if (!(learning_rate > 0) || !(position_learning_rate >= 0))
      fail(ErrorCode::invalid_range, "learning rates must be positive");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(epsilon > 0))
      fail(ErrorCode::invalid_range, "Adam moment parameters out of range");
    if (max_iterations < 1) fail(ErrorCode::invalid_range, "max_iterations must be >= 1");
    if (!(gradient_tolerance >= 0)) fail(ErrorCode::invalid_range, "gradient tolerance must be >= 0");
  }
};

/// Adam with bias correction and a per-parameter learning rate.
class Adam {
 public:
  Adam(Eigen::Index n, const OptimizerConfig& cfg)
      : m_(Vec::Zero(n)), v_(Vec::Zero(n)), beta1_(cfg.beta1), beta2_(cfg.beta2), eps_(cfg.epsilon) {}

  void step(Vec& params, const Vec& grad, const Vec& rates) {
    if (!grad.allFinite()) fail(ErrorCode::non_finite_gradient, "gradient has non-finite entries");
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (Eigen::Index i = 0; i < params.size(); ++i) {
      const double mhat = m_[i] / c1, vhat = v_[i] / c2;
      params[i] -= rates[i] * mhat / (std::sqrt(vhat) + eps_);
    }
  }

  std::size_t iteration() const noexcept { return t_; }

 private:
  Vec m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

/// Sort-preserving clamp of interior positions into (a, b) with spacing >= margin.
inline void project_monotone(std::span<double> interior, double a, double b, double margin) {
  const std::size_t m = interior.size();
  if (m == 0) return;
  if (static_cast<double>(m + 1) * margin > b - a) fail(ErrorCode::invalid_range, "spacing margin too large");
  double prev = a;
  for (std::size_t i = 0; i < m; ++i) {
    interior[i] = std::max(interior[i], prev + margin);
    prev = interior[i];
  }
  double next = b;
  for (std::size_t i = m; i-- > 0;) {
    interior[i] = std::min(interior[i], next - margin);
    next = interior[i];
  }
}

}  // namespace separapde
