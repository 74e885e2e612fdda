#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "separapde/error.hpp"
#include "separapde/grid.hpp"

namespace separapde {

/// Gauss-Legendre rule of a given order: reference points on [-1, 1].
struct QuadRule {
  int order = 4;
  std::vector<double> points;
  std::vector<double> weights;

  /// Point and weight of reference point g mapped onto element e of a grid.
  double point(const Grid1D& grid, std::size_t e, std::size_t g) const {
    return 0.5 * (grid[e] + grid[e + 1]) + 0.5 * grid.element_size(e) * points[g];
  }
  double weight(const Grid1D& grid, std::size_t e, std::size_t g) const {
    return 0.5 * grid.element_size(e) * weights[g];
  }
  std::size_t size() const noexcept { return points.size(); }
};

/// Newton iteration on P_g from the Chebyshev-like initial guesses.
inline QuadRule gauss_legendre(int order) {
  if (order < 1 || order > 64) fail(ErrorCode::invalid_range, "Gauss order must be in [1, 64]");
  QuadRule rule;
  rule.order = order;
  const auto n = static_cast<std::size_t>(order);
  rule.points.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2 * kk - 1) * x * p1 - (kk - 1) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute the derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double kk = static_cast<double>(k);
      const double p2 = ((2 * kk - 1) * x * p1 - (kk - 1) * p0) / kk;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = -x;
    rule.points[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  return rule;
}

}  // namespace separapde
