#pragma once

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "separapde/error.hpp"

namespace separapde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// n x n tridiagonal matrix: sub[i] = A(i+1, i), super[i] = A(i, i+1).
struct TriDiag {
  Vec sub, diag, super;

  TriDiag() = default;
  explicit TriDiag(Eigen::Index n) : sub(Vec::Zero(n - 1)), diag(Vec::Zero(n)), super(Vec::Zero(n - 1)) {}

  Eigen::Index size() const noexcept { return diag.size(); }

  double operator()(Eigen::Index i, Eigen::Index j) const {
    if (i == j) return diag[i];
    if (j == i + 1) return super[i];
    if (i == j + 1) return sub[j];
    return 0.0;
  }

  bool is_symmetric(double tol = 0.0) const { return ((sub - super).cwiseAbs().array() <= tol).all(); }

  TriDiag transpose() const {
    TriDiag t = *this;
    std::swap(t.sub, t.super);
    return t;
  }

  Vec apply(const Vec& x) const {
    const auto n = size();
    Vec y = diag.cwiseProduct(x);
    if (n > 1) {
      y.head(n - 1) += super.cwiseProduct(x.tail(n - 1));
      y.tail(n - 1) += sub.cwiseProduct(x.head(n - 1));
    }
    return y;
  }

  /// x^T A y
  double form(const Vec& x, const Vec& y) const { return x.dot(apply(y)); }

  Mat dense() const {
    Mat a = Mat::Zero(size(), size());
    for (Eigen::Index i = 0; i < size(); ++i) {
      a(i, i) = diag[i];
      if (i + 1 < size()) {
        a(i, i + 1) = super[i];
        a(i + 1, i) = sub[i];
      }
    }
    return a;
  }

  TriDiag& operator+=(const TriDiag& o) {
    sub += o.sub;
    diag += o.diag;
    super += o.super;
    return *this;
  }
  TriDiag& operator*=(double s) {
    sub *= s;
    diag *= s;
    super *= s;
    return *this;
  }
  friend TriDiag operator*(double s, TriDiag a) { return a *= s; }
  friend TriDiag operator+(TriDiag a, const TriDiag& b) { return a += b; }

  /// Symmetric part (A + A^T) / 2.
  TriDiag symmetric_part() const {
    TriDiag t = *this;
    t.sub = 0.5 * (sub + super);
    t.super = t.sub;
    return t;
  }
};

/// Solves A x = rhs on the interior rows/columns 1..n-2 (Thomas algorithm);
/// boundary entries of the result are zero. Throws singular_system on a zero pivot.
inline Vec solve_interior(const TriDiag& a, const Vec& rhs) {
  const Eigen::Index n = a.size();
  Vec x = Vec::Zero(n);
  if (n <= 2) return x;
  const Eigen::Index m = n - 2;
  Vec c(m), d(m);
  double scale = a.diag.segment(1, m).cwiseAbs().maxCoeff();
  if (!(scale > 0)) fail(ErrorCode::singular_system, "zero tridiagonal system");
  double piv = a.diag[1];
  if (!(std::abs(piv) > 1e-14 * scale)) fail(ErrorCode::singular_system, "zero pivot in tridiagonal solve");
  c[0] = m > 1 ? a.super[1] / piv : 0.0;
  d[0] = rhs[1] / piv;
  for (Eigen::Index k = 1; k < m; ++k) {
    const Eigen::Index i = k + 1;
    piv = a.diag[i] - a.sub[i - 1] * c[k - 1];
    if (!(std::abs(piv) > 1e-14 * scale)) fail(ErrorCode::singular_system, "zero pivot in tridiagonal solve");
    c[k] = k + 1 < m ? a.super[i] / piv : 0.0;
    d[k] = (rhs[i] - a.sub[i - 1] * d[k - 1]) / piv;
  }
  x[m] = d[m - 1];
  for (Eigen::Index k = m - 2; k >= 0; --k) x[k + 1] = d[k] - c[k] * x[k + 2];
  return x;
}

}  // namespace separapde
