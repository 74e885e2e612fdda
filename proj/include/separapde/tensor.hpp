#pragma once

// Nodal tensors on tensor-product meshes and Kronecker-structured products.

#include <cstddef>
#include <vector>

#include <Eigen/Sparse>

#include "separapde/assembly.hpp"
#include "separapde/grid.hpp"
#include "separapde/tridiag.hpp"

namespace separapde {

/// Full tensor of nodal values, row-major with axis 0 slowest.
struct NodalField {
  TensorMesh mesh;
  Vec values;

  NodalField() = default;
  explicit NodalField(TensorMesh m) : mesh(std::move(m)), values(Vec::Zero(static_cast<Eigen::Index>(mesh.num_nodes()))) {}
  NodalField(TensorMesh m, Vec v) : mesh(std::move(m)), values(std::move(v)) {
    if (values.size() != static_cast<Eigen::Index>(mesh.num_nodes()))
      fail(ErrorCode::incompatible_mesh, "nodal value count does not match the mesh");
  }

  std::size_t dims() const noexcept { return mesh.dims(); }

  Eigen::Index index(std::size_t i, std::size_t j) const {
    return static_cast<Eigen::Index>(i * mesh[1].size() + j);
  }
  Eigen::Index index(std::size_t i, std::size_t j, std::size_t k) const {
    return static_cast<Eigen::Index>((i * mesh[1].size() + j) * mesh[2].size() + k);
  }
  double& operator()(std::size_t i, std::size_t j) { return values[index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return values[index(i, j)]; }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return values[index(i, j, k)]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const { return values[index(i, j, k)]; }

  /// 2D view as an n1 x n2 matrix.
  Mat as_matrix() const {
    if (dims() != 2) fail(ErrorCode::incompatible_domain, "matrix view needs a 2D field");
    const auto n1 = static_cast<Eigen::Index>(mesh[0].size()), n2 = static_cast<Eigen::Index>(mesh[1].size());
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), n1,
                                                                                                  n2);
  }
};

namespace detail {

struct AxisLayout {
  std::size_t outer = 1, len = 1, inner = 1;
};

inline AxisLayout layout(const std::vector<std::size_t>& shape, std::size_t axis) {
  AxisLayout l;
  l.len = shape[axis];
  for (std::size_t e = 0; e < axis; ++e) l.outer *= shape[e];
  for (std::size_t e = axis + 1; e < shape.size(); ++e) l.inner *= shape[e];
  return l;
}

}  // namespace detail

/// Applies a tridiagonal matrix along one axis of a row-major tensor.
inline Vec apply_axis(const TriDiag& a, const Vec& x, const std::vector<std::size_t>& shape, std::size_t axis) {
  const auto l = detail::layout(shape, axis);
  Vec y(x.size());
  for (std::size_t o = 0; o < l.outer; ++o) {
    const std::size_t base = o * l.len * l.inner;
    for (std::size_t i = 0; i < l.len; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double* xc = x.data() + base + i * l.inner;
      double* yc = y.data() + base + i * l.inner;
      const double d = a.diag[ii];
      for (std::size_t k = 0; k < l.inner; ++k) yc[k] = d * xc[k];
      if (i > 0) {
        const double s = a.sub[ii - 1];
        const double* xp = xc - l.inner;
        for (std::size_t k = 0; k < l.inner; ++k) yc[k] += s * xp[k];
      }
      if (i + 1 < l.len) {
        const double s = a.super[ii];
        const double* xn = xc + l.inner;
        for (std::size_t k = 0; k < l.inner; ++k) yc[k] += s * xn[k];
      }
    }
  }
  return y;
}

/// Applies a general (possibly rectangular) sparse matrix along one axis.
inline Vec apply_axis(const Eigen::SparseMatrix<double, Eigen::RowMajor>& a, const Vec& x,
                      const std::vector<std::size_t>& shape, std::size_t axis, std::vector<std::size_t>& out_shape) {
  const auto l = detail::layout(shape, axis);
  out_shape = shape;
  out_shape[axis] = static_cast<std::size_t>(a.rows());
  const std::size_t rows = out_shape[axis];
  Vec y = Vec::Zero(static_cast<Eigen::Index>(l.outer * rows * l.inner));
  for (std::size_t o = 0; o < l.outer; ++o) {
    const double* xb = x.data() + o * l.len * l.inner;
    double* yb = y.data() + o * rows * l.inner;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      double* yc = yb + static_cast<std::size_t>(r) * l.inner;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a, r); it; ++it) {
        const double* xc = xb + static_cast<std::size_t>(it.col()) * l.inner;
        const double v = it.value();
        for (std::size_t k = 0; k < l.inner; ++k) yc[k] += v * xc[k];
      }
    }
  }
  return y;
}

/// (sum_r (x)_d A_{r,d}) x
inline Vec apply_operator(const SeparatedOperator& op, const Vec& x, const std::vector<std::size_t>& shape) {
  Vec y = Vec::Zero(x.size());
  for (const auto& term : op.terms) {
    Vec t = x;
    for (std::size_t d = 0; d < term.size(); ++d) t = apply_axis(term[d], t, shape, d);
    y += t;
  }
  return y;
}

/// Outer product of per-axis vectors, row-major.
inline Vec outer_product(const std::vector<Vec>& factors) {
  Vec t = factors[0];
  for (std::size_t d = 1; d < factors.size(); ++d) {
    const Vec& f = factors[d];
    Vec next(t.size() * f.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) next.segment(i * f.size(), f.size()) = t[i] * f;
    t = std::move(next);
  }
  return t;
}

inline Vec assemble_load(const SeparatedLoad& load, const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  Vec f = Vec::Zero(static_cast<Eigen::Index>(n));
  for (const auto& term : load.terms) f += outer_product(term);
  return f;
}

/// Zeroes every entry with a boundary index on some axis.
inline void zero_boundary(Vec& x, const std::vector<std::size_t>& shape) {
  const std::size_t dims = shape.size();
  std::vector<std::size_t> idx(dims, 0);
  for (Eigen::Index flat = 0; flat < x.size(); ++flat) {
    bool boundary = false;
    for (std::size_t d = 0; d < dims; ++d) boundary = boundary || idx[d] == 0 || idx[d] + 1 == shape[d];
    if (boundary) x[flat] = 0.0;
    for (std::size_t d = dims; d-- > 0;) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }
}

/// Interior-restricted sparse assembly of a separated operator.
inline Eigen::SparseMatrix<double> assemble_interior(const SeparatedOperator& op, const std::vector<std::size_t>& shape) {
  const std::size_t dims = shape.size();
  std::vector<std::size_t> m(dims);
  std::size_t total = 1;
  for (std::size_t d = 0; d < dims; ++d) {
    m[d] = shape[d] - 2;
    total *= m[d];
  }
  auto flat = [&](const std::vector<std::ptrdiff_t>& i) {
    std::size_t f = 0;
    for (std::size_t d = 0; d < dims; ++d) f = f * m[d] + static_cast<std::size_t>(i[d]);
    return static_cast<int>(f);
  };
  std::size_t stencil = 1;
  for (std::size_t d = 0; d < dims; ++d) stencil *= 3;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(total * stencil);
  std::vector<std::ptrdiff_t> row(dims, 0), col(dims, 0);
  for (std::size_t r = 0; r < total; ++r) {
    for (std::size_t s = 0; s < stencil; ++s) {
      std::size_t code = s;
      bool valid = true;
      for (std::size_t d = dims; d-- > 0;) {
        col[d] = row[d] + static_cast<std::ptrdiff_t>(code % 3) - 1;
        code /= 3;
        valid = valid && col[d] >= 0 && col[d] < static_cast<std::ptrdiff_t>(m[d]);
      }
      if (!valid) continue;
      double v = 0;
      for (const auto& term : op.terms) {
        double p = 1;
        for (std::size_t d = 0; d < dims; ++d) p *= term[d](row[d] + 1, col[d] + 1);
        v += p;
      }
      if (v != 0.0) trip.emplace_back(static_cast<int>(r), flat(col), v);
    }
    for (std::size_t d = dims; d-- > 0;) {
      if (++row[d] < static_cast<std::ptrdiff_t>(m[d])) break;
      row[d] = 0;
    }
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

/// Gather/scatter between full nodal tensors and interior-only vectors.
inline Vec gather_interior(const Vec& x, const std::vector<std::size_t>& shape) {
  const std::size_t dims = shape.size();
  std::size_t total = 1;
  for (auto s : shape) total *= s - 2;
  Vec y(static_cast<Eigen::Index>(total));
  std::vector<std::size_t> idx(dims, 1);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t f = 0;
    for (std::size_t d = 0; d < dims; ++d) f = f * shape[d] + idx[d];
    y[static_cast<Eigen::Index>(k)] = x[static_cast<Eigen::Index>(f)];
    for (std::size_t d = dims; d-- > 0;) {
      if (++idx[d] + 1 < shape[d]) break;
      idx[d] = 1;
    }
  }
  return y;
}

inline Vec scatter_interior(const Vec& y, const std::vector<std::size_t>& shape) {
  const std::size_t dims = shape.size();
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  Vec x = Vec::Zero(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> idx(dims, 1);
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    std::size_t f = 0;
    for (std::size_t d = 0; d < dims; ++d) f = f * shape[d] + idx[d];
    x[static_cast<Eigen::Index>(f)] = y[k];
    for (std::size_t d = dims; d-- > 0;) {
      if (++idx[d] + 1 < shape[d]) break;
      idx[d] = 1;
    }
  }
  return x;
}

}  // namespace separapde
