#pragma once

// Tensor-product FEM Poisson solver (homogeneous Dirichlet), the energy
// functional and relative energy-norm errors.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "separapde/assembly.hpp"
#include "separapde/tensor.hpp"

namespace separapde {

struct EnergyValue {
  double total = 0;      // quadratic - linear
  double quadratic = 0;  // a(u,u) / 2
  double linear = 0;     // (b,u)
};

/// Largest interior system handled by the sparse direct factorization.
inline constexpr std::size_t kDirectSolveLimit2D = 1023 * 1023;
inline constexpr std::size_t kDirectSolveLimit3D = 79 * 79 * 79;

/// Solves the interior system of a discretization. Returns the interior vector.
inline Vec solve_interior_system(const Eigen::SparseMatrix<double>& a, const Vec& rhs, std::size_t dims) {
  if (rhs.size() == 0) return rhs;
  const auto n = static_cast<std::size_t>(rhs.size());
  const bool direct = dims == 2 ? n <= kDirectSolveLimit2D : n <= kDirectSolveLimit3D;
  Vec x;
  if (direct) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
    if (ldlt.info() != Eigen::Success) fail(ErrorCode::singular_system, "sparse factorization failed");
    x = ldlt.solve(rhs);
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        cg;
    cg.setTolerance(1e-10);
    cg.setMaxIterations(static_cast<Eigen::Index>(20 * n));
    cg.compute(a);
    x = cg.solve(rhs);
  }
  const double rn = rhs.norm();
  if (rn > 0 && (a * x - rhs).norm() > 1e-9 * rn)
    fail(ErrorCode::singular_system, "linear solve did not reach the residual tolerance");
  return x;
}

inline NodalField solve_fem(const Discretization& disc) {
  const auto shape = disc.mesh.shape();
  const Vec f = gather_interior(assemble_load(disc.load, shape), shape);
  NodalField u(disc.mesh);
  if (f.size() == 0 || f.squaredNorm() == 0.0) return u;
  const auto a = assemble_interior(disc.op, shape);
  u.values = scatter_interior(solve_interior_system(a, f, disc.dims()), shape);
  return u;
}

inline NodalField solve_fem(const TensorMesh& mesh, const SourceTerm& source,
                            const QuadRule& rule = gauss_legendre(kDefaultGaussOrder)) {
  return solve_fem(discretize(mesh, source, rule));
}

/// a(u, u) for a nodal field under a separated operator.
inline double energy_form(const SeparatedOperator& op, const NodalField& u) {
  return u.values.dot(apply_operator(op, u.values, u.mesh.shape()));
}

inline EnergyValue energy(const Discretization& disc, const NodalField& u) {
  if (!(u.mesh == disc.mesh)) fail(ErrorCode::incompatible_domain, "field and discretization meshes differ");
  const auto shape = u.mesh.shape();
  EnergyValue e;
  e.quadratic = 0.5 * energy_form(disc.op, u);
  e.linear = u.values.dot(assemble_load(disc.load, shape));
  e.total = e.quadratic - e.linear;
  return e;
}

inline EnergyValue energy(const NodalField& u, const SourceTerm& source,
                          const QuadRule& rule = gauss_legendre(kDefaultGaussOrder)) {
  return energy(discretize(u.mesh, source, rule), u);
}

/// Union of the node sets of two grids on the same interval.
inline Grid1D merge_grids(const Grid1D& a, const Grid1D& b) {
  const double scale = std::max(a.length(), b.length());
  if (std::abs(a.front() - b.front()) > 1e-12 * scale || std::abs(a.back() - b.back()) > 1e-12 * scale)
    fail(ErrorCode::incompatible_domain, "grids cover different intervals");
  std::vector<double> x(a.nodes().begin(), a.nodes().end());
  x.insert(x.end(), b.nodes().begin(), b.nodes().end());
  std::sort(x.begin(), x.end());
  std::vector<double> out;
  for (double v : x)
    if (out.empty() || v - out.back() > 1e-12 * scale) out.push_back(v);
  out.front() = a.front();
  out.back() = a.back();
  return Grid1D(std::move(out));
}

/// Interpolation matrix from a coarse grid's hats onto the nodes of another grid.
inline Eigen::SparseMatrix<double, Eigen::RowMajor> prolongation(const Grid1D& from, const Grid1D& to) {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < to.size(); ++i) {
    const double x = std::clamp(to[i], from.front(), from.back());
    const std::size_t e = from.locate(x);
    const auto eb = element_basis(from, e, x);
    if (eb.value[0] != 0.0) trip.emplace_back(static_cast<int>(i), static_cast<int>(e), eb.value[0]);
    if (eb.value[1] != 0.0) trip.emplace_back(static_cast<int>(i), static_cast<int>(e + 1), eb.value[1]);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> p(static_cast<Eigen::Index>(to.size()),
                                                 static_cast<Eigen::Index>(from.size()));
  p.setFromTriplets(trip.begin(), trip.end());
  return p;
}

/// Exact representation of a piecewise-multilinear field on a finer tensor mesh
/// that contains all of its breakpoints.
inline NodalField transfer(const NodalField& u, const TensorMesh& target) {
  if (u.dims() != target.dims()) fail(ErrorCode::incompatible_mesh, "dimension mismatch");
  auto shape = u.mesh.shape();
  Vec v = u.values;
  for (std::size_t d = 0; d < u.dims(); ++d) {
    std::vector<std::size_t> out_shape;
    v = apply_axis(prolongation(u.mesh[d], target[d]), v, shape, d, out_shape);
    shape = out_shape;
  }
  return NodalField(target, std::move(v));
}

struct EnergyNormPair {
  double difference = 0;  // ||u - ref||_E
  double reference = 0;   // ||ref||_E
  double relative() const { return reference > 0 ? difference / reference : (difference > 0 ? INFINITY : 0.0); }
};

/// Energy norms of u - ref and ref, integrated exactly on the merged tensor
/// mesh whose per-axis nodes are the union of both meshes' nodes.
inline EnergyNormPair energy_norms(const NodalField& u, const NodalField& ref) {
  if (u.dims() != ref.dims()) fail(ErrorCode::incompatible_mesh, "dimension mismatch");
  if (u.mesh == ref.mesh) {
    const auto op = poisson_operator(u.mesh);
    NodalField diff(u.mesh, u.values - ref.values);
    return {std::sqrt(std::max(0.0, energy_form(op, diff))), std::sqrt(std::max(0.0, energy_form(op, ref)))};
  }
  std::vector<Grid1D> merged;
  for (std::size_t d = 0; d < u.dims(); ++d) merged.push_back(merge_grids(u.mesh[d], ref.mesh[d]));
  const TensorMesh mesh(std::move(merged));
  const auto op = poisson_operator(mesh);
  const NodalField r = ref.mesh == mesh ? ref : transfer(ref, mesh);
  const NodalField diff(mesh, transfer(u, mesh).values - r.values);
  return {std::sqrt(std::max(0.0, energy_form(op, diff))), std::sqrt(std::max(0.0, energy_form(op, r)))};
}

/// ||u - ref||_E / ||ref||_E
inline double energy_norm_error(const NodalField& u, const NodalField& ref) { return energy_norms(u, ref).relative(); }

/// Exact solution known in closed form: value and gradient callables.
struct AnalyticSolution {
  std::function<double(std::span<const double>)> value;
  std::function<std::array<double, 3>(std::span<const double>)> gradient;
};

/// Energy norms against a closed-form solution, Gauss quadrature of the given
/// order per axis on every element of u's mesh.
inline EnergyNormPair energy_norms(const NodalField& u, const AnalyticSolution& exact, int order = 6) {
  const auto rule = gauss_legendre(order);
  const std::size_t dims = u.dims();
  const auto shape = u.mesh.shape();
  double diff2 = 0, ref2 = 0;
  std::vector<std::size_t> elem(dims, 0), gp(dims, 0);
  std::array<double, 3> x{};
  const std::size_t ng = rule.size();
  std::size_t total_elems = 1, total_gp = 1;
  for (std::size_t d = 0; d < dims; ++d) {
    total_elems *= u.mesh[d].num_elements();
    total_gp *= ng;
  }
  std::vector<ElementBasis> basis(dims);
  for (std::size_t ei = 0; ei < total_elems; ++ei) {
    std::fill(gp.begin(), gp.end(), 0);
    for (std::size_t gi = 0; gi < total_gp; ++gi) {
      double w = 1;
      for (std::size_t d = 0; d < dims; ++d) {
        x[d] = rule.point(u.mesh[d], elem[d], gp[d]);
        w *= rule.weight(u.mesh[d], elem[d], gp[d]);
        basis[d] = element_basis(u.mesh[d], elem[d], x[d]);
      }
      std::array<double, 3> grad{0, 0, 0};
      const std::size_t corners = std::size_t{1} << dims;
      for (std::size_t c = 0; c < corners; ++c) {
        std::size_t flat = 0;
        for (std::size_t d = 0; d < dims; ++d) flat = flat * shape[d] + elem[d] + ((c >> (dims - 1 - d)) & 1U);
        const double uv = u.values[static_cast<Eigen::Index>(flat)];
        for (std::size_t k = 0; k < dims; ++k) {
          double p = uv;
          for (std::size_t d = 0; d < dims; ++d) {
            const std::size_t loc = (c >> (dims - 1 - d)) & 1U;
            p *= d == k ? basis[d].deriv[loc] : basis[d].value[loc];
          }
          grad[k] += p;
        }
      }
      const auto ge = exact.gradient(std::span<const double>(x.data(), dims));
      for (std::size_t k = 0; k < dims; ++k) {
        diff2 += w * (grad[k] - ge[k]) * (grad[k] - ge[k]);
        ref2 += w * ge[k] * ge[k];
      }
      for (std::size_t d = dims; d-- > 0;) {
        if (++gp[d] < ng) break;
        gp[d] = 0;
      }
    }
    for (std::size_t d = dims; d-- > 0;) {
      if (++elem[d] < u.mesh[d].num_elements()) break;
      elem[d] = 0;
    }
  }
  return {std::sqrt(diff2), std::sqrt(ref2)};
}

inline double energy_norm_error(const NodalField& u, const AnalyticSolution& exact, int order = 6) {
  return energy_norms(u, exact, order).relative();
}

}  // namespace separapde
