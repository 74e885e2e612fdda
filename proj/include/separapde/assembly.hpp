#pragma once

// Exact 1D stiffness/mass matrices for linear hats, Gauss-quadrature load
// vectors, and the separated (Kronecker-sum) operator and load they build.

#include <array>
#include <cstddef>
#include <vector>

#include "separapde/grid.hpp"
#include "separapde/quadrature.hpp"
#include "separapde/source.hpp"
#include "separapde/tridiag.hpp"

namespace separapde {

inline constexpr int kDefaultGaussOrder = 4;

/// int N_I' N_J' dx, assembled element by element in ascending order.
inline TriDiag stiffness_1d(const Grid1D& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  TriDiag k(n);
  for (Eigen::Index e = 0; e + 1 < n; ++e) {
    const double inv_h = 1.0 / grid.element_size(static_cast<std::size_t>(e));
    k.diag[e] += inv_h;
    k.diag[e + 1] += inv_h;
    k.super[e] -= inv_h;
    k.sub[e] -= inv_h;
  }
  return k;
}

/// int N_I N_J dx: h/3 on the diagonal per adjacent element, h/6 off it.
inline TriDiag mass_1d(const Grid1D& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  TriDiag m(n);
  for (Eigen::Index e = 0; e + 1 < n; ++e) {
    const double h = grid.element_size(static_cast<std::size_t>(e));
    m.diag[e] += h / 3.0;
    m.diag[e + 1] += h / 3.0;
    m.super[e] += h / 6.0;
    m.sub[e] += h / 6.0;
  }
  return m;
}

/// f[I] = int N_I(x) b(x) dx for one per-axis factor.
inline Vec load_vector_1d(const Grid1D& grid, const SourceFactor& factor, const QuadRule& rule) {
  Vec f = Vec::Zero(static_cast<Eigen::Index>(grid.size()));
  if (factor.kind == SourceFactor::Kind::dirac) {
    const std::size_t e = grid.locate(factor.location);
    const auto eb = element_basis(grid, e, factor.location);
    f[static_cast<Eigen::Index>(e)] += eb.value[0];
    f[static_cast<Eigen::Index>(e + 1)] += eb.value[1];
    return f;
  }
  for (std::size_t e = 0; e < grid.num_elements(); ++e) {
    double f0 = 0, f1 = 0;
    for (std::size_t g = 0; g < rule.size(); ++g) {
      const double xi = rule.points[g];
      const double wb = rule.weight(grid, e, g) * factor.value(rule.point(grid, e, g));
      f0 += wb * 0.5 * (1.0 - xi);
      f1 += wb * 0.5 * (1.0 + xi);
    }
    f[static_cast<Eigen::Index>(e)] += f0;
    f[static_cast<Eigen::Index>(e + 1)] += f1;
  }
  return f;
}

/// Per-element sensitivity of the local load pair to the element's two node
/// positions: entry [a * 2 + b] = d f_local[a] / d x_{e+b}. Quadrature points
/// move with the nodes.
inline std::vector<std::array<double, 4>> load_position_sensitivity(const Grid1D& grid, const SourceFactor& factor,
                                                                    const QuadRule& rule) {
  std::vector<std::array<double, 4>> out(grid.num_elements(), std::array<double, 4>{0, 0, 0, 0});
  if (factor.kind == SourceFactor::Kind::dirac) {
    const std::size_t e = grid.locate(factor.location);
    // local hats: node e (left) and node e+1 (right)
    const auto gl = hat_grad_nodes(support(grid, e), factor.location);
    const auto gr = hat_grad_nodes(support(grid, e + 1), factor.location);
    out[e] = {gl[1], gl[2], gr[0], gr[1]};
    return out;
  }
  if (!factor.derivative)
    fail(ErrorCode::unsupported_source, "moving nodes requires the derivative of every smooth source factor");
  for (std::size_t e = 0; e < grid.num_elements(); ++e) {
    const double h = grid.element_size(e);
    std::array<double, 4> s{0, 0, 0, 0};
    for (std::size_t g = 0; g < rule.size(); ++g) {
      const double xi = rule.points[g], w = rule.weights[g];
      const double x = rule.point(grid, e, g);
      const double b = factor.value(x), db = factor.derivative(x);
      const std::array<double, 2> phi{0.5 * (1.0 - xi), 0.5 * (1.0 + xi)};
      for (int a = 0; a < 2; ++a) {
        s[a * 2 + 0] += w * phi[a] * (-0.5 * b + 0.5 * h * db * phi[0]);
        s[a * 2 + 1] += w * phi[a] * (0.5 * b + 0.5 * h * db * phi[1]);
      }
    }
    out[e] = s;
  }
  return out;
}

/// sum_r (A_{r,0} (x) A_{r,1} [(x) A_{r,2}]) as per-axis tridiagonal factors.
struct SeparatedOperator {
  std::vector<std::vector<TriDiag>> terms;  // terms[r][axis]
};

/// sum_s (f_{s,0} (x) f_{s,1} [(x) f_{s,2}]) with per-term scale folded into axis 0.
struct SeparatedLoad {
  std::vector<std::vector<Vec>> terms;  // terms[s][axis]
};

/// -Laplacian in Kronecker-sum form: sum_d (x)_e (e == d ? K_e : M_e).
inline SeparatedOperator poisson_operator(const TensorMesh& mesh) {
  std::vector<TriDiag> k, m;
  for (const auto& g : mesh.axes) {
    k.push_back(stiffness_1d(g));
    m.push_back(mass_1d(g));
  }
  SeparatedOperator op;
  for (std::size_t d = 0; d < mesh.dims(); ++d) {
    std::vector<TriDiag> term;
    for (std::size_t e = 0; e < mesh.dims(); ++e) term.push_back(e == d ? k[e] : m[e]);
    op.terms.push_back(std::move(term));
  }
  return op;
}

inline SeparatedLoad load_separated(const TensorMesh& mesh, const SourceTerm& source,
                                    const QuadRule& rule = gauss_legendre(kDefaultGaussOrder)) {
  if (!source.is_separated())
    fail(ErrorCode::unsupported_source, "tensor-mesh solvers need a separated or point-load source");
  SeparatedLoad load;
  for (const auto& t : source.terms) {
    if (t.factors.size() != mesh.dims())
      fail(ErrorCode::incompatible_domain, "source term dimension does not match the mesh");
    std::vector<Vec> per_axis;
    for (std::size_t d = 0; d < mesh.dims(); ++d) per_axis.push_back(load_vector_1d(mesh[d], t.factors[d], rule));
    per_axis[0] *= t.scale;
    load.terms.push_back(std::move(per_axis));
  }
  return load;
}

/// Everything a tensor-mesh solver needs: grids, operator, load.
struct Discretization {
  TensorMesh mesh;
  SeparatedOperator op;
  SeparatedLoad load;

  std::size_t dims() const noexcept { return mesh.dims(); }
};

inline Discretization discretize(const TensorMesh& mesh, const SourceTerm& source,
                                 const QuadRule& rule = gauss_legendre(kDefaultGaussOrder)) {
  return {mesh, poisson_operator(mesh), load_separated(mesh, source, rule)};
}

}  // namespace separapde
