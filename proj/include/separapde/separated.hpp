#pragma once

// Sums of products of per-axis 1D finite-element functions sharing one grid
// per axis.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/SVD>

#include "separapde/fem.hpp"
#include "separapde/grid.hpp"
#include "separapde/tensor.hpp"

namespace separapde {

/// One rank-1 term: per-axis nodal coefficient vectors.
struct Mode {
  std::vector<Vec> factors;
};

struct SeparatedSolution {
  std::vector<Grid1D> grids;
  std::vector<Mode> modes;

  SeparatedSolution() = default;
  explicit SeparatedSolution(std::vector<Grid1D> g) : grids(std::move(g)) {}
  explicit SeparatedSolution(const TensorMesh& mesh) : grids(mesh.axes) {}

  std::size_t dims() const noexcept { return grids.size(); }
  std::size_t num_modes() const noexcept { return modes.size(); }
  TensorMesh mesh() const { return TensorMesh(grids); }

  void add(Mode m) {
    if (m.factors.size() != grids.size()) fail(ErrorCode::incompatible_mesh, "mode dimension mismatch");
    for (std::size_t d = 0; d < grids.size(); ++d)
      if (m.factors[d].size() != static_cast<Eigen::Index>(grids[d].size()))
        fail(ErrorCode::incompatible_mesh, "mode length does not match its grid");
    modes.push_back(std::move(m));
  }
};

/// Value of the 1D interpolant sum_I N_I(x) c_I.
inline double interpolate_1d(const Grid1D& grid, const Vec& c, double x) {
  const std::size_t e = grid.locate(x);
  const auto eb = element_basis(grid, e, x);
  return eb.value[0] * c[static_cast<Eigen::Index>(e)] + eb.value[1] * c[static_cast<Eigen::Index>(e + 1)];
}

inline double eval(const SeparatedSolution& s, std::span<const double> x) {
  if (x.size() != s.dims()) fail(ErrorCode::incompatible_domain, "point dimension mismatch");
  double total = 0;
  for (const auto& m : s.modes) {
    double p = 1;
    for (std::size_t d = 0; d < s.dims(); ++d) p *= interpolate_1d(s.grids[d], m.factors[d], x[d]);
    total += p;
  }
  return total;
}

/// u_(I,J[,K]) = sum_q beta_I gamma_J [theta_K]
inline NodalField expand_to_nodal(const SeparatedSolution& s) {
  NodalField u(s.mesh());
  for (const auto& m : s.modes) u.values += outer_product(m.factors);
  return u;
}

/// Nodal-field evaluation by multilinear interpolation (2D and 3D).
inline double eval(const NodalField& u, std::span<const double> x) {
  const std::size_t dims = u.dims();
  const auto shape = u.mesh.shape();
  std::vector<std::size_t> e(dims);
  std::vector<ElementBasis> b(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    e[d] = u.mesh[d].locate(x[d]);
    b[d] = element_basis(u.mesh[d], e[d], x[d]);
  }
  double v = 0;
  for (std::size_t c = 0; c < (std::size_t{1} << dims); ++c) {
    std::size_t flat = 0;
    double w = 1;
    for (std::size_t d = 0; d < dims; ++d) {
      const std::size_t loc = (c >> (dims - 1 - d)) & 1U;
      flat = flat * shape[d] + e[d] + loc;
      w *= b[d].value[loc];
    }
    v += w * u.values[static_cast<Eigen::Index>(flat)];
  }
  return v;
}

/// Rescales a mode so every axis factor has the same 2-norm; the sign is fixed
/// so the largest-magnitude entry of the first factor is positive.
inline void normalize_mode(Mode& m) {
  const std::size_t dims = m.factors.size();
  double prod = 1;
  for (const auto& f : m.factors) prod *= f.norm();
  if (prod == 0.0) {
    for (auto& f : m.factors) f.setZero();
    return;
  }
  const double target = std::pow(prod, 1.0 / static_cast<double>(dims));
  for (auto& f : m.factors) f *= target / f.norm();
  Eigen::Index imax = 0;
  m.factors[0].cwiseAbs().maxCoeff(&imax);
  if (m.factors[0][imax] < 0) {
    m.factors[0] = -m.factors[0];
    m.factors[1] = -m.factors[1];
  }
}

/// Modes (sigma_q w_q, v_q) of a 2D nodal field by SVD, truncated at the
/// numerical rank 1e-12 * sigma_max.
inline SeparatedSolution svd_modes(const NodalField& u) {
  if (u.dims() != 2) fail(ErrorCode::incompatible_domain, "svd_modes needs a 2D field");
  const Mat a = u.as_matrix();
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sigma = svd.singularValues();
  SeparatedSolution s(u.mesh);
  if (sigma.size() == 0 || sigma[0] == 0.0) return s;
  for (Eigen::Index q = 0; q < sigma.size(); ++q) {
    if (sigma[q] <= 1e-12 * sigma[0]) break;
    Mode m;
    m.factors.push_back(sigma[q] * svd.matrixU().col(q));
    m.factors.push_back(svd.matrixV().col(q));
    s.add(std::move(m));
  }
  return s;
}

/// a(s, s) for a separated solution through per-axis Gram matrices.
inline double energy_form(const SeparatedOperator& op, const SeparatedSolution& s) {
  const std::size_t q = s.num_modes(), dims = s.dims();
  double total = 0;
  for (const auto& term : op.terms) {
    Mat g = Mat::Ones(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
    for (std::size_t d = 0; d < dims; ++d) {
      for (std::size_t p = 0; p < q; ++p) {
        const Vec ap = term[d].apply(s.modes[p].factors[d]);
        for (std::size_t r = 0; r < q; ++r)
          g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) *= s.modes[r].factors[d].dot(ap);
      }
    }
    total += g.sum();
  }
  return total;
}

inline double load_pairing(const SeparatedLoad& load, const SeparatedSolution& s) {
  double total = 0;
  for (const auto& m : s.modes)
    for (const auto& term : load.terms) {
      double p = 1;
      for (std::size_t d = 0; d < s.dims(); ++d) p *= term[d].dot(m.factors[d]);
      total += p;
    }
  return total;
}

inline EnergyValue energy(const Discretization& disc, const SeparatedSolution& s) {
  if (!(s.mesh() == disc.mesh)) fail(ErrorCode::incompatible_domain, "solution and discretization grids differ");
  EnergyValue e;
  e.quadratic = 0.5 * energy_form(disc.op, s);
  e.linear = load_pairing(disc.load, s);
  e.total = e.quadratic - e.linear;
  return e;
}

inline EnergyValue energy(const SeparatedSolution& s, const SourceTerm& source,
                          const QuadRule& rule = gauss_legendre(kDefaultGaussOrder)) {
  return energy(discretize(s.mesh(), source, rule), s);
}

enum class Method { fem, cd, pgd, hidenn, hidenn_pgd, pgd_mapped, hidenn_free };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::fem: return "fem";
    case Method::cd: return "cd";
    case Method::pgd: return "pgd";
    case Method::hidenn: return "hidenn";
    case Method::hidenn_pgd: return "hidenn-pgd";
    case Method::pgd_mapped: return "pgd-mapped";
    case Method::hidenn_free: return "hidenn-free";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (auto m : {Method::fem, Method::cd, Method::pgd, Method::hidenn, Method::hidenn_pgd, Method::pgd_mapped,
                 Method::hidenn_free})
    if (to_string(m) == s) return m;
  fail(ErrorCode::parse_error, "unknown method '" + std::string(s) + "'");
}

/// Degrees of freedom on interior nodes. hidenn is the per-axis variant
/// (values plus per-axis positions); hidenn_free counts every coordinate of
/// every node that may slide, boundary nodes sliding along their edge.
inline std::size_t dof_count(Method method, const TensorMesh& mesh, std::size_t q) {
  std::size_t full = 1, line_sum = 0;
  for (const auto& g : mesh.axes) {
    full *= g.num_interior();
    line_sum += g.num_interior();
  }
  switch (method) {
    case Method::fem: return full;
    case Method::cd:
    case Method::pgd:
    case Method::pgd_mapped: return line_sum * q;
    case Method::hidenn_pgd: return line_sum * q + line_sum;
    case Method::hidenn: return full + line_sum;
    case Method::hidenn_free: {
      std::size_t positions = 0;
      for (std::size_t d = 0; d < mesh.dims(); ++d) {
        std::size_t c = mesh[d].num_interior();
        for (std::size_t e = 0; e < mesh.dims(); ++e)
          if (e != d) c *= mesh[e].size();
        positions += c;
      }
      return full + positions;
    }
  }
  return 0;
}

}  // namespace separapde
