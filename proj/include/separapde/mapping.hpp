#pragma once

// PGD on irregular 2D domains. A structured quad mesh is mapped element by
// element (bilinear) onto a unit lattice; the metric J^-1 J^-T det J and the
// pulled-back load are separated by SVD so every integral stays a product of
// 1D integrals over the lattice axes.

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/SVD>

#include "separapde/pgd.hpp"

namespace separapde {

/// Structured physical quad mesh over the lattice {0..n1-1} x {0..n2-1}.
struct MappedDomain {
  std::size_t n1 = 0, n2 = 0;
  std::vector<std::array<double, 2>> nodes;  // row-major, index i * n2 + j

  MappedDomain() = default;
  MappedDomain(std::size_t a, std::size_t b, std::vector<std::array<double, 2>> x)
      : n1(a), n2(b), nodes(std::move(x)) {
    if (n1 < 2 || n2 < 2) fail(ErrorCode::invalid_range, "mapped domains need at least 2x2 nodes");
    if (nodes.size() != n1 * n2) fail(ErrorCode::incompatible_mesh, "node count does not match n1 x n2");
    for (std::size_t i = 0; i + 1 < n1; ++i)
      for (std::size_t j = 0; j + 1 < n2; ++j)
        for (double s : {0.0, 1.0})
          for (double t : {0.0, 1.0})
            if (!(corner_det(i, j, s, t) > 0))
              fail(ErrorCode::degenerate_element,
                   "element (" + std::to_string(i) + "," + std::to_string(j) + ") is not positively oriented");
  }

  const std::array<double, 2>& node(std::size_t i, std::size_t j) const { return nodes[i * n2 + j]; }

  Grid1D reference_x() const { return Grid1D::uniform(0.0, static_cast<double>(n1 - 1), n1); }
  Grid1D reference_y() const { return Grid1D::uniform(0.0, static_cast<double>(n2 - 1), n2); }
  TensorMesh reference_mesh() const { return TensorMesh({reference_x(), reference_y()}); }

  /// dx/ds, dx/dt at local coordinates (s, t) in [0,1]^2 of element (i, j).
  Eigen::Matrix2d local_jacobian(std::size_t i, std::size_t j, double s, double t) const {
    const auto& a = node(i, j);
    const auto& b = node(i + 1, j);
    const auto& c = node(i, j + 1);
    const auto& d = node(i + 1, j + 1);
    Eigen::Matrix2d m;
    for (int k = 0; k < 2; ++k) {
      m(k, 0) = (1 - t) * (b[k] - a[k]) + t * (d[k] - c[k]);
      m(k, 1) = (1 - s) * (c[k] - a[k]) + s * (d[k] - b[k]);
    }
    return m;
  }

 private:
  double corner_det(std::size_t i, std::size_t j, double s, double t) const {
    return local_jacobian(i, j, s, t).determinant();
  }
};

namespace detail {

struct LocalPoint {
  std::size_t i, j;
  double s, t;
};

inline LocalPoint locate_reference(const MappedDomain& dom, double xt, double yt) {
  const double xmax = static_cast<double>(dom.n1 - 1), ymax = static_cast<double>(dom.n2 - 1);
  if (!(xt >= 0 && xt <= xmax && yt >= 0 && yt <= ymax))
    fail(ErrorCode::point_outside_reference, "reference point lies outside the lattice");
  const auto i = std::min(static_cast<std::size_t>(std::floor(xt)), dom.n1 - 2);
  const auto j = std::min(static_cast<std::size_t>(std::floor(yt)), dom.n2 - 2);
  return {i, j, xt - static_cast<double>(i), yt - static_cast<double>(j)};
}

}  // namespace detail

/// Physical image of a lattice point through its bilinear element map.
inline std::array<double, 2> forward_map(const MappedDomain& dom, double xt, double yt) {
  const auto p = detail::locate_reference(dom, xt, yt);
  const auto& a = dom.node(p.i, p.j);
  const auto& b = dom.node(p.i + 1, p.j);
  const auto& c = dom.node(p.i, p.j + 1);
  const auto& d = dom.node(p.i + 1, p.j + 1);
  std::array<double, 2> x{};
  for (int k = 0; k < 2; ++k)
    x[k] = (1 - p.s) * (1 - p.t) * a[k] + p.s * (1 - p.t) * b[k] + (1 - p.s) * p.t * c[k] + p.s * p.t * d[k];
  return x;
}

/// J = d(x, y) / d(x~, y~). Lattice spacing is 1, so J is the local derivative.
inline Eigen::Matrix2d jacobian(const MappedDomain& dom, double xt, double yt) {
  const auto p = detail::locate_reference(dom, xt, yt);
  const Eigen::Matrix2d j = dom.local_jacobian(p.i, p.j, p.s, p.t);
  if (!(j.determinant() > 0)) fail(ErrorCode::degenerate_element, "non-positive Jacobian determinant");
  return j;
}

/// J^-1 J^-T det J: the matrix that turns lattice gradients into the
/// physical Dirichlet integrand.
inline Eigen::Matrix2d metric(const Eigen::Matrix2d& j) {
  const Eigen::Matrix2d inv = j.inverse();
  return inv * inv.transpose() * j.determinant();
}

/// Sum of products phi_a(x~) psi_a(y~), both sampled on Gauss points.
struct SeparatedSamples {
  std::vector<Vec> phi, psi;
  double max_abs = 0;  // largest |entry| of the sampled data
  double max_error = 0;  // reconstruction error at the samples

  std::size_t rank() const noexcept { return phi.size(); }
  double operator()(Eigen::Index ix, Eigen::Index iy) const {
    double v = 0;
    for (std::size_t a = 0; a < phi.size(); ++a) v += phi[a][ix] * psi[a][iy];
    return v;
  }
};

/// Fewest SVD terms reproducing the sample matrix within tol * max |entry|.
inline SeparatedSamples separate_samples(const Mat& samples, double tol) {
  SeparatedSamples out;
  out.max_abs = samples.cwiseAbs().maxCoeff();
  if (out.max_abs == 0.0) return out;
  Eigen::BDCSVD<Mat> svd(samples, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sigma = svd.singularValues();
  Mat recon = Mat::Zero(samples.rows(), samples.cols());
  for (Eigen::Index a = 0; a < sigma.size(); ++a) {
    if (sigma[a] == 0.0) break;
    out.phi.push_back(sigma[a] * svd.matrixU().col(a));
    out.psi.push_back(svd.matrixV().col(a));
    recon += out.phi.back() * out.psi.back().transpose();
    out.max_error = (recon - samples).cwiseAbs().maxCoeff();
    if (out.max_error <= tol * out.max_abs) break;
  }
  return out;
}

/// Metric entries separated on the tensor Gauss grid of the lattice.
struct SeparatedMetric {
  QuadRule rule;
  Grid1D ref_x, ref_y;
  SeparatedSamples g11, g12, g22;
  double tolerance = 0;
};

/// Gauss-point sample matrix of f(i, j, s, t) over all elements.
template <class F>
Mat sample_on_gauss_grid(const MappedDomain& dom, const QuadRule& rule, F&& f) {
  const std::size_t ng = rule.size();
  Mat m((dom.n1 - 1) * ng, (dom.n2 - 1) * ng);
  for (std::size_t i = 0; i + 1 < dom.n1; ++i)
    for (std::size_t gx = 0; gx < ng; ++gx)
      for (std::size_t j = 0; j + 1 < dom.n2; ++j)
        for (std::size_t gy = 0; gy < ng; ++gy)
          m(static_cast<Eigen::Index>(i * ng + gx), static_cast<Eigen::Index>(j * ng + gy)) =
              f(i, j, 0.5 * (1 + rule.points[gx]), 0.5 * (1 + rule.points[gy]));
  return m;
}

inline SeparatedMetric separate_metric(const MappedDomain& dom, const QuadRule& rule = gauss_legendre(kDefaultGaussOrder),
                                       double tol = 1e-10) {
  auto entry = [&](int r, int c) {
    return sample_on_gauss_grid(dom, rule, [&](std::size_t i, std::size_t j, double s, double t) {
      const Eigen::Matrix2d jac = dom.local_jacobian(i, j, s, t);
      if (!(jac.determinant() > 0)) fail(ErrorCode::degenerate_element, "non-positive Jacobian determinant");
      return metric(jac)(r, c);
    });
  };
  SeparatedMetric m{rule, dom.reference_x(), dom.reference_y(), {}, {}, {}, tol};
  m.g11 = separate_samples(entry(0, 0), tol);
  m.g12 = separate_samples(entry(0, 1), tol);
  m.g22 = separate_samples(entry(1, 1), tol);
  return m;
}

/// Pulled-back load b(x(x~)) det J on the Gauss grid, separated.
inline SeparatedSamples separate_source(const MappedDomain& dom, const SourceTerm& source,
                                        const QuadRule& rule = gauss_legendre(kDefaultGaussOrder), double tol = 1e-10) {
  return separate_samples(sample_on_gauss_grid(dom, rule,
                                               [&](std::size_t i, std::size_t j, double s, double t) {
                                                 const auto x = forward_map(dom, static_cast<double>(i) + s,
                                                                            static_cast<double>(j) + t);
                                                 const double det = dom.local_jacobian(i, j, s, t).determinant();
                                                 return source(std::span<const double>(x.data(), 2)) * det;
                                               }),
                          tol);
}

namespace detail {

enum class WeightedKind { stiffness, mass, cross };

/// 1D lattice matrices weighted by Gauss-point samples w:
/// stiffness int w N_i' N_j', mass int w N_i N_j, cross C[i][j] = int w N_i' N_j.
inline TriDiag weighted_matrix(const Grid1D& grid, const QuadRule& rule, const Vec& w, WeightedKind kind) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  const std::size_t ng = rule.size();
  TriDiag a(n);
  for (Eigen::Index e = 0; e + 1 < n; ++e) {
    const double h = grid.element_size(static_cast<std::size_t>(e));
    double loc[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t g = 0; g < ng; ++g) {
      const double xi = rule.points[g];
      const double wq = rule.weights[g] * 0.5 * h * w[e * static_cast<Eigen::Index>(ng) + static_cast<Eigen::Index>(g)];
      const double val[2] = {0.5 * (1 - xi), 0.5 * (1 + xi)};
      const double der[2] = {-1.0 / h, 1.0 / h};
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
          const double f = kind == WeightedKind::stiffness ? der[r] * der[c]
                           : kind == WeightedKind::mass    ? val[r] * val[c]
                                                           : der[r] * val[c];
          loc[r][c] += wq * f;
        }
    }
    a.diag[e] += loc[0][0];
    a.diag[e + 1] += loc[1][1];
    a.super[e] += loc[0][1];
    a.sub[e] += loc[1][0];
  }
  return a;
}

inline Vec weighted_load(const Grid1D& grid, const QuadRule& rule, const Vec& w) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  const std::size_t ng = rule.size();
  Vec f = Vec::Zero(n);
  for (Eigen::Index e = 0; e + 1 < n; ++e) {
    const double h = grid.element_size(static_cast<std::size_t>(e));
    for (std::size_t g = 0; g < ng; ++g) {
      const double xi = rule.points[g];
      const double wq = rule.weights[g] * 0.5 * h * w[e * static_cast<Eigen::Index>(ng) + static_cast<Eigen::Index>(g)];
      f[e] += wq * 0.5 * (1 - xi);
      f[e + 1] += wq * 0.5 * (1 + xi);
    }
  }
  return f;
}

}  // namespace detail

/// Lattice discretization of the mapped Poisson problem: every operator term
/// is a product of two weighted 1D matrices.
inline Discretization mapped_discretization(const SeparatedMetric& m, const SeparatedSamples& load) {
  using detail::WeightedKind;
  const auto& rule = m.rule;
  Discretization disc{TensorMesh({m.ref_x, m.ref_y}), {}, {}};
  for (std::size_t a = 0; a < m.g11.rank(); ++a)
    disc.op.terms.push_back({detail::weighted_matrix(m.ref_x, rule, m.g11.phi[a], WeightedKind::stiffness),
                             detail::weighted_matrix(m.ref_y, rule, m.g11.psi[a], WeightedKind::mass)});
  for (std::size_t a = 0; a < m.g22.rank(); ++a)
    disc.op.terms.push_back({detail::weighted_matrix(m.ref_x, rule, m.g22.phi[a], WeightedKind::mass),
                             detail::weighted_matrix(m.ref_y, rule, m.g22.psi[a], WeightedKind::stiffness)});
  for (std::size_t a = 0; a < m.g12.rank(); ++a) {
    const TriDiag cx = detail::weighted_matrix(m.ref_x, rule, m.g12.phi[a], WeightedKind::cross);
    const TriDiag cy = detail::weighted_matrix(m.ref_y, rule, m.g12.psi[a], WeightedKind::cross);
    // trial derivative along x~ with test derivative along y~, and the mirror
    disc.op.terms.push_back({cx.transpose(), cy});
    disc.op.terms.push_back({cx, cy.transpose()});
  }
  for (std::size_t s = 0; s < load.rank(); ++s)
    disc.load.terms.push_back(
        {detail::weighted_load(m.ref_x, rule, load.phi[s]), detail::weighted_load(m.ref_y, rule, load.psi[s])});
  return disc;
}

struct MappedPgdResult {
  PgdResult pgd;  // modes over the lattice axes
  SeparatedMetric metric;
  SeparatedSamples load;
};

/// PGD on a mapped domain. A general (pointwise, physical-coordinate) source
/// is SVD-separated together with det J; a separated source is read as the
/// pulled-back density b(x(x~)) det J given in lattice coordinates.
inline MappedPgdResult solve_pgd_mapped(const MappedDomain& dom, const SourceTerm& source, std::size_t q,
                                        const PgdOptions& opts = {}, const QuadRule& rule = gauss_legendre(kDefaultGaussOrder),
                                        double tol = 1e-10) {
  MappedPgdResult res{{}, separate_metric(dom, rule, tol), {}};
  if (source.is_separated()) {
    SourceTerm flat = source;
    res.load = separate_samples(sample_on_gauss_grid(dom, rule,
                                                     [&](std::size_t i, std::size_t j, double s, double t) {
                                                       const double x[2] = {static_cast<double>(i) + s,
                                                                            static_cast<double>(j) + t};
                                                       return flat(std::span<const double>(x, 2));
                                                     }),
                                tol);
  } else {
    res.load = separate_source(dom, source, rule, tol);
  }
  res.pgd = solve_pgd(mapped_discretization(res.metric, res.load), q, opts);
  return res;
}

/// Energy norms of (u_h - u, u) over the physical domain, u_h given by nodal
/// values on the lattice, Gauss quadrature of the given order per element.
inline EnergyNormPair mapped_energy_norms(const MappedDomain& dom, const NodalField& uh, const AnalyticSolution& exact,
                                          int order = 6) {
  if (uh.dims() != 2 || uh.mesh[0].size() != dom.n1 || uh.mesh[1].size() != dom.n2)
    fail(ErrorCode::incompatible_mesh, "field does not live on the domain's lattice");
  const auto rule = gauss_legendre(order);
  double diff2 = 0, ref2 = 0;
  for (std::size_t i = 0; i + 1 < dom.n1; ++i)
    for (std::size_t j = 0; j + 1 < dom.n2; ++j) {
      const double u00 = uh(i, j), u10 = uh(i + 1, j), u01 = uh(i, j + 1), u11 = uh(i + 1, j + 1);
      for (std::size_t gx = 0; gx < rule.size(); ++gx)
        for (std::size_t gy = 0; gy < rule.size(); ++gy) {
          const double s = 0.5 * (1 + rule.points[gx]), t = 0.5 * (1 + rule.points[gy]);
          const double w = 0.25 * rule.weights[gx] * rule.weights[gy];
          const Eigen::Matrix2d jac = dom.local_jacobian(i, j, s, t);
          const double det = jac.determinant();
          Eigen::Vector2d gref((1 - t) * (u10 - u00) + t * (u11 - u01), (1 - s) * (u01 - u00) + s * (u11 - u10));
          const Eigen::Vector2d gh = jac.inverse().transpose() * gref;
          const auto x = forward_map(dom, static_cast<double>(i) + s, static_cast<double>(j) + t);
          const auto ge = exact.gradient(std::span<const double>(x.data(), 2));
          const double dx = gh[0] - ge[0], dy = gh[1] - ge[1];
          diff2 += w * det * (dx * dx + dy * dy);
          ref2 += w * det * (ge[0] * ge[0] + ge[1] * ge[1]);
        }
    }
  return {std::sqrt(diff2), std::sqrt(ref2)};
}

/// Tensor grid of physical points x_i, y_j.
inline MappedDomain rectangle_domain(const Grid1D& gx, const Grid1D& gy) {
  std::vector<std::array<double, 2>> x;
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < gy.size(); ++j) x.push_back({gx[i], gy[j]});
  return MappedDomain(gx.size(), gy.size(), std::move(x));
}

/// Quarter ring r0 <= r <= r1, 0 <= theta <= pi/2; x~ runs along r, y~ along theta.
inline MappedDomain quarter_ring_domain(std::size_t n_r, std::size_t n_theta, double r0 = 1.0, double r1 = 2.0) {
  if (!(r0 > 0 && r0 < r1)) fail(ErrorCode::invalid_range, "quarter ring needs 0 < r0 < r1");
  std::vector<std::array<double, 2>> x;
  for (std::size_t i = 0; i < n_r; ++i) {
    const double r = r0 + (r1 - r0) * static_cast<double>(i) / static_cast<double>(n_r - 1);
    for (std::size_t j = 0; j < n_theta; ++j) {
      const double th = 0.5 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_theta - 1);
      x.push_back({r * std::cos(th), r * std::sin(th)});
    }
  }
  return MappedDomain(n_r, n_theta, std::move(x));
}

/// Quarter of a square plate [0, half]^2 with a circular hole of the given
/// radius at the origin; x~ runs from the hole to the outer edge.
inline MappedDomain plate_with_hole_domain(std::size_t n_radial, std::size_t n_theta, double radius = 1.0,
                                           double half = 2.0) {
  if (!(radius > 0 && radius < half)) fail(ErrorCode::invalid_range, "hole must fit inside the plate");
  std::vector<std::array<double, 2>> x;
  for (std::size_t i = 0; i < n_radial; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(n_radial - 1);
    for (std::size_t j = 0; j < n_theta; ++j) {
      const double th = 0.5 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_theta - 1);
      const double c = std::cos(th), sn = std::sin(th);
      const double reach = half / std::max(c, sn);
      const double r = (1 - s) * radius + s * reach;
      x.push_back({r * c, r * sn});
    }
  }
  return MappedDomain(n_radial, n_theta, std::move(x));
}

/// Manufactured quarter-ring solution u = sin(pi (r - r0) / (r1 - r0)) sin(2 theta)
/// with its load -lap u.
struct QuarterRingProblem {
  double r0 = 1.0, r1 = 2.0;

  double k() const { return std::numbers::pi / (r1 - r0); }

  AnalyticSolution solution() const {
    const double kk = k(), a = r0;
    AnalyticSolution s;
    s.value = [=](std::span<const double> x) {
      const double r = std::hypot(x[0], x[1]), th = std::atan2(x[1], x[0]);
      return std::sin(kk * (r - a)) * std::sin(2 * th);
    };
    s.gradient = [=](std::span<const double> x) {
      const double r = std::hypot(x[0], x[1]), th = std::atan2(x[1], x[0]);
      const double ur = kk * std::cos(kk * (r - a)) * std::sin(2 * th);
      const double ut = 2 * std::sin(kk * (r - a)) * std::cos(2 * th) / r;
      const double c = std::cos(th), sn = std::sin(th);
      return std::array<double, 3>{ur * c - ut * sn, ur * sn + ut * c, 0.0};
    };
    return s;
  }

  SourceTerm source() const {
    const double kk = k(), a = r0;
    return SourceTerm::from_callable([=](std::span<const double> x) {
      const double r = std::hypot(x[0], x[1]), th = std::atan2(x[1], x[0]);
      const double u = std::sin(kk * (r - a)) * std::sin(2 * th);
      return kk * kk * u - kk * std::cos(kk * (r - a)) * std::sin(2 * th) / r + 4 * u / (r * r);
    });
  }
};

}  // namespace separapde
