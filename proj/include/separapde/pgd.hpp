#pragma once

// Fixed-mesh separated solvers on a Discretization: canonical decomposition
// with all modes optimized jointly (per-axis block minimization), and
// incremental PGD (one greedy mode at a time, alternating directions).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "separapde/adam.hpp"
#include "separapde/assembly.hpp"
#include "separapde/separated.hpp"

namespace separapde {

/// Deterministic unit vector with zero boundary entries.
inline Vec random_unit_factor(std::mt19937_64& rng, Eigen::Index n) {
  Vec v = Vec::Zero(n);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v[i] = 2.0 * u - 1.0;
  }
  const double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

inline Mode random_mode(std::mt19937_64& rng, const TensorMesh& mesh) {
  Mode m;
  for (const auto& g : mesh.axes) m.factors.push_back(random_unit_factor(rng, static_cast<Eigen::Index>(g.size())));
  return m;
}

namespace detail {

/// Gram matrices G(p, q) = beta_p^T A beta_q for every operator term on one axis.
inline std::vector<Mat> operator_grams(const SeparatedOperator& op, const std::vector<Mode>& modes, std::size_t axis) {
  const auto q = static_cast<Eigen::Index>(modes.size());
  std::vector<Mat> out;
  for (const auto& term : op.terms) {
    Mat g(q, q);
    for (Eigen::Index c = 0; c < q; ++c) {
      const Vec ac = term[axis].apply(modes[static_cast<std::size_t>(c)].factors[axis]);
      for (Eigen::Index r = 0; r < q; ++r) g(r, c) = modes[static_cast<std::size_t>(r)].factors[axis].dot(ac);
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// F(s, q) = f_s^T beta_q on one axis.
inline Mat load_grams(const SeparatedLoad& load, const std::vector<Mode>& modes, std::size_t axis) {
  Mat f(static_cast<Eigen::Index>(load.terms.size()), static_cast<Eigen::Index>(modes.size()));
  for (std::size_t s = 0; s < load.terms.size(); ++s)
    for (std::size_t q = 0; q < modes.size(); ++q)
      f(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(q)) = load.terms[s][axis].dot(modes[q].factors[axis]);
  return f;
}

/// Coupling of axis `axis` to all other axes: per-term elementwise products of Grams.
struct AxisCoupling {
  std::vector<Mat> op;  // per term, Q x Q
  Mat load;             // S x Q
};

inline AxisCoupling coupling(const std::vector<std::vector<Mat>>& op_grams, const std::vector<Mat>& load_grams,
                             std::size_t axis) {
  AxisCoupling c;
  const std::size_t dims = op_grams.size();
  for (std::size_t r = 0; r < op_grams[0].size(); ++r) {
    Mat m = Mat::Ones(op_grams[0][r].rows(), op_grams[0][r].cols());
    for (std::size_t e = 0; e < dims; ++e)
      if (e != axis) m = m.cwiseProduct(op_grams[e][r]);
    c.op.push_back(std::move(m));
  }
  c.load = Mat::Ones(load_grams[0].rows(), load_grams[0].cols());
  for (std::size_t e = 0; e < dims; ++e)
    if (e != axis) c.load = c.load.cwiseProduct(load_grams[e]);
  return c;
}

/// Block (node i, node j) of the symmetrized per-axis system.
inline Mat system_block(const SeparatedOperator& op, const AxisCoupling& c, std::size_t axis, Eigen::Index i,
                        Eigen::Index j) {
  const Eigen::Index q = c.op[0].rows();
  Mat b = Mat::Zero(q, q);
  for (std::size_t r = 0; r < op.terms.size(); ++r) {
    const double aij = op.terms[r][axis](i, j), aji = op.terms[r][axis](j, i);
    if (aij != 0.0) b += 0.5 * aij * c.op[r];
    if (aji != 0.0) b += 0.5 * aji * c.op[r].transpose();
  }
  return b;
}

/// Right-hand side, node-major: rhs(i * Q + p) = sum_s C(s, p) f_s[i].
inline Vec system_rhs(const SeparatedLoad& load, const AxisCoupling& c, std::size_t axis, Eigen::Index n) {
  const Eigen::Index q = c.load.cols();
  Vec rhs = Vec::Zero((n - 2) * q);
  for (std::size_t s = 0; s < load.terms.size(); ++s)
    for (Eigen::Index i = 1; i + 1 < n; ++i)
      for (Eigen::Index p = 0; p < q; ++p)
        rhs[(i - 1) * q + p] += c.load(static_cast<Eigen::Index>(s), p) * load.terms[s][axis][i];
  return rhs;
}

/// Minimum-norm solve of a symmetric positive semidefinite system.
inline Vec pseudo_solve(const Mat& a, const Vec& b) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(a);
  const Vec& lam = eig.eigenvalues();
  const double top = lam.cwiseAbs().maxCoeff();
  Vec coeff = eig.eigenvectors().transpose() * b;
  for (Eigen::Index k = 0; k < lam.size(); ++k) coeff[k] = lam[k] > 1e-12 * top ? coeff[k] / lam[k] : 0.0;
  return eig.eigenvectors() * coeff;
}

/// Solves the block-tridiagonal per-axis system (interior nodes, Q unknowns
/// per node) by block Cholesky; falls back to a dense pseudo-inverse when a
/// pivot block is singular (more modes than the data can separate).
inline Vec solve_block_system(const SeparatedOperator& op, const AxisCoupling& c, std::size_t axis, Eigen::Index n,
                              const Vec& rhs) {
  const Eigen::Index q = c.op[0].rows(), m = n - 2;
  if (m <= 0) return Vec::Zero(0);
  std::vector<Mat> lower(static_cast<std::size_t>(m));  // L_k = block(k, k-1)
  std::vector<Eigen::LLT<Mat>> piv(static_cast<std::size_t>(m));
  std::vector<Vec> y(static_cast<std::size_t>(m));
  bool ok = true;
  for (Eigen::Index k = 0; k < m && ok; ++k) {
    Mat d = system_block(op, c, axis, k + 1, k + 1);
    Vec bk = rhs.segment(k * q, q);
    if (k > 0) {
      lower[static_cast<std::size_t>(k)] = system_block(op, c, axis, k + 1, k);
      const Mat& l = lower[static_cast<std::size_t>(k)];
      const auto& prev = piv[static_cast<std::size_t>(k - 1)];
      d -= l * prev.solve(l.transpose());
      bk -= l * prev.solve(y[static_cast<std::size_t>(k - 1)]);
    }
    d = 0.5 * (d + d.transpose());
    auto& llt = piv[static_cast<std::size_t>(k)];
    llt.compute(d);
    if (llt.info() != Eigen::Success) {
      ok = false;
      break;
    }
    const Vec diagl = Mat(llt.matrixL()).diagonal();
    const double dmax = d.diagonal().cwiseAbs().maxCoeff();
    if (!(diagl.minCoeff() * diagl.minCoeff() > 1e-13 * dmax)) ok = false;
    y[static_cast<std::size_t>(k)] = bk;
  }
  if (ok) {
    Vec x(m * q);
    x.segment((m - 1) * q, q) = piv[static_cast<std::size_t>(m - 1)].solve(y[static_cast<std::size_t>(m - 1)]);
    for (Eigen::Index k = m - 2; k >= 0; --k) {
      const Mat& l = lower[static_cast<std::size_t>(k + 1)];
      x.segment(k * q, q) =
          piv[static_cast<std::size_t>(k)].solve(y[static_cast<std::size_t>(k)] - l.transpose() * x.segment((k + 1) * q, q));
    }
    if (x.allFinite()) return x;
  }
  if (m * q > 4000) fail(ErrorCode::singular_system, "rank-deficient per-axis system too large for the dense fallback");
  Mat dense = Mat::Zero(m * q, m * q);
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index j = std::max<Eigen::Index>(0, k - 1); j <= std::min(m - 1, k + 1); ++j)
      dense.block(k * q, j * q, q, q) = system_block(op, c, axis, k + 1, j + 1);
  dense = 0.5 * (dense + dense.transpose()).eval();
  return pseudo_solve(dense, rhs);
}

/// Energy gradient for the interior coefficients of one axis, column-major
/// (interior node fastest, then mode).
inline Vec axis_gradient(const SeparatedOperator& op, const SeparatedLoad& load, const AxisCoupling& c,
                         const std::vector<Mode>& modes, std::size_t axis) {
  const auto n = modes[0].factors[axis].size();
  const auto q = static_cast<Eigen::Index>(modes.size());
  Mat b(n, q);
  for (Eigen::Index p = 0; p < q; ++p) b.col(p) = modes[static_cast<std::size_t>(p)].factors[axis];
  Mat g = Mat::Zero(n, q);
  for (std::size_t r = 0; r < op.terms.size(); ++r) {
    Mat ab(n, q), atb(n, q);
    const TriDiag at = op.terms[r][axis].transpose();
    for (Eigen::Index p = 0; p < q; ++p) {
      ab.col(p) = op.terms[r][axis].apply(b.col(p));
      atb.col(p) = at.apply(b.col(p));
    }
    g += 0.5 * (ab * c.op[r].transpose() + atb * c.op[r]);
  }
  for (std::size_t s = 0; s < load.terms.size(); ++s)
    g -= load.terms[s][axis] * c.load.row(static_cast<Eigen::Index>(s));
  if (n <= 2) return Vec::Zero(0);
  const Mat inner = g.middleRows(1, n - 2);
  return Eigen::Map<const Vec>(inner.data(), inner.size());
}

}  // namespace detail

inline double separated_energy(const Discretization& disc, const std::vector<Mode>& modes) {
  SeparatedSolution s(disc.mesh);
  s.modes = modes;
  return energy(disc, s).total;
}

/// Per-axis operator and load Gram matrices of a mode set, all axes.
struct ModeGrams {
  std::vector<std::vector<Mat>> op;  // [axis][term]
  std::vector<Mat> load;             // [axis]
  std::vector<Mat> plain;            // [axis], beta_p^T beta_q

  ModeGrams(const Discretization& disc, const std::vector<Mode>& modes)
      : op(disc.dims()), load(disc.dims()), plain(disc.dims()) {
    for (std::size_t e = 0; e < disc.dims(); ++e) refresh(disc, modes, e);
  }
  void refresh(const Discretization& disc, const std::vector<Mode>& modes, std::size_t axis) {
    op[axis] = detail::operator_grams(disc.op, modes, axis);
    load[axis] = detail::load_grams(disc.load, modes, axis);
    const auto q = static_cast<Eigen::Index>(modes.size());
    Mat g(q, q);
    for (Eigen::Index a = 0; a < q; ++a)
      for (Eigen::Index b = 0; b <= a; ++b)
        g(a, b) = g(b, a) = modes[static_cast<std::size_t>(a)].factors[axis].dot(modes[static_cast<std::size_t>(b)].factors[axis]);
    plain[axis] = std::move(g);
  }
  detail::AxisCoupling coupling(std::size_t axis) const { return detail::coupling(op, load, axis); }

  /// T (Q x r) such that the frozen products Z T have orthonormal columns
  /// spanning the same space as Z, Z(:, q) = (x)_{e != axis} beta_{q,e}.
  Mat frozen_basis(std::size_t axis) const {
    Mat g = Mat::Ones(plain[0].rows(), plain[0].cols());
    for (std::size_t e = 0; e < plain.size(); ++e)
      if (e != axis) g = g.cwiseProduct(plain[e]);
    Eigen::SelfAdjointEigenSolver<Mat> eig(g);
    const Vec& lam = eig.eigenvalues();
    const double top = lam.size() ? lam.maxCoeff() : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = lam.size(); k-- > 0;)
      if (lam[k] > 1e-13 * top && top > 0) keep.push_back(k);
    Mat t(g.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
      t.col(static_cast<Eigen::Index>(k)) = eig.eigenvectors().col(keep[k]) / std::sqrt(lam[keep[k]]);
    return t;
  }
};

/// 2D only: rewrites Q modes as the SVD modes of their sum plus zero-product
/// modes (first factor 0, second random) filling up to Q. The field is
/// unchanged; ALS started from a rank-deficient mode set would otherwise never
/// regain the lost directions.
inline void rebase_modes_2d(std::vector<Mode>& modes, std::mt19937_64& rng) {
  const auto q = static_cast<Eigen::Index>(modes.size());
  if (q == 0 || modes[0].factors.size() != 2) return;
  const auto n1 = modes[0].factors[0].size(), n2 = modes[0].factors[1].size();
  Mat b(n1, q), g(n2, q);
  for (Eigen::Index p = 0; p < q; ++p) {
    b.col(p) = modes[static_cast<std::size_t>(p)].factors[0];
    g.col(p) = modes[static_cast<std::size_t>(p)].factors[1];
  }
  Eigen::HouseholderQR<Mat> qb(b), qg(g);
  const Eigen::Index kb = std::min(n1, q), kg = std::min(n2, q);
  const Mat rb = qb.matrixQR().topRows(kb).template triangularView<Eigen::Upper>();
  const Mat rg = qg.matrixQR().topRows(kg).template triangularView<Eigen::Upper>();
  const Mat obase = qb.householderQ() * Mat::Identity(n1, kb);
  const Mat gbase = qg.householderQ() * Mat::Identity(n2, kg);
  Eigen::JacobiSVD<Mat> svd(rb * rg.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec& sigma = svd.singularValues();
  std::vector<Mode> out;
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    if (!(sigma[k] > 1e-15 * sigma[0])) break;
    Mode m;
    m.factors.push_back(obase * svd.matrixU().col(k) * sigma[k]);
    m.factors.push_back(gbase * svd.matrixV().col(k));
    out.push_back(std::move(m));
  }
  while (out.size() < modes.size()) {
    Mode m;
    m.factors.push_back(Vec::Zero(n1));
    m.factors.push_back(random_unit_factor(rng, n2));
    out.push_back(std::move(m));
  }
  modes = std::move(out);
}

/// One block-minimization sweep over the axes; every mode's factor on an axis
/// is solved for jointly. Modes are renormalized afterwards.
inline void cd_sweep(const Discretization& disc, std::vector<Mode>& modes, std::mt19937_64& rng) {
  const auto q = static_cast<Eigen::Index>(modes.size());
  if (disc.dims() == 2 && modes.size() > 1) rebase_modes_2d(modes, rng);
  ModeGrams grams(disc, modes);
  for (std::size_t d = 0; d < disc.dims(); ++d) {
    const auto n = static_cast<Eigen::Index>(disc.mesh[d].size());
    // Solve in an orthonormal basis of the frozen span; the field is unchanged
    // by this change of mode basis and the reduced system stays well posed.
    const auto full = grams.coupling(d);
    const Mat t = grams.frozen_basis(d);
    const Eigen::Index r = t.cols();
    Mat coeff = Mat::Zero(n, q);
    if (r > 0) {
      detail::AxisCoupling c;
      for (const auto& cr : full.op) c.op.push_back(t.transpose() * cr * t);
      c.load = full.load * t;
      const Vec x = detail::solve_block_system(disc.op, c, d, n, detail::system_rhs(disc.load, c, d, n));
      const Mat reduced = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          x.data(), n - 2, r);
      coeff.middleRows(1, n - 2) = reduced * t.transpose();
    }
    for (Eigen::Index p = 0; p < q; ++p) modes[static_cast<std::size_t>(p)].factors[d] = coeff.col(p);
    grams.refresh(disc, modes, d);
  }
  for (auto& m : modes) normalize_mode(m);
}

/// Energy gradient with respect to every interior coefficient, ordered mode by
/// mode, axis by axis.
inline Vec cd_gradient(const Discretization& disc, const std::vector<Mode>& modes) {
  const ModeGrams grams(disc, modes);
  std::vector<Vec> per_axis;
  Eigen::Index total = 0;
  for (std::size_t d = 0; d < disc.dims(); ++d) {
    per_axis.push_back(detail::axis_gradient(disc.op, disc.load, grams.coupling(d), modes, d));
    total += per_axis.back().size();
  }
  Vec g(total);
  Eigen::Index k = 0;
  for (std::size_t p = 0; p < modes.size(); ++p)
    for (std::size_t d = 0; d < disc.dims(); ++d) {
      const Eigen::Index m = static_cast<Eigen::Index>(disc.mesh[d].size()) - 2;
      for (Eigen::Index i = 0; i < m; ++i) g[k++] = per_axis[d][static_cast<Eigen::Index>(p) * m + i];
    }
  return g;
}

/// Initial modes for CD: random unit factors, or a warm start padded with
/// zero-product modes.
inline std::vector<Mode> initial_modes(const TensorMesh& mesh, std::size_t q, std::uint64_t seed,
                                       const SeparatedSolution* initial) {
  std::mt19937_64 rng(seed);
  std::vector<Mode> modes;
  if (initial) {
    if (!(initial->mesh() == mesh)) fail(ErrorCode::incompatible_mesh, "initial guess lives on another mesh");
    modes = initial->modes;
    if (modes.size() > q) modes.resize(q);
  }
  while (modes.size() < q) {
    Mode m = random_mode(rng, mesh);
    if (initial) m.factors[0].setZero();
    modes.push_back(std::move(m));
  }
  return modes;
}

/// True when Q modes can represent every field of the 2D tensor space.
inline bool spans_full_space(const TensorMesh& mesh, std::size_t q) {
  return mesh.dims() == 2 && q >= std::min(mesh[0].num_interior(), mesh[1].num_interior());
}

/// Exact coefficient minimizer when spans_full_space holds: the FEM solution
/// split into SVD modes, padded with zero-product modes up to Q.
inline std::vector<Mode> full_rank_modes(const NodalField& fem, std::size_t q, std::mt19937_64& rng) {
  const TensorMesh& mesh = fem.mesh;
  auto modes = svd_modes(fem).modes;
  if (modes.size() > q) fail(ErrorCode::invalid_range, "field rank exceeds the mode count");
  while (modes.size() < q) {
    Mode m;
    m.factors.push_back(Vec::Zero(static_cast<Eigen::Index>(mesh[0].size())));
    m.factors.push_back(random_unit_factor(rng, static_cast<Eigen::Index>(mesh[1].size())));
    modes.push_back(std::move(m));
  }
  for (auto& m : modes) normalize_mode(m);
  return modes;
}

struct CdResult {
  SeparatedSolution solution;
  double energy = 0;
  bool converged = false;
  std::size_t iterations = 0;
  double gradient_norm = 0;
  std::vector<double> energy_history;  // after every sweep, starting with the initial guess
};

/// Minimizes the energy over all Q modes jointly by repeated block sweeps.
inline CdResult solve_cd(const Discretization& disc, std::size_t q, const OptimizerConfig& opt,
                         const SeparatedSolution* initial = nullptr) {
  if (q < 1) fail(ErrorCode::invalid_range, "the number of modes must be >= 1");
  opt.validate();
  std::vector<Mode> modes = initial_modes(disc.mesh, q, opt.seed, initial);
  std::mt19937_64 rng(opt.seed + 1);
  CdResult res;
  res.energy = separated_energy(disc, modes);
  res.energy_history.push_back(res.energy);
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    cd_sweep(disc, modes, rng);
    res.iterations = it + 1;
    res.energy = separated_energy(disc, modes);
    res.energy_history.push_back(res.energy);
    res.gradient_norm = cd_gradient(disc, modes).norm();
    if (res.gradient_norm <= opt.gradient_tolerance) {
      res.converged = true;
      break;
    }
  }
  res.solution = SeparatedSolution(disc.mesh);
  for (auto& m : modes) res.solution.add(std::move(m));
  return res;
}

inline CdResult solve_cd(const TensorMesh& mesh, const SourceTerm& source, std::size_t q, const OptimizerConfig& opt,
                         const QuadRule& rule = gauss_legendre(kDefaultGaussOrder)) {
  return solve_cd(discretize(mesh, source, rule), q, opt);
}

struct AlternatingOptions {
  std::size_t max_sweeps = 200;
  double tolerance = 1e-10;  // relative change of the normalized mode per sweep
};

struct AlternatingResult {
  Mode mode;
  std::size_t sweeps = 0;
  bool converged = false;
  bool reinitialized = false;
  double energy_increment = 0;              // Pi(prev + mode) - Pi(prev)
  std::vector<double> half_sweep_increments;  // after every single-axis solve
};

/// Computes one enrichment mode on top of `previous` by cyclic single-axis
/// minimization (x -> y [-> z]) until the normalized mode stagnates.
inline AlternatingResult alternating_direction(const Discretization& disc, const std::vector<Mode>& previous, Mode init,
                                               std::mt19937_64& rng, const AlternatingOptions& opts = {}) {
  const std::size_t dims = disc.dims();
  const std::size_t nterms = disc.op.terms.size();
  // A_{r,e} beta_{p,e} for previous modes, cached.
  std::vector<std::vector<std::vector<Vec>>> prev_applied(previous.size());
  for (std::size_t p = 0; p < previous.size(); ++p) {
    prev_applied[p].resize(nterms);
    for (std::size_t r = 0; r < nterms; ++r)
      for (std::size_t e = 0; e < dims; ++e) prev_applied[p][r].push_back(disc.op.terms[r][e].apply(previous[p].factors[e]));
  }

  auto increment = [&](const Mode& m) {
    double self = 0, cross = 0, lin = 0;
    for (std::size_t r = 0; r < nterms; ++r) {
      double s = 1;
      for (std::size_t e = 0; e < dims; ++e) s *= disc.op.terms[r][e].form(m.factors[e], m.factors[e]);
      self += s;
      for (std::size_t p = 0; p < previous.size(); ++p) {
        double c = 1;
        for (std::size_t e = 0; e < dims; ++e) c *= m.factors[e].dot(prev_applied[p][r][e]);
        cross += c;
      }
    }
    for (const auto& t : disc.load.terms) {
      double l = 1;
      for (std::size_t e = 0; e < dims; ++e) l *= t[e].dot(m.factors[e]);
      lin += l;
    }
    return 0.5 * self + cross - lin;
  };

  AlternatingResult res;
  Mode mode = std::move(init);
  Mode last = mode;
  normalize_mode(last);
  for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    for (std::size_t d = 0; d < dims; ++d) {
      for (std::size_t e = 0; e < dims; ++e) {
        if (e == d || mode.factors[e].norm() > 0) continue;
        if (res.reinitialized) fail(ErrorCode::singular_direction, "frozen factor vanished twice");
        mode.factors[e] = random_unit_factor(rng, mode.factors[e].size());
        res.reinitialized = true;
      }
      TriDiag lhs(mode.factors[d].size());
      for (std::size_t r = 0; r < nterms; ++r) {
        double c = 1;
        for (std::size_t e = 0; e < dims; ++e)
          if (e != d) c *= disc.op.terms[r][e].form(mode.factors[e], mode.factors[e]);
        lhs += c * disc.op.terms[r][d];
      }
      lhs = lhs.symmetric_part();
      Vec rhs = Vec::Zero(mode.factors[d].size());
      for (const auto& t : disc.load.terms) {
        double c = 1;
        for (std::size_t e = 0; e < dims; ++e)
          if (e != d) c *= t[e].dot(mode.factors[e]);
        rhs += c * t[d];
      }
      for (std::size_t p = 0; p < previous.size(); ++p)
        for (std::size_t r = 0; r < nterms; ++r) {
          double c = 1;
          for (std::size_t e = 0; e < dims; ++e)
            if (e != d) c *= mode.factors[e].dot(prev_applied[p][r][e]);
          rhs -= c * prev_applied[p][r][d];
        }
      try {
        mode.factors[d] = solve_interior(lhs, rhs);
      } catch (const Error&) {
        fail(ErrorCode::singular_direction, "alternating-direction system is singular");
      }
      res.half_sweep_increments.push_back(increment(mode));
    }
    Mode current = mode;
    normalize_mode(current);
    res.sweeps = sweep + 1;
    double change = 0;
    for (std::size_t e = 0; e < dims; ++e) {
      const double nrm = current.factors[e].norm();
      change = std::max(change, nrm > 0 ? (current.factors[e] - last.factors[e]).norm() / nrm : 0.0);
    }
    last = std::move(current);
    if (change <= opts.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.mode = std::move(last);
  res.energy_increment = increment(res.mode);
  return res;
}

struct PgdOptions {
  AlternatingOptions alternating;
  double stagnation = 1e-12;  // relative energy decrease below which enrichment stops
  std::uint64_t seed = 42;
};

struct PgdResult {
  SeparatedSolution solution;
  std::vector<double> energies;  // energy after each accepted mode
  std::vector<std::size_t> sweeps;
  bool stagnated = false;        // stopped before reaching the requested mode count
  bool converged = true;         // every enrichment met the sweep tolerance
};

inline PgdResult solve_pgd(const Discretization& disc, std::size_t q, const PgdOptions& opts = {}) {
  if (q < 1) fail(ErrorCode::invalid_range, "the number of modes must be >= 1");
  std::mt19937_64 rng(opts.seed);
  PgdResult res;
  res.solution = SeparatedSolution(disc.mesh);
  double current = 0;
  for (std::size_t m = 0; m < q; ++m) {
    Mode init = random_mode(rng, disc.mesh);
    auto step = alternating_direction(disc, res.solution.modes, std::move(init), rng, opts.alternating);
    const double next = current + step.energy_increment;
    const double decrease = current - next;
    if (!(decrease > opts.stagnation * std::abs(next))) {
      res.stagnated = true;
      break;
    }
    res.converged = res.converged && step.converged;
    res.solution.add(std::move(step.mode));
    res.sweeps.push_back(step.sweeps);
    res.energies.push_back(next);
    current = next;
  }
  return res;
}

inline PgdResult solve_pgd(const TensorMesh& mesh, const SourceTerm& source, std::size_t q, const PgdOptions& opts = {},
                           const QuadRule& rule = gauss_legendre(kDefaultGaussOrder)) {
  return solve_pgd(discretize(mesh, source, rule), q, opts);
}

}  // namespace separapde
