#pragma once

// r-adaptive solvers. Interior node positions of every axis are optimized
// together with the nodal values (HiDeNN, per-axis node motion) or with the
// mode coefficients (HiDeNN-PGD). Positions stay sorted with a small margin.

#include <cmath>
#include <limits>
#include <vector>

#include "separapde/adam.hpp"
#include "separapde/fem.hpp"
#include "separapde/pgd.hpp"

namespace separapde {

/// Interior positions of all axes, axis by axis.
inline Vec pack_positions(const TensorMesh& mesh) {
  Eigen::Index total = 0;
  for (const auto& g : mesh.axes) total += static_cast<Eigen::Index>(g.num_interior());
  Vec p(total);
  Eigen::Index k = 0;
  for (const auto& g : mesh.axes)
    for (std::size_t i = 1; i + 1 < g.size(); ++i) p[k++] = g[i];
  return p;
}

inline TensorMesh unpack_positions(const TensorMesh& base, const Vec& params, Eigen::Index offset) {
  std::vector<Grid1D> axes;
  for (const auto& g : base.axes) {
    const auto m = static_cast<Eigen::Index>(g.num_interior());
    axes.push_back(g.with_interior(std::span<const double>(params.data() + offset, static_cast<std::size_t>(m))));
    offset += m;
  }
  return TensorMesh(std::move(axes));
}

inline void project_positions(const TensorMesh& base, Vec& params, Eigen::Index offset) {
  for (const auto& g : base.axes) {
    const auto m = g.num_interior();
    project_monotone(std::span<double>(params.data() + offset, m), g.front(), g.back(), g.min_spacing());
    offset += static_cast<Eigen::Index>(m);
  }
}

namespace detail {

/// W(i, j) = sum over the other axes of u[.., i, ..] v[.., j, ..], |i - j| <= 1.
inline TriDiag slice_products(const Vec& u, const Vec& v, const std::vector<std::size_t>& shape, std::size_t axis) {
  const auto l = layout(shape, axis);
  TriDiag w(static_cast<Eigen::Index>(l.len));
  for (std::size_t o = 0; o < l.outer; ++o) {
    const std::size_t base = o * l.len * l.inner;
    for (std::size_t i = 0; i < l.len; ++i) {
      const double* ui = u.data() + base + i * l.inner;
      const double* vi = v.data() + base + i * l.inner;
      double d = 0, up = 0, lo = 0;
      for (std::size_t k = 0; k < l.inner; ++k) d += ui[k] * vi[k];
      w.diag[static_cast<Eigen::Index>(i)] += d;
      if (i + 1 < l.len) {
        const double* un = ui + l.inner;
        const double* vn = vi + l.inner;
        for (std::size_t k = 0; k < l.inner; ++k) {
          up += ui[k] * vn[k];
          lo += un[k] * vi[k];
        }
        w.super[static_cast<Eigen::Index>(i)] += up;
        w.sub[static_cast<Eigen::Index>(i)] += lo;
      }
    }
  }
  return w;
}

/// s[i] = sum over the other axes of x[.., i, ..].
inline Vec slice_sums(const Vec& x, const std::vector<std::size_t>& shape, std::size_t axis) {
  const auto l = layout(shape, axis);
  Vec s = Vec::Zero(static_cast<Eigen::Index>(l.len));
  for (std::size_t o = 0; o < l.outer; ++o)
    for (std::size_t i = 0; i < l.len; ++i) {
      const double* xi = x.data() + (o * l.len + i) * l.inner;
      for (std::size_t k = 0; k < l.inner; ++k) s[static_cast<Eigen::Index>(i)] += xi[k];
    }
  return s;
}

/// dPi/dx_I on the interior nodes of one axis of a Poisson discretization.
/// w_op[r] contracts term r (stiffness on axis r) over the other axes,
/// w_load[s] contracts load term s likewise.
inline Vec axis_position_gradient(const Grid1D& g, std::size_t axis, const std::vector<TriDiag>& w_op,
                                  const std::vector<Vec>& w_load, const SourceTerm& source, const QuadRule& rule) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Vec dx = Vec::Zero(n);
  for (Eigen::Index e = 0; e + 1 < n; ++e) {
    const double h = g.element_size(static_cast<std::size_t>(e));
    double dh = 0;
    for (std::size_t r = 0; r < w_op.size(); ++r) {
      const TriDiag& w = w_op[r];
      const double w00 = w.diag[e], w11 = w.diag[e + 1], w01 = w.super[e], w10 = w.sub[e];
      dh += r == axis ? -(w00 - w01 - w10 + w11) / (h * h) : (2 * w00 + w01 + w10 + 2 * w11) / 6.0;
    }
    dx[e + 1] += 0.5 * dh;
    dx[e] -= 0.5 * dh;
  }
  for (std::size_t s = 0; s < source.terms.size(); ++s) {
    const auto sens = load_position_sensitivity(g, source.terms[s].factors[axis], rule);
    const double scale = axis == 0 ? source.terms[s].scale : 1.0;
    for (Eigen::Index e = 0; e + 1 < n; ++e) {
      const auto& se = sens[static_cast<std::size_t>(e)];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) dx[e + b] -= scale * se[a * 2 + b] * w_load[s][e + a];
    }
  }
  return dx.segment(1, n - 2);
}

}  // namespace detail

/// dPi/d(positions) for a nodal field, nodal values held fixed.
inline Vec field_position_gradient(const Discretization& disc, const NodalField& u, const SourceTerm& source,
                                   const QuadRule& rule) {
  const auto shape = disc.mesh.shape();
  std::vector<Vec> parts;
  Eigen::Index total = 0;
  for (std::size_t d = 0; d < disc.dims(); ++d) {
    std::vector<TriDiag> w_op;
    for (const auto& term : disc.op.terms) {
      Vec v = u.values;
      for (std::size_t e = 0; e < disc.dims(); ++e)
        if (e != d) v = apply_axis(term[e], v, shape, e);
      w_op.push_back(detail::slice_products(u.values, v, shape, d));
    }
    std::vector<Vec> w_load;
    for (const auto& term : disc.load.terms) {
      std::vector<Vec> f = term;
      f[d] = Vec::Ones(static_cast<Eigen::Index>(shape[d]));
      w_load.push_back(detail::slice_sums(u.values.cwiseProduct(outer_product(f)), shape, d));
    }
    parts.push_back(detail::axis_position_gradient(disc.mesh[d], d, w_op, w_load, source, rule));
    total += parts.back().size();
  }
  Vec g(total);
  Eigen::Index k = 0;
  for (const auto& p : parts) {
    g.segment(k, p.size()) = p;
    k += p.size();
  }
  return g;
}

/// dPi/d(positions) for separated modes, coefficients held fixed.
inline Vec separated_position_gradient(const Discretization& disc, const std::vector<Mode>& modes,
                                       const SourceTerm& source, const QuadRule& rule) {
  const ModeGrams grams(disc, modes);
  const auto q = static_cast<Eigen::Index>(modes.size());
  std::vector<Vec> parts;
  Eigen::Index total = 0;
  for (std::size_t d = 0; d < disc.dims(); ++d) {
    const auto c = grams.coupling(d);
    const auto n = static_cast<Eigen::Index>(disc.mesh[d].size());
    Mat b(n, q);
    for (Eigen::Index p = 0; p < q; ++p) b.col(p) = modes[static_cast<std::size_t>(p)].factors[d];
    std::vector<TriDiag> w_op;
    for (const auto& cr : c.op) {
      const Mat m = b * cr;
      TriDiag w(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        w.diag[i] = m.row(i).dot(b.row(i));
        if (i + 1 < n) {
          w.super[i] = m.row(i).dot(b.row(i + 1));
          w.sub[i] = m.row(i + 1).dot(b.row(i));
        }
      }
      w_op.push_back(std::move(w));
    }
    std::vector<Vec> w_load;
    for (Eigen::Index s = 0; s < c.load.rows(); ++s) w_load.push_back(b * c.load.row(s).transpose());
    parts.push_back(detail::axis_position_gradient(disc.mesh[d], d, w_op, w_load, source, rule));
    total += parts.back().size();
  }
  Vec g(total);
  Eigen::Index k = 0;
  for (const auto& p : parts) {
    g.segment(k, p.size()) = p;
    k += p.size();
  }
  return g;
}

/// Energy of a nodal field as a function of (interior values, interior positions).
class HiDeNNObjective {
 public:
  HiDeNNObjective(TensorMesh base, SourceTerm source, QuadRule rule = gauss_legendre(kDefaultGaussOrder))
      : base_(std::move(base)), source_(std::move(source)), rule_(std::move(rule)) {}

  Eigen::Index num_values() const { return static_cast<Eigen::Index>(base_.num_interior()); }
  Eigen::Index size() const { return num_values() + pack_positions(base_).size(); }
  const TensorMesh& base() const noexcept { return base_; }

  Vec pack(const NodalField& u) const {
    Vec p(size());
    p.head(num_values()) = gather_interior(u.values, u.mesh.shape());
    p.tail(size() - num_values()) = pack_positions(u.mesh);
    return p;
  }
  NodalField unpack(const Vec& p) const {
    TensorMesh mesh = unpack_positions(base_, p, num_values());
    const auto shape = mesh.shape();
    return NodalField(std::move(mesh), scatter_interior(p.head(num_values()), shape));
  }
  void project(Vec& p) const { project_positions(base_, p, num_values()); }

  double value(const Vec& p) const {
    const NodalField u = unpack(p);
    return energy(discretize(u.mesh, source_, rule_), u).total;
  }

  double value_and_gradient(const Vec& p, Vec& grad) const {
    const NodalField u = unpack(p);
    const auto disc = discretize(u.mesh, source_, rule_);
    const auto shape = u.mesh.shape();
    const Vec residual = apply_operator(disc.op, u.values, shape) - assemble_load(disc.load, shape);
    grad.resize(size());
    grad.head(num_values()) = gather_interior(residual, shape);
    grad.tail(size() - num_values()) = field_position_gradient(disc, u, source_, rule_);
    return energy(disc, u).total;
  }

 private:
  TensorMesh base_;
  SourceTerm source_;
  QuadRule rule_;
};

/// Energy of Q separated modes as a function of (mode coefficients, positions).
/// Coefficients are ordered mode by mode, axis by axis, interior entries only.
class HiDeNNPGDObjective {
 public:
  HiDeNNPGDObjective(TensorMesh base, std::size_t q, SourceTerm source,
                     QuadRule rule = gauss_legendre(kDefaultGaussOrder))
      : base_(std::move(base)), q_(q), source_(std::move(source)), rule_(std::move(rule)) {}

  Eigen::Index num_coefficients() const {
    Eigen::Index line = 0;
    for (const auto& g : base_.axes) line += static_cast<Eigen::Index>(g.num_interior());
    return line * static_cast<Eigen::Index>(q_);
  }
  Eigen::Index size() const { return num_coefficients() + pack_positions(base_).size(); }
  std::size_t num_modes() const noexcept { return q_; }
  const TensorMesh& base() const noexcept { return base_; }

  Vec pack(const SeparatedSolution& s) const {
    if (s.num_modes() != q_) fail(ErrorCode::incompatible_mesh, "mode count mismatch");
    Vec p(size());
    Eigen::Index k = 0;
    for (const auto& m : s.modes)
      for (const auto& f : m.factors) {
        p.segment(k, f.size() - 2) = f.segment(1, f.size() - 2);
        k += f.size() - 2;
      }
    p.tail(size() - num_coefficients()) = pack_positions(s.mesh());
    return p;
  }
  SeparatedSolution unpack(const Vec& p) const {
    SeparatedSolution s(unpack_positions(base_, p, num_coefficients()));
    Eigen::Index k = 0;
    for (std::size_t q = 0; q < q_; ++q) {
      Mode m;
      for (const auto& g : base_.axes) {
        const auto n = static_cast<Eigen::Index>(g.size());
        Vec f = Vec::Zero(n);
        f.segment(1, n - 2) = p.segment(k, n - 2);
        k += n - 2;
        m.factors.push_back(std::move(f));
      }
      s.add(std::move(m));
    }
    return s;
  }
  void project(Vec& p) const { project_positions(base_, p, num_coefficients()); }

  double value(const Vec& p) const {
    const auto s = unpack(p);
    return energy(discretize(s.mesh(), source_, rule_), s).total;
  }

  double value_and_gradient(const Vec& p, Vec& grad) const {
    const auto s = unpack(p);
    const auto disc = discretize(s.mesh(), source_, rule_);
    grad.resize(size());
    grad.head(num_coefficients()) = cd_gradient(disc, s.modes);
    grad.tail(size() - num_coefficients()) = separated_position_gradient(disc, s.modes, source_, rule_);
    return energy(disc, s).total;
  }

 private:
  TensorMesh base_;
  std::size_t q_;
  SourceTerm source_;
  QuadRule rule_;
};

struct AdaptiveReport {
  double energy = 0;  // best energy found
  bool converged = false;
  std::size_t iterations = 0;
  double gradient_norm = 0;          // at the last evaluated iterate
  std::vector<double> best_history;  // best energy after every iteration
};

struct HiDeNNResult {
  NodalField solution;  // on the adapted mesh
  AdaptiveReport report;
};

struct HiDeNNPGDResult {
  SeparatedSolution solution;  // grids are the adapted per-axis grids
  AdaptiveReport report;
};

namespace detail {

inline Vec position_rates(Eigen::Index n, const OptimizerConfig& opt) {
  return Vec::Constant(n, opt.position_learning_rate);
}

inline Vec split_rates(Eigen::Index coeffs, Eigen::Index total, const OptimizerConfig& opt) {
  Vec r(total);
  r.head(coeffs).setConstant(opt.learning_rate);
  r.tail(total - coeffs).setConstant(opt.position_learning_rate);
  return r;
}

}  // namespace detail

/// Minimizes the energy over nodal values and per-axis interior positions,
/// starting from the FEM solution on `mesh`. Returns the best iterate.
inline HiDeNNResult solve_hidenn(const TensorMesh& mesh, const SourceTerm& source, const OptimizerConfig& opt,
                                 const QuadRule& rule = gauss_legendre(kDefaultGaussOrder)) {
  opt.validate();
  HiDeNNObjective obj(mesh, source, rule);
  HiDeNNResult res;
  res.report.energy = std::numeric_limits<double>::infinity();
  auto accept = [&](const NodalField& u, double e) {
    if (e < res.report.energy) {
      res.report.energy = e;
      res.solution = u;
    }
    res.report.best_history.push_back(res.report.energy);
  };

  if (opt.coefficient_update == CoefficientUpdate::block) {
    Vec pos = pack_positions(mesh);
    Adam adam(pos.size(), opt);
    const Vec rates = detail::position_rates(pos.size(), opt);
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
      const TensorMesh current = unpack_positions(mesh, pos, 0);
      const auto disc = discretize(current, source, rule);
      const NodalField u = solve_fem(disc);
      accept(u, energy(disc, u).total);
      res.report.iterations = it + 1;
      const Vec g = field_position_gradient(disc, u, source, rule);
      res.report.gradient_norm = g.norm();
      if (res.report.gradient_norm <= opt.gradient_tolerance) {
        res.report.converged = true;
        break;
      }
      if (it + 1 == opt.max_iterations) break;
      adam.step(pos, g, rates);
      project_positions(mesh, pos, 0);
    }
    return res;
  }

  Vec p = obj.pack(solve_fem(mesh, source, rule));
  Adam adam(p.size(), opt);
  const Vec rates = detail::split_rates(obj.num_values(), obj.size(), opt);
  Vec g;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    const double e = obj.value_and_gradient(p, g);
    accept(obj.unpack(p), e);
    res.report.iterations = it + 1;
    res.report.gradient_norm = g.norm();
    if (res.report.gradient_norm <= opt.gradient_tolerance) {
      res.report.converged = true;
      break;
    }
    if (it + 1 == opt.max_iterations) break;
    adam.step(p, g, rates);
    obj.project(p);
  }
  return res;
}

/// Minimizes the energy over Q modes and per-axis interior positions. Starts
/// from `initial` (same mesh and Q) or from the fixed-mesh CD solution.
inline HiDeNNPGDResult solve_hidenn_pgd(const TensorMesh& mesh, const SourceTerm& source, std::size_t q,
                                        const OptimizerConfig& opt,
                                        const QuadRule& rule = gauss_legendre(kDefaultGaussOrder),
                                        const SeparatedSolution* initial = nullptr) {
  if (q < 1) fail(ErrorCode::invalid_range, "the number of modes must be >= 1");
  opt.validate();
  SeparatedSolution start;
  if (initial) {
    if (!(initial->mesh() == mesh) || initial->num_modes() != q)
      fail(ErrorCode::incompatible_mesh, "initial guess must live on the initial mesh with Q modes");
    start = *initial;
  } else {
    start = solve_cd(discretize(mesh, source, rule), q, opt).solution;
  }

  HiDeNNPGDObjective obj(mesh, q, source, rule);
  HiDeNNPGDResult res;
  res.report.energy = std::numeric_limits<double>::infinity();
  auto accept = [&](SeparatedSolution s, double e) {
    if (e < res.report.energy) {
      res.report.energy = e;
      res.solution = std::move(s);
    }
    res.report.best_history.push_back(res.report.energy);
  };
  accept(start, energy(discretize(mesh, source, rule), start).total);

  if (opt.coefficient_update == CoefficientUpdate::block) {
    Vec pos = pack_positions(mesh);
    std::vector<Mode> modes = start.modes;
    std::mt19937_64 rng(opt.seed + 1);
    const bool full_rank = spans_full_space(mesh, q);
    Adam adam(pos.size(), opt);
    const Vec rates = detail::position_rates(pos.size(), opt);
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
      const TensorMesh current = unpack_positions(mesh, pos, 0);
      const auto disc = discretize(current, source, rule);
      Vec g;
      if (full_rank) {
        // The mode set spans the whole space: the coefficient minimizer is
        // the FEM field, which also carries the energy and position gradient.
        const NodalField u = solve_fem(disc);
        modes = full_rank_modes(u, q, rng);
        SeparatedSolution s(current);
        s.modes = modes;
        accept(s, energy(disc, u).total);
        g = field_position_gradient(disc, u, source, rule);
        res.report.gradient_norm = g.norm();
      } else {
        cd_sweep(disc, modes, rng);
        SeparatedSolution s(current);
        s.modes = modes;
        accept(s, energy(disc, s).total);
        g = separated_position_gradient(disc, modes, source, rule);
        res.report.gradient_norm = std::sqrt(g.squaredNorm() + cd_gradient(disc, modes).squaredNorm());
      }
      res.report.iterations = it + 1;
      if (res.report.gradient_norm <= opt.gradient_tolerance) {
        res.report.converged = true;
        break;
      }
      if (it + 1 == opt.max_iterations) break;
      adam.step(pos, g, rates);
      project_positions(mesh, pos, 0);
    }
    return res;
  }

  Vec p = obj.pack(start);
  Adam adam(p.size(), opt);
  const Vec rates = detail::split_rates(obj.num_coefficients(), obj.size(), opt);
  Vec g;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    if (it > 0) {
      const double e = obj.value_and_gradient(p, g);
      accept(obj.unpack(p), e);
    } else {
      obj.value_and_gradient(p, g);
    }
    res.report.iterations = it + 1;
    res.report.gradient_norm = g.norm();
    if (res.report.gradient_norm <= opt.gradient_tolerance) {
      res.report.converged = true;
      break;
    }
    if (it + 1 == opt.max_iterations) break;
    adam.step(p, g, rates);
    obj.project(p);
  }
  return res;
}

}  // namespace separapde
