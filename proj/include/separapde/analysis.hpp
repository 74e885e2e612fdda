#pragma once

// Experiment harness: named benchmark problems, error tables over
// (method, mesh, Q) cells, convergence slopes, the FEM/mode-reduction error
// split and mode-count guidance.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "separapde/adaptive.hpp"
#include "separapde/fem.hpp"
#include "separapde/mapping.hpp"
#include "separapde/pgd.hpp"
#include "separapde/serialize.hpp"

namespace separapde {

/// A benchmark: load, and either a closed-form solution or a fine FEM
/// reference. `mapped` problems live on the quarter ring, or on `domain`
/// when one is given (then errors are not available).
struct Problem {
  std::string id;
  std::string key;  // identifies the load for reference caching
  std::size_t dims = 2;
  SourceTerm source;
  std::optional<AnalyticSolution> exact;
  bool mapped = false;
  std::shared_ptr<const MappedDomain> domain;

  bool needs_reference() const { return !exact && !mapped; }
};

/// u = prod_d sin(pi x_d) on the unit square/cube, b = d pi^2 u.
inline Problem sinsin_problem(std::size_t dims = 2) {
  if (dims < 2 || dims > 3) fail(ErrorCode::invalid_range, "problems have 2 or 3 axes");
  const double pi = std::numbers::pi;
  Problem p;
  p.id = "sinsin";
  p.key = "sinsin/" + std::to_string(dims);
  p.dims = dims;
  std::vector<SourceFactor> f;
  for (std::size_t d = 0; d < dims; ++d)
    f.push_back(SourceFactor::smooth([pi](double x) { return std::sin(pi * x); },
                                     [pi](double x) { return pi * std::cos(pi * x); }));
  p.source = SourceTerm::separated(static_cast<double>(dims) * pi * pi, std::move(f));
  AnalyticSolution u;
  u.value = [dims, pi](std::span<const double> x) {
    double v = 1;
    for (std::size_t d = 0; d < dims; ++d) v *= std::sin(pi * x[d]);
    return v;
  };
  u.gradient = [dims, pi](std::span<const double> x) {
    std::array<double, 3> g{};
    for (std::size_t d = 0; d < dims; ++d) {
      double v = pi * std::cos(pi * x[d]);
      for (std::size_t e = 0; e < dims; ++e)
        if (e != d) v *= std::sin(pi * x[e]);
      g[d] = v;
    }
    return g;
  };
  p.exact = std::move(u);
  return p;
}

/// Unit point load at the centre of the unit square/cube.
inline Problem pointload_problem(std::size_t dims = 2) {
  if (dims < 2 || dims > 3) fail(ErrorCode::invalid_range, "problems have 2 or 3 axes");
  Problem p;
  p.id = "pointload";
  p.key = "pointload/" + std::to_string(dims);
  p.dims = dims;
  const std::vector<double> at(dims, 0.5);
  p.source = SourceTerm::point_load(1.0, at);
  return p;
}

inline Problem quarterring_problem() {
  Problem p;
  p.id = "quarterring";
  p.key = p.id;
  p.dims = 2;
  const QuarterRingProblem q;
  p.source = q.source();
  p.exact = q.solution();
  p.mapped = true;
  return p;
}

inline Problem make_problem(std::string_view id, std::size_t dims = 2) {
  if (id == "sinsin") return sinsin_problem(dims);
  if (id == "pointload") return pointload_problem(dims);
  if (id == "quarterring") {
    if (dims != 2) fail(ErrorCode::invalid_range, "quarterring is a 2D problem");
    return quarterring_problem();
  }
  fail(ErrorCode::parse_error, "unknown problem '" + std::string(id) + "'");
}

/// Default per-axis node count of the FEM reference.
inline std::size_t default_reference_nodes(std::size_t dims) { return dims == 3 ? 161 : 641; }

/// "41x41" or "9x9x9" -> per-axis node counts.
inline std::vector<std::size_t> parse_mesh(std::string_view s) {
  std::vector<std::size_t> n;
  std::string tok;
  auto flush = [&] {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      fail(ErrorCode::parse_error, "bad mesh '" + std::string(s) + "', expected n1xn2[xn3]");
    n.push_back(static_cast<std::size_t>(std::stoull(tok)));
    tok.clear();
  };
  for (char c : s) {
    if (c == 'x' || c == 'X')
      flush();
    else
      tok += c;
  }
  flush();
  if (n.size() < 2 || n.size() > 3) fail(ErrorCode::parse_error, "meshes have 2 or 3 axes");
  for (auto k : n)
    if (k < 3) fail(ErrorCode::invalid_range, "every axis needs at least 3 nodes");
  return n;
}

inline std::string mesh_label(const std::vector<std::size_t>& n) {
  std::string s;
  for (std::size_t d = 0; d < n.size(); ++d) s += (d ? "x" : "") + std::to_string(n[d]);
  return s;
}

inline TensorMesh unit_mesh(const std::vector<std::size_t>& n) {
  return n.size() == 2 ? TensorMesh::unit_square(n[0], n[1]) : TensorMesh::unit_cube(n[0], n[1], n[2]);
}

/// FEM reference on a uniform mesh with `nodes` per axis. Cached per process.
inline std::shared_ptr<const NodalField> reference_field(const Problem& p, std::size_t nodes) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<const NodalField>> cache;
  const std::string key = p.key + "/" + std::to_string(nodes);
  std::lock_guard lock(mu);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto u = std::make_shared<const NodalField>(solve_fem(unit_mesh(std::vector<std::size_t>(p.dims, nodes)), p.source));
  cache.emplace(key, u);
  return u;
}

/// What errors are measured against.
struct Reference {
  std::optional<AnalyticSolution> exact;
  std::shared_ptr<const NodalField> field;

  bool available() const { return exact || field; }

  EnergyNormPair norms(const NodalField& u) const {
    if (exact) return energy_norms(u, *exact);
    if (!field) fail(ErrorCode::invalid_range, "reference not set");
    return energy_norms(u, *field);
  }
  /// NaN when there is nothing to compare against.
  double relative_error(const NodalField& u) const {
    return available() ? norms(u).relative() : std::numeric_limits<double>::quiet_NaN();
  }
};

inline Reference make_reference(const Problem& p, std::size_t nodes = 0) {
  Reference r;
  if (p.exact)
    r.exact = p.exact;
  else if (p.needs_reference())
    r.field = reference_field(p, nodes ? nodes : default_reference_nodes(p.dims));
  return r;
}

inline bool uses_modes(Method m) {
  return m == Method::cd || m == Method::pgd || m == Method::hidenn_pgd || m == Method::pgd_mapped;
}

struct StudySpec {
  std::string problem = "sinsin";
  std::vector<Method> methods;
  std::vector<std::vector<std::size_t>> meshes;  // node counts per axis
  std::vector<std::size_t> modes{1};
  OptimizerConfig optimizer;                      // optimizer.seed seeds every stochastic start
  PgdOptions pgd;
  std::size_t reference = 0;                      // per-axis nodes; 0 picks the default
  std::string output;
  std::size_t jobs = 1;
  bool timing = false;                            // report wall times (otherwise written as 0)

  std::size_t dims() const { return meshes.empty() ? 2 : meshes.front().size(); }
  std::size_t reference_nodes() const { return reference ? reference : default_reference_nodes(dims()); }

  void validate() const { validate(make_problem(problem, dims())); }

  /// Checks the spec against an already constructed problem.
  void validate(const Problem& p) const {
    optimizer.validate();
    if (!meshes.empty() && p.dims != dims()) fail(ErrorCode::invalid_range, "mesh and problem dimensions differ");
    if (jobs < 1) fail(ErrorCode::invalid_range, "jobs must be >= 1");
    if (!methods.empty() && meshes.empty()) fail(ErrorCode::invalid_range, "no meshes given");
    for (const auto& m : meshes) {
      if (m.size() != dims()) fail(ErrorCode::invalid_range, "all meshes need the same number of axes");
      for (auto k : m)
        if (k < 3) fail(ErrorCode::invalid_range, "every axis needs at least 3 nodes");
    }
    for (auto m : methods) {
      if (m == Method::hidenn_free) fail(ErrorCode::invalid_range, "hidenn-free is a DoF convention, not a solver");
      const bool mappable = p.mapped || (p.exact && p.dims == 2);
      if ((p.mapped && m != Method::pgd_mapped) || (m == Method::pgd_mapped && !mappable))
        fail(ErrorCode::invalid_range, std::string(to_string(m)) + " cannot run the " + p.id + " problem");
      if (uses_modes(m)) {
        if (modes.empty()) fail(ErrorCode::invalid_range, "no mode counts given");
        for (auto q : modes)
          if (q < 1) fail(ErrorCode::invalid_range, "mode counts must be >= 1");
      }
    }
    if (p.needs_reference()) {
      const std::size_t r = reference_nodes();
      for (const auto& m : meshes)
        for (auto k : m)
          if (r <= k || (r - 1) % (k - 1) != 0)
            fail(ErrorCode::invalid_range, "reference " + std::to_string(r) +
                                               " nodes is not an integer refinement of every study mesh");
    }
  }
};

struct ErrorReport {
  Method method = Method::fem;
  std::vector<std::size_t> mesh;
  std::size_t q = 0;  // 0 for FEM and HiDeNN
  std::size_t dofs = 0;
  double rel_energy_err = std::numeric_limits<double>::quiet_NaN();
  double energy = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0;
  bool converged = false;
  std::string failure;  // empty when the cell ran

  bool ok() const { return failure.empty(); }
};

/// Solution of one cell, kept when the caller asks for it.
struct CellSolution {
  std::optional<NodalField> nodal;
  std::optional<SeparatedSolution> separated;
};

struct StudyCell {
  Method method;
  std::vector<std::size_t> mesh;
  std::size_t q;
};

/// Runs one (method, mesh, Q) cell. Solver errors are caught and recorded.
inline ErrorReport run_cell(const Problem& p, const Reference& ref, const StudyCell& cell, const OptimizerConfig& opt,
                            const PgdOptions& pgd_opt, bool timing, CellSolution* keep = nullptr) {
  ErrorReport r;
  r.method = cell.method;
  r.mesh = cell.mesh;
  r.q = uses_modes(cell.method) ? cell.q : 0;
  const TensorMesh mesh = unit_mesh(cell.mesh);
  r.dofs = dof_count(cell.method, mesh, r.q);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (cell.method) {
      case Method::fem: {
        const auto disc = discretize(mesh, p.source);
        const auto u = solve_fem(disc);
        r.rel_energy_err = ref.relative_error(u);
        r.energy = energy(disc, u).total;
        r.converged = true;
        if (keep) keep->nodal = u;
        break;
      }
      case Method::cd: {
        const auto res = solve_cd(mesh, p.source, r.q, opt);
        r.rel_energy_err = ref.relative_error(expand_to_nodal(res.solution));
        r.energy = res.energy;
        r.converged = res.converged;
        if (keep) keep->separated = res.solution;
        break;
      }
      case Method::pgd: {
        const auto disc = discretize(mesh, p.source);
        const auto res = solve_pgd(disc, r.q, pgd_opt);
        r.rel_energy_err = ref.relative_error(expand_to_nodal(res.solution));
        r.energy = energy(disc, res.solution).total;
        r.converged = res.converged;
        if (keep) keep->separated = res.solution;
        break;
      }
      case Method::hidenn: {
        const auto res = solve_hidenn(mesh, p.source, opt);
        r.rel_energy_err = ref.relative_error(res.solution);
        r.energy = res.report.energy;
        r.converged = res.report.converged;
        if (keep) keep->nodal = res.solution;
        break;
      }
      case Method::hidenn_pgd: {
        const auto res = solve_hidenn_pgd(mesh, p.source, r.q, opt);
        r.rel_energy_err = ref.relative_error(expand_to_nodal(res.solution));
        r.energy = res.report.energy;
        r.converged = res.report.converged;
        if (keep) keep->separated = res.solution;
        break;
      }
      case Method::pgd_mapped: {
        if (cell.mesh.size() != 2) fail(ErrorCode::invalid_range, "mapped domains are 2D");
        const MappedDomain dom = p.domain   ? *p.domain
                                 : p.mapped ? quarter_ring_domain(cell.mesh[0], cell.mesh[1])
                                            : rectangle_domain(mesh[0], mesh[1]);
        if (dom.n1 != cell.mesh[0] || dom.n2 != cell.mesh[1])
          fail(ErrorCode::incompatible_mesh, "mesh does not match the domain's " + std::to_string(dom.n1) + "x" +
                                                 std::to_string(dom.n2) + " lattice");
        // Sampled pointwise so the load is pulled back through the map.
        const SourceTerm b = p.mapped ? p.source : SourceTerm::from_callable([&p](std::span<const double> x) {
          return p.source(x);
        });
        const auto res = solve_pgd_mapped(dom, b, r.q, pgd_opt);
        if (ref.exact)
          r.rel_energy_err = mapped_energy_norms(dom, expand_to_nodal(res.pgd.solution), *ref.exact).relative();
        r.energy = energy(mapped_discretization(res.metric, res.load), res.pgd.solution).total;
        r.converged = res.pgd.converged;
        if (keep) keep->separated = res.pgd.solution;
        break;
      }
      case Method::hidenn_free:
        fail(ErrorCode::invalid_range, "hidenn-free is a DoF convention, not a solver");
    }
  } catch (const std::exception& e) {
    r.failure = e.what();
    r.converged = false;
    r.rel_energy_err = r.energy = std::numeric_limits<double>::quiet_NaN();
  }
  if (timing)
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Cells in report order: method, then mesh, then Q.
inline std::vector<StudyCell> study_cells(const StudySpec& spec) {
  std::vector<Method> methods = spec.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  auto meshes = spec.meshes;
  std::sort(meshes.begin(), meshes.end());
  meshes.erase(std::unique(meshes.begin(), meshes.end()), meshes.end());
  auto modes = spec.modes;
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
  std::vector<StudyCell> cells;
  for (auto m : methods)
    for (const auto& mesh : meshes) {
      if (uses_modes(m))
        for (auto q : modes) cells.push_back({m, mesh, q});
      else
        cells.push_back({m, mesh, 0});
    }
  return cells;
}

/// One report per (method, mesh, Q) cell in report order. Cells run on
/// spec.jobs threads; each cell seeds its own generators, so the output does
/// not depend on the thread count.
inline std::vector<ErrorReport> run_study(const StudySpec& spec, const Problem& p) {
  spec.validate(p);
  const auto cells = study_cells(spec);
  if (cells.empty()) return {};
  const Reference ref = make_reference(p, spec.reference_nodes());
  PgdOptions pgd = spec.pgd;
  pgd.seed = spec.optimizer.seed;

  std::vector<ErrorReport> out(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < cells.size();)
      out[k] = run_cell(p, ref, cells[k], spec.optimizer, pgd, spec.timing);
  };
  const std::size_t n = std::min(spec.jobs, cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

inline std::vector<ErrorReport> run_study(const StudySpec& spec) {
  return run_study(spec, make_problem(spec.problem, spec.dims()));
}

inline constexpr const char* kCsvHeader = "method,mesh,Q,dofs,rel_energy_err,energy,wall_ms,converged";

inline std::string csv_row(const ErrorReport& r) {
  std::ostringstream s;
  s << to_string(r.method) << ',' << mesh_label(r.mesh) << ',' << r.q << ',' << r.dofs << ','
    << format_double(r.rel_energy_err) << ',' << format_double(r.energy) << ',' << format_double(r.wall_ms) << ','
    << (r.converged ? "true" : "false");
  return s.str();
}

inline void write_csv(std::ostream& out, const std::vector<ErrorReport>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << csv_row(r) << '\n';
}

/// Checks one CSV data row against the schema, including the DoF column.
/// Returns an empty string when valid, else the reason.
inline std::string check_csv_row(const std::string& row) {
  std::vector<std::string> f;
  std::string tok;
  std::istringstream in(row);
  while (std::getline(in, tok, ',')) f.push_back(tok);
  if (!row.empty() && row.back() == ',') f.emplace_back();
  if (f.size() != 8) return "expected 8 fields";
  auto is_uint = [](const std::string& s) {
    return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
  };
  auto is_real = [](const std::string& s) {
    if (s == "nan" || s == "-nan" || s == "inf" || s == "-inf") return true;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return !s.empty() && *end == '\0';
  };
  try {
    const Method m = parse_method(f[0]);
    const auto mesh = parse_mesh(f[1]);
    if (!is_uint(f[2]) || !is_uint(f[3])) return "Q and dofs must be unsigned integers";
    const auto q = std::stoull(f[2]), dofs = std::stoull(f[3]);
    if (uses_modes(m) ? q < 1 : q != 0) return "Q out of range for the method";
    if (dofs != dof_count(m, unit_mesh(mesh), q)) return "dofs column does not match dof_count";
  } catch (const std::exception& e) {
    return e.what();
  }
  for (int k : {4, 5, 6})
    if (!is_real(f[static_cast<std::size_t>(k)])) return "non-numeric error/energy/time field";
  if (f[7] != "true" && f[7] != "false") return "converged must be true or false";
  return {};
}

/// Least-squares slope of log(error) against log(h).
inline double convergence_slope(std::span<const double> h, std::span<const double> errors) {
  if (h.size() != errors.size() || h.size() < 3) fail(ErrorCode::invalid_range, "need at least 3 (h, error) pairs");
  std::vector<double> x, y;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!(errors[k] > 0) || !(h[k] > 0) || !std::isfinite(errors[k]))
      fail(ErrorCode::invalid_range, "degenerate data: errors and sizes must be positive");
    x.push_back(std::log(h[k]));
    y.push_back(std::log(errors[k]));
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) mx += x[k] / n, my += y[k] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) sxy += (x[k] - mx) * (y[k] - my), sxx += (x[k] - mx) * (x[k] - mx);
  if (sxx == 0) fail(ErrorCode::invalid_range, "degenerate data: all sizes equal");
  return sxy / sxx;
}

struct Decomposition {
  double total = 0;     // ||u_pgd - ref||_E^2
  double fem = 0;       // ||u_fem - ref||_E^2
  double mode = 0;      // ||u_pgd - u_fem||_E^2
  double residual = 0;  // |total - fem - mode| / total
  double galerkin = 0;  // |a(u_fem, v) - (b, v)| / (||v||_E ||u_fem||_E), v = u_pgd - u_fem
};

/// Splits the PGD error into discretization and mode-reduction parts with a
/// fine FEM field standing in for the exact solution.
inline Decomposition decomposition_check(const TensorMesh& mesh, const SourceTerm& source, std::size_t q,
                                         const NodalField& ref, const PgdOptions& opts = {},
                                         const QuadRule& rule = gauss_legendre(kDefaultGaussOrder)) {
  const auto disc = discretize(mesh, source, rule);
  const NodalField fem = solve_fem(disc);
  const NodalField pgd = expand_to_nodal(solve_pgd(disc, q, opts).solution);
  Decomposition d;
  d.total = std::pow(energy_norms(pgd, ref).difference, 2);
  d.fem = std::pow(energy_norms(fem, ref).difference, 2);
  const NodalField v(mesh, pgd.values - fem.values);
  d.mode = std::max(0.0, energy_form(disc.op, v));
  d.residual = d.total > 0 ? std::abs(d.total - d.fem - d.mode) / d.total : 0.0;

  const auto shape = mesh.shape();
  const double a_uv = fem.values.dot(apply_operator(disc.op, v.values, shape));
  const double b_v = assemble_load(disc.load, shape).dot(v.values);
  const double scale = std::sqrt(d.mode) * std::sqrt(std::max(0.0, energy_form(disc.op, fem)));
  d.galerkin = scale > 0 ? std::abs(a_uv - b_v) / scale : 0.0;
  return d;
}

/// Relative mode-reduction errors ||u_Q - u_fem||_E / ||u_fem||_E of the
/// greedy PGD for Q = 1..q_max (prefixes of one enrichment run).
inline std::vector<double> mode_error_curve(const TensorMesh& mesh, const SourceTerm& source, std::size_t q_max,
                                            const PgdOptions& opts = {}) {
  const auto disc = discretize(mesh, source);
  const NodalField fem = solve_fem(disc);
  const auto pgd = solve_pgd(disc, q_max, opts);
  const double ref = std::sqrt(std::max(0.0, energy_form(disc.op, fem)));
  std::vector<double> errs;
  SeparatedSolution partial(mesh);
  double last = 1.0;
  for (std::size_t q = 1; q <= q_max; ++q) {
    if (q <= pgd.solution.num_modes()) {
      partial.add(pgd.solution.modes[q - 1]);
      const NodalField v(mesh, expand_to_nodal(partial).values - fem.values);
      const double e = std::sqrt(std::max(0.0, energy_form(disc.op, v)));
      last = ref > 0 ? e / ref : e;
    }
    errs.push_back(last);
  }
  return errs;
}

/// Relative mode errors at or below this count as exact reproduction.
inline constexpr double kExactModeError = 1e-10;

struct ModeDecay {
  std::vector<std::size_t> mesh;
  std::vector<std::size_t> q;
  std::vector<double> errors;
  double slope = std::numeric_limits<double>::quiet_NaN();  // d log(err) / dQ over the non-exact cells
  bool exact = false;                                        // the smallest Q already reproduces FEM
};

inline std::vector<ModeDecay> mode_decay_study(const std::vector<std::vector<std::size_t>>& meshes, std::size_t q_min,
                                               std::size_t q_max, const Problem& p, const PgdOptions& opts = {}) {
  if (q_min < 1 || q_max < q_min) fail(ErrorCode::invalid_range, "bad mode range");
  std::vector<ModeDecay> out;
  for (const auto& n : meshes) {
    ModeDecay d;
    d.mesh = n;
    const auto curve = mode_error_curve(unit_mesh(n), p.source, q_max, opts);
    std::vector<double> x, y;
    for (std::size_t q = q_min; q <= q_max; ++q) {
      d.q.push_back(q);
      d.errors.push_back(curve[q - 1]);
      if (curve[q - 1] > kExactModeError) {
        x.push_back(static_cast<double>(q));
        y.push_back(std::log(curve[q - 1]));
      }
    }
    d.exact = d.errors.front() <= kExactModeError;
    if (x.size() >= 2) {
      const double k = static_cast<double>(x.size());
      double mx = 0, my = 0, sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / k, my += y[i] / k;
      for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
      d.slope = sxy / sxx;
    }
    out.push_back(std::move(d));
  }
  return out;
}

struct ModeSuggestion {
  std::size_t q = 0;
  std::vector<double> curve;  // relative mode error for Q = 1..curve.size()
};

/// Smallest Q whose coarse-mesh mode-reduction error is <= target. A zero
/// target asks for exact reproduction, Q = min_d n_d.
inline ModeSuggestion suggest_mode_count(const std::vector<std::size_t>& coarse, const SourceTerm& source, double target,
                                         const PgdOptions& opts = {}) {
  if (!(target >= 0 && target < 1)) fail(ErrorCode::invalid_range, "target must be in [0, 1)");
  const std::size_t q_full = *std::min_element(coarse.begin(), coarse.end());
  ModeSuggestion s;
  s.curve = mode_error_curve(unit_mesh(coarse), source, q_full, opts);
  s.q = q_full;
  if (target > 0)
    for (std::size_t q = 1; q <= q_full; ++q)
      if (s.curve[q - 1] <= target) {
        s.q = q;
        break;
      }
  return s;
}

}  // namespace separapde
