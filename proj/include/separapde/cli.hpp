#pragma once

// Command-line front end: `solve`, `study` and `modes` subcommands.
// Exit codes: 0 success, 1 usage error, 2 solver failure or non-convergence.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "separapde/analysis.hpp"
#include "separapde/config.hpp"
#include "separapde/serialize.hpp"

namespace separapde::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitSolver = 2;

inline constexpr std::uint64_t kDefaultSeed = 42;

/// SEPARAPDE_SEED when set, else the built-in default.
inline std::uint64_t default_seed() {
  const char* env = std::getenv("SEPARAPDE_SEED");
  if (!env || !*env) return kDefaultSeed;
  Config c;
  c.set("SEPARAPDE_SEED", env);
  return c.get_uint("SEPARAPDE_SEED", kDefaultSeed);
}

#define SEPARAPDE_OPTIMIZER_KEYS                                                                              \
  "seed", "max_iterations", "learning_rate", "position_learning_rate", "beta1", "beta2", "epsilon",          \
      "gradient_tolerance", "coefficient_update", "pgd_max_sweeps", "pgd_tolerance", "pgd_stagnation"

inline OptimizerConfig optimizer_from(const Config& c) {
  OptimizerConfig o;
  o.seed = c.get_uint("seed", default_seed());
  o.max_iterations = c.get_uint("max_iterations", o.max_iterations);
  o.learning_rate = c.get_double("learning_rate", o.learning_rate);
  o.position_learning_rate = c.get_double("position_learning_rate", o.position_learning_rate);
  o.beta1 = c.get_double("beta1", o.beta1);
  o.beta2 = c.get_double("beta2", o.beta2);
  o.epsilon = c.get_double("epsilon", o.epsilon);
  o.gradient_tolerance = c.get_double("gradient_tolerance", o.gradient_tolerance);
  const std::string update = c.get_or("coefficient_update", "block");
  if (update == "block")
    o.coefficient_update = CoefficientUpdate::block;
  else if (update == "adam")
    o.coefficient_update = CoefficientUpdate::adam;
  else
    fail(ErrorCode::usage, "coefficient_update must be block or adam");
  o.validate();
  return o;
}

inline PgdOptions pgd_from(const Config& c, std::uint64_t seed) {
  PgdOptions p;
  p.seed = seed;
  p.alternating.max_sweeps = c.get_uint("pgd_max_sweeps", p.alternating.max_sweeps);
  p.alternating.tolerance = c.get_double("pgd_tolerance", p.alternating.tolerance);
  p.stagnation = c.get_double("pgd_stagnation", p.stagnation);
  if (p.alternating.max_sweeps < 1 || !(p.alternating.tolerance >= 0) || !(p.stagnation >= 0))
    fail(ErrorCode::usage, "PGD options out of range");
  return p;
}

/// A built-in problem id, or a problem file:
///   kind = sinsin | pointload | quarterring | mapped
///   point = x,y[,z]   magnitude = m      (pointload)
///   domain = <mapped-domain file>  load = c   (mapped; constant load)
inline Problem load_problem(const std::string& spec, std::size_t dims) {
  if (spec == "sinsin" || spec == "pointload" || spec == "quarterring") return make_problem(spec, dims);
  if (!std::filesystem::is_regular_file(spec)) fail(ErrorCode::usage, "unknown problem '" + spec + "'");
  const Config c = Config::load(spec);
  c.reject_unknown({"kind", "point", "magnitude", "domain", "load"});
  c.require({"kind"});
  const std::string kind = *c.get("kind");
  if (kind == "sinsin" || kind == "quarterring") return make_problem(kind, dims);
  if (kind == "pointload") {
    Problem p = pointload_problem(dims);
    std::vector<double> at(dims, 0.5);
    if (const auto pt = c.get("point")) {
      const auto words = parse_word_list(*pt);
      if (words.size() != dims) fail(ErrorCode::usage, "point needs one coordinate per axis");
      for (std::size_t d = 0; d < dims; ++d) {
        Config one;
        one.set("point", words[d]);
        at[d] = one.get_double("point", 0.5);
        if (!(at[d] > 0 && at[d] < 1)) fail(ErrorCode::usage, "point must lie inside the unit box");
      }
    }
    const double m = c.get_double("magnitude", 1.0);
    p.source = SourceTerm::point_load(m, at);
    p.key = "pointload/" + std::to_string(dims) + "/" + detail::join(at) + "/" + format_double(m);
    return p;
  }
  if (kind == "mapped") {
    c.require({"domain"});
    std::filesystem::path path = *c.get("domain");
    if (path.is_relative()) path = std::filesystem::path(spec).parent_path() / path;
    std::ifstream in(path);
    if (!in) fail(ErrorCode::usage, "cannot open domain file '" + path.string() + "'");
    Problem p;
    p.id = "mapped";
    p.key = "mapped/" + path.string();
    p.domain = std::make_shared<const MappedDomain>(read_mapped_domain(in));
    p.mapped = true;
    const double b = c.get_double("load", 1.0);
    p.source = SourceTerm::from_callable([b](std::span<const double>) { return b; });
    return p;
  }
  fail(ErrorCode::usage, "unknown problem kind '" + kind + "'");
}

inline std::size_t mesh_dims(const Config& c) {
  if (const auto m = c.get("mesh")) return parse_mesh(*m).size();
  if (const auto m = c.get("meshes")) {
    const auto words = parse_word_list(*m);
    if (!words.empty()) return parse_mesh(words.front()).size();
  }
  return 2;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) fail(ErrorCode::usage, "cannot write '" + path + "'");
}

inline int cmd_solve(const Config& c, std::ostream& out, std::ostream& err) {
  c.reject_unknown({"method", "mesh", "modes", "problem", "out", "solution", "reference", "timing",
                    SEPARAPDE_OPTIMIZER_KEYS});
  c.require({"method", "problem", "out"});
  const Method method = parse_method(*c.get("method"));
  if (method == Method::hidenn_free) fail(ErrorCode::usage, "hidenn-free is a DoF convention, not a solver");
  const Problem p = load_problem(*c.get("problem"), mesh_dims(c));
  std::vector<std::size_t> mesh;
  if (const auto m = c.get("mesh"))
    mesh = parse_mesh(*m);
  else if (p.domain)
    mesh = {p.domain->n1, p.domain->n2};
  else
    fail(ErrorCode::usage, "missing required key 'mesh'");
  std::size_t q = 0;
  if (uses_modes(method)) {
    q = c.get_uint("modes", 1);
    if (q < 1) fail(ErrorCode::usage, "--modes must be >= 1");
  }

  StudySpec spec;
  spec.methods = {method};
  spec.meshes = {mesh};
  spec.modes = {std::max<std::size_t>(q, 1)};
  spec.optimizer = optimizer_from(c);
  spec.pgd = pgd_from(c, spec.optimizer.seed);
  spec.reference = c.get_uint("reference", 0);
  spec.timing = c.get_bool("timing", false);
  try {
    spec.validate(p);
  } catch (const Error& e) {
    fail(ErrorCode::usage, e.what());
  }

  CellSolution kept;
  const Reference ref = make_reference(p, spec.reference_nodes());
  const ErrorReport row = run_cell(p, ref, {method, mesh, q}, spec.optimizer, spec.pgd, spec.timing, &kept);
  if (!row.ok()) {
    err << "error: " << row.failure << '\n';
    return kExitSolver;
  }
  const std::string csv_path = *c.get("out");
  std::ostringstream csv;
  write_csv(csv, {row});
  write_file(csv_path, csv.str());

  std::ostringstream sol;
  std::filesystem::path sol_path = c.get_or("solution", "");
  if (kept.separated) {
    write_separated(sol, *kept.separated);
    if (sol_path.empty()) sol_path = std::filesystem::path(csv_path).replace_extension(".modes");
  } else {
    write_nodal(sol, *kept.nodal);
    if (sol_path.empty()) sol_path = std::filesystem::path(csv_path).replace_extension(".field");
  }
  write_file(sol_path.string(), sol.str());
  out << csv.str();
  if (!row.converged) {
    err << "warning: solver did not converge; best iterate written\n";
    return kExitSolver;
  }
  return kExitOk;
}

inline void print_summary(std::ostream& out, const std::vector<ErrorReport>& rows) {
  out << std::left << std::setw(12) << "method" << std::setw(10) << "mesh" << std::setw(5) << "Q" << std::setw(9)
      << "dofs" << std::setw(16) << "rel_err" << "converged\n";
  for (const auto& r : rows) {
    out << std::setw(12) << to_string(r.method) << std::setw(10) << mesh_label(r.mesh) << std::setw(5) << r.q
        << std::setw(9) << r.dofs << std::setw(16) << std::setprecision(6) << r.rel_energy_err
        << (r.ok() ? (r.converged ? "yes" : "no") : "failed: " + r.failure) << '\n';
  }
  std::map<std::pair<Method, std::size_t>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : rows)
    if (r.ok() && r.rel_energy_err > 0 && std::isfinite(r.rel_energy_err)) {
      auto& g = groups[{r.method, r.q}];
      g.first.push_back(1.0 / static_cast<double>(r.mesh.front() - 1));
      g.second.push_back(r.rel_energy_err);
    }
  for (const auto& [k, g] : groups) {
    if (std::set<double>(g.first.begin(), g.first.end()).size() < 3) continue;
    out << "slope " << to_string(k.first) << " Q=" << k.second << ": " << std::setprecision(4)
        << convergence_slope(g.first, g.second) << '\n';
  }
}

inline int cmd_study(const Config& c, std::ostream& out, std::ostream& err) {
  c.reject_unknown({"problem", "methods", "meshes", "modes", "reference", "output", "jobs", "timing",
                    SEPARAPDE_OPTIMIZER_KEYS});
  c.require({"problem", "methods", "meshes"});
  StudySpec spec;
  spec.problem = *c.get("problem");
  for (const auto& m : parse_word_list(*c.get("methods"))) spec.methods.push_back(parse_method(m));
  for (const auto& m : parse_word_list(*c.get("meshes"))) spec.meshes.push_back(parse_mesh(m));
  if (const auto m = c.get("modes")) spec.modes = parse_size_list(*m);
  spec.optimizer = optimizer_from(c);
  spec.pgd = pgd_from(c, spec.optimizer.seed);
  spec.reference = c.get_uint("reference", 0);
  spec.output = c.get_or("output", "");
  spec.jobs = c.get_uint("jobs", 1);
  spec.timing = c.get_bool("timing", false);
  const Problem p = load_problem(spec.problem, spec.dims());
  try {
    spec.validate(p);
  } catch (const Error& e) {
    fail(ErrorCode::usage, e.what());
  }

  const auto rows = run_study(spec, p);
  std::ostringstream csv;
  write_csv(csv, rows);
  if (spec.output.empty()) {
    out << csv.str();
  } else {
    write_file(spec.output, csv.str());
    print_summary(out, rows);
  }
  std::size_t ok = 0;
  for (const auto& r : rows) {
    if (r.ok())
      ++ok;
    else
      err << "cell " << to_string(r.method) << ' ' << mesh_label(r.mesh) << " Q=" << r.q << " failed: " << r.failure
          << '\n';
  }
  return rows.empty() || ok > 0 ? kExitOk : kExitSolver;
}

inline int cmd_modes(const Config& c, std::ostream& out, std::ostream&) {
  c.reject_unknown({"problem", "coarse", "target", "seed", "pgd_max_sweeps", "pgd_tolerance", "pgd_stagnation"});
  c.require({"problem", "coarse", "target"});
  const auto coarse = parse_mesh(*c.get("coarse"));
  const Problem p = load_problem(*c.get("problem"), coarse.size());
  if (p.mapped) fail(ErrorCode::usage, "mode guidance runs on tensor-mesh problems");
  const double target = c.get_double("target", 0);
  if (!(target >= 0 && target < 1)) fail(ErrorCode::usage, "--target must be in [0, 1)");
  const auto s = suggest_mode_count(coarse, p.source, target, pgd_from(c, c.get_uint("seed", default_seed())));
  out << "Q=" << s.q << '\n' << "Q,mode_err\n";
  for (std::size_t q = 1; q <= s.curve.size(); ++q) out << q << ',' << format_double(s.curve[q - 1]) << '\n';
  return kExitOk;
}

/// Parses argv and runs one subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Separated-representation Poisson solvers", "separapde"};
  app.require_subcommand(1);
  std::map<std::string, std::string> flags;
  auto option = [&flags](CLI::App* sc, const std::string& name, const std::string& key, const std::string& help) {
    sc->add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags[key] = v; }, help);
  };
  auto optimizer_options = [&](CLI::App* sc) {
    option(sc, "--seed", "seed", "random seed (default: SEPARAPDE_SEED or 42)");
    option(sc, "--max-iterations", "max_iterations", "iteration budget of the iterative solvers");
    option(sc, "--learning-rate", "learning_rate", "Adam rate for coefficients");
    option(sc, "--position-learning-rate", "position_learning_rate", "Adam rate for nodal positions");
    option(sc, "--gradient-tolerance", "gradient_tolerance", "stop when the gradient norm falls below this");
    option(sc, "--coefficient-update", "coefficient_update", "block or adam");
  };
  auto timing_flag = [&flags](CLI::App* sc) {
    sc->add_flag_callback("--timing", [&flags] { flags["timing"] = "true"; }, "report wall times");
  };

  std::string config_path;
  auto* solve = app.add_subcommand("solve", "solve one problem with one method");
  solve->add_option("--config", config_path, "key = value file; flags override it");
  option(solve, "--method", "method", "fem|cd|pgd|hidenn|hidenn-pgd|pgd-mapped");
  option(solve, "--mesh", "mesh", "node counts, n1xn2[xn3]");
  option(solve, "--modes", "modes", "number of modes Q");
  option(solve, "--problem", "problem", "sinsin|pointload|quarterring or a problem file");
  option(solve, "--out", "out", "CSV report path");
  option(solve, "--solution", "solution", "solution path (default: next to the CSV)");
  option(solve, "--reference", "reference", "reference mesh nodes per axis");
  optimizer_options(solve);
  timing_flag(solve);

  auto* study = app.add_subcommand("study", "run a study spec");
  study->add_option("--spec", config_path, "study spec file")->required();
  option(study, "--out", "output", "CSV path (overrides the spec)");
  option(study, "--jobs", "jobs", "parallel cells");
  option(study, "--seed", "seed", "random seed");
  timing_flag(study);

  auto* modes = app.add_subcommand("modes", "suggest a mode count from a coarse mesh");
  option(modes, "--problem", "problem", "problem id or file");
  option(modes, "--coarse", "coarse", "coarse mesh, n1xn2[xn3]");
  option(modes, "--target", "target", "relative mode-reduction error target");
  option(modes, "--seed", "seed", "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    Config c = config_path.empty() ? Config{} : Config::load(config_path);
    for (const auto& [k, v] : flags) c.set(k, v);
    if (solve->parsed()) return cmd_solve(c, out, err);
    if (study->parsed()) return cmd_study(c, out, err);
    return cmd_modes(c, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

#undef SEPARAPDE_OPTIMIZER_KEYS

}  // namespace separapde::cli
