// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "separapde/cli.hpp"
#include "separapde/separapde.hpp"
#include "test_util.hpp"

#ifndef SEPARAPDE_SOURCE_DIR
#define SEPARAPDE_SOURCE_DIR "."
#endif

using namespace separapde;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string join(const std::vector<double>& v, const char* f = "%.4g") {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + fmt(f, v[k]);
  return s;
}

double rel_err(const NodalField& u, const NodalField& ref) { return energy_norms(u, ref).relative(); }

std::vector<double> h_of(const std::vector<std::size_t>& n) {
  std::vector<double> h;
  for (auto k : n) h.push_back(1.0 / static_cast<double>(k - 1));
  return h;
}

const std::vector<std::size_t> kSweep{11, 21, 41, 81, 161};

// 1. Partition of unity, Kronecker delta, ReLU form of the hats.
Outcome shape_identities() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<std::size_t> size(3, 40);
  double pu = 0, delta = 0, relu = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Grid1D g = testutil::random_grid(rng, size(rng), -1.0, 2.0);
    std::uniform_real_distribution<double> u(g.front(), g.back());
    for (int k = 0; k < 1000; ++k) {
      const double x = u(rng);
      double sum = 0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto s = support(g, i);
        const double a = hat_eval(s, x);
        sum += a;
        relu = std::max(relu, std::abs(a - hat_eval_relu(s, x)));
      }
      pu = std::max(pu, std::abs(sum - 1.0));
    }
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j)
        delta = std::max(delta, std::abs(hat_eval(support(g, i), g[j]) - (i == j ? 1.0 : 0.0)));
  }
  return {pu <= 1e-12 && delta <= 1e-12 && relu <= 1e-14,
          fmt("max |sum-1| %.2e, max delta dev %.2e, max |relu-hat| %.2e", pu, delta, relu)};
}

// 2. FEM slope on the manufactured separable problem.
Outcome fem_convergence() {
  // The default Gauss order is rechecked at orders 2 and 6.
  const auto p = sinsin_problem();
  bool ok = true;
  std::string detail;
  for (std::size_t order : {4u, 2u, 6u}) {
    std::vector<double> errs;
    for (auto n : kSweep)
      errs.push_back(
          energy_norm_error(solve_fem(TensorMesh::unit_square(n, n), p.source, gauss_legendre(order)), *p.exact));
    const double slope = convergence_slope(h_of(kSweep), errs);
    ok = ok && std::abs(slope - 1.0) <= 0.1;
    detail += order == 4 ? fmt("slope %.4f; errors ", slope) + join(errs) : fmt("; g=%zu slope %.4f", order, slope);
  }
  return {ok, detail};
}

// 3. One mode loses nothing on the separable problem.
Outcome one_mode_equivalence() {
  const auto p = sinsin_problem();
  OptimizerConfig opt;
  opt.max_iterations = 500;
  double worst = 0;
  std::string rows;
  std::vector<double> e_fem, e_pgd, e_hp;
  for (auto n : kSweep) {
    const auto mesh = TensorMesh::unit_square(n, n);
    e_fem.push_back(energy_norm_error(solve_fem(mesh, p.source), *p.exact));
    e_pgd.push_back(energy_norm_error(expand_to_nodal(solve_pgd(mesh, p.source, 1).solution), *p.exact));
    e_hp.push_back(energy_norm_error(expand_to_nodal(solve_hidenn_pgd(mesh, p.source, 1, opt).solution), *p.exact));
    const double fem = e_fem.back();
    worst = std::max({worst, std::abs(e_pgd.back() - fem) / fem, std::abs(e_hp.back() - fem) / fem});
    rows += fmt(" %zu:%.5g/%.5g/%.5g", n, fem, e_pgd.back(), e_hp.back());
  }
  const auto h = h_of(kSweep);
  return {worst <= 0.01, fmt("max relative gap %.2e; slopes fem %.4f pgd %.4f hidenn-pgd %.4f; fem/pgd/hidenn-pgd", worst,
                             convergence_slope(h, e_fem), convergence_slope(h, e_pgd), convergence_slope(h, e_hp)) +
                             rows};
}

// 4. Full-rank CD reaches the FEM energy; SVD round trip.
Outcome cd_full_rank() {
  const auto p = pointload_problem();
  OptimizerConfig opt;
  opt.max_iterations = 2000;
  opt.gradient_tolerance = 1e-12;
  double gap = 0, svd = 0;
  for (std::size_t n = 6; n <= 12; ++n) {
    const auto disc = discretize(TensorMesh::unit_square(n, n), p.source);
    const auto fem = solve_fem(disc);
    const double e_fem = energy(disc, fem).total;
    gap = std::max(gap, std::abs(solve_cd(disc, n, opt).energy - e_fem));
    svd = std::max(svd, (expand_to_nodal(svd_modes(fem)).values - fem.values).cwiseAbs().maxCoeff());
  }
  return {gap <= 1e-8 && svd <= 1e-12, fmt("max |Pi_CD - Pi_FEM| %.2e, max svd round-trip error %.2e", gap, svd)};
}

// 5. Error split into discretization and mode parts.
Outcome decomposition() {
  const auto p = pointload_problem();
  const auto mesh = TensorMesh::unit_square(17, 17);
  const auto coarse = reference_field(p, 257);
  const auto fine = reference_field(p, 513);
  bool ok = true;
  std::string rows;
  for (std::size_t q = 1; q <= 3; ++q) {
    const auto a = decomposition_check(mesh, p.source, q, *coarse);
    const auto b = decomposition_check(mesh, p.source, q, *fine);
    ok = ok && a.galerkin <= 1e-9 && a.residual <= 5e-3 && b.galerkin <= 1e-9 && b.residual <= 5e-3 &&
         b.residual < a.residual;
    rows += fmt(" Q=%zu: galerkin %.1e, pythagoras %.3e -> %.3e;", q, std::max(a.galerkin, b.galerkin), a.residual,
                b.residual);
  }
  return {ok, rows.substr(1)};
}

// 6. Ordering of CD, FEM, HiDeNN-PGD and HiDeNN errors.
Outcome error_chain() {
  const auto p = pointload_problem();
  const auto mesh = TensorMesh::unit_square(8, 8);
  const auto ref = reference_field(p, default_reference_nodes(2));
  const auto disc = discretize(mesh, p.source);
  OptimizerConfig opt;
  opt.max_iterations = 2000;
  const double fem = rel_err(solve_fem(disc), *ref);
  const auto cd = solve_cd(disc, 8, opt);
  const double e_cd = rel_err(expand_to_nodal(cd.solution), *ref);
  const auto hp = solve_hidenn_pgd(mesh, p.source, 8, opt, gauss_legendre(kDefaultGaussOrder), &cd.solution);
  const double e_hp = rel_err(expand_to_nodal(hp.solution), *ref);
  const double e_h = rel_err(solve_hidenn(mesh, p.source, opt).solution, *ref);
  return {e_cd >= fem - 1e-6 && e_hp <= fem + 1e-6 && e_h <= e_hp + 1e-6,
          fmt("cd %.6g, fem %.6g, hidenn-pgd %.6g, hidenn %.6g", e_cd, fem, e_hp, e_h)};
}

// 7. Mode-decay slopes should not depend on the mesh.
Outcome mode_decay() {
  const auto decay = mode_decay_study({{17, 17}, {33, 33}, {65, 65}}, 1, 6, pointload_problem());
  std::vector<double> s;
  for (const auto& d : decay) s.push_back(d.slope);
  double worst = 0;
  for (double a : s)
    for (double b : s) worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
  std::string curves;
  for (const auto& d : decay) curves += "; " + mesh_label(d.mesh) + ": " + join(d.errors, "%.3g");
  return {worst <= 0.2, fmt("slopes %s, max relative spread %.3f", join(s, "%.4f").c_str(), worst) + curves};
}

// 8. Analytic energy gradients against central differences.
template <class Objective>
double gradient_check(const Objective& obj, const Vec& x) {
  Vec g;
  obj.value_and_gradient(x, g);
  Vec fd(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    fd[i] = (obj.value(a) - obj.value(b)) / (2 * h);
  }
  return (g - fd).norm() / fd.norm();
}

Outcome gradients() {
  std::mt19937_64 rng(1008);
  std::normal_distribution<double> n(0, 1);
  double worst_h = 0, worst_hp = 0;
  for (int k = 0; k < 20; ++k) {
    const auto p = k % 2 ? pointload_problem() : sinsin_problem();
    const TensorMesh base = TensorMesh::unit_square(7, 6);
    const TensorMesh mesh({testutil::random_grid(rng, 7), testutil::random_grid(rng, 6)});
    HiDeNNObjective h(base, p.source);
    NodalField u(mesh);
    for (auto& v : u.values) v = n(rng);
    zero_boundary(u.values, mesh.shape());
    worst_h = std::max(worst_h, gradient_check(h, h.pack(u)));
    HiDeNNPGDObjective hp(base, 2, p.source);
    SeparatedSolution s(mesh);
    for (int q = 0; q < 2; ++q) s.add(random_mode(rng, mesh));
    worst_hp = std::max(worst_hp, gradient_check(hp, hp.pack(s)));
  }
  return {worst_h <= 1e-5 && worst_hp <= 1e-5,
          fmt("max relative gradient error: hidenn %.2e, hidenn-pgd %.2e", worst_h, worst_hp)};
}

// 9. Mapped PGD on a rectangle is plain PGD; quarter-ring convergence.
Outcome mapped_pgd() {
  const auto p = sinsin_problem();
  const std::size_t n = 33;
  const auto mesh = TensorMesh::unit_square(n, n);
  const auto plain = expand_to_nodal(solve_pgd(mesh, p.source, 2).solution);
  const auto dom = rectangle_domain(mesh[0], mesh[1]);
  const auto mapped = expand_to_nodal(solve_pgd_mapped(dom, SourceTerm::from_callable(p.source), 2).pgd.solution);
  const NodalField diff(mesh, mapped.values - plain.values);
  const double d = std::sqrt(std::max(0.0, energy_form(poisson_operator(mesh), diff)));

  const QuarterRingProblem qr;
  const std::vector<std::size_t> ns{9, 17, 33, 65};
  std::vector<double> errs;
  for (auto k : ns) {
    const auto dq = quarter_ring_domain(k, k);
    const auto u = expand_to_nodal(solve_pgd_mapped(dq, qr.source(), 20).pgd.solution);
    errs.push_back(mapped_energy_norms(dq, u, qr.solution()).relative());
  }
  const double slope = convergence_slope(h_of(ns), errs);
  return {d <= 1e-10 && std::abs(slope - 1.0) <= 0.15,
          fmt("rectangle vs plain |du|_E %.2e; quarter-ring slope %.4f, errors ", d, slope) + join(errs)};
}

// 10. Degrees of freedom on the 40x40-element mesh.
Outcome dof_accounting() {
  const auto mesh = TensorMesh::unit_square(41, 41);
  const auto pgd = dof_count(Method::pgd, mesh, 1), fem = dof_count(Method::fem, mesh, 0),
             hp = dof_count(Method::hidenn_pgd, mesh, 1);
  return {pgd == 78 && fem == 1521 && hp == 156, fmt("pgd %zu, fem %zu, hidenn-pgd %zu", pgd, fem, hp)};
}

// 11. Bundled study specs are reproducible.
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "separapde-acceptance";
  fs::create_directories(dir);
  const std::string jobs = std::to_string(std::max(1u, std::thread::hardware_concurrency()));
  bool ok = true;
  std::string detail;
  std::vector<fs::path> specs;
  for (const auto& e : fs::directory_iterator(fs::path(SEPARAPDE_SOURCE_DIR) / "configs"))
    if (e.path().extension() == ".cfg") specs.push_back(e.path());
  std::sort(specs.begin(), specs.end());
  for (const auto& spec : specs) {
    std::string csv[2];
    for (int run = 0; run < 2; ++run) {
      const std::string out = (dir / (spec.stem().string() + std::to_string(run) + ".csv")).string();
      const std::string args[] = {"separapde", "study", "--spec", spec.string(), "--out", out, "--jobs", jobs};
      const char* argv[8];
      for (int k = 0; k < 8; ++k) argv[k] = args[k].c_str();
      std::ostringstream sink, err;
      const int code = cli::run(8, argv, sink, err);
      std::ifstream in(out, std::ios::binary);
      std::stringstream s;
      s << in.rdbuf();
      csv[run] = s.str();
      if (code != 0) ok = false, detail += spec.filename().string() + " exit " + std::to_string(code) + "; ";
    }
    const bool same = !csv[0].empty() && csv[0] == csv[1];
    ok = ok && same;
    detail += spec.filename().string() + (same ? " identical" : " DIFFERS") + fmt(" (%zu bytes); ", csv[0].size());
  }
  fs::remove_all(dir);
  return {ok && !specs.empty(), specs.empty() ? "no study specs found" : detail.substr(0, detail.size() - 2)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "shape-function identities", 1, shape_identities},
      {2, "FEM convergence slope", 30, fem_convergence},
      {3, "one-mode equivalence", 0, one_mode_equivalence},
      {4, "CD reaches FEM at full rank", 60, cd_full_rank},
      {5, "error decomposition", 120, decomposition},
      {6, "error-bound chain", 600, error_chain},
      {7, "mode-decay mesh independence", 300, mode_decay},
      {8, "gradient correctness", 60, gradients},
      {9, "mapped PGD degeneracy and convergence", 120, mapped_pgd},
      {10, "DoF accounting", 0, dof_accounting},
      {11, "determinism of study specs", 0, determinism},
  };
  std::vector<int> chosen;
  for (int k = 1; k < argc; ++k) chosen.push_back(std::atoi(argv[k]));
  int failed = 0;
  for (const auto& c : all) {
    if (!chosen.empty() && std::find(chosen.begin(), chosen.end(), c.id) == chosen.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.2f s", secs);
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      timing += fmt(" > %.0f s budget", c.budget_s);
    }
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.name << ": " << o.detail << " (" << timing
              << ")" << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
