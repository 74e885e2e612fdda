// Choose Q on a coarse mesh, then run HiDeNN-PGD with it on a finer mesh.

#include <cstdio>

#include "separapde/separapde.hpp"

using namespace separapde;

int main() {
  const Problem p = pointload_problem();
  const auto s = suggest_mode_count({9, 9}, p.source, 1e-2);
  std::printf("coarse 9x9 mode errors:");
  for (double e : s.curve) std::printf(" %.3g", e);
  std::printf("\nsuggested Q = %zu\n", s.q);

  const TensorMesh fine = TensorMesh::unit_square(17, 17);
  OptimizerConfig opt;
  opt.max_iterations = 500;
  const auto fem = solve_fem(fine, p.source);
  const auto pgd = solve_pgd(fine, p.source, s.q);
  const auto hp = solve_hidenn_pgd(fine, p.source, s.q, opt);
  const Reference ref = make_reference(p, 257);
  std::printf("17x17: FEM %.5f  PGD %.5f  HiDeNN-PGD %.5f (relative energy error vs 257x257)\n",
              ref.relative_error(fem), ref.relative_error(expand_to_nodal(pgd.solution)),
              ref.relative_error(expand_to_nodal(hp.solution)));
  return 0;
}
