// Mapped-domain PGD on a quarter plate with a circular hole, unit load.
// Prints the metric ranks, the energy after each mode and writes the modes.

#include <cstdio>
#include <fstream>

#include "separapde/separapde.hpp"

using namespace separapde;

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? static_cast<std::size_t>(std::atoi(argv[1])) : 17;
  const MappedDomain dom = plate_with_hole_domain(n, n);
  const auto load = SourceTerm::from_callable([](std::span<const double>) { return 1.0; });
  const auto res = solve_pgd_mapped(dom, load, 8);

  std::printf("lattice %zux%zu, metric ranks g11=%zu g12=%zu g22=%zu, load rank %zu\n", dom.n1, dom.n2,
              res.metric.g11.rank(), res.metric.g12.rank(), res.metric.g22.rank(), res.load.rank());
  for (std::size_t q = 0; q < res.pgd.energies.size(); ++q)
    std::printf("Q=%zu  energy=%.12f  sweeps=%zu\n", q + 1, res.pgd.energies[q], res.pgd.sweeps[q]);
  if (res.pgd.stagnated) std::printf("enrichment stagnated after %zu modes\n", res.pgd.solution.num_modes());

  std::ofstream out("plate_with_hole.modes");
  write_separated(out, res.pgd.solution);
  std::ofstream dom_out("plate_with_hole.domain");
  write_mapped_domain(dom_out, dom);
  return 0;
}
