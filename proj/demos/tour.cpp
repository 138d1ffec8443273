// A short walk through the library: kernels on T_2, a truncated Green function,
// a boundary integral with its majorant, and the same quantities on the disk.

#include <iostream>

#include "riesz/riesz.hpp"

using namespace riesz;

int main() {
  const TreeParams p(2);
  const Vertex o, x = Vertex::parse("0/1/1");
  const End xi = End::parse("o:(0)");

  std::cout << "G(o,o) = " << green(o, o, p) << "\n"
            << "G(o,x) = " << green(o, x, p) << "  F(x,o) = " << first_passage(x, o, p) << "\n"
            << "K(x,xi) = " << martin(x, xi, p) << "  hor = " << busemann(x, xi) << "\n"
            << "nu_x(T_x) = " << harmonic_measure_cylinder(x, x, p) << "\n";

  const auto e = BoundarySet::finite_ends(p, {xi});
  const Truncation tr(e, Rational(1) / 8);
  const auto rep = verify_green_bound(tr, 8);
  std::cout << "truncation at t = 1/8: k = " << tr.k() << ", " << rep.checked << " vertices, min ratio "
            << rep.min_ratio << (rep.pass ? " (pass)" : " (FAIL)") << "\n";

  const auto psi = PsiSpec::power_law(Rational(1), Rational(1) / 2);
  const auto g = psi_level<QuadSurd>(psi, 2);
  std::cout << "int Psi(dist(., E)) dlambda = " << to_string(boundary_integral_tree(g, e, 40).value()) << "\n";
  for (const char* s : {"0", "0/0", "1"})
    std::cout << "  h(" << s << ") = " << to_string(majorant_h(g, e, Vertex::parse(s), 40).value()) << "\n";

  const disk::Complex z(0.5, 0);
  const auto k = disk::kernels(z, 0.0, 1.0);
  std::cout << "disk: G(z,0) = " << k.green << "  P(z,1) = " << k.poisson << "  hyp density "
            << disk::measure_densities(z).hyp_area_density << "\n";
  const auto bi = disk::boundary_integral_disk(psi, {1.0});
  std::cout << "disk: int |xi - 1|^(-1/2) dlambda = " << bi.value << "\n";
  return rep.pass ? 0 : 1;
}
