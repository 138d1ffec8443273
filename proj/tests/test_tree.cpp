#include <random>

#include <gtest/gtest.h>

#include "riesz/batteries.hpp"

using namespace riesz;

namespace {

Rational R(long long n, long long d = 1) { return Rational(n) / Rational(d); }
Vertex V(const char* s) { return Vertex::parse(s); }
End E(const char* s) { return End::parse(s); }

const TreeParams q2(2), q3(3), q5(5);

Vertex random_vertex(std::mt19937_64& rng, const TreeParams& p, std::size_t max_depth) {
  Vertex v;
  const std::size_t d = rng() % (max_depth + 1);
  for (std::size_t i = 0; i < d; ++i) v = v.child(static_cast<Label>(rng() % p.children_at(i)));
  return v;
}

}  // namespace

TEST(TreeCore, Confluent) {
  EXPECT_EQ(confluent(V("0/1"), V("0/2")), V("0"));
  EXPECT_EQ(confluent(Vertex::root(), V("2/0/1")), Vertex::root());
  EXPECT_EQ(confluent(E("1:(0)"), V("1/0/0/3")), V("1/0/0"));
}

TEST(TreeCore, Distance) {
  EXPECT_EQ(graph_distance(V("0/1"), V("0/1")), 0u);
  EXPECT_EQ(graph_distance(V("0/1"), V("0/2")), 2u);
  EXPECT_EQ(graph_distance(Vertex::root(), V("2/0/1")), 3u);
}

TEST(TreeCore, UltraMetric) {
  EXPECT_EQ(ultra_metric(V("0/1"), V("0/1"), q2), R(0));
  EXPECT_EQ(ultra_metric(V("0/1"), V("0/2"), q2), R(1, 2));
  EXPECT_EQ(distance_to_boundary(V("1/1/1"), q2), R(1, 8));
}

TEST(TreeCore, CylinderMeasure) {
  EXPECT_EQ(cylinder_measure(0, q2), R(1));
  EXPECT_EQ(cylinder_measure(1, q2), R(1, 3));
  EXPECT_EQ(cylinder_measure(3, q2), R(1, 12));
}

TEST(TreeCore, EndCanonicalForm) {
  EXPECT_EQ(E("0:(0/0)").to_string(), E("o:(0)").to_string());
  EXPECT_EQ(E("1:(0/1/0/1)").to_string(), E("1:(0/1)").to_string());
}

TEST(TreeCore, BoundarySetConfluence) {
  const auto e = BoundarySet::finite_ends(q2, {E("0:(0)")});
  EXPECT_EQ(e.confluent_depth_with(E("1:(0)")), std::optional<std::size_t>(0));
  EXPECT_EQ(ultra_metric(V("0/0/1"), E("0:(0)"), q2), R(1, 4));
  EXPECT_TRUE(e.contains(E("o:(0)")));
  EXPECT_EQ(e.measure(), R(0));
}

TEST(TreeCore, SphereSizeProperty) {
  for (unsigned q : {2u, 3u, 5u}) {
    const TreeParams p(q);
    for (std::size_t n = 1; n < 8; ++n) EXPECT_EQ(Rational(sphere_size(n, p)) * cylinder_measure(n, p), R(1));
  }
}

TEST(TreeKernels, Green) {
  EXPECT_EQ(green(V("0"), V("0"), q2), R(2));
  EXPECT_EQ(green_at_distance(3, q2), R(1, 4));
  EXPECT_EQ(green_at_distance(1, q3), R(1, 2));
}

TEST(TreeKernels, FirstPassage) {
  EXPECT_EQ(first_passage(V("1/2"), V("1/2"), q2), R(1));
  EXPECT_EQ(first_passage(V("0"), Vertex::root(), q2), R(1, 2));
  EXPECT_EQ(first_passage(Vertex::root(), V("3/4"), q5), R(1, 25));
  // minimal root of (q+1)F = 1 + qF^2
  for (unsigned q : {2u, 3u, 7u}) {
    const Rational f = first_passage(V("0"), Vertex::root(), TreeParams(q));
    EXPECT_EQ(Rational(q + 1) * f, 1 + Rational(q) * f * f);
    EXPECT_LT(f, R(1));
  }
}

TEST(TreeKernels, BusemannAndMartin) {
  const End xi = E("o:(0)");
  EXPECT_EQ(busemann(Vertex::root(), xi), 0);
  EXPECT_EQ(busemann(V("0/0/0"), xi), -3);
  EXPECT_EQ(busemann(V("1/0"), xi), 2);
  EXPECT_EQ(martin(Vertex::root(), xi, q2), R(1));
  EXPECT_EQ(martin(V("0/0/0"), xi, q2), R(8));
  EXPECT_EQ(martin(V("1/0"), E("0:(1)"), q2), R(1, 4));
}

TEST(TreeKernels, HarmonicMeasure) {
  EXPECT_EQ(harmonic_measure_cylinder(V("1"), Vertex::root(), q2), R(1));
  EXPECT_EQ(harmonic_measure_cylinder(Vertex::root(), V("2"), q2), R(1, 3));
  EXPECT_EQ(harmonic_measure_cylinder(V("0/1"), V("0/1"), q3), R(3, 4));
  EXPECT_EQ(harmonic_measure_cylinder(V("0/1/1/0"), V("0/1/1/0/1"), q2), R(1, 3));
}

TEST(TreeKernels, PropertyPartitionSumsToOne) {
  std::mt19937_64 rng(11);
  for (const auto& p : {q2, q3}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Vertex x = random_vertex(rng, p, 4);
      for (std::size_t depth = 1; depth <= 4; ++depth) {
        Rational s(0);
        Ball b(p, depth);
        for (std::size_t i = 0; i < b.size(); ++i)
          if (b.vertex_at(i).depth() == depth) s += harmonic_measure_cylinder(x, b.vertex_at(i), p);
        EXPECT_EQ(s, R(1));
      }
    }
  }
}

TEST(TreeKernels, PropertyGreenSymmetryAndFactorisation) {
  std::mt19937_64 rng(12);
  for (const auto& p : {q2, q3, q5}) {
    for (int trial = 0; trial < 50; ++trial) {
      const Vertex x = random_vertex(rng, p, 6), y = random_vertex(rng, p, 6);
      EXPECT_EQ(green(x, y, p), green(y, x, p));
      EXPECT_EQ(green(x, y, p), first_passage(x, y, p) * green(y, y, p));
      const Vertex c = confluent(x, y);
      EXPECT_EQ(first_passage(x, y, p), first_passage(x, c, p) * first_passage(c, y, p));
    }
  }
}

TEST(TreeKernels, PropertyUltrametricInequality) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const Vertex a = random_vertex(rng, q3, 6), b = random_vertex(rng, q3, 6), c = random_vertex(rng, q3, 6);
    EXPECT_LE(ultra_metric(a, c, q3), std::max(ultra_metric(a, b, q3), ultra_metric(b, c, q3)));
  }
}

TEST(TreeFunctions, Operators) {
  const auto c = TreeFunction<Rational>::tabulate(q2, 4, [](const Vertex&) { return R(7); });
  EXPECT_EQ(apply_p(c, V("0/1")), R(7));
  EXPECT_EQ(laplacian(c, V("0/1")), R(0));

  const auto g = TreeFunction<Rational>::tabulate(q2, 4, [](const Vertex& x) { return green(x, Vertex::root(), q2); });
  EXPECT_EQ(apply_p(g, V("1")), R(1));
  EXPECT_EQ(laplacian(g, Vertex::root()), R(-1));
  const auto sub = is_subharmonic(g);
  EXPECT_FALSE(sub.yes);
  EXPECT_EQ(*sub.witness, Vertex::root());

  const auto pw = TreeFunction<Rational>::tabulate(q2, 5, [](const Vertex& x) { return Rational(Integer(1) << x.depth()); });
  EXPECT_EQ(apply_p(pw, V("0/1")), R(6));
  EXPECT_EQ(laplacian(pw, V("0/1/1")), R(4));
  EXPECT_EQ(laplacian(pw, Vertex::root()), R(1));
}

TEST(TreeFunctions, MartinSquaredIsSubharmonic) {
  const End xi = E("o:(1)");
  const auto f = TreeFunction<Rational>::tabulate(q2, 8, [&](const Vertex& x) {
    const Rational k = martin(x, xi, q2);
    return Rational(k * k);
  });
  EXPECT_TRUE(is_subharmonic(f).yes);
}

TEST(TreeFunctions, RieszMeasureOfMartinMinusGreen) {
  const End xi = E("o:(0)");
  const Vertex y = V("1/0");
  auto hf = [&](const Vertex& x) { return martin(x, xi, q2); };
  const auto h = TreeFunction<Rational>::tabulate(q2, 6, hf);
  const auto f = TreeFunction<Rational>::tabulate(q2, 6, [&](const Vertex& x) { return Rational(hf(x) - green(x, y, q2)); });
  const auto mu = riesz_measure(f);
  EXPECT_EQ(mu.points.size(), 1u);
  EXPECT_EQ(mu.density(y), R(1));
  EXPECT_TRUE(riesz_decomposition_check(f, h, mu).holds);

  // perturbing h at one vertex breaks equality there
  auto vals = h.values();
  vals[3] += 1;
  const TreeFunction<Rational> h2(q2, 6, vals);
  const auto chk = riesz_decomposition_check(f, h2, mu);
  EXPECT_FALSE(chk.holds);
  EXPECT_EQ(*chk.witness, h.ball().vertex_at(3));
}

TEST(TreeFunctions, GreenPotential) {
  RieszMeasureT<Rational> mu = RieszMeasureT<Rational>::dirac(q2, V("0"));
  mu.points[V("1")] = R(1);
  mu.points[V("2")] = R(1);
  EXPECT_EQ(green_potential(mu, Vertex::root()).value, R(3));

  // mu(x) = 2^{|x|-1}: potential diverges
  RieszMeasureT<Rational> rad(q2);
  rad.radial = RadialDensity<Rational>{{R(0)}, R(1), R(2)};
  EXPECT_TRUE(green_potential(rad, Vertex::root()).diverges);
}

TEST(TreeFunctions, HarmonicMajorant) {
  const End xi = E("o:(0)");
  const auto k = TreeFunction<Rational>::tabulate(q2, 10, [&](const Vertex& x) { return martin(x, xi, q2); });
  const auto same = harmonic_majorant(k, 5, R(0), 2);
  EXPECT_TRUE(same.converged);
  EXPECT_EQ(same.iterations, 1u);

  const Vertex y = V("1");
  const auto f = TreeFunction<Rational>::tabulate(q2, 12, [&](const Vertex& x) { return Rational(martin(x, xi, q2) - green(x, y, q2)); });
  const auto m = harmonic_majorant(f, 10, R(0), 0);
  for (std::size_t i = 1; i < m.root_values.size(); ++i) EXPECT_GE(m.root_values[i], m.root_values[i - 1]);
  EXPECT_LT(m.root_values.back(), R(1));
}

TEST(TreeFunctions, PropertyLaplacianOfGreenIsDelta) {
  std::mt19937_64 rng(14);
  for (const auto& p : {q2, q3}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Vertex y = random_vertex(rng, p, 3);
      const auto f = TreeFunction<Rational>::tabulate(p, 5, [&](const Vertex& x) { return -green(x, y, p); });
      const auto lap = laplacian_field(f);
      for (std::size_t i = 0; i < lap.size(); ++i) EXPECT_EQ(lap[i], f.ball().vertex_at(i) == y ? R(1) : R(0));
    }
  }
}

TEST(TreeFunctions, CsvRoundTrip) {
  const auto f = TreeFunction<Rational>::tabulate(q3, 3, [](const Vertex& x) { return R(static_cast<long long>(x.depth()) + 1, 7); },
                                                  Extension::Zero);
  std::stringstream ss;
  write_csv(ss, f);
  const auto g = read_csv(ss, q3);
  EXPECT_EQ(g.values(), f.values());
}

TEST(Truncation, Level) {
  EXPECT_EQ(level_of(R(1, 2), q2), 1u);
  EXPECT_EQ(level_of(R(3, 10), q2), 2u);
  EXPECT_EQ(level_of(R(1, 9), q3), 2u);
}

TEST(Truncation, Gamma) {
  const Truncation one(BoundarySet::finite_ends(q2, {E("0:(1)")}), R(1, 16));
  EXPECT_EQ(one.gamma().size(), 1u);

  const Truncation two(BoundarySet::finite_ends(q2, {E("o:(0)"), E("o:(1)")}), R(1, 4));
  EXPECT_EQ(two.gamma(), (std::vector<Vertex>{V("0/0"), V("1/1")}));
  EXPECT_EQ(two.lambda_et(), R(1, 3));

  // two of two labels would give a set of positive measure
  EXPECT_THROW(BoundarySet::cantor(q2, Vertex::root(), {0, 1}), Error);
  const Truncation cantor(BoundarySet::cantor(q3, Vertex::root(), {0, 1}), R(1, 9));
  EXPECT_EQ(cantor.gamma().size(), 4u);
  EXPECT_EQ(cantor.lambda_et(), R(1, 3));
}

TEST(Truncation, Hitting) {
  const Truncation tr(BoundarySet::finite_ends(q2, {E("o:(0)")}), R(1, 4));
  const Vertex y = tr.gamma().front();
  EXPECT_EQ(solve_hitting(tr, y).total, R(1));
  for (const char* s : {"1", "1/0/1", "2/1/1/1"}) {
    const Vertex x = V(s);
    const auto sol = solve_hitting(tr, x);
    EXPECT_GE(sol.total, R(0));
    EXPECT_LE(sol.total + sol.escape, R(1));
    const auto pw = Rational(Integer(2) << (x.depth() - 1));  // q^{|x|-k+1} with k = 2
    EXPECT_LE(sol.total * pw, R(1));
  }
}

TEST(Truncation, GreenBound) {
  const Truncation tr(BoundarySet::finite_ends(q2, {E("o:(0)")}), R(1, 2));
  EXPECT_GE(truncated_green(tr, Vertex::root()), R(1));
  EXPECT_LE(truncated_green(tr, Vertex::root()), R(2));
  const auto rep = verify_green_bound(tr, 6);
  EXPECT_TRUE(rep.pass);
  EXPECT_GE(rep.min_ratio, R(1, 2));
  EXPECT_EQ(rep.skipped, std::vector<Vertex>{V("0")});

  const Truncation tr3(BoundarySet::finite_ends(q3, {E("0:(1)"), E("2/2:(0)"), E("3:(1/2)")}), R(1, 27));
  const auto rep3 = verify_green_bound(tr3, 6);
  EXPECT_TRUE(rep3.pass);
  EXPECT_GE(rep3.min_ratio, R(2, 3));
}

TEST(Truncation, PropertyGreenBoundRandomSets) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 6; ++trial) {
    const TreeParams& p = trial % 2 ? q3 : q2;
    const auto e = detail::random_ends(rng, p, 3);
    const Rational t = Rational(1) / Rational(Integer(p.q) * (1 + trial % 3));
    const auto rep = verify_green_bound(Truncation(e, t), 5);
    EXPECT_TRUE(rep.pass);
    EXPECT_GE(rep.min_ratio, Rational(p.q - 1) / Rational(p.q));
  }
}

TEST(Weighted, HomogeneousMatchesTree) {
  for (const auto& p : {q2, q3}) {
    std::map<Vertex, Rational> unit;
    Ball b(p, 2);
    for (std::size_t i = 1; i < b.size(); ++i) unit[b.vertex_at(i)] = R(1);
    const ConductanceTree t(p, unit);
    const FTable f(t);
    for (std::size_t i = 1; i < b.size(); ++i) {
      const Vertex v = b.vertex_at(i);
      EXPECT_EQ(f.up(v), Rational(1) / Rational(p.q));
      EXPECT_EQ(f.green(v, Vertex::root()), green(v, Vertex::root(), p));
      EXPECT_EQ(f.boundary_metric(v, V("0/0")), ultra_metric(v, V("0/0"), p));
    }
    EXPECT_EQ(f.green(Vertex::root(), Vertex::root()), Rational(p.q) / Rational(p.q - 1));
  }
}

TEST(Weighted, BiasedEdge) {
  const ConductanceTree t(q2, {{V("0"), R(10)}});
  const FTable f(t);
  EXPECT_GT(f.up(V("0")), R(1, 2));
  EXPECT_EQ(f.up(V("0")), R(10, 11));
  EXPECT_EQ(f.green(Vertex::root(), Vertex::root()), R(44, 7));
  EXPECT_GE(f.green(V("0"), V("0")), R(1));
  EXPECT_EQ(f(V("0/1"), Vertex::root()), f(V("0/1"), V("0")) * f(V("0"), Vertex::root()));
  EXPECT_EQ(f.boundary_metric(V("0/1/0"), V("0/1/1")), f(V("0/1"), Vertex::root()));
}
