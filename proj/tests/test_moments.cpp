#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "riesz/batteries.hpp"

using namespace riesz;

namespace {

Rational R(long long n, long long d = 1) { return Rational(n) / Rational(d); }
Vertex V(const char* s) { return Vertex::parse(s); }

const TreeParams q2(2), q3(3);
const auto single = BoundarySet::finite_ends(q2, {End::parse("o:(0)")});
const QuadSurd sqrt2 = QuadSurd::sqrt_of(2);

}  // namespace

TEST(Upsilon, Values) {
  const auto psi = PsiSpec::power_law(R(1), R(2));
  const auto phi = PhiSpec::power_law(R(1), R(1));
  EXPECT_NEAR(upsilon_closed(psi, phi, 0.5).value, 2.0, 1e-14);
  EXPECT_NEAR(upsilon_stieltjes(psi, phi, 0.5).value, 2.0, 1e-8);
  EXPECT_EQ(upsilon(psi, PhiSpec::zero(), 0.25).value, 0.0);
}

TEST(Upsilon, PropertyClosedMatchesQuadrature) {
  for (auto p : {R(1, 2), R(1), R(3, 2), R(2)})
    for (auto a : {R(1, 4), R(1, 2), R(1)}) {
      const auto psi = PsiSpec::power_law(R(1), p);
      const auto phi = PhiSpec::power_law(R(1), a);
      for (double t : {0.9, 0.5, 0.1, 1e-3}) {
        const double c = upsilon_closed(psi, phi, t).value, s = upsilon_stieltjes(psi, phi, t).value;
        EXPECT_NEAR(s, c, 1e-8 * std::max(1.0, std::abs(c)));
      }
    }
}

TEST(Upsilon, ScalingExponent) {
  const auto psi = PsiSpec::power_law(R(1), R(2));
  const auto phi = PhiSpec::power_law(R(1), R(1, 2));
  // Upsilon(t) ~ t^(alpha - p): halving t multiplies it by about 2^(3/2)
  const double r = upsilon(psi, phi, 1e-6).value / upsilon(psi, phi, 2e-6).value;
  EXPECT_NEAR(r, std::pow(2.0, 1.5), 1e-3);
}

TEST(BoundaryIntegral, SingleEndHalfPower) {
  const auto g = psi_level<QuadSurd>(PsiSpec::power_law(R(1), R(1, 2)), 2);
  const auto enc = boundary_integral_tree(g, single, 40);
  EXPECT_EQ(enc.verdict, Verdict::FiniteCertified);
  // 2/3 + sum_j 2^{j/2} (1/3) 2^{-j}
  const QuadSurd expect = QuadSurd(R(1)) + QuadSurd(R(1, 3)) * sqrt2;
  EXPECT_EQ(enc.value(), expect);
  EXPECT_EQ(majorant_h(g, single, Vertex::root(), 40).value(), expect);
}

TEST(BoundaryIntegral, DivergentAtPowerOne) {
  const auto g = psi_level<Rational>(PsiSpec::power_law(R(1), R(1)), 2);
  const auto enc = boundary_integral_tree(g, single, 40);
  EXPECT_EQ(enc.verdict, Verdict::DivergentCertified);
  for (std::size_t j = 1; j < enc.partial_sums.size(); ++j) EXPECT_GT(enc.partial_sums[j], enc.partial_sums[j - 1]);
}

TEST(BoundaryIntegral, CappedIsBounded) {
  auto psi = PsiSpec::power_law(R(1), R(2));
  psi.cap = R(5);
  const auto g = psi_level<Rational>(psi, 2);
  const auto enc = boundary_integral_tree(g, single, 40);
  EXPECT_TRUE(enc.upper.has_value());
  EXPECT_LE(*enc.upper, R(5));
  psi.cap = R(1);
  const auto one = psi_level<Rational>(psi, 2);
  for (const char* s : {"o", "0/0/0", "1/0/1", "2/1"}) EXPECT_EQ(majorant_h(one, single, V(s), 40).value(), R(1));
}

TEST(BoundaryIntegral, MajorantAtDepthTwo) {
  const auto g = psi_level<double>(PsiSpec::power_law(R(1), R(1, 2)), 2);
  const auto at30 = majorant_h(g, single, V("0/0"), 30);
  ASSERT_TRUE(at30.upper.has_value());
  EXPECT_LT(*at30.upper - at30.lower, 1e-6);
  const auto at60 = majorant_h(g, single, V("0/0"), 60);
  EXPECT_NEAR(at60.lower, at30.lower, 1e-6);
}

TEST(Moments, FirstMomentDirac) {
  const auto mu = RieszMeasureT<Rational>::dirac(q2, V("0/1"));
  EXPECT_EQ(*first_moment(mu).total, R(1, 4));
  const auto [lhs, rhs] = momx_identity(mu);
  EXPECT_EQ(lhs, R(1, 2));
  EXPECT_EQ(rhs, R(1, 2));
  EXPECT_EQ(*first_moment(RieszMeasureT<Rational>(q2)).total, R(0));
}

TEST(Moments, RadialDivergence) {
  RieszMeasureT<Rational> mu(q2);
  mu.radial = RadialDensity<Rational>{{R(0)}, R(1), R(2)};
  const auto m = first_moment(mu, 10);
  EXPECT_EQ(m.verdict, Verdict::DivergentCertified);
  for (std::size_t n = 2; n < 10; ++n) EXPECT_EQ(m.level_sums[n], Rational(3 * (Integer(1) << (n - 2))));
}

TEST(Moments, PropertyIdentityOnRandomMeasures) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const TreeParams& p = trial % 2 ? q3 : q2;
    RieszMeasureT<Rational> mu(p);
    for (int k = 0; k < 4; ++k) mu.points[detail::random_vertex(rng, p.q, 6)] += R(1 + rng() % 9, 1 + rng() % 7);
    Rational pot(0);
    for (const auto& [y, m] : mu.points) pot += green(Vertex::root(), y, p) * m;
    const auto [lhs, rhs] = momx_identity(mu);
    EXPECT_EQ(lhs, pot);
    EXPECT_EQ(rhs, pot);
  }
}

TEST(Moments, ExtendedMoment) {
  const auto mu = RieszMeasureT<Rational>::dirac(q2, V("0/1"));
  EXPECT_EQ(*extended_moment(mu, PhiSpec::power_law(R(1), R(1)), single).total, R(1, 8));
  EXPECT_EQ(*extended_moment(mu, PhiSpec::zero(), single).total, R(0));
}

TEST(Moments, PropertyGreenWeightedIsScalarMultiple) {
  std::mt19937_64 rng(22);
  const auto phi = PhiSpec::power_law(R(1), R(1));
  for (int trial = 0; trial < 10; ++trial) {
    RieszMeasureT<Rational> mu(q2);
    for (int k = 0; k < 5; ++k) mu.points[detail::random_vertex(rng, 2, 6)] += R(1 + rng() % 5);
    const auto a = extended_moment(mu, phi, single, R(1), 8, false);
    const auto b = extended_moment(mu, phi, single, R(1), 8, true);
    ASSERT_EQ(a.partial_sums.size(), b.partial_sums.size());
    for (std::size_t i = 0; i < a.partial_sums.size(); ++i) EXPECT_EQ(b.partial_sums[i], R(2) * a.partial_sums[i]);
  }
}

TEST(Verifiers, Main1Example) {
  const auto ex = main1_example(2, 10, 40);
  const auto rep = verify_main1(ex.u, ex.psi, ex.e, {R(1, 4), R(1, 16)}, 40);
  EXPECT_TRUE(rep.applicable);
  EXPECT_TRUE(rep.pass);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
}

TEST(Verifiers, Main1NotApplicableForPowerTwo) {
  const auto xi = End::parse("o:(0)");
  const auto u = TreeFunction<Rational>::tabulate(q2, 8, [&](const Vertex& x) {
    const Rational k = martin(x, xi, q2);
    const Rational k2 = k * k;
    return k2 < R(64) ? k2 : R(64);
  });
  const auto rep = verify_main1(u, PsiSpec::power_law(R(1), R(2)), single, {R(1, 4)}, 40);
  EXPECT_FALSE(rep.applicable);
}

TEST(Verifiers, ConverseRadialCertified) {
  // u = 2^{|x|} has Riesz density 2^{|x|-1} off the root
  const auto u = TreeFunction<Rational>::tabulate(q2, 8, [](const Vertex& x) { return Rational(Integer(1) << x.depth()); });
  RieszMeasureT<Rational> mu(q2);
  mu.radial = RadialDensity<Rational>{{R(1)}, R(1), R(2)};
  const auto rep = verify_converse(u, PsiSpec::power_law(R(1), R(1)), single, std::optional(mu), 40);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.verdict, "divergent_certified");
}

TEST(Verifiers, ConverseRejectsBoundedU) {
  const auto u = TreeFunction<Rational>::tabulate(q2, 8, [](const Vertex&) { return R(1); });
  try {
    verify_converse(u, PsiSpec::power_law(R(1), R(1)), single);
    FAIL() << "bounded u accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::HypothesisViolated);
  }
}

TEST(Verifiers, Converse2Precondition) {
  const auto u = TreeFunction<QuadSurd>::tabulate(q2, 8, [](const Vertex& x) { return QuadSurd(Rational(Integer(1) << x.depth())); });
  const auto rep = verify_converse2(u, PsiSpec::power_law(R(1), R(1)), PhiSpec::power_law(R(1), R(1, 2)), single);
  EXPECT_FALSE(rep.applicable);
}

TEST(Verifiers, NuwTree) {
  for (unsigned q : {2u, 3u}) {
    const TreeParams p(q);
    const Truncation tr(BoundarySet::finite_ends(p, {End::parse("0:(1)")}), Rational(1) / Rational(q * q * q));
    EXPECT_TRUE(nuw_tree_check(tr).pass);
  }
}

TEST(Disk, Kernels) {
  EXPECT_NEAR(disk::green(0.5, 0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(disk::green_hyp_form(0.5, 0.0), std::log(2.0), 1e-14);
  EXPECT_NEAR(disk::poisson(0.5, 1.0), 3.0, 1e-14);
  for (double th : {0.0, 1.0, 2.5}) EXPECT_NEAR(disk::poisson(0.0, disk::unit(th)), 1.0, 1e-15);
  const auto m = disk::metrics(0.5, 0.0);
  EXPECT_NEAR(m.euclidean, 0.5, 1e-15);
  EXPECT_NEAR(m.hyperbolic, std::log(3.0), 1e-14);
  EXPECT_NEAR(disk::metrel_rhs(0.5), 0.5, 1e-15);
}

TEST(Disk, Densities) {
  EXPECT_NEAR(disk::measure_densities(0.0).hyp_area_density, 4.0, 1e-15);
  EXPECT_NEAR(disk::measure_densities(0.5).hyp_area_density, 64.0 / 9.0, 1e-13);
  EXPECT_NEAR(disk::measure_densities(0.99).ratio_to_exp, 4.0, 0.2);
}

TEST(Disk, PropertyGreenHarmonicOffPole) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int trial = 0; trial < 20; ++trial) {
    const disk::Complex w(u(rng), u(rng)), z(u(rng), u(rng));
    if (std::abs(z - w) < 0.1) continue;
    auto g = [&](const disk::Complex& s) { return disk::green(s, w); };
    EXPECT_NEAR(disk::five_point_laplacian(g, z, 1e-3), 0.0, 1e-3);
    EXPECT_NEAR(disk::circle_average(g, z, 0.05), g(z), 1e-10);
    EXPECT_NEAR(disk::green(z, w), disk::green(w, z), 1e-13);
  }
}

TEST(Disk, Blaschke) {
  EXPECT_NEAR(disk::blaschke_moment({{0.0, 1}}), 1.0, 1e-15);
  const auto geo = disk::blaschke_family({disk::BlaschkeFamily::Kind::Geometric, 0.5}, 60);
  EXPECT_TRUE(geo.finite);
  EXPECT_NEAR(*geo.total, 1.0, 1e-12);
  const auto harm = disk::blaschke_family({disk::BlaschkeFamily::Kind::Power, 1.0}, 10000);
  EXPECT_FALSE(harm.finite);
}

TEST(Disk, Nuw) {
  const auto r = disk::nuw_disk_bound(1.0, 0.5, 0.5);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.nu, 1.0 / 3);
  EXPECT_LT(r.nu, 0.5);
  EXPECT_THROW(disk::nuw_disk_bound(1.0, 0.0, 1.0), Error);
}

TEST(Disk, BoundaryIntegral) {
  const std::vector<disk::Complex> e{1.0};
  const auto half = disk::boundary_integral_disk(PsiSpec::power_law(R(1), R(1, 2)), e);
  ASSERT_FALSE(half.divergent);
  const double oracle = std::tgamma(0.5) / std::pow(std::tgamma(0.75), 2);
  EXPECT_NEAR(half.value, oracle, 1e-6 * oracle);
  EXPECT_TRUE(disk::boundary_integral_disk(PsiSpec::power_law(R(1), R(1)), e).divergent);
  auto capped = PsiSpec::power_law(R(1), R(2));
  capped.cap = R(3);
  EXPECT_LE(disk::boundary_integral_disk(capped, e).value, 3.0 + 1e-9);
}
