#pragma once

// Check batteries shared by the acceptance runner and the lab driver.
// Each returns one pass/fail with a row per individual comparison.

#include <chrono>
#include <cmath>
#include <complex>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "riesz/disk_geom.hpp"
#include "riesz/mc_engine.hpp"
#include "riesz/moments.hpp"
#include "riesz/tree_kernels.hpp"
#include "riesz/truncation.hpp"
#include "riesz/weighted_tree.hpp"

namespace riesz {

struct BatteryRow {
  std::string op;
  std::string params;
  double value = 0;
  double reference = 0;
  double abs_err = 0;
  bool pass = true;
};

struct BatteryResult {
  std::string name;
  bool pass = true;
  std::string summary;
  std::vector<BatteryRow> rows;
  double seconds = 0;

  void add(BatteryRow r) {
    pass = pass && r.pass;
    rows.push_back(std::move(r));
  }
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.pass ? 0 : 1;
    return n;
  }
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void write_battery_csv(std::ostream& os, const BatteryResult& b) {
  os << "op,params,value,reference,abs_err,pass\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : b.rows)
    os << r.op << ",\"" << r.params << "\"," << num(r.value) << ',' << num(r.reference) << ',' << num(r.abs_err) << ','
       << (r.pass ? 1 : 0) << '\n';
}

namespace detail {

inline Word random_word(std::mt19937_64& rng, std::size_t len, unsigned q, bool from_root) {
  Word w(len);
  for (std::size_t i = 0; i < len; ++i) {
    const unsigned n = (from_root && i == 0) ? q + 1 : q;
    w[i] = static_cast<Label>(rng() % n);
  }
  return w;
}

inline Vertex random_vertex(std::mt19937_64& rng, unsigned q, std::size_t max_depth) {
  return Vertex(random_word(rng, rng() % (max_depth + 1), q, true));
}

inline BoundarySet random_ends(std::mt19937_64& rng, const TreeParams& p, std::size_t max_ends) {
  std::vector<End> ends;
  const std::size_t n = 1 + rng() % max_ends;
  for (std::size_t i = 0; i < n; ++i) {
    Word prefix = random_word(rng, rng() % 4, p.q, true);
    Word cycle = random_word(rng, 1 + rng() % 2, p.q, false);
    ends.emplace_back(std::move(prefix), std::move(cycle));
  }
  return BoundarySet::finite_ends(p, std::move(ends));
}

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Confluent depth of every vertex of B(o, r) with a target ray; label(d) < 0 past its end.
template <class LabelAt>
std::vector<std::uint8_t> confluent_scan(const Ball& b, LabelAt label) {
  std::vector<std::uint8_t> cd(b.size(), 0);
  for (std::size_t d = 0; d < b.radius(); ++d) {
    const long want = label(d);
    for (std::size_t i = b.layer_begin(d); i < b.layer_end(d); ++i)
      for (Label l = 0; l < b.params().children_at(d); ++l) {
        const std::size_t c = b.child_index(i, d, l);
        cd[c] = (cd[i] == d && want == static_cast<long>(l)) ? static_cast<std::uint8_t>(d + 1) : cd[i];
      }
  }
  return cd;
}

// Exact residual of P k - k (+ delta) where k depends on (depth, cd) only;
// the residual at a vertex is determined by (depth, cd, whether a child continues the ray).
template <class Kernel>
std::size_t kernel_scan(const Ball& b, const std::vector<std::uint8_t>& cd, std::size_t target_len, Kernel k,
                        bool green_delta, std::map<std::tuple<std::size_t, std::size_t, bool>, Rational>& memo) {
  const unsigned q = b.params().q;
  std::size_t bad = 0;
  for (std::size_t d = 0; d <= b.radius(); ++d)
    for (std::size_t i = b.layer_begin(d); i < b.layer_end(d); ++i) {
      const std::size_t c = cd[i];
      const bool cont = c == d && d < target_len;
      auto key = std::make_tuple(d, c, cont);
      auto it = memo.find(key);
      if (it == memo.end()) {
        Rational sum(0);
        if (d > 0) sum += k(d - 1, std::min(c, d - 1));
        const unsigned nc = b.params().children_at(d);
        for (unsigned l = 0; l < nc; ++l) sum += k(d + 1, (cont && l == 0) ? c + 1 : c);
        Rational r = sum / Rational(q + 1) - k(d, c);
        if (green_delta && c == d && d == target_len) r += 1;  // x = y
        it = memo.emplace(key, r).first;
      }
      if (it->second != 0) ++bad;
    }
  return bad;
}

}  // namespace detail

// 1. Delta K(., xi) = 0 and Delta G(., y) = -delta_y on B(o, radius), exact.
inline BatteryResult battery_kernel_identities(const std::vector<unsigned>& qs = {2, 3, 5}, std::size_t radius = 8,
                                               std::uint64_t seed = 1) {
  Stopwatch sw;
  BatteryResult res{"kernel identities", true, "", {}, 0};
  std::mt19937_64 rng(seed);
  std::size_t vertices = 0;
  for (unsigned q : qs) {
    const TreeParams p(q);
    const Ball b(p, radius);
    for (int trial = 0; trial < 3; ++trial) {
      const Vertex y = trial == 0 ? Vertex() : detail::random_vertex(rng, q, radius - 1);
      const auto cd = detail::confluent_scan(b, [&](std::size_t d) { return d < y.depth() ? long(y[d]) : -1L; });
      auto gk = [&](std::size_t depth, std::size_t c) {
        return green_at_distance(depth + y.depth() - 2 * c, p);
      };
      std::map<std::tuple<std::size_t, std::size_t, bool>, Rational> memo;
      const std::size_t bad = detail::kernel_scan(b, cd, y.depth(), gk, true, memo);
      vertices += b.size();
      res.add({"laplacian_green", "q=" + std::to_string(q) + " y=" + y.to_string(), double(bad), 0, double(bad), bad == 0});

      const End xi(detail::random_word(rng, rng() % 3, q, true), detail::random_word(rng, 1 + rng() % 2, q, false));
      const auto cdx = detail::confluent_scan(b, [&](std::size_t d) { return long(xi.label_at(d)); });
      auto mk = [&](std::size_t depth, std::size_t c) {
        return qpow(q, -(static_cast<long long>(depth) - 2 * static_cast<long long>(c)));
      };
      std::map<std::tuple<std::size_t, std::size_t, bool>, Rational> memo2;
      const std::size_t bad2 = detail::kernel_scan(b, cdx, std::size_t(-1), mk, false, memo2);
      vertices += b.size();
      res.add({"laplacian_martin", "q=" + std::to_string(q) + " xi=" + xi.to_string(), double(bad2), 0, double(bad2),
               bad2 == 0});
    }
  }
  res.seconds = sw.seconds();
  res.summary = std::to_string(vertices) + " vertex residuals, " + detail::fmt(res.seconds) + " s";
  return res;
}

// 2. G mu(o) = q/(q-1) sum q^-|x| mu(x) for random finitely supported mu.
inline BatteryResult battery_momx(std::size_t trials = 100, std::uint64_t seed = 2) {
  Stopwatch sw;
  BatteryResult res{"first-moment identity", true, "", {}, 0};
  std::mt19937_64 rng(seed);
  for (std::size_t n = 0; n < trials; ++n) {
    const unsigned q = 2 + static_cast<unsigned>(rng() % 4);
    const TreeParams p(q);
    RieszMeasureT<Rational> mu(p);
    const std::size_t pts = 1 + rng() % 8;
    for (std::size_t i = 0; i < pts; ++i)
      mu.points[detail::random_vertex(rng, q, 8)] +=
          make_rational(static_cast<long long>(1 + rng() % 20), static_cast<long long>(1 + rng() % 12));
    // independent left side: G(o,y) = q/(q-1) q^-d(o,y) summed pointwise
    Rational lhs(0);
    for (const auto& [y, m] : mu.points) lhs += green(Vertex(), y, p) * m;
    const auto [pot, rhs] = momx_identity(mu);
    const bool ok = lhs == rhs && pot == rhs;
    res.add({"momx", "q=" + std::to_string(q) + " points=" + std::to_string(mu.points.size()), to_double(rhs),
             to_double(lhs), std::abs(to_double(lhs - rhs)), ok});
  }
  res.seconds = sw.seconds();
  res.summary = std::to_string(trials) + " measures, " + std::to_string(res.failures()) + " mismatches";
  return res;
}

// 3. G_T >= G_T^(t) >= ((q-1)/q) G_T on B(o, k+3) minus the chopped branches.
inline BatteryResult battery_green_bound(const std::vector<unsigned>& qs = {2, 3}, std::size_t sets = 20,
                                         std::size_t levels = 6, std::uint64_t seed = 3) {
  Stopwatch sw;
  BatteryResult res{"truncated Green bound (tree)", true, "", {}, 0};
  std::mt19937_64 rng(seed);
  std::size_t checked = 0;
  Rational worst(1);
  for (unsigned q : qs) {
    const TreeParams p(q);
    for (std::size_t s = 0; s < sets; ++s) {
      const BoundarySet e = detail::random_ends(rng, p, 4);
      for (std::size_t j = 1; j <= levels; ++j) {
        const Truncation tr(e, qpow(q, -static_cast<long long>(j)));
        const auto rep = verify_green_bound(tr, tr.k() + 3);
        checked += rep.checked;
        worst = std::min(worst, rep.min_ratio);
        res.add({"green_bound", "q=" + std::to_string(q) + " E=" + e.to_string() + " t=" + to_string(tr.t()),
                 to_double(rep.min_ratio), to_double(Rational(q - 1) / Rational(q)), double(rep.failures.size()),
                 rep.pass});
      }
    }
  }
  res.seconds = sw.seconds();
  res.summary = std::to_string(res.rows.size()) + " configurations, " + std::to_string(checked) +
                " vertices, min ratio " + to_string(worst) + ", " + detail::fmt(res.seconds) + " s";
  return res;
}

// 4. nu_y(boundary of T_y) = q/(q+1) on the tree; nu_y(gamma_zeta) = alpha/pi > 1/3 on the disk.
inline BatteryResult battery_nuw(std::size_t disk_cases = 100, std::uint64_t seed = 4) {
  Stopwatch sw;
  BatteryResult res{"harmonic measure of Gamma", true, "", {}, 0};
  std::mt19937_64 rng(seed);
  for (unsigned q : {2U, 3U, 5U}) {
    const TreeParams p(q);
    for (int s = 0; s < 5; ++s) {
      const BoundarySet e = detail::random_ends(rng, p, 4);
      for (long long j = 1; j <= 4; ++j) {
        const Truncation tr(e, qpow(q, -j));
        const auto r = nuw_tree_check(tr);
        res.add({"nuw_tree", "q=" + std::to_string(q) + " E=" + e.to_string() + " t=" + to_string(tr.t()),
                 to_double(r.min_mass), to_double(Rational(q) / Rational(q + 1)), 0, r.pass});
      }
    }
  }
  std::uniform_real_distribution<double> unif(0, 1);
  for (std::size_t n = 0; n < disk_cases; ++n) {
    const double theta = 2 * disk::kPi * unif(rng);
    const double t = 0.01 + 0.98 * unif(rng);
    const Complex zeta = disk::unit(theta);
    const double phi_max = std::acos(t / 2) * 0.98;
    const double phi = (2 * unif(rng) - 1) * phi_max;
    const Complex y = zeta * (1.0 - t * disk::unit(phi));
    const auto r = disk::nuw_disk_bound(zeta, t, y);
    res.add({"nuw_disk", "theta=" + detail::fmt(theta) + " t=" + detail::fmt(t), r.nu, r.closed,
             std::abs(r.nu - r.closed), r.pass});
  }
  res.seconds = sw.seconds();
  res.summary = std::to_string(res.rows.size()) + " cases, " + detail::fmt(res.seconds) + " s";
  return res;
}

// 5. Simple random walk estimates against exact values.
inline BatteryResult battery_mc_tree(const McConfig& cfg, std::size_t configs = 100, std::uint64_t seed = 5) {
  Stopwatch sw;
  BatteryResult res{"Monte Carlo vs exact (tree)", true, "", {}, 0};
  std::mt19937_64 rng(seed);
  std::size_t hits = 0;
  for (std::size_t n = 0; n < configs; ++n) {
    McConfig c = cfg;
    c.seed = replica_seed(cfg.seed, static_cast<unsigned>(n));
    const unsigned q = 2 + static_cast<unsigned>(rng() % 2);
    const TreeParams p(q);
    const Vertex x = detail::random_vertex(rng, q, 3);
    McEstimate est;
    double exact = 0;
    std::string op, params;
    if (n % 3 == 0) {
      const Vertex y = detail::random_vertex(rng, q, 3);
      est = srw_cylinder_measure(p, x, y, c);
      exact = to_double(harmonic_measure_cylinder(x, y, p));
      op = "srw_cylinder_measure";
      params = "q=" + std::to_string(q) + " x=" + x.to_string() + " y=" + y.to_string();
    } else if (n % 3 == 1) {
      const Vertex y = detail::random_vertex(rng, q, 3);
      est = srw_expected_visits(p, x, y, c);
      exact = to_double(green(x, y, p));
      op = "srw_expected_visits";
      params = "q=" + std::to_string(q) + " x=" + x.to_string() + " y=" + y.to_string();
    } else {
      const BoundarySet e = detail::random_ends(rng, p, 3);
      const Truncation tr(e, qpow(q, -static_cast<long long>(2 + rng() % 3)));
      Vertex start = x;
      while (!tr.contains(start) || tr.is_gamma(start)) start = detail::random_vertex(rng, q, 3);
      est = srw_expected_visits(p, start, Vertex(), c, &tr);
      exact = to_double(truncated_green(tr, start));
      op = "truncated_visits";
      params = "q=" + std::to_string(q) + " E=" + e.to_string() + " t=" + to_string(tr.t()) + " x=" + start.to_string();
    }
    const bool ok = est.covers(exact);
    hits += ok ? 1 : 0;
    res.rows.push_back({op, params + " ci99=" + detail::fmt(est.ci99), est.mean, exact, std::abs(est.mean - exact), ok});
  }
  res.pass = hits * 100 >= 99 * configs;
  res.seconds = sw.seconds();
  res.summary = std::to_string(hits) + "/" + std::to_string(configs) + " within 3*ci99 at " +
                std::to_string(cfg.total_paths()) + " paths, " + detail::fmt(res.seconds) + " s";
  return res;
}

// 6. Walk-on-spheres estimate of G of D^(t) against (1/18) log(1/|z|) <= G <= log(1/|z|).
inline BatteryResult battery_wos_green(const McConfig& cfg, std::size_t points = 10) {
  Stopwatch sw;
  BatteryResult res{"truncated Green bound (disk, walk on spheres)", true, "", {}, 0};
  const std::vector<Complex> e{Complex(1, 0)};
  for (double t : {0.02, 0.05}) {
    std::size_t got = 0;
    for (std::size_t i = 0; got < points && i < 1000; ++i) {
      const double r = 0.05 + 0.9 * std::fmod(0.618034 * double(i + 1), 1.0);
      const double th = 2 * disk::kPi * std::fmod(0.4142136 * double(i + 1), 1.0);
      const Complex z = r * disk::unit(th);
      if (!(std::abs(z - e[0]) > 7 * t)) continue;
      McConfig c = cfg;
      c.seed = replica_seed(cfg.seed, static_cast<unsigned>(1000 * t + i));
      const auto est = wos_truncated_green_disk(z, e, t, c);
      const double g = std::log(1 / std::abs(z));
      const bool ok = est.mean >= g / 18 - 3 * est.ci99 && est.mean <= g + 3 * est.ci99;
      res.add({"wos_truncated_green", "t=" + detail::fmt(t) + " z=" + detail::fmt(z.real()) + "+" + detail::fmt(z.imag()) +
                                          "i ci99=" + detail::fmt(est.ci99),
               est.mean, g, std::abs(est.mean - g), ok});
      ++got;
    }
  }
  res.seconds = sw.seconds();
  res.summary = std::to_string(res.rows.size()) + " points, " + detail::fmt(res.seconds) + " s";
  return res;
}

// 7. Upsilon closed forms against quadrature; certified verdicts for a single end.
inline BatteryResult battery_upsilon() {
  Stopwatch sw;
  BatteryResult res{"moment calculus", true, "", {}, 0};
  const std::vector<Rational> ps{make_rational(1, 2), Rational(1), make_rational(3, 2), Rational(2)};
  const std::vector<Rational> alphas{make_rational(1, 4), make_rational(1, 2), Rational(1)};
  for (const auto& p : ps)
    for (const auto& a : alphas) {
      const auto psi = PsiSpec::power_law(Rational(1), p);
      const auto phi = PhiSpec::power_law(Rational(1), a);
      for (double t : {1e-4, 1e-2, 0.3}) {
        const double closed = upsilon_closed(psi, phi, t).value;
        const double quad = upsilon_stieltjes(psi, phi, t).value;
        const double rel = std::abs(closed - quad) / std::abs(closed);
        res.add({"upsilon", "p=" + to_string(p) + " alpha=" + to_string(a) + " t=" + detail::fmt(t), quad, closed, rel,
                 rel <= 1e-8});
      }
    }
  for (unsigned q : {2U, 3U}) {
    const TreeParams tp(q);
    const auto e = BoundarySet::finite_ends(tp, {End::parse("o:(0)")});
    for (const auto& p : ps) {
      const auto enc = boundary_integral_tree(psi_level<QuadSurd>(PsiSpec::power_law(Rational(1), p), q), e, 40);
      const bool want_finite = p < 1;
      const bool ok = want_finite ? enc.verdict == Verdict::FiniteCertified : enc.verdict == Verdict::DivergentCertified;
      res.add({"boundary_integral_tree", "q=" + std::to_string(q) + " p=" + to_string(p) + " " + verdict_name(enc.verdict),
               to_double(enc.lower), want_finite ? 1.0 : 0.0, 0, ok});
    }
  }
  res.seconds = sw.seconds();
  res.summary = std::to_string(res.rows.size()) + " comparisons";
  return res;
}

// The example satisfying the finite-majorant hypotheses: u = h/2 - G mu, Psi = t^-1/2, E one end.
struct Main1Example {
  PsiSpec psi = PsiSpec::power_law(Rational(1), make_rational(1, 2));
  BoundarySet e;
  RieszMeasureT<Rational> mu;
  TreeFunction<QuadSurd> u;
};

inline Main1Example main1_example(unsigned q = 2, std::size_t radius = 12, std::size_t L = 40) {
  const TreeParams p(q);
  auto e = BoundarySet::finite_ends(p, {End::parse("o:(0)")});
  PsiSpec psi = PsiSpec::power_law(Rational(1), make_rational(1, 2));
  RieszMeasureT<Rational> mu(p);
  mu.points[Vertex()] = make_rational(1, 8);
  mu.points[Vertex{1}] = make_rational(1, 16);
  mu.points[Vertex{0, 0}] = make_rational(1, 32);
  const auto g = psi_level<QuadSurd>(psi, q);
  const auto field = majorant_field(g, e, radius, L);
  const QuadSurd half(make_rational(1, 2));
  std::vector<QuadSurd> vals(field.ball.size());
  for (std::size_t i = 0; i < vals.size(); ++i)
    vals[i] = half * field.lower[i] - QuadSurd(green_potential(mu, field.ball.vertex_at(i)).value);
  auto ext = [g, e, mu, half, L](const Vertex& x) {
    return half * majorant_h(g, e, x, L).lower - QuadSurd(green_potential(mu, x).value);
  };
  TreeFunction<QuadSurd> u(p, radius, std::move(vals), Extension::Formula, ext);
  return {psi, e, mu, std::move(u)};
}

// 8. Radial divergence and the first-moment budget of the constructed example.
inline BatteryResult battery_divergence(std::size_t depth = 12) {
  Stopwatch sw;
  BatteryResult res{"divergence batteries", true, "", {}, 0};
  const TreeParams p(2);
  const auto u = TreeFunction<Rational>::tabulate(p, depth, [&](const Vertex& x) {
    return qpow(2, static_cast<long long>(x.depth()));
  });
  RieszMeasureT<Rational> known(p);
  known.radial = RadialDensity<Rational>{{Rational(1)}, Rational(1), Rational(2)};
  const auto mom = first_moment(known, depth + 1);
  for (std::size_t n = 1; n <= depth; ++n) {
    const Rational want = 3 * qpow(2, static_cast<long long>(n) - 2);
    res.add({"level_sum", "n=" + std::to_string(n), to_double(mom.level_sums[n]), to_double(want),
             std::abs(to_double(mom.level_sums[n] - want)), mom.level_sums[n] == want});
  }
  const auto e = BoundarySet::finite_ends(p, {End::parse("o:(0)")});
  const auto rep = verify_converse(u, PsiSpec::power_law(Rational(1), Rational(1)), e, std::optional(known), 40, depth + 1);
  res.add({"verify_converse", rep.verdict, rep.pass ? 1.0 : 0.0, 1.0, 0,
           rep.pass && rep.verdict == verdict_name(Verdict::DivergentCertified)});

  const auto ex = main1_example(2, depth);
  const std::vector<Rational> ts{make_rational(1, 4), make_rational(1, 16)};
  const auto rep1 = verify_main1(ex.u, ex.psi, ex.e, ts);
  for (const auto& c : rep1.checks) res.add({"main1_example", c.name + ": " + c.detail, c.pass ? 1.0 : 0.0, 1.0, 0, c.pass});
  res.seconds = sw.seconds();
  res.summary = "first-moment partial sums to depth " + std::to_string(depth) + "; " + rep1.certificate;
  return res;
}

// 9. Unit conductances reproduce the homogeneous kernels; a biased edge against simulation.
inline BatteryResult battery_weighted(const McConfig& cfg) {
  Stopwatch sw;
  BatteryResult res{"weighted tree regression", true, "", {}, 0};
  for (unsigned q : {2U, 3U}) {
    const TreeParams p(q);
    std::map<Vertex, Rational> unit;
    const Ball core(p, 2);
    for (std::size_t i = 1; i < core.size(); ++i) unit[core.vertex_at(i)] = Rational(1);
    const ConductanceTree t(p, unit);
    const FTable f(t);
    const Ball b(p, 3);
    bool f_ok = true, g_ok = true, rho_ok = true;
    for (std::size_t i = 1; i < b.size(); ++i) {
      const Vertex v = b.vertex_at(i);
      f_ok = f_ok && f.up(v) == Rational(1) / Rational(q) && f.down(v) == Rational(1) / Rational(q);
    }
    for (std::size_t i = 0; i < b.size(); i += 3)
      for (std::size_t j = 0; j < b.size(); j += 5) {
        const Vertex x = b.vertex_at(i), y = b.vertex_at(j);
        g_ok = g_ok && f.green(x, y) == green(x, y, p);
        rho_ok = rho_ok && f.boundary_metric(TreePoint(x), TreePoint(y)) == ultra_metric(x, y, p);
      }
    const End xi = End::parse("0:(1)");
    rho_ok = rho_ok && f.boundary_metric(TreePoint(Vertex{0, 0}), TreePoint(xi)) == ultra_metric(Vertex{0, 0}, xi, p);
    const std::string qs = "q=" + std::to_string(q);
    res.add({"unit_F", qs, f_ok ? 1.0 : 0.0, 1.0, 0, f_ok});
    res.add({"unit_green", qs, g_ok ? 1.0 : 0.0, 1.0, 0, g_ok});
    res.add({"unit_ultra", qs, rho_ok ? 1.0 : 0.0, 1.0, 0, rho_ok});
  }
  const TreeParams p(2);
  const ConductanceTree biased(p, {{Vertex{0}, Rational(10)}});
  const FTable f(biased);
  const Rational g = f.green(Vertex(), Vertex());
  const auto est = weighted_visits(biased, Vertex(), Vertex(), cfg);
  res.add({"biased_visits", "a(o,0)=10 ci99=" + detail::fmt(est.ci99), est.mean, to_double(g),
           std::abs(est.mean - to_double(g)), est.covers(to_double(g))});
  res.seconds = sw.seconds();
  res.summary = "biased G(o,o) = " + to_string(g) + ", estimate " + detail::fmt(est.mean);
  return res;
}

// 10. Disk formulas: Poisson normalization, Green identity, metric relation, Blaschke examples.
inline BatteryResult battery_disk() {
  Stopwatch sw;
  BatteryResult res{"disk formulas", true, "", {}, 0};
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 4; ++j) {
      const Complex z = (0.09 * i) * disk::unit(0.7 + 1.6 * j);
      const double v = disk::poisson_integral(z, [](const Complex&) { return 1.0; }).value;
      res.add({"poisson_normalization", "z=" + detail::fmt(z.real()) + "+" + detail::fmt(z.imag()) + "i", v, 1.0,
               std::abs(v - 1), std::abs(v - 1) <= 1e-10});
    }
  double worst_green = 0, worst_metrel = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      for (int k = 0; k < 10; ++k) {
        const Complex z = (0.095 * i + 0.01) * disk::unit(0.63 * j);
        const Complex w = (0.09 * k + 0.02) * disk::unit(1.1 * k + 0.3 * j + 0.2);
        if (std::abs(z - w) < 1e-3) continue;
        const double a = disk::green(z, w), b = disk::green_hyp_form(z, w);
        worst_green = std::max(worst_green, std::abs(a - b) / std::max(1.0, std::abs(a)));
        if (k == 0 && j == 0) {
          const double lhs = 1 - std::abs(z), rhs = disk::metrel_rhs(z);
          worst_metrel = std::max(worst_metrel, std::abs(lhs - rhs));
        }
      }
  for (int i = 0; i < 1000; ++i) {
    const Complex z = (0.999 * (i + 0.5) / 1000) * disk::unit(2.39996 * i);
    worst_metrel = std::max(worst_metrel, std::abs(1 - std::abs(z) - disk::metrel_rhs(z)));
  }
  res.add({"green_identity", "1000-point grid", worst_green, 0, worst_green, worst_green <= 1e-12});
  res.add({"metrel_identity", "1000-point grid", worst_metrel, 0, worst_metrel, worst_metrel <= 1e-12});
  const double single = disk::blaschke_moment({{Complex(0, 0), 1}});
  res.add({"blaschke_single_zero", "z=0", single, 1.0, std::abs(single - 1), single == 1.0});
  const auto geo = disk::blaschke_family({disk::BlaschkeFamily::Kind::Geometric, 0.5}, 60);
  res.add({"blaschke_geometric", "z_k=1-2^-k", *geo.total, 1.0, std::abs(*geo.total - 1),
           geo.finite && std::abs(*geo.total - 1) <= 1e-15 && std::abs(geo.partial_sums.back() - 1) <= 1e-15});
  const auto harm = disk::blaschke_family({disk::BlaschkeFamily::Kind::Power, 1.0}, 100000);
  res.add({"blaschke_harmonic", "z_k=1-1/k", harm.log_slope, 1.0, std::abs(harm.log_slope - 1),
           !harm.finite && std::abs(harm.log_slope - 1) < 1e-3});
  res.seconds = sw.seconds();
  res.summary = "green max rel err " + detail::fmt(worst_green) + ", metrel max err " + detail::fmt(worst_metrel);
  return res;
}

}  // namespace riesz
