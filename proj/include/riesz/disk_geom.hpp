#pragma once

// Unit disk formulas: metrics, kernels, measures, Blaschke moments, the
// harmonic-measure bound at Gamma^(t) and boundary integrals on the circle.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "riesz/moments.hpp"
#include "riesz/quadrature.hpp"

namespace riesz::disk {

using Complex = std::complex<double>;
constexpr double kPi = std::numbers::pi;

inline void require_interior(const Complex& z) {
  if (!(std::abs(z) < 1)) throw Error(ErrorKind::OutsideDomain, "point must lie in the open unit disk");
}

inline Complex unit(double theta) { return {std::cos(theta), std::sin(theta)}; }

struct Metrics {
  double euclidean = 0;
  double hyperbolic = 0;
};

inline double hyperbolic_distance(const Complex& z, const Complex& w) {
  require_interior(z);
  require_interior(w);
  const double a = std::abs(1.0 - z * std::conj(w));
  const double b = std::abs(z - w);
  return std::log((a + b) / (a - b));
}

inline Metrics metrics(const Complex& z, const Complex& w) { return {std::abs(z - w), hyperbolic_distance(z, w)}; }

/// 2 / (1 + e^{rho(z,0)}), which equals 1 - |z|.
inline double metrel_rhs(const Complex& z) { return 2.0 / (1.0 + std::exp(hyperbolic_distance(z, 0.0))); }

inline double green(const Complex& z, const Complex& w) {
  require_interior(z);
  require_interior(w);
  if (z == w) throw Error(ErrorKind::InvalidArgument, "Green function has a pole at z = w");
  return std::log(std::abs(1.0 - z * std::conj(w)) / std::abs(z - w));
}

/// -log tanh(rho/2).
inline double green_hyp_form(const Complex& z, const Complex& w) {
  return -std::log(std::tanh(hyperbolic_distance(z, w) / 2));
}

inline double poisson(const Complex& z, const Complex& xi) {
  require_interior(z);
  return (1 - std::norm(z)) / std::norm(xi - z);
}

inline double busemann(const Complex& z, const Complex& xi) {
  require_interior(z);
  return std::log(std::norm(xi - z) / (1 - std::norm(z)));
}

struct Kernels {
  double green = 0;
  double poisson = 0;
  double busemann = 0;
  double green_hyp_form = 0;
};

inline Kernels kernels(const Complex& z, const Complex& w, const Complex& xi) {
  return {disk::green(z, w), disk::poisson(z, xi), disk::busemann(z, xi), disk::green_hyp_form(z, w)};
}

struct Densities {
  double hyp_area_density = 0;         // 4 / (1-|z|^2)^2
  double lebesgue_vs_hyp_factor = 0;   // dm = factor * dm_H
  double ratio_to_exp = 0;             // factor * e^{2 rho(z,0)}, tends to 4
};

inline Densities measure_densities(const Complex& z) {
  require_interior(z);
  const double s = 1 - std::norm(z);
  Densities d;
  d.hyp_area_density = 4 / (s * s);
  d.lebesgue_vs_hyp_factor = s * s / 4;
  d.ratio_to_exp = d.lebesgue_vs_hyp_factor * std::exp(2 * hyperbolic_distance(z, 0.0));
  return d;
}

/// int phi(xi) P(z, xi) d lambda(xi), split at arg z.
template <class F>
quad::Result poisson_integral(const Complex& z, F&& phi, double tol = 1e-13) {
  require_interior(z);
  const double c = std::arg(z);
  auto f = [&](double th) { return phi(unit(th)) * poisson(z, unit(th)) / (2 * kPi); };
  quad::Result a = quad::gk61(f, c - kPi, c, tol, 20);
  const quad::Result b = quad::gk61(f, c, c + kPi, tol, 20);
  return {a.value + b.value, a.error + b.error};
}

/// nu_z(arc from theta0 to theta0 + width) by quadrature of P.
inline quad::Result arc_measure(const Complex& z, double theta0, double width, double tol = 1e-13) {
  require_interior(z);
  auto f = [&](double th) { return poisson(z, unit(th)) / (2 * kPi); };
  const double c = std::arg(z);
  std::vector<double> cuts{theta0, theta0 + width};
  for (double k = -2; k <= 2; ++k) {
    const double s = c + 2 * kPi * k;
    if (s > theta0 && s < theta0 + width) cuts.push_back(s);
  }
  std::sort(cuts.begin(), cuts.end());
  quad::Result r;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto piece = quad::gk61(f, cuts[i], cuts[i + 1], tol, 15);
    r.value += piece.value;
    r.error += piece.error;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Harmonic measure at Gamma^(t): nu_y(gamma_zeta) = alpha/pi

struct NuwDisk {
  double nu = 0;        // quadrature
  double alpha = 0;     // tangent angle at an intersection point
  double closed = 0;    // alpha / pi
  double error = 0;
  bool pass = false;    // agreement within 1e-8 and nu > 1/3
};

/// zeta on the unit circle, 0 < t < 1, y in the disk with |y - zeta| = t.
inline NuwDisk nuw_disk_bound(const Complex& zeta, double t, const Complex& y) {
  if (!(t > 0 && t < 1)) throw Error(ErrorKind::InvalidArgument, "t must lie in (0, 1)");
  if (std::abs(std::abs(zeta) - 1) > 1e-12) throw Error(ErrorKind::InvalidArgument, "zeta must lie on the unit circle");
  if (std::abs(std::abs(y - zeta) - t) > 1e-9) throw Error(ErrorKind::InvalidArgument, "y must satisfy |y - zeta| = t");
  require_interior(y);
  NuwDisk r;
  const double half = 2 * std::asin(t / 2);  // gamma_zeta = arc of half-width `half` around zeta
  const double th0 = std::arg(zeta);
  const auto q = arc_measure(y, th0 - half, 2 * half);
  r.nu = q.value;
  r.error = q.error;
  // at a = zeta e^{i half}: tangent of the unit circle leaving gamma_zeta, and of |z - zeta| = t entering the disk
  const Complex a = zeta * unit(half);
  const Complex t1 = Complex(0, 1) * a;
  Complex t2 = Complex(0, 1) * (a - zeta) / t;
  if (std::real(t2 * std::conj(-a)) < 0) t2 = -t2;
  r.alpha = std::acos(std::clamp(std::real(t1 * std::conj(t2)), -1.0, 1.0));
  r.closed = r.alpha / kPi;
  r.pass = std::abs(r.nu - r.closed) <= 1e-8 && r.nu > 1.0 / 3;
  return r;
}

// ---------------------------------------------------------------------------
// Blaschke moments

struct BlaschkeZero {
  Complex z;
  unsigned mult = 1;
};

inline double blaschke_moment(const std::vector<BlaschkeZero>& zeros) {
  double s = 0;
  for (const auto& b : zeros) {
    require_interior(b.z);
    s += b.mult * (1 - std::abs(b.z));
  }
  return s;
}

struct BlaschkeFamily {
  enum class Kind { Geometric, Power };  // z_k = 1 - r^k, or z_k = 1 - k^-s (k >= 1)
  Kind kind = Kind::Geometric;
  double param = 0.5;
};

struct BlaschkeVerdict {
  bool finite = false;
  std::vector<double> partial_sums;
  std::optional<double> total;
  double tail_bound = 0;      // sum beyond the listed terms (finite case)
  double log_slope = 0;       // d(partial)/d(log n) over the last decade (divergent case)
};

inline BlaschkeVerdict blaschke_family(const BlaschkeFamily& f, std::size_t terms) {
  if (terms < 10) throw Error(ErrorKind::InvalidArgument, "need at least 10 terms");
  BlaschkeVerdict v;
  double s = 0;
  for (std::size_t k = 1; k <= terms; ++k) {
    const double kk = static_cast<double>(k);
    s += f.kind == BlaschkeFamily::Kind::Geometric ? std::pow(f.param, kk) : std::pow(kk, -f.param);
    v.partial_sums.push_back(s);
  }
  const double n = static_cast<double>(terms);
  if (f.kind == BlaschkeFamily::Kind::Geometric) {
    if (!(f.param > 0 && f.param < 1)) throw Error(ErrorKind::InvalidArgument, "geometric ratio must lie in (0,1)");
    v.finite = true;
    v.total = f.param / (1 - f.param);
    v.tail_bound = std::pow(f.param, n + 1) / (1 - f.param);
    return v;
  }
  if (!(f.param > 0)) throw Error(ErrorKind::InvalidArgument, "power exponent must be positive");
  if (f.param > 1) {
    v.finite = true;
    v.tail_bound = std::pow(n, 1 - f.param) / (f.param - 1);
    if (f.param == 2) v.total = kPi * kPi / 6;
    return v;
  }
  const std::size_t lo = terms / 10;
  v.log_slope = (v.partial_sums[terms - 1] - v.partial_sums[lo - 1]) / std::log(n / static_cast<double>(lo));
  return v;
}

// ---------------------------------------------------------------------------
// Boundary integrals on the circle

struct DiskIntegral {
  bool divergent = false;
  double value = 0;
  double error = 0;
  std::string reason;
};

/// Exponent of the singularity of Psi at 0 and whether t^-p log-factors are integrable.
inline std::optional<std::string> disk_divergence(const PsiSpec& psi) {
  if (psi.cap) return std::nullopt;
  switch (psi.family) {
    case PsiSpec::Family::PowerLaw:
      if (psi.p >= 1) return "Psi ~ t^-" + to_string(psi.p) + " with p >= 1 is not integrable near E";
      break;
    case PsiSpec::Family::LogPower:
      if (psi.p > 1 || (psi.p == 1 && psi.log_exp >= -1)) return "log-power Psi is not integrable near E";
      break;
    case PsiSpec::Family::Tabulated:
      if (psi.tail_p >= 1) return "tabulated Psi tail t^-p with p >= 1 is not integrable near E";
      break;
  }
  return std::nullopt;
}

/// int over the circle of Psi(chordal distance to E) d lambda, E a finite set of unit points.
inline DiskIntegral boundary_integral_disk(const PsiSpec& psi, const std::vector<Complex>& e) {
  if (e.empty()) throw Error(ErrorKind::EmptySet, "E must be nonempty");
  DiskIntegral out;
  if (auto why = disk_divergence(psi)) {
    out.divergent = true;
    out.reason = *why;
    return out;
  }
  std::vector<double> ang;
  for (const auto& z : e) {
    if (std::abs(std::abs(z) - 1) > 1e-12) throw Error(ErrorKind::InvalidArgument, "E points must lie on the unit circle");
    double a = std::arg(z);
    if (a < 0) a += 2 * kPi;
    ang.push_back(a);
  }
  std::sort(ang.begin(), ang.end());
  ang.erase(std::unique(ang.begin(), ang.end()), ang.end());
  auto dist = [&](double th) {
    double d = 2;
    for (const auto& z : e) d = std::min(d, std::abs(unit(th) - z));
    return d;
  };
  auto f = [&](double th) { return psi(dist(th)) / (2 * kPi); };
  // pieces run from each point of E to the bisector with its neighbour
  const std::size_t n = ang.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = ang[i];
    const double b = i + 1 < n ? ang[i + 1] : ang[0] + 2 * kPi;
    const double mid = (a + b) / 2;
    auto left = [&](double s) { return f(a + s); };
    auto right = [&](double s) { return f(b - s); };
    const auto r1 = quad::tanh_sinh(left, 0.0, mid - a, 1e-12);
    const auto r2 = quad::tanh_sinh(right, 0.0, b - mid, 1e-12);
    out.value += r1.value + r2.value;
    out.error += r1.error + r2.error;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Doubling corollary: Phi = Psi^-eps when 1/Psi is doubling

struct DoublingCorollary {
  PhiSpec phi;                 // Psi^-eps for a power-law Psi
  double inv_psi_doubling = 0; // C with (1/Psi)(t/2) >= C (1/Psi)(t)
  bool doubling_holds = false;
  DiskIntegral psi_power;      // int Psi(dist)^{1-eps} d lambda
  bool upsilon_dominated = false;  // Upsilon <= Psi^{1-eps}/(1-eps) on a grid
};

inline DoublingCorollary doubling_corollary(const PsiSpec& psi, const Rational& eps, const std::vector<Complex>& e) {
  if (!psi.is_power_law()) throw Error(ErrorKind::InvalidArgument, "corollary is specialised to power-law Psi");
  if (!(eps > 0 && eps < 1)) throw Error(ErrorKind::InvalidArgument, "eps must lie in (0,1)");
  DoublingCorollary r;
  const double c = to_double(psi.c), p = to_double(psi.p), ed = to_double(eps);
  r.phi = PhiSpec::power_law(Rational(1), psi.p * eps);
  r.phi.c = Rational(std::pow(c, -ed));  // c^-eps, rounded
  r.inv_psi_doubling = std::pow(2.0, -p);
  PhiSpec inv = PhiSpec::power_law(Rational(1), psi.p);
  r.doubling_holds = check_doubling(inv, r.inv_psi_doubling, to_double(psi.diam));
  const auto reduced = PsiSpec::power_law(Rational(1), psi.p * (Rational(1) - eps), psi.diam);
  r.psi_power = boundary_integral_disk(reduced, e);
  r.psi_power.value *= std::pow(c, 1 - ed);
  r.upsilon_dominated = true;
  for (int i = 0; i < 40; ++i) {
    const double t = to_double(psi.diam) * std::pow(10.0, -0.2 * i);
    const double ups = upsilon(psi, r.phi, t).value;
    if (ups > std::pow(psi(t), 1 - ed) / (1 - ed) * (1 + 1e-12)) r.upsilon_dominated = false;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Numerical checks of harmonicity

/// Five-point Laplacian of f at z with step h.
template <class F>
double five_point_laplacian(F&& f, const Complex& z, double h) {
  return (f(z + h) + f(z - h) + f(z + Complex(0, h)) + f(z - Complex(0, h)) - 4 * f(z)) / (h * h);
}

/// Average of f over the circle of radius r about z.
template <class F>
double circle_average(F&& f, const Complex& z, double r) {
  auto g = [&](double th) { return f(z + r * unit(th)) / (2 * kPi); };
  return quad::gk61(g, 0.0, 2 * kPi, 1e-14, 20).value;
}

}  // namespace riesz::disk
