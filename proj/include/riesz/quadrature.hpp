#pragma once

// Thin wrappers over Boost.Math quadrature and bracketing root finders.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include "riesz/error.hpp"

namespace riesz::quad {

struct Result {
  double value = 0;
  double error = 0;
};

/// Adaptive Gauss-Kronrod (61 points) on [a, b].
template <class F>
Result gk61(F&& f, double a, double b, double tol = 1e-13, unsigned max_depth = 12) {
  Result r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, max_depth, tol, &r.error);
  return r;
}

/// tanh-sinh on [a, b]; copes with endpoint singularities.
template <class F>
Result tanh_sinh(F&& f, double a, double b, double tol = 1e-12) {
  static boost::math::quadrature::tanh_sinh<double> integrator(12);
  Result r;
  double l1 = 0;
  auto g = [&f](double x) { return f(x); };
  r.value = integrator.integrate(g, a, b, tol, &r.error, &l1);
  return r;
}

/// Root of a monotone f on [lo, hi] (f(lo), f(hi) of opposite signs).
template <class F>
double bracket_root(F&& f, double lo, double hi) {
  std::uintmax_t iters = 200;
  const auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 3);
  const double flo = f(lo), fhi = f(hi);
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if ((flo < 0) == (fhi < 0)) throw Error(ErrorKind::InvalidArgument, "root not bracketed");
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  return 0.5 * (a + b);
}

}  // namespace riesz::quad
