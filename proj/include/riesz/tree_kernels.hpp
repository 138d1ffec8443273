#pragma once

// Closed-form kernels of simple random walk on T_q.

#include <cstddef>
#include <utility>
#include <vector>

#include "riesz/tree_core.hpp"

namespace riesz {

/// G_T(x,y) = q/(q-1) * q^(-d(x,y)).
inline Rational green_at_distance(std::size_t d, const TreeParams& p) {
  return Rational(p.q) / Rational(p.q - 1) * qpow(p.q, -static_cast<long long>(d));
}

inline Rational green(const Vertex& x, const Vertex& y, const TreeParams& p) {
  return green_at_distance(graph_distance(x, y), p);
}

/// F(x,y): probability of ever visiting y from x.
inline Rational first_passage(const Vertex& x, const Vertex& y, const TreeParams& p) {
  return qpow(p.q, -static_cast<long long>(graph_distance(x, y)));
}

/// hor(x, xi) = |x| - 2|x ^ xi|.
inline long long busemann(const Vertex& x, const End& xi) {
  return static_cast<long long>(x.depth()) - 2 * static_cast<long long>(confluent_depth(x, xi));
}

/// K(x, xi) = q^(-hor(x, xi)).
inline Rational martin(const Vertex& x, const End& xi, const TreeParams& p) {
  return qpow(p.q, -busemann(x, xi));
}

/// Pieces of the boundary of T_y on which j = |x ^ xi| is constant: (j, lambda-mass).
inline std::vector<std::pair<std::size_t, Rational>> confluent_split(const Vertex& x, const Vertex& y,
                                                                     const TreeParams& p) {
  std::vector<std::pair<std::size_t, Rational>> pieces;
  const std::size_t c = confluent_depth(x, y);
  if (c < y.depth() || x.depth() <= y.depth()) {
    // either y branches off the geodesic to x, or y lies below x
    pieces.emplace_back(c, cylinder_measure(y, p));
    return pieces;
  }
  // y is a proper ancestor of x
  for (std::size_t j = y.depth(); j < x.depth(); ++j)
    pieces.emplace_back(j, cylinder_measure(j, p) - cylinder_measure(j + 1, p));
  pieces.emplace_back(x.depth(), cylinder_measure(x, p));
  return pieces;
}

/// nu_x(boundary of T_y) as the integral of K(x,.) against lambda.
inline Rational harmonic_measure_cylinder(const Vertex& x, const Vertex& y, const TreeParams& p) {
  Rational total(0);
  const auto n = static_cast<long long>(x.depth());
  for (const auto& [j, mass] : confluent_split(x, y, p)) total += qpow(p.q, 2 * static_cast<long long>(j) - n) * mass;
  return total;
}

}  // namespace riesz
