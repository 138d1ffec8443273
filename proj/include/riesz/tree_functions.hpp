#pragma once

// Functions on balls of T_q: transition operator, Laplacian, Riesz measures,
// Green potentials and the P^n iteration towards the least harmonic majorant.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "riesz/tree_kernels.hpp"

namespace riesz {

enum class Extension { Zero, Formula, Undefined };

template <class S>
class TreeFunction {
 public:
  using Exterior = std::function<S(const Vertex&)>;

  TreeFunction(const TreeParams& p, std::size_t radius, std::vector<S> values, Extension ext = Extension::Undefined,
               Exterior exterior = {})
      : ball_(p, radius), values_(std::move(values)), ext_(ext), exterior_(std::move(exterior)) {
    if (values_.size() != ball_.size()) throw Error(ErrorKind::InvalidArgument, "value count does not match ball size");
    if (ext_ == Extension::Formula && !exterior_) throw Error(ErrorKind::InvalidArgument, "formula extension needs a formula");
  }

  /// Tabulates f on B(o, radius). With Extension::Formula, f also supplies exterior values.
  static TreeFunction tabulate(const TreeParams& p, std::size_t radius, const std::function<S(const Vertex&)>& f,
                               Extension ext = Extension::Formula) {
    Ball b(p, radius);
    std::vector<S> vals;
    vals.reserve(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) vals.push_back(f(b.vertex_at(i)));
    return TreeFunction(p, radius, std::move(vals), ext, ext == Extension::Formula ? Exterior(f) : Exterior());
  }

  const Ball& ball() const { return ball_; }
  const TreeParams& params() const { return ball_.params(); }
  std::size_t radius() const { return ball_.radius(); }
  Extension extension() const { return ext_; }
  const std::vector<S>& values() const { return values_; }
  const S& at_index(std::size_t i) const { return values_[i]; }

  bool defined_at(const Vertex& v) const { return v.depth() <= radius() || ext_ != Extension::Undefined; }

  S operator()(const Vertex& v) const {
    if (v.depth() <= radius()) return values_[ball_.index_of(v)];
    switch (ext_) {
      case Extension::Zero: return S(0);
      case Extension::Formula: return exterior_(v);
      case Extension::Undefined: break;
    }
    throw Error(ErrorKind::OutsideDomain, "no value at " + v.to_string() + " beyond radius " + std::to_string(radius()));
  }

  /// Value at child l of a rim vertex.
  S exterior_child(const Vertex& parent, Label l) const { return (*this)(parent.child(l)); }

  /// Largest radius on which P can be applied everywhere.
  std::size_t operator_radius() const {
    if (ext_ != Extension::Undefined) return radius();
    if (radius() == 0) throw Error(ErrorKind::OutsideDomain, "ball of radius 0 has no interior");
    return radius() - 1;
  }

 private:
  Ball ball_;
  std::vector<S> values_;
  Extension ext_;
  Exterior exterior_;
};

inline std::vector<Vertex> neighbours(const Vertex& x, const TreeParams& p) {
  std::vector<Vertex> out;
  if (!x.is_root()) out.push_back(x.parent());
  for (Label l = 0; l < p.children_at(x.depth()); ++l) out.push_back(x.child(l));
  return out;
}

template <class S>
S apply_p(const TreeFunction<S>& f, const Vertex& x) {
  const auto& p = f.params();
  S sum(0);
  if (!x.is_root()) sum += f(x.parent());
  for (Label l = 0; l < p.children_at(x.depth()); ++l) {
    const Vertex c = x.child(l);
    if (!f.defined_at(c)) throw Error(ErrorKind::OutsideDomain, "neighbour " + c.to_string() + " has no value");
    sum += f(c);
  }
  return sum / S(p.q + 1);
}

template <class S>
S laplacian(const TreeFunction<S>& f, const Vertex& x) {
  return apply_p(f, x) - f(x);
}

/// P f at every vertex of B(o, r), r <= operator_radius(), indexed like the ball.
template <class S>
std::vector<S> apply_p_field(const TreeFunction<S>& f, std::optional<std::size_t> r = std::nullopt) {
  const std::size_t radius = r.value_or(f.operator_radius());
  if (radius > f.operator_radius()) throw Error(ErrorKind::OutsideDomain, "P needs values beyond the ball");
  const Ball& b = f.ball();
  const auto& p = f.params();
  const S denom(p.q + 1);
  std::vector<S> out(b.layer_end(radius));
  for (std::size_t d = 0; d <= radius; ++d) {
    for (std::size_t i = b.layer_begin(d); i < b.layer_end(d); ++i) {
      S sum(0);
      if (d > 0) sum += f.at_index(b.parent_index(i, d));
      const unsigned nc = p.children_at(d);
      if (d < b.radius()) {
        for (Label l = 0; l < nc; ++l) sum += f.at_index(b.child_index(i, d, l));
      } else {
        const Vertex v = b.vertex_at(i);
        for (Label l = 0; l < nc; ++l) sum += f.exterior_child(v, l);
      }
      out[i] = sum / denom;
    }
  }
  return out;
}

template <class S>
std::vector<S> laplacian_field(const TreeFunction<S>& f, std::optional<std::size_t> r = std::nullopt) {
  auto out = apply_p_field(f, r);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= f.at_index(i);
  return out;
}

struct SubharmonicCheck {
  bool yes = true;
  std::optional<Vertex> witness;
  explicit operator bool() const { return yes; }
};

template <class S>
SubharmonicCheck is_subharmonic(const TreeFunction<S>& f) {
  const auto lap = laplacian_field(f);
  for (std::size_t i = 0; i < lap.size(); ++i)
    if (scalar_sign(lap[i]) < 0) return {false, f.ball().vertex_at(i)};
  return {};
}

// ---------------------------------------------------------------------------
// Riesz measures

/// Radial density: head[n] for n < head.size(), then a * r^(n - head.size()).
template <class S>
struct RadialDensity {
  std::vector<S> head;
  S a{0};
  S r{0};

  S at(std::size_t n) const {
    if (n < head.size()) return head[n];
    S v = a;
    for (std::size_t i = head.size(); i < n; ++i) v *= r;
    return v;
  }
  std::size_t tail_start() const { return head.size(); }
};

template <class S>
struct RieszMeasureT {
  TreeParams params{2};
  std::map<Vertex, S> points;  // density w.r.t. counting measure
  std::optional<RadialDensity<S>> radial;

  RieszMeasureT() = default;
  explicit RieszMeasureT(const TreeParams& p) : params(p) {}

  static RieszMeasureT dirac(const TreeParams& p, const Vertex& y, S mass = S(1)) {
    RieszMeasureT m(p);
    m.points[y] = mass;
    return m;
  }

  S density(const Vertex& x) const {
    S v(0);
    if (auto it = points.find(x); it != points.end()) v += it->second;
    if (radial) v += radial->at(x.depth());
    return v;
  }
  bool is_zero() const {
    if (radial) return false;
    for (const auto& kv : points)
      if (scalar_sign(kv.second) != 0) return false;
    return true;
  }
  std::size_t max_depth() const {
    std::size_t d = 0;
    for (const auto& kv : points) d = std::max(d, kv.first.depth());
    return d;
  }
};

/// mu = Delta f on the operator ball of f. Throws NotSubharmonic at the first negative value.
template <class S>
RieszMeasureT<S> riesz_measure(const TreeFunction<S>& f) {
  const auto lap = laplacian_field(f);
  RieszMeasureT<S> mu(f.params());
  for (std::size_t i = 0; i < lap.size(); ++i) {
    if constexpr (!scalar_traits<S>::exact) {
      // rounding noise in harmonic regions
      if (std::abs(lap[i]) <= 1e-12 * std::max(1.0, std::abs(f.at_index(i)))) continue;
    }
    const int s = scalar_sign(lap[i]);
    if (s < 0) throw Error(ErrorKind::NotSubharmonic, "negative Laplacian at " + f.ball().vertex_at(i).to_string());
    if (s > 0) mu.points.emplace(f.ball().vertex_at(i), lap[i]);
  }
  return mu;
}

/// Sum over |y| = n of G(x, y), a closed form in (|x|, n).
inline Rational green_level_weight(const Vertex& x, std::size_t n, const TreeParams& p) {
  const std::size_t k = x.depth();
  const unsigned q = p.q;
  Rational s(0);
  for (std::size_t j = 0; j < std::min(k, n); ++j) {
    const unsigned cj = j == 0 ? q + 1 : q;
    // depth-n vertices branching off the ray to x at depth j
    s += Rational(cj - 1) * qpow(q, static_cast<long long>(n) - static_cast<long long>(j) - 1) *
         qpow(q, -(static_cast<long long>(k + n) - 2 * static_cast<long long>(j)));
  }
  if (n >= k) {
    s += Rational(sphere_size(n, p)) / Rational(sphere_size(k, p)) * qpow(q, -static_cast<long long>(n - k));
  } else {
    s += qpow(q, -static_cast<long long>(k - n));
  }
  return Rational(q) / Rational(q - 1) * s;
}

template <class S>
struct Potential {
  bool diverges = false;
  S value{0};
};

/// G mu(x). Radial tails are summed in closed form or reported divergent.
template <class S>
Potential<S> green_potential(const RieszMeasureT<S>& mu, const Vertex& x) {
  const auto& p = mu.params;
  Potential<S> out;
  for (const auto& [y, m] : mu.points) out.value += from_rational<S>(green(x, y, p)) * m;
  if (!mu.radial) return out;
  const auto& rd = *mu.radial;
  // w_n(x) is constant for n >= |x| (and n >= 1), so split at n* = max(head, |x|, 1).
  const std::size_t n_star = std::max<std::size_t>({rd.tail_start(), x.depth(), 1});
  for (std::size_t n = 0; n < n_star; ++n) out.value += from_rational<S>(green_level_weight(x, n, p)) * rd.at(n);
  if (scalar_sign(rd.a) == 0) return out;
  if (!(rd.r < S(1))) {
    out.diverges = true;
    return out;
  }
  const S w = from_rational<S>(green_level_weight(x, n_star, p));
  out.value += w * rd.at(n_star) / (S(1) - rd.r);
  return out;
}

// ---------------------------------------------------------------------------
// P^n iteration

template <class S>
struct MajorantResult {
  bool converged = false;
  std::size_t iterations = 0;
  std::optional<TreeFunction<S>> h;  // last iterate on the output ball
  std::vector<S> root_values;        // P^n f(o), n = 0..iterations
  S last_increment{0};               // max over the output ball of P^n f - P^(n-1) f
  double growth_ratio = 0;           // ratio of the last two root increments
};

/// Iterates P on the shrinking domain; stops when the increment on B(o, out_radius)
/// falls to `threshold` or after `iters` steps.
template <class S>
MajorantResult<S> harmonic_majorant(const TreeFunction<S>& f, std::size_t iters, const S& threshold,
                                    std::size_t out_radius = 0) {
  if (out_radius > f.radius() || iters > f.radius() - out_radius)
    throw Error(ErrorKind::RadiusExhausted, "iteration budget exceeds radius minus output radius");
  MajorantResult<S> res;
  const auto& p = f.params();
  std::vector<S> cur = f.values();
  std::size_t r = f.radius();
  res.root_values.push_back(cur[0]);
  std::vector<S> incs;
  for (std::size_t n = 0;; ++n) {
    if (n == iters) break;
    TreeFunction<S> g(p, r, cur);
    auto next = apply_p_field(g, r - 1);
    S inc(0);
    for (std::size_t i = 0; i < Ball(p, out_radius).size(); ++i) {
      S d = next[i] - cur[i];
      if (scalar_sign(d) < 0) d = -d;
      if (d > inc) inc = d;
    }
    cur = std::move(next);
    --r;
    res.iterations = n + 1;
    res.root_values.push_back(cur[0]);
    res.last_increment = inc;
    incs.push_back(cur[0] - res.root_values[res.root_values.size() - 2]);
    if (!(inc > threshold)) {
      res.converged = true;
      break;
    }
  }
  if (res.iterations == 0) res.converged = true;  // nothing to do: f itself
  if (incs.size() >= 2 && to_double(incs[incs.size() - 2]) != 0)
    res.growth_ratio = to_double(incs.back()) / to_double(incs[incs.size() - 2]);
  cur.resize(Ball(p, out_radius).size());
  res.h.emplace(p, out_radius, std::move(cur));
  return res;
}

struct DecompositionCheck {
  bool holds = true;
  std::optional<Vertex> witness;
  explicit operator bool() const { return holds; }
};

/// f = h - G mu pointwise on the common ball.
template <class S>
DecompositionCheck riesz_decomposition_check(const TreeFunction<S>& f, const TreeFunction<S>& h,
                                             const RieszMeasureT<S>& mu) {
  const std::size_t r = std::min(f.radius(), h.radius());
  const Ball b(f.params(), r);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const Vertex x = b.vertex_at(i);
    const auto g = green_potential(mu, x);
    if (g.diverges || !(f.at_index(i) == h.at_index(i) - g.value)) return {false, x};
  }
  return {};
}

// ---------------------------------------------------------------------------
// CSV rows: vertex,numerator,denominator

inline void write_csv(std::ostream& os, const TreeFunction<Rational>& f) {
  os << "vertex,numerator,denominator\n";
  for (std::size_t i = 0; i < f.ball().size(); ++i) {
    const Rational& v = f.at_index(i);
    os << f.ball().vertex_at(i).to_string() << ',' << numerator_of(v) << ',' << denominator_of(v) << '\n';
  }
}

inline TreeFunction<Rational> read_csv(std::istream& is, const TreeParams& p) {
  std::map<Vertex, Rational> rows;
  std::string line;
  std::size_t depth = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line.rfind("vertex", 0) == 0) continue;
    const auto cols = detail::split(line, ',');
    if (cols.size() != 3) throw Error(ErrorKind::InvalidArgument, "expected 3 columns: " + line);
    Vertex v = Vertex::parse(cols[0]);
    v.validate(p);
    depth = std::max(depth, v.depth());
    rows[v] = parse_rational(cols[1] + "/" + cols[2]);
  }
  Ball b(p, depth);
  std::vector<Rational> vals(b.size());
  std::vector<bool> seen(b.size(), false);
  for (auto& [v, r] : rows) {
    const auto i = b.index_of(v);
    vals[i] = r;
    seen[i] = true;
  }
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!seen[i]) throw Error(ErrorKind::InvalidArgument, "missing value for " + b.vertex_at(i).to_string());
  return TreeFunction<Rational>(p, depth, std::move(vals));
}

}  // namespace riesz
