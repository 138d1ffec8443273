#pragma once

// Nearest-neighbour walks from conductances on a tree: a finite core of
// weighted edges inside T_q, every other edge with conductance 1.

#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "riesz/tree_core.hpp"

namespace riesz {

class ConductanceTree {
 public:
  /// Edges are keyed by their lower endpoint; unlisted edges have conductance 1.
  ConductanceTree(const TreeParams& p, std::map<Vertex, Rational> edges) : params_(p), edges_(std::move(edges)) {
    for (const auto& [child, a] : edges_) {
      if (child.is_root()) throw Error(ErrorKind::InvalidArgument, "the root has no parent edge");
      child.validate(p);
      if (!(a > 0)) throw Error(ErrorKind::InvalidArgument, "conductance must be positive at " + child.to_string());
      core_depth_ = std::max(core_depth_, child.depth());
    }
  }

  static ConductanceTree homogeneous(const TreeParams& p) { return ConductanceTree(p, {}); }

  /// CSV rows: parent-address,child-label,numerator,denominator ('#' comments allowed).
  static ConductanceTree from_csv(std::istream& is, const TreeParams& p) {
    std::map<Vertex, Rational> edges;
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto cells = detail::split(line, ',');
      if (cells.size() != 4) throw Error(ErrorKind::ConfigInvalid, "conductance row needs 4 fields: " + line);
      const Vertex parent = Vertex::parse(cells[0]);
      const Label l = static_cast<Label>(std::stoul(cells[1]));
      const Rational a = make_rational(std::stoll(cells[2]), std::stoll(cells[3]));
      edges[parent.child(l)] = a;
    }
    return ConductanceTree(p, std::move(edges));
  }

  const TreeParams& params() const { return params_; }
  std::size_t core_depth() const { return core_depth_; }
  const std::map<Vertex, Rational>& edges() const { return edges_; }

  /// a(x, parent(x)).
  Rational up_conductance(const Vertex& x) const {
    auto it = edges_.find(x);
    return it == edges_.end() ? Rational(1) : it->second;
  }

  Rational conductance(const Vertex& x, const Vertex& y) const {
    if (!x.is_root() && x.parent() == y) return up_conductance(x);
    if (!y.is_root() && y.parent() == x) return up_conductance(y);
    throw Error(ErrorKind::InvalidArgument, x.to_string() + " and " + y.to_string() + " are not neighbours");
  }

  /// m(x) = sum of conductances at x.
  Rational total_conductance(const Vertex& x) const {
    Rational m = x.is_root() ? Rational(0) : up_conductance(x);
    for (Label l = 0; l < params_.children_at(x.depth()); ++l) m += up_conductance(x.child(l));
    return m;
  }

  Rational transition(const Vertex& x, const Vertex& y) const { return conductance(x, y) / total_conductance(x); }

  /// x is the root or the branch at x (with its parent edge) carries a listed conductance.
  bool in_core(const Vertex& x) const {
    if (x.is_root()) return true;
    if (x.depth() > core_depth_) return false;
    for (const auto& kv : edges_)
      if (x.is_prefix_of(kv.first)) return true;
    return false;
  }

  /// Every vertex of B(o, core depth + 1).
  std::vector<Vertex> represented() const {
    Ball b(params_, core_depth_ + 1);
    std::vector<Vertex> out;
    for (std::size_t i = 0; i < b.size(); ++i) out.push_back(b.vertex_at(i));
    return out;
  }

  struct Bounds {
    Rational m0, M0, a0;
  };
  /// Condition (i) constants, realized on the represented portion.
  Bounds bounds() const {
    Bounds b{total_conductance(Vertex()), total_conductance(Vertex()), Rational(1)};
    for (const auto& v : represented()) {
      const Rational m = total_conductance(v);
      b.m0 = std::min(b.m0, m);
      b.M0 = std::max(b.M0, m);
      if (!v.is_root()) b.a0 = std::min(b.a0, up_conductance(v));
    }
    return b;
  }

 private:
  TreeParams params_;
  std::map<Vertex, Rational> edges_;
  std::size_t core_depth_ = 0;
};

/// F(x, y) on directed edges, solved by elimination: F(x,y) = p(x,y) / (1 - sum_{w ~ x, w != y} p(x,w) F(w,x)).
class FTable {
 public:
  explicit FTable(const ConductanceTree& t) : tree_(t) {
    const auto q = Rational(t.params().q);
    exterior_ = Rational(1) / q;  // minimal root of (q+1)F = 1 + qF^2
    for (const auto& v : t.represented()) {
      if (v.is_root()) continue;
      up(v);
      down(v);
    }
  }

  const ConductanceTree& tree() const { return tree_; }

  /// F(x, parent(x)).
  const Rational& up(const Vertex& x) const {
    if (x.is_root()) throw Error(ErrorKind::InvalidArgument, "root has no parent");
    if (!tree_.in_core(x)) return exterior_;
    if (auto it = up_.find(x); it != up_.end()) return it->second;
    Rational s(0);
    const Rational m = tree_.total_conductance(x);
    for (Label l = 0; l < tree_.params().children_at(x.depth()); ++l) {
      const Vertex c = x.child(l);
      s += tree_.up_conductance(c) / m * up(c);
    }
    return up_[x] = edge_value(tree_.up_conductance(x) / m, s, x);
  }

  /// F(parent(y), y).
  const Rational& down(const Vertex& y) const {
    if (y.is_root()) throw Error(ErrorKind::InvalidArgument, "root has no parent");
    if (auto it = down_.find(y); it != down_.end()) return it->second;
    const Vertex x = y.parent();
    const Rational m = tree_.total_conductance(x);
    Rational s(0);
    for (Label l = 0; l < tree_.params().children_at(x.depth()); ++l) {
      const Vertex c = x.child(l);
      if (c == y) continue;
      s += tree_.up_conductance(c) / m * up(c);
    }
    if (!x.is_root()) s += tree_.up_conductance(x) / m * down(x);
    return down_[y] = edge_value(tree_.up_conductance(y) / m, s, y);
  }

  /// F(x, y) for neighbours.
  Rational edge(const Vertex& x, const Vertex& y) const {
    if (!x.is_root() && x.parent() == y) return up(x);
    if (!y.is_root() && y.parent() == x) return down(y);
    throw Error(ErrorKind::InvalidArgument, x.to_string() + " and " + y.to_string() + " are not neighbours");
  }

  /// F(x, y): product over the geodesic.
  Rational operator()(const Vertex& x, const Vertex& y) const {
    const std::size_t c = confluent_depth(x, y);
    Rational f(1);
    for (std::size_t d = x.depth(); d > c; --d) f *= up(x.prefix(d));
    for (std::size_t d = c + 1; d <= y.depth(); ++d) f *= down(y.prefix(d));
    return f;
  }

  /// G(y, y) = 1 / (1 - sum_w p(y,w) F(w,y)).
  Rational green_diag(const Vertex& y) const {
    const Rational m = tree_.total_conductance(y);
    Rational s(0);
    for (Label l = 0; l < tree_.params().children_at(y.depth()); ++l) {
      const Vertex c = y.child(l);
      s += tree_.up_conductance(c) / m * up(c);
    }
    if (!y.is_root()) s += tree_.up_conductance(y) / m * down(y);
    if (!(s < 1)) throw Error(ErrorKind::NotTransient, "return probability 1 at " + y.to_string());
    return Rational(1) / (Rational(1) - s);
  }

  Rational green(const Vertex& x, const Vertex& y) const { return (*this)(x, y) * green_diag(y); }

  /// rho(w, z) = F(w ^ z, o), 0 when w = z.
  Rational boundary_metric(const TreePoint& w, const TreePoint& z) const {
    if (w == z) return Rational(0);
    return (*this)(confluent(w, z), Vertex());
  }

  /// Largest F over the directed edges of the represented portion (condition (ii) asks for < 1).
  Rational delta() const {
    Rational d = exterior_;
    for (const auto& v : tree_.represented()) {
      if (v.is_root()) continue;
      d = std::max({d, up(v), down(v)});
    }
    return d;
  }

  /// F(x,y) - p(x,y) - sum_{w != y} p(x,w) F(w,x) F(x,y); zero for every solved edge.
  Rational residual(const Vertex& x, const Vertex& y) const {
    const Rational f = edge(x, y);
    Rational r = f - tree_.transition(x, y);
    for (const auto& w : neighbour_list(x)) {
      if (w == y) continue;
      r -= tree_.transition(x, w) * edge(w, x) * f;
    }
    return r;
  }

  std::vector<Vertex> neighbour_list(const Vertex& x) const {
    std::vector<Vertex> out;
    if (!x.is_root()) out.push_back(x.parent());
    for (Label l = 0; l < tree_.params().children_at(x.depth()); ++l) out.push_back(x.child(l));
    return out;
  }

 private:
  Rational edge_value(const Rational& p, const Rational& s, const Vertex& at) const {
    if (!(s < 1)) throw Error(ErrorKind::NotTransient, "F equation degenerate at " + at.to_string());
    Rational f = p / (Rational(1) - s);
    if (!(f < 1)) throw Error(ErrorKind::NotTransient, "F reaches 1 at " + at.to_string());
    return f;
  }

  ConductanceTree tree_;
  Rational exterior_;
  mutable std::map<Vertex, Rational> up_;
  mutable std::map<Vertex, Rational> down_;
};

/// Float fixed-point iteration of the upward F equations from 0 on the core,
/// with exterior edges held at 1/q.
inline std::map<Vertex, double> iterate_f_up(const ConductanceTree& t, int iterations) {
  std::map<Vertex, double> f;
  const double ext = 1.0 / t.params().q;
  std::vector<Vertex> core;
  for (const auto& v : t.represented())
    if (!v.is_root() && t.in_core(v)) core.push_back(v), f[v] = 0;
  auto value = [&](const Vertex& c) {
    auto it = f.find(c);
    return it == f.end() ? ext : it->second;
  };
  for (int it = 0; it < iterations; ++it) {
    std::map<Vertex, double> next = f;
    for (const auto& v : core) {
      const double m = to_double(t.total_conductance(v));
      const double p = to_double(t.up_conductance(v)) / m;
      double s = 0;
      for (Label l = 0; l < t.params().children_at(v.depth()); ++l) {
        const Vertex c = v.child(l);
        s += to_double(t.up_conductance(c)) / m * value(c);
      }
      next[v] = p + s * value(v);
    }
    f = std::move(next);
  }
  return f;
}

}  // namespace riesz
