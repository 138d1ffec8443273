#pragma once

// Truncated trees T^(t): the level k(t), the interface Gamma^(t), exact
// hitting probabilities of Gamma^(t) and the Green function of T^(t) at o.
//
// Only the spine (strict ancestors of Gamma^(t)) carries unknowns. Every other
// branch of T^(t) is free of Gamma, so from a free vertex the walk returns to
// its parent with probability 1/q and the branch folds into the equations.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riesz/tree_kernels.hpp"

namespace riesz {

/// The k >= 1 with q^-k <= t < q^-(k-1).
inline std::size_t level_of(const Rational& t, const TreeParams& p) {
  if (!(t > 0) || !(t < 1)) throw Error(ErrorKind::OutOfRange, "t must lie in (0,1), got " + to_string(t));
  std::size_t k = 1;
  Rational power(Rational(1) / Rational(p.q));
  while (t < power) {
    power /= p.q;
    ++k;
  }
  return k;
}

class Truncation {
 public:
  Truncation(BoundarySet e, Rational t) : e_(std::move(e)), t_(std::move(t)) {
    k_ = level_of(t_, e_.params());
    gamma_ = e_.gamma(k_);
    lambda_ = Rational(static_cast<long>(gamma_.size())) * cylinder_measure(k_, e_.params());
  }

  const TreeParams& params() const { return e_.params(); }
  const BoundarySet& boundary_set() const { return e_; }
  const Rational& t() const { return t_; }
  std::size_t k() const { return k_; }
  const std::vector<Vertex>& gamma() const { return gamma_; }
  /// lambda(E^(t)).
  const Rational& lambda_et() const { return lambda_; }

  bool is_gamma(const Vertex& x) const {
    return x.depth() == k_ && std::binary_search(gamma_.begin(), gamma_.end(), x);
  }
  /// Index of x in gamma(), or -1.
  long gamma_index(const Vertex& x) const {
    if (x.depth() != k_) return -1;
    auto it = std::lower_bound(gamma_.begin(), gamma_.end(), x);
    return it != gamma_.end() && *it == x ? static_cast<long>(it - gamma_.begin()) : -1;
  }
  /// x is a vertex of T^(t) (not in any chopped branch).
  bool contains(const Vertex& x) const {
    if (x.depth() < k_) return true;
    return !std::binary_search(gamma_.begin(), gamma_.end(), x.prefix(k_));
  }

 private:
  BoundarySet e_;
  Rational t_;
  std::size_t k_ = 1;
  std::vector<Vertex> gamma_;
  Rational lambda_;
};

struct HittingSolution {
  Vertex x;
  std::vector<Rational> per_gamma;  // nu_x^(t)(y), ordered like Truncation::gamma()
  Rational total;                   // nu_x^(t)(Gamma)
  Rational escape;                  // probability of never hitting Gamma, solved separately
};

class HittingSolver {
 public:
  /// With per_gamma = false only the total hitting probability is carried.
  explicit HittingSolver(const Truncation& tr, bool per_gamma = true) : tr_(tr), per_gamma_(per_gamma) {
    const std::size_t k = tr.k();
    std::map<Word, std::size_t> index;
    for (const auto& y : tr.gamma())
      for (std::size_t d = 0; d < k; ++d) index.emplace(y.prefix(d).word(), 0);
    spine_.reserve(index.size());
    for (auto& [w, i] : index) {
      i = spine_.size();
      spine_.push_back(Vertex(w));
    }
    index_ = std::move(index);
    // parents precede children in depth order
    order_.resize(spine_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return spine_[a].depth() < spine_[b].depth(); });
    const std::size_t width = per_gamma_ ? tr.gamma().size() : 1;
    hit_ = eliminate(width, false);
    escape_ = eliminate(1, true);
  }

  const Truncation& truncation() const { return tr_; }
  const std::vector<Vertex>& spine() const { return spine_; }

  /// Deepest spine vertex on the geodesic from o to x (x in T^(t)).
  const Vertex& anchor(const Vertex& x) const {
    for (std::size_t d = std::min(x.depth(), tr_.k() - 1) + 1; d-- > 0;) {
      auto it = index_.find(x.prefix(d).word());
      if (it != index_.end()) return spine_[it->second];
    }
    return spine_.front();
  }

  HittingSolution solve(const Vertex& x) const {
    HittingSolution s;
    s.x = x;
    const std::size_t width = per_gamma_ ? tr_.gamma().size() : 1;
    s.per_gamma.assign(width, Rational(0));
    if (const long g = tr_.gamma_index(x); g >= 0) {
      s.per_gamma[per_gamma_ ? static_cast<std::size_t>(g) : 0] = 1;
      s.total = 1;
      s.escape = 0;
      return s;
    }
    if (!tr_.contains(x)) throw Error(ErrorKind::OutsideDomain, x.to_string() + " lies in a chopped branch");
    const Vertex& a = anchor(x);
    const std::size_t ia = index_.at(a.word());
    const Rational f = qpow(tr_.params().q, -static_cast<long long>(x.depth() - a.depth()));
    s.total = 0;
    for (std::size_t j = 0; j < width; ++j) {
      s.per_gamma[j] = f * hit_[ia][j];
      s.total += s.per_gamma[j];
    }
    s.escape = Rational(1) - f * (Rational(1) - escape_[ia][0]);
    return s;
  }

  /// Residual of P h - h at x for the total hitting probability (x strictly inside T^(t)).
  Rational residual(const Vertex& x) const {
    const auto& p = tr_.params();
    Rational sum(0);
    if (!x.is_root()) sum += solve(x.parent()).total;
    for (Label l = 0; l < p.children_at(x.depth()); ++l) sum += solve(x.child(l)).total;
    return sum / Rational(p.q + 1) - solve(x).total;
  }

 private:
  using Row = std::vector<Rational>;

  // Leaf-first elimination of h(v) = alpha_v + beta_v h(parent), then back substitution.
  std::vector<Row> eliminate(std::size_t width, bool escape) const {
    const auto& p = tr_.params();
    const Rational s = Rational(1) / Rational(p.q);
    std::vector<Row> alpha(spine_.size(), Row(width, Rational(0)));
    std::vector<Rational> beta(spine_.size(), Rational(0));
    for (std::size_t oi = order_.size(); oi-- > 0;) {
      const std::size_t i = order_[oi];
      const Vertex& v = spine_[i];
      Rational diag(p.q + 1);
      Row rhs(width, Rational(0));
      for (Label l = 0; l < p.children_at(v.depth()); ++l) {
        const Vertex c = v.child(l);
        if (const long g = tr_.gamma_index(c); g >= 0) {
          if (!escape) rhs[per_gamma_ ? static_cast<std::size_t>(g) : 0] += 1;
        } else if (auto it = index_.find(c.word()); it != index_.end()) {
          for (std::size_t j = 0; j < width; ++j) rhs[j] += alpha[it->second][j];
          diag -= beta[it->second];
        } else {
          diag -= s;  // free branch: returns to v with probability 1/q
          if (escape) rhs[0] += Rational(p.q - 1) / Rational(p.q);
        }
      }
      if (diag == 0) throw Error(ErrorKind::SingularSystem, "singular hitting system at " + v.to_string());
      for (std::size_t j = 0; j < width; ++j) alpha[i][j] = rhs[j] / diag;
      beta[i] = v.is_root() ? Rational(0) : Rational(1) / diag;
    }
    std::vector<Row> value(spine_.size());
    for (std::size_t i : order_) {
      const Vertex& v = spine_[i];
      value[i] = alpha[i];
      if (!v.is_root()) {
        const Row& up = value[index_.at(v.parent().word())];
        for (std::size_t j = 0; j < width; ++j) value[i][j] += beta[i] * up[j];
      }
    }
    return value;
  }

  const Truncation& tr_;
  bool per_gamma_;
  std::vector<Vertex> spine_;
  std::map<Word, std::size_t> index_;
  std::vector<std::size_t> order_;
  std::vector<Row> hit_;
  std::vector<Row> escape_;
};

inline HittingSolution solve_hitting(const Truncation& tr, const Vertex& x) { return HittingSolver(tr).solve(x); }

/// g^(t)(x) = sum over Gamma of G_T(y,o) nu_x^(t)(y).
inline Rational green_correction(const Truncation& tr, const Rational& nu_total) {
  const auto& p = tr.params();
  return Rational(p.q) / Rational(p.q - 1) * qpow(p.q, -static_cast<long long>(tr.k())) * nu_total;
}

/// G_{T^(t)}(x, o); zero on Gamma^(t).
inline Rational truncated_green(const HittingSolver& solver, const Vertex& x) {
  const auto& tr = solver.truncation();
  if (tr.is_gamma(x)) return Rational(0);
  const auto h = solver.solve(x);
  return green(x, Vertex(), tr.params()) - green_correction(tr, h.total);
}

inline Rational truncated_green(const Truncation& tr, const Vertex& x) {
  return truncated_green(HittingSolver(tr, false), x);
}

struct GreenBoundReport {
  unsigned q = 2;
  Rational t;
  std::size_t k = 0;
  std::size_t gamma_size = 0;
  std::size_t radius = 0;
  std::size_t checked = 0;
  std::vector<Vertex> skipped;   // Gamma vertices inside the ball
  std::vector<Vertex> failures;  // violations of the chain
  Rational min_ratio{1};
  bool pass = true;
};

/// Checks G_T(x,o) >= G_{T^(t)}(x,o) >= ((q-1)/q) G_T(x,o) = rho(x, boundary) on T^(t) ∩ B(o, radius).
inline GreenBoundReport verify_green_bound(const Truncation& tr, std::size_t radius) {
  const auto& p = tr.params();
  GreenBoundReport rep;
  rep.q = p.q;
  rep.t = tr.t();
  rep.k = tr.k();
  rep.gamma_size = tr.gamma().size();
  rep.radius = radius;
  const HittingSolver solver(tr, false);
  const Ball ball(p, radius);
  const Rational lower_factor = Rational(p.q - 1) / Rational(p.q);
  const Rational a_inv = lower_factor;

  // status per vertex: anchor spine vertex and distance to it, or chopped
  constexpr std::size_t kChopped = static_cast<std::size_t>(-1);
  std::vector<std::size_t> dist_to_anchor(ball.size(), 0);
  std::vector<Rational> anchor_total(1);
  std::vector<std::size_t> anchor_of(ball.size(), 0);
  std::map<Word, std::size_t> spine_slot;
  for (const auto& v : solver.spine()) {
    spine_slot.emplace(v.word(), anchor_total.size());
    anchor_total.push_back(solver.solve(v).total);
  }
  std::vector<Rational> qneg(radius + 2);
  for (std::size_t i = 0; i < qneg.size(); ++i) qneg[i] = qpow(p.q, -static_cast<long long>(i));
  const Rational corr_unit = green_correction(tr, Rational(1));
  const Rational gfac = Rational(p.q) / Rational(p.q - 1);

  for (std::size_t d = 0; d <= radius; ++d) {
    for (std::size_t i = ball.layer_begin(d); i < ball.layer_end(d); ++i) {
      if (d > 0) {
        const std::size_t par = ball.parent_index(i, d);
        if (anchor_of[par] == kChopped) {
          anchor_of[i] = kChopped;
          continue;
        }
        const bool parent_on_spine = dist_to_anchor[par] == 0;
        const Vertex v = parent_on_spine ? ball.vertex_at(i) : Vertex();
        if (parent_on_spine && tr.is_gamma(v)) {
          rep.skipped.push_back(v);
          anchor_of[i] = kChopped;
          continue;
        }
        auto it = parent_on_spine ? spine_slot.find(v.word()) : spine_slot.end();
        if (it != spine_slot.end()) {
          anchor_of[i] = it->second;
          dist_to_anchor[i] = 0;
        } else {
          anchor_of[i] = anchor_of[par];
          dist_to_anchor[i] = dist_to_anchor[par] + 1;
        }
      } else {
        anchor_of[i] = spine_slot.at(Word());
      }
      const Rational nu = qneg[dist_to_anchor[i]] * anchor_total[anchor_of[i]];
      const Rational g = gfac * qneg[d];
      const Rational gt = g - corr_unit * nu;
      ++rep.checked;
      const Rational ratio = gt / g;
      if (ratio < rep.min_ratio) rep.min_ratio = ratio;
      if (!(g >= gt) || !(gt >= a_inv * g) || !(a_inv * g == qneg[d])) rep.failures.push_back(ball.vertex_at(i));
    }
  }
  rep.pass = rep.failures.empty();
  return rep;
}

}  // namespace riesz
