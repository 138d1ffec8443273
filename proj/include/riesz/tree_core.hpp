#pragma once

// Geometry of the homogeneous tree T_q and its space of ends.
//
// Vertices are addressed by words over a root-asymmetric alphabet: the first
// label is in {0..q}, every later label in {0..q-1}. The root o is the empty
// word, |x| is the word length and the confluent of two points is their
// longest common prefix. Ends are eventually periodic words prefix.cycle^inf.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "riesz/error.hpp"
#include "riesz/scalar.hpp"

namespace riesz {

using Label = std::uint16_t;
using Word = std::vector<Label>;

struct TreeParams {
  unsigned q = 2;

  explicit TreeParams(unsigned branching = 2) : q(branching) {
    if (q < 2) throw Error(ErrorKind::InvalidArgument, "branching number q must be >= 2");
  }
  /// Number of labels available at a vertex of depth `depth`.
  unsigned children_at(std::size_t depth) const { return depth == 0 ? q + 1 : q; }

  friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline Word parse_word(std::string_view s) {
  Word w;
  if (s.empty() || s == "o") return w;
  for (const auto& part : split(s, '/')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
      throw Error(ErrorKind::InvalidArgument, "bad label '" + part + "' in address '" + std::string(s) + "'");
    const unsigned long v = std::stoul(part);
    if (v > 0xFFFF) throw Error(ErrorKind::InvalidArgument, "label too large in '" + std::string(s) + "'");
    w.push_back(static_cast<Label>(v));
  }
  return w;
}

inline std::string format_word(const Word& w) {
  if (w.empty()) return "o";
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i != 0) s += '/';
    s += std::to_string(w[i]);
  }
  return s;
}

}  // namespace detail

class Vertex {
 public:
  Vertex() = default;
  explicit Vertex(Word word) : word_(std::move(word)) {}
  Vertex(std::initializer_list<Label> labels) : word_(labels) {}

  static Vertex root() { return Vertex(); }
  static Vertex parse(std::string_view s) { return Vertex(detail::parse_word(s)); }

  const Word& word() const { return word_; }
  std::size_t depth() const { return word_.size(); }
  bool is_root() const { return word_.empty(); }
  Label operator[](std::size_t i) const { return word_[i]; }

  Vertex parent() const {
    if (is_root()) throw Error(ErrorKind::InvalidArgument, "root has no parent");
    return Vertex(Word(word_.begin(), word_.end() - 1));
  }
  Vertex child(Label label) const {
    Word w = word_;
    w.push_back(label);
    return Vertex(std::move(w));
  }
  /// Ancestor at the given depth (a prefix of this vertex).
  Vertex prefix(std::size_t depth) const {
    return Vertex(Word(word_.begin(), word_.begin() + static_cast<std::ptrdiff_t>(std::min(depth, this->depth()))));
  }
  bool is_prefix_of(const Vertex& other) const {
    return depth() <= other.depth() && std::equal(word_.begin(), word_.end(), other.word_.begin());
  }

  void validate(const TreeParams& p) const {
    for (std::size_t i = 0; i < word_.size(); ++i) {
      if (word_[i] >= p.children_at(i))
        throw Error(ErrorKind::InvalidArgument, "address " + to_string() + " is not a vertex of T_" + std::to_string(p.q));
    }
  }

  std::string to_string() const { return detail::format_word(word_); }

  friend auto operator<=>(const Vertex& a, const Vertex& b) {
    if (a.depth() != b.depth()) return a.depth() <=> b.depth();
    return a.word_ <=> b.word_;
  }
  friend bool operator==(const Vertex&, const Vertex&) = default;

 private:
  Word word_;
};

/// End given by the eventually periodic word prefix . cycle . cycle ...
class End {
 public:
  End(Word prefix, Word cycle) : prefix_(std::move(prefix)), cycle_(std::move(cycle)) {
    if (cycle_.empty()) throw Error(ErrorKind::InvalidArgument, "end cycle must be nonempty");
    canonicalize();
  }
  End(const Vertex& prefix, Word cycle) : End(prefix.word(), std::move(cycle)) {}

  /// "0/1:(2)" is prefix [0,1] with cycle [2]; "o:(0/1)" or ":(0/1)" has empty prefix.
  static End parse(std::string_view s) {
    const auto colon = s.find(':');
    if (colon == std::string_view::npos) throw Error(ErrorKind::InvalidArgument, "end literal needs ':(cycle)': " + std::string(s));
    std::string_view cyc = s.substr(colon + 1);
    if (cyc.size() < 3 || cyc.front() != '(' || cyc.back() != ')')
      throw Error(ErrorKind::InvalidArgument, "end cycle must be parenthesised: " + std::string(s));
    return End(detail::parse_word(s.substr(0, colon)), detail::parse_word(cyc.substr(1, cyc.size() - 2)));
  }

  const Word& prefix() const { return prefix_; }
  const Word& cycle() const { return cycle_; }

  Label label_at(std::size_t i) const {
    if (i < prefix_.size()) return prefix_[i];
    return cycle_[(i - prefix_.size()) % cycle_.size()];
  }
  /// The vertex at depth n on the ray from the root to this end.
  Vertex vertex_at(std::size_t n) const {
    Word w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = label_at(i);
    return Vertex(std::move(w));
  }

  void validate(const TreeParams& p) const {
    for (std::size_t i = 0; i < prefix_.size(); ++i)
      if (prefix_[i] >= p.children_at(i)) throw Error(ErrorKind::InvalidArgument, "end " + to_string() + " violates the label alphabet");
    for (Label l : cycle_)
      if (l >= p.q) throw Error(ErrorKind::InvalidArgument, "end " + to_string() + " violates the label alphabet");
  }

  std::string to_string() const {
    std::string s = prefix_.empty() ? std::string("o") : detail::format_word(prefix_);
    return s + ":(" + detail::format_word(cycle_) + ")";
  }

  friend auto operator<=>(const End&, const End&) = default;
  friend bool operator==(const End&, const End&) = default;

 private:
  void canonicalize() {
    const std::size_t n = cycle_.size();
    for (std::size_t d = 1; d <= n; ++d) {
      if (n % d != 0) continue;
      bool periodic = true;
      for (std::size_t i = d; i < n && periodic; ++i) periodic = cycle_[i] == cycle_[i - d];
      if (periodic) {
        cycle_.resize(d);
        break;
      }
    }
    while (!prefix_.empty() && prefix_.back() == cycle_.back()) {
      prefix_.pop_back();
      std::rotate(cycle_.rbegin(), cycle_.rbegin() + 1, cycle_.rend());
    }
  }

  Word prefix_;
  Word cycle_;
};

/// A point of the compactification: a vertex or an end.
using TreePoint = std::variant<Vertex, End>;

namespace detail {

constexpr std::size_t kInfiniteLength = static_cast<std::size_t>(-1);

inline std::size_t length_of(const Vertex& v) { return v.depth(); }
inline std::size_t length_of(const End&) { return kInfiniteLength; }
inline Label label_of(const Vertex& v, std::size_t i) { return v[i]; }
inline Label label_of(const End& e, std::size_t i) { return e.label_at(i); }

template <class A, class B>
std::size_t common_prefix_length(const A& a, const B& b) {
  std::size_t bound = std::min(length_of(a), length_of(b));
  if constexpr (std::is_same_v<A, End> && std::is_same_v<B, End>) {
    const std::size_t p = std::max(a.prefix().size(), b.prefix().size());
    bound = p + std::lcm(a.cycle().size(), b.cycle().size());
    for (std::size_t i = 0; i < bound; ++i)
      if (a.label_at(i) != b.label_at(i)) return i;
    throw Error(ErrorKind::EqualEnds, "confluent of an end with itself: " + a.to_string());
  } else {
    for (std::size_t i = 0; i < bound; ++i)
      if (label_of(a, i) != label_of(b, i)) return i;
    return bound;
  }
}

template <class A>
Vertex prefix_vertex(const A& a, std::size_t n) {
  if constexpr (std::is_same_v<A, End>) {
    return a.vertex_at(n);
  } else {
    return a.prefix(n);
  }
}

}  // namespace detail

/// Depth of the confluent w ^ z. Throws EqualEnds when both are the same end.
template <class A, class B>
std::size_t confluent_depth(const A& w, const B& z) {
  return detail::common_prefix_length(w, z);
}

inline std::size_t confluent_depth(const TreePoint& w, const TreePoint& z) {
  return std::visit([](const auto& a, const auto& b) { return detail::common_prefix_length(a, b); }, w, z);
}

/// Last common vertex of the geodesics from the root to w and to z.
template <class A, class B>
Vertex confluent(const A& w, const B& z) {
  return detail::prefix_vertex(w, detail::common_prefix_length(w, z));
}

inline Vertex confluent(const TreePoint& w, const TreePoint& z) {
  return std::visit([](const auto& a, const auto& b) { return confluent(a, b); }, w, z);
}

inline std::size_t graph_distance(const Vertex& x, const Vertex& y) {
  return x.depth() + y.depth() - 2 * confluent_depth(x, y);
}

/// rho_T(w,z) = q^(-|w ^ z|) for w != z, and 0 for w == z.
template <class A, class B>
Rational ultra_metric(const A& w, const B& z, const TreeParams& p) {
  if constexpr (std::is_same_v<A, B>) {
    if (w == z) return Rational(0);
  }
  return qpow(p.q, -static_cast<long long>(confluent_depth(w, z)));
}

inline Rational ultra_metric(const TreePoint& w, const TreePoint& z, const TreeParams& p) {
  return std::visit([&](const auto& a, const auto& b) { return ultra_metric(a, b, p); }, w, z);
}

/// rho_T(x, boundary) = q^(-|x|).
inline Rational distance_to_boundary(const Vertex& x, const TreeParams& p) {
  return qpow(p.q, -static_cast<long long>(x.depth()));
}

/// lambda(boundary of the branch T_y), the rotation invariant probability.
inline Rational cylinder_measure(std::size_t depth, const TreeParams& p) {
  if (depth == 0) return Rational(1);
  return Rational(1) / (Rational(p.q + 1) * qpow(p.q, static_cast<long long>(depth) - 1));
}
inline Rational cylinder_measure(const Vertex& y, const TreeParams& p) { return cylinder_measure(y.depth(), p); }

/// Tree analogue of Lebesgue measure: q^(-2|x|) against counting measure.
inline Rational lebesgue_weight(const Vertex& x, const TreeParams& p) {
  return qpow(p.q, -2 * static_cast<long long>(x.depth()));
}

/// Number of vertices at depth d.
inline Integer sphere_size(std::size_t depth, const TreeParams& p) {
  if (depth == 0) return Integer(1);
  Integer n(p.q + 1);
  for (std::size_t i = 1; i < depth; ++i) n *= p.q;
  return n;
}

// ---------------------------------------------------------------------------
// Closed sets of ends with lambda(E) = 0.

class BoundarySet {
 public:
  enum class Kind { FiniteEnds, CantorRule };

  static BoundarySet finite_ends(const TreeParams& p, std::vector<End> ends) {
    if (ends.empty()) throw Error(ErrorKind::EmptySet, "boundary set needs at least one end");
    for (const auto& e : ends) e.validate(p);
    std::sort(ends.begin(), ends.end());
    ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
    BoundarySet s(p, Kind::FiniteEnds);
    s.ends_ = std::move(ends);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < s.ends_.size(); ++i)
      for (std::size_t j = i + 1; j < s.ends_.size(); ++j)
        deepest = std::max(deepest, confluent_depth(s.ends_[i], s.ends_[j]) + 1);
    s.stable_ = std::max<std::size_t>(1, deepest);
    s.growth_ = 1;
    return s;
  }

  /// Ends below `base` whose labels after depth |base| all lie in `allowed`.
  static BoundarySet cantor(const TreeParams& p, Vertex base, std::vector<Label> allowed) {
    base.validate(p);
    std::sort(allowed.begin(), allowed.end());
    allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());
    if (allowed.empty()) throw Error(ErrorKind::EmptySet, "Cantor rule needs at least one allowed label");
    for (Label l : allowed)
      if (l >= p.q) throw Error(ErrorKind::InvalidArgument, "Cantor labels must be < q");
    if (allowed.size() >= p.q)
      throw Error(ErrorKind::InvalidArgument, "Cantor rule with m >= q labels has positive measure");
    BoundarySet s(p, Kind::CantorRule);
    s.base_ = std::move(base);
    s.allowed_ = std::move(allowed);
    s.stable_ = std::max<std::size_t>(1, s.base_.depth());
    s.growth_ = static_cast<unsigned>(s.allowed_.size());
    return s;
  }

  Kind kind() const { return kind_; }
  const TreeParams& params() const { return params_; }
  const std::vector<End>& ends() const { return ends_; }
  const Vertex& base() const { return base_; }
  const std::vector<Label>& allowed() const { return allowed_; }

  /// lambda(E); zero by construction.
  Rational measure() const { return Rational(0); }

  /// From this level on the level-k cylinders meeting E are mutually isomorphic
  /// and their number grows by growth() per level.
  std::size_t stable_level() const { return stable_; }
  unsigned growth() const { return growth_; }

  bool meets_cylinder(const Vertex& v) const {
    if (kind_ == Kind::FiniteEnds) {
      return std::any_of(ends_.begin(), ends_.end(), [&](const End& e) { return confluent_depth(v, e) == v.depth(); });
    }
    return cantor_consistent_length(v) == v.depth();
  }

  /// max over eta in E of |x ^ eta|.
  std::size_t confluent_depth_with(const Vertex& x) const {
    if (kind_ == Kind::FiniteEnds) {
      std::size_t best = 0;
      for (const auto& e : ends_) best = std::max(best, confluent_depth(x, e));
      return best;
    }
    return cantor_consistent_length(x);
  }

  /// max over eta in E of |xi ^ eta|, or nullopt when xi is in E.
  std::optional<std::size_t> confluent_depth_with(const End& xi) const {
    if (kind_ == Kind::FiniteEnds) {
      std::size_t best = 0;
      for (const auto& e : ends_) {
        if (e == xi) return std::nullopt;
        best = std::max(best, confluent_depth(xi, e));
      }
      return best;
    }
    const std::size_t b = base_.depth();
    const std::size_t lcp = confluent_depth(base_, xi);
    if (lcp < b) return lcp;
    // Labels after the base: prefix part is finite, cycle part repeats.
    const std::size_t horizon = std::max(xi.prefix().size(), b) + xi.cycle().size();
    for (std::size_t i = b; i < horizon; ++i)
      if (!is_allowed(xi.label_at(i))) return i;
    return std::nullopt;
  }

  bool contains(const End& xi) const { return !confluent_depth_with(xi).has_value(); }

  /// E ∩ boundary of T_v, or nullopt when empty.
  std::optional<BoundarySet> restrict_to(const Vertex& v) const {
    if (!meets_cylinder(v)) return std::nullopt;
    if (kind_ == Kind::FiniteEnds) {
      std::vector<End> inside;
      for (const auto& e : ends_)
        if (confluent_depth(v, e) == v.depth()) inside.push_back(e);
      return finite_ends(params_, std::move(inside));
    }
    if (v.depth() <= base_.depth()) return *this;
    return cantor(params_, v, allowed_);
  }

  /// |Gamma_k|: number of depth-k vertices whose branch boundary meets E.
  Integer gamma_count(std::size_t k) const {
    if (kind_ == Kind::FiniteEnds) {
      std::set<Word> seen;
      for (const auto& e : ends_) seen.insert(e.vertex_at(k).word());
      return Integer(seen.size());
    }
    if (k <= base_.depth()) return Integer(1);
    Integer n(1);
    for (std::size_t i = base_.depth(); i < k; ++i) n *= allowed_.size();
    return n;
  }

  /// The depth-k vertices whose branch boundary meets E, sorted.
  std::vector<Vertex> gamma(std::size_t k, std::size_t limit = 5'000'000) const {
    if (gamma_count(k) > limit) throw Error(ErrorKind::OutOfRange, "Gamma set too large to enumerate");
    std::vector<Vertex> out;
    if (kind_ == Kind::FiniteEnds) {
      for (const auto& e : ends_) out.push_back(e.vertex_at(k));
    } else if (k <= base_.depth()) {
      out.push_back(base_.prefix(k));
    } else {
      std::vector<Word> layer{base_.word()};
      for (std::size_t d = base_.depth(); d < k; ++d) {
        std::vector<Word> next;
        next.reserve(layer.size() * allowed_.size());
        for (const auto& w : layer)
          for (Label l : allowed_) {
            Word c = w;
            c.push_back(l);
            next.push_back(std::move(c));
          }
        layer = std::move(next);
      }
      for (auto& w : layer) out.emplace_back(std::move(w));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// lambda(E^(q^-k)) = |Gamma_k| * lambda(depth-k cylinder); equals 1 at k = 0.
  Rational level_measure(std::size_t k) const {
    if (k == 0) return Rational(1);
    return Rational(gamma_count(k)) * cylinder_measure(k, params_);
  }

  std::string to_string() const {
    std::string s;
    if (kind_ == Kind::FiniteEnds) {
      for (const auto& e : ends_) s += (s.empty() ? "" : ",") + e.to_string();
      return "ends{" + s + "}";
    }
    for (Label l : allowed_) s += (s.empty() ? "" : ",") + std::to_string(l);
    return "cantor{" + base_.to_string() + ";" + s + "}";
  }

 private:
  BoundarySet(const TreeParams& p, Kind k) : params_(p), kind_(k) {}

  bool is_allowed(Label l) const { return std::binary_search(allowed_.begin(), allowed_.end(), l); }

  /// Length of the longest prefix of v that is a prefix of some end of the Cantor set.
  std::size_t cantor_consistent_length(const Vertex& v) const {
    const std::size_t lcp = confluent_depth(v, base_);
    if (lcp < base_.depth() || v.depth() <= base_.depth()) return lcp;
    std::size_t n = base_.depth();
    while (n < v.depth() && is_allowed(v[n])) ++n;
    return n;
  }

  TreeParams params_;
  Kind kind_;
  std::vector<End> ends_;
  Vertex base_;
  std::vector<Label> allowed_;
  std::size_t stable_ = 1;
  unsigned growth_ = 1;
};

/// Exact rho_T distance from a vertex or end to E.
inline Rational dist_to_set(const Vertex& x, const BoundarySet& e) {
  return qpow(e.params().q, -static_cast<long long>(e.confluent_depth_with(x)));
}
inline Rational dist_to_set(const End& xi, const BoundarySet& e) {
  const auto d = e.confluent_depth_with(xi);
  if (!d) return Rational(0);
  return qpow(e.params().q, -static_cast<long long>(*d));
}
inline Rational dist_to_set(const TreePoint& p, const BoundarySet& e) {
  return std::visit([&](const auto& v) { return dist_to_set(v, e); }, p);
}

inline TreePoint parse_point(std::string_view s) {
  if (s.find(':') != std::string_view::npos) return End::parse(s);
  return Vertex::parse(s);
}

// ---------------------------------------------------------------------------
// Ball: dense breadth-first indexing of B(o, radius).

class Ball {
 public:
  Ball(const TreeParams& p, std::size_t radius) : params_(p), radius_(radius) {
    offsets_.push_back(0);
    std::size_t layer = 1;
    for (std::size_t d = 0; d <= radius; ++d) {
      offsets_.push_back(offsets_.back() + layer);
      layer *= (d == 0 ? p.q + 1 : p.q);
    }
  }

  const TreeParams& params() const { return params_; }
  std::size_t radius() const { return radius_; }
  std::size_t size() const { return offsets_.back(); }
  std::size_t layer_begin(std::size_t d) const { return offsets_[d]; }
  std::size_t layer_end(std::size_t d) const { return offsets_[d + 1]; }

  bool contains(const Vertex& v) const { return v.depth() <= radius_; }

  std::size_t depth_of(std::size_t index) const {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), index);
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
  }

  std::size_t index_of(const Vertex& v) const {
    if (v.depth() > radius_) throw Error(ErrorKind::OutsideDomain, "vertex " + v.to_string() + " outside ball");
    std::size_t i = 0;
    for (std::size_t k = 0; k < v.depth(); ++k) i = (k == 0 ? v[0] : i * params_.q + v[k]);
    return offsets_[v.depth()] + i;
  }

  Vertex vertex_at(std::size_t index) const {
    const std::size_t d = depth_of(index);
    std::size_t i = index - offsets_[d];
    Word w(d);
    for (std::size_t k = d; k-- > 1;) {
      w[k] = static_cast<Label>(i % params_.q);
      i /= params_.q;
    }
    if (d >= 1) w[0] = static_cast<Label>(i);
    return Vertex(std::move(w));
  }

  /// Index of the parent of the vertex with the given index (depth >= 1).
  std::size_t parent_index(std::size_t index, std::size_t depth) const {
    if (depth == 1) return 0;
    return offsets_[depth - 1] + (index - offsets_[depth]) / params_.q;
  }

  /// Index of child `label` of the vertex with the given index (depth < radius).
  std::size_t child_index(std::size_t index, std::size_t depth, Label label) const {
    if (depth == 0) return offsets_[1] + label;
    return offsets_[depth + 1] + (index - offsets_[depth]) * params_.q + label;
  }

 private:
  TreeParams params_;
  std::size_t radius_;
  std::vector<std::size_t> offsets_;
};

}  // namespace riesz
