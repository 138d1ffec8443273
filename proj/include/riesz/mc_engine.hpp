#pragma once

// Monte-Carlo oracles: random walks on T_q (plain, absorbed at Gamma^(t), or
// driven by conductances) and walk-on-spheres in the unit disk.
//
// Tree walks are stopped once they sit `margin` levels below the last vertex
// that could still matter; the walk returns from there with probability
// at most q^-margin.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "riesz/truncation.hpp"
#include "riesz/weighted_tree.hpp"

namespace riesz {

struct McConfig {
  std::uint64_t seed = 0x5eed2024;
  unsigned replicas = 8;
  std::uint64_t paths = 125'000;  // per replica
  unsigned margin = 30;
  unsigned threads = 1;
  std::uint64_t max_steps = 200'000;
  double wos_eps = 1e-6;

  std::uint64_t total_paths() const { return replicas * paths; }
};

struct McEstimate {
  double mean = 0;
  double variance = 0;
  std::uint64_t n = 0;
  double ci99 = 0;
  std::uint64_t discarded = 0;

  bool covers(double exact, double k = 3) const { return std::abs(mean - exact) <= k * ci99; }
};

class Accumulator {
 public:
  void add(double v) {
    sum_ += v;
    sumsq_ += v * v;
    ++n_;
  }
  void discard() { ++discarded_; }
  void merge(const Accumulator& o) {
    sum_ += o.sum_;
    sumsq_ += o.sumsq_;
    n_ += o.n_;
    discarded_ += o.discarded_;
  }
  McEstimate estimate() const {
    McEstimate e;
    e.n = n_;
    e.discarded = discarded_;
    if (n_ == 0) return e;
    const double n = static_cast<double>(n_);
    e.mean = sum_ / n;
    e.variance = n_ > 1 ? std::max(0.0, (sumsq_ - n * e.mean * e.mean) / (n - 1)) : 0.0;
    e.ci99 = 2.576 * std::sqrt(e.variance / n);
    return e;
  }

 private:
  double sum_ = 0;
  double sumsq_ = 0;
  std::uint64_t n_ = 0;
  std::uint64_t discarded_ = 0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t replica_seed(std::uint64_t master, unsigned replica) {
  return splitmix64(master ^ splitmix64(0xa0761d6478bd642fULL + replica));
}

/// Thread count from RIESZ_LAB_THREADS, else `fallback`.
inline unsigned threads_from_env(unsigned fallback = 1) {
  if (const char* s = std::getenv("RIESZ_LAB_THREADS")) {
    const long v = std::strtol(s, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return fallback;
}

using Rng = std::mt19937_64;

inline unsigned uniform_below(Rng& rng, unsigned n) {
  return static_cast<unsigned>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Runs cfg.paths paths in each replica; path(rng, accs) feeds `outputs` accumulators.
/// Replicas are merged in index order, so results do not depend on the thread count.
template <class Path>
std::vector<McEstimate> run_replicas(const McConfig& cfg, std::size_t outputs, Path path) {
  std::vector<std::vector<Accumulator>> per(cfg.replicas, std::vector<Accumulator>(outputs));
  auto work = [&](unsigned r) {
    Rng rng(replica_seed(cfg.seed, r));
    for (std::uint64_t i = 0; i < cfg.paths; ++i) path(rng, per[r]);
  };
  const unsigned nt = std::max(1U, std::min(cfg.threads, cfg.replicas));
  if (nt == 1) {
    for (unsigned r = 0; r < cfg.replicas; ++r) work(r);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (unsigned r = t; r < cfg.replicas; r += nt) work(r);
      });
    for (auto& th : pool) th.join();
  }
  std::vector<Accumulator> total(outputs);
  for (const auto& rep : per)
    for (std::size_t k = 0; k < outputs; ++k) total[k].merge(rep[k]);
  std::vector<McEstimate> out;
  for (const auto& a : total) out.push_back(a.estimate());
  return out;
}

template <class Path>
McEstimate run_single(const McConfig& cfg, Path path) {
  return run_replicas(cfg, 1, [&](Rng& rng, std::vector<Accumulator>& acc) { path(rng, acc[0]); })[0];
}

namespace detail {

/// Simple random walk on T_q tracking m = |v ^ target|.
struct SrwWalker {
  unsigned q;
  const Word& target;
  Word word;
  std::size_t m = 0;

  SrwWalker(unsigned q_, const Word& t, const Word& start) : q(q_), target(t), word(start) {
    word.reserve(start.size() + 128);
    while (m < word.size() && m < target.size() && word[m] == target[m]) ++m;
  }

  std::size_t depth() const { return word.size(); }
  bool at_target() const { return m == target.size() && word.size() == m; }

  void step(Rng& rng) {
    const std::size_t d = word.size();
    if (d == 0) {
      push(static_cast<Label>(uniform_below(rng, q + 1)));
      return;
    }
    const unsigned k = uniform_below(rng, q + 1);
    if (k == 0) {
      if (m == d) --m;
      word.pop_back();
    } else {
      push(static_cast<Label>(k - 1));
    }
  }

  void push(Label l) {
    const std::size_t d = word.size();
    if (m == d && d < target.size() && target[d] == l) ++m;
    word.push_back(l);
  }
};

}  // namespace detail

/// nu_x(boundary of T_y) by simple random walk.
inline McEstimate srw_cylinder_measure(const TreeParams& p, const Vertex& x, const Vertex& y, const McConfig& cfg) {
  return run_single(cfg, [&](Rng& rng, Accumulator& acc) {
    detail::SrwWalker w(p.q, y.word(), x.word());
    for (std::uint64_t s = 0;; ++s) {
      if (w.depth() - w.m >= cfg.margin) {
        acc.add(w.m == y.depth() ? 1.0 : 0.0);
        return;
      }
      if (s == cfg.max_steps) {
        acc.discard();
        return;
      }
      w.step(rng);
    }
  });
}

/// Expected visits to y from x, optionally killed on Gamma^(t).
inline McEstimate srw_expected_visits(const TreeParams& p, const Vertex& x, const Vertex& y, const McConfig& cfg,
                                      const Truncation* tr = nullptr) {
  std::vector<Word> gamma;
  std::size_t k = 0;
  if (tr) {
    for (const auto& g : tr->gamma()) gamma.push_back(g.word());
    std::sort(gamma.begin(), gamma.end());
    k = tr->k();
  }
  return run_single(cfg, [&](Rng& rng, Accumulator& acc) {
    detail::SrwWalker w(p.q, y.word(), x.word());
    double visits = 0;
    for (std::uint64_t s = 0;; ++s) {
      if (tr && w.depth() == k && std::binary_search(gamma.begin(), gamma.end(), w.word)) break;
      if (w.at_target()) visits += 1;
      if (w.depth() - w.m >= cfg.margin) break;
      if (s == cfg.max_steps) {
        acc.discard();
        return;
      }
      w.step(rng);
    }
    acc.add(visits);
  });
}

/// Hitting distribution of Gamma^(t) from x: one estimate per Gamma vertex, then escape.
inline std::vector<McEstimate> srw_gamma_hitting(const Truncation& tr, const Vertex& x, const McConfig& cfg) {
  const auto& gamma = tr.gamma();
  const std::size_t k = tr.k();
  const Word none;
  return run_replicas(cfg, gamma.size() + 1, [&](Rng& rng, std::vector<Accumulator>& acc) {
    detail::SrwWalker w(tr.params().q, none, x.word());
    std::size_t hit = gamma.size();
    for (std::uint64_t s = 0;; ++s) {
      if (w.depth() == k) {
        const long gi = tr.gamma_index(Vertex(w.word));
        if (gi >= 0) {
          hit = static_cast<std::size_t>(gi);
          break;
        }
      }
      if (w.depth() >= k + cfg.margin) break;
      if (s == cfg.max_steps) {
        for (auto& a : acc) a.discard();
        return;
      }
      w.step(rng);
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i].add(i == hit ? 1.0 : 0.0);
  });
}

namespace detail {

/// Transition laws of a conductance walk on B(o, core depth), as cumulative sums
/// (parent first, then children); deeper vertices step uniformly.
struct WeightedLaw {
  unsigned q;
  std::size_t core;
  Ball ball;
  std::vector<std::vector<double>> cumulative;

  explicit WeightedLaw(const ConductanceTree& t) : q(t.params().q), core(t.core_depth()), ball(t.params(), t.core_depth()) {
    cumulative.resize(ball.size());
    for (std::size_t i = 0; i < ball.size(); ++i) {
      const Vertex v = ball.vertex_at(i);
      const double m = to_double(t.total_conductance(v));
      double c = 0;
      if (!v.is_root()) cumulative[i].push_back(c += to_double(t.up_conductance(v)) / m);
      for (Label l = 0; l < t.params().children_at(v.depth()); ++l)
        cumulative[i].push_back(c += to_double(t.up_conductance(v.child(l))) / m);
      cumulative[i].back() = 1.0;
    }
  }
};

class WeightedWalker {
 public:
  WeightedWalker(const WeightedLaw& law, const Word& target, const Word& start) : law_(law), target_(target) {
    word_.reserve(start.size() + 128);
    index_.reserve(start.size() + 128);
    index_.push_back(0);
    for (Label l : start) push(l);
  }

  std::size_t depth() const { return word_.size(); }
  bool at_target() const { return m_ == target_.size() && word_.size() == m_; }
  /// Levels below both the target branch point and the weighted core.
  std::size_t clearance() const {
    const std::size_t floor = std::max(m_, law_.core);
    return word_.size() > floor ? word_.size() - floor : 0;
  }

  void step(Rng& rng) {
    const std::size_t d = word_.size();
    if (d > law_.core) {
      const unsigned k = uniform_below(rng, law_.q + 1);
      if (k == 0) {
        pop();
      } else {
        push(static_cast<Label>(k - 1));
      }
      return;
    }
    const auto& cum = law_.cumulative[index_.back()];
    const double u = uniform01(rng);
    const auto k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (d == 0) {
      push(static_cast<Label>(k));
    } else if (k == 0) {
      pop();
    } else {
      push(static_cast<Label>(k - 1));
    }
  }

 private:
  void push(Label l) {
    const std::size_t d = word_.size();
    if (m_ == d && d < target_.size() && target_[d] == l) ++m_;
    index_.push_back(d < law_.core ? law_.ball.child_index(index_.back(), d, l) : 0);
    word_.push_back(l);
  }
  void pop() {
    if (m_ == word_.size()) --m_;
    word_.pop_back();
    index_.pop_back();
  }

  const WeightedLaw& law_;
  const Word& target_;
  Word word_;
  std::vector<std::size_t> index_;
  std::size_t m_ = 0;
};

}  // namespace detail

/// Probability that the conductance walk from x ever visits y (F(x,y)).
inline McEstimate weighted_hit(const ConductanceTree& t, const Vertex& x, const Vertex& y, const McConfig& cfg) {
  const detail::WeightedLaw law(t);
  return run_single(cfg, [&](Rng& rng, Accumulator& acc) {
    detail::WeightedWalker w(law, y.word(), x.word());
    for (std::uint64_t s = 0;; ++s) {
      if (w.at_target()) {
        acc.add(1.0);
        return;
      }
      if (w.clearance() >= cfg.margin) {
        acc.add(0.0);
        return;
      }
      if (s == cfg.max_steps) {
        acc.discard();
        return;
      }
      w.step(rng);
    }
  });
}

/// Expected visits to y of the conductance walk from x (G(x,y)).
inline McEstimate weighted_visits(const ConductanceTree& t, const Vertex& x, const Vertex& y, const McConfig& cfg) {
  const detail::WeightedLaw law(t);
  return run_single(cfg, [&](Rng& rng, Accumulator& acc) {
    detail::WeightedWalker w(law, y.word(), x.word());
    double visits = 0;
    for (std::uint64_t s = 0;; ++s) {
      if (w.at_target()) visits += 1;
      if (w.clearance() >= cfg.margin) break;
      if (s == cfg.max_steps) {
        acc.discard();
        return;
      }
      w.step(rng);
    }
    acc.add(visits);
  });
}

// ---------------------------------------------------------------------------
// Walk-on-spheres in the unit disk

using Complex = std::complex<double>;

/// Counter-clockwise boundary arc {e^{i theta} : from <= theta <= from + width}.
struct Arc {
  double from = 0;
  double width = 0;

  bool contains(double theta) const {
    const double two_pi = 2 * std::numbers::pi;
    double d = std::fmod(theta - from, two_pi);
    if (d < 0) d += two_pi;
    return d <= width;
  }
};

inline bool in_arcs(double theta, const std::vector<Arc>& arcs) {
  return std::any_of(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.contains(theta); });
}

inline Complex uniform_on_circle(Rng& rng, const Complex& c, double r) {
  const double a = 2 * std::numbers::pi * uniform01(rng);
  return c + r * Complex(std::cos(a), std::sin(a));
}

/// nu_z(union of arcs) by walk-on-spheres to the unit circle.
inline McEstimate wos_harmonic_measure(const Complex& z, const std::vector<Arc>& arcs, const McConfig& cfg) {
  if (!(std::abs(z) < 1)) throw Error(ErrorKind::OutsideDomain, "walk-on-spheres start must lie in the open disk");
  return run_single(cfg, [&](Rng& rng, Accumulator& acc) {
    Complex w = z;
    for (std::uint64_t s = 0;; ++s) {
      const double r = 1 - std::abs(w);
      if (r < cfg.wos_eps) {
        acc.add(in_arcs(std::arg(w), arcs) ? 1.0 : 0.0);
        return;
      }
      if (s == cfg.max_steps) {
        acc.discard();
        return;
      }
      w = uniform_on_circle(rng, w, r);
    }
  });
}

/// G of D^(t) = {z in D : dist(z, E) > t} with pole 0: log(1/|z|) - E[log(1/|Z|); Z exits on Gamma^(t)].
inline McEstimate wos_truncated_green_disk(const Complex& z, const std::vector<Complex>& e, double t, const McConfig& cfg) {
  if (!(std::abs(z) < 1) || z == Complex(0)) throw Error(ErrorKind::OutsideDomain, "start must lie in the punctured disk");
  for (const auto& c : e)
    if (!(std::abs(z - c) > t)) throw Error(ErrorKind::OutsideDomain, "start lies within t of E");
  const double g0 = std::log(1 / std::abs(z));
  return run_single(cfg, [&](Rng& rng, Accumulator& acc) {
    Complex w = z;
    for (std::uint64_t s = 0;; ++s) {
      const double to_circle = 1 - std::abs(w);
      double to_gamma = std::numeric_limits<double>::infinity();
      for (const auto& c : e) to_gamma = std::min(to_gamma, std::abs(w - c) - t);
      const double r = std::min(to_circle, to_gamma);
      if (r < cfg.wos_eps) {
        acc.add(to_gamma <= to_circle ? g0 - std::log(1 / std::abs(w)) : g0);
        return;
      }
      if (s == cfg.max_steps) {
        acc.discard();
        return;
      }
      w = uniform_on_circle(rng, w, r);
    }
  });
}

}  // namespace riesz
