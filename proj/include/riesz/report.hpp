#pragma once

// JSON and CSV emitters for reports.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "riesz/mc_engine.hpp"
#include "riesz/moments.hpp"
#include "riesz/truncation.hpp"

namespace riesz {

using Json = nlohmann::ordered_json;

inline Json number_json(const Rational& r) { return Json{{"exact", to_string(r)}, {"decimal", to_double(r)}}; }
inline Json number_json(const QuadSurd& r) { return Json{{"exact", to_string(r)}, {"decimal", to_double(r)}}; }
inline Json number_json(double d) { return Json{{"decimal", d}}; }

template <class S>
Json enclosure_json(const Enclosure<S>& e) {
  Json j{{"lower", number_json(e.lower)}, {"verdict", verdict_name(e.verdict)}, {"level", e.level}};
  j["upper"] = e.upper ? number_json(*e.upper) : Json(nullptr);
  return j;
}

inline Json report_json(const VerifierReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return Json{{"theorem", r.theorem},
              {"applicable", r.applicable},
              {"pass", r.pass},
              {"hypothesis_checks", checks},
              {"verdict", r.verdict},
              {"partial_sums", r.partial_sums},
              {"partial_sums_exact", r.partial_sums_exact},
              {"certificate", r.certificate}};
}

inline Json estimate_json(const std::string& target, const McEstimate& e, double oracle) {
  return Json{{"target", target},     {"mean", e.mean},         {"n", e.n},
              {"ci99", e.ci99},       {"discarded", e.discarded}, {"oracle", oracle},
              {"pass", e.covers(oracle)}};
}

inline Json green_bound_json(const GreenBoundReport& r) {
  Json failures = Json::array();
  for (const auto& v : r.failures) failures.push_back(v.to_string());
  return Json{{"q", r.q},
              {"t", to_string(r.t)},
              {"k", r.k},
              {"gamma_size", r.gamma_size},
              {"radius", r.radius},
              {"checked", r.checked},
              {"skipped", r.skipped.size()},
              {"min_ratio", number_json(r.min_ratio)},
              {"failures", failures},
              {"pass", r.pass}};
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

/// Tidy CSV rows series,level,numerator,denominator,decimal (exact columns empty in float mode).
template <class S>
void write_level_csv(std::ostream& os, const std::string& series, const std::vector<S>& values) {
  for (std::size_t n = 0; n < values.size(); ++n) {
    os << series << ',' << n << ',';
    if constexpr (std::is_same_v<S, Rational>) {
      os << numerator_of(values[n]) << ',' << denominator_of(values[n]);
    } else {
      os << ',';
    }
    os << ',' << to_double(values[n]) << '\n';
  }
}

}  // namespace riesz
