#pragma once

// Scalar types shared by the tree-side machinery.
//
//   Rational  - arbitrary precision rational (GMP backed)
//   QuadSurd  - exact element a + b*sqrt(r) of a real quadratic field
//   double    - float mode
//
// Everything tree-side is templated on the scalar; scalar_traits<S> tells
// the generic code how to build constants and powers of the branching number.

#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "riesz/error.hpp"

namespace riesz {

using Rational = boost::multiprecision::mpq_rational;
using Integer = boost::multiprecision::mpz_int;

inline Rational make_rational(long long num, long long den = 1) {
  if (den == 0) throw Error(ErrorKind::InvalidArgument, "zero denominator");
  return Rational(Integer(num), Integer(den));
}

inline Integer numerator_of(const Rational& r) { return boost::multiprecision::numerator(r); }
inline Integer denominator_of(const Rational& r) { return boost::multiprecision::denominator(r); }

/// base^e for integer e (negative allowed).
inline Rational rpow(const Rational& base, long long e) {
  if (e == 0) return Rational(1);
  if (e < 0) {
    if (base == 0) throw Error(ErrorKind::InvalidArgument, "0 to a negative power");
    return Rational(1) / rpow(base, -e);
  }
  Rational result(1), b(base);
  auto n = static_cast<unsigned long long>(e);
  while (n != 0) {
    if (n & 1U) result *= b;
    n >>= 1U;
    if (n != 0) b *= b;
  }
  return result;
}

/// q^e as an exact rational.
inline Rational qpow(unsigned q, long long e) { return rpow(Rational(q), e); }

/// "num/den", or just "num" when the denominator is 1.
inline std::string to_string(const Rational& r) {
  const Integer den = denominator_of(r);
  if (den == 1) return numerator_of(r).str();
  return numerator_of(r).str() + "/" + den.str();
}

/// Parses "a/b", an integer, or a plain decimal such as "0.05" (exactly).
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto trim = [](std::string v) {
    const auto b = v.find_first_not_of(" \t");
    const auto e = v.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
  };
  s = trim(s);
  if (s.empty()) throw Error(ErrorKind::InvalidArgument, "empty rational literal");
  try {
    if (const auto slash = s.find('/'); slash != std::string::npos) {
      Integer num(trim(s.substr(0, slash)));
      Integer den(trim(s.substr(slash + 1)));
      if (den == 0) throw Error(ErrorKind::InvalidArgument, "zero denominator in '" + s + "'");
      return Rational(num, den);
    }
    if (const auto dot = s.find('.'); dot != std::string::npos) {
      bool negative = s[0] == '-';
      std::string body = negative || s[0] == '+' ? s.substr(1) : s;
      const auto d = body.find('.');
      std::string digits = body.substr(0, d) + body.substr(d + 1);
      const auto scale = body.size() - d - 1;
      if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        throw Error(ErrorKind::InvalidArgument, "bad decimal literal '" + s + "'");
      Rational r(Integer(digits), Integer(1));
      r /= rpow(Rational(10), static_cast<long long>(scale));
      return negative ? Rational(-r) : r;
    }
    return Rational(Integer(s), Integer(1));
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const Error*>(&e) != nullptr) throw;
    throw Error(ErrorKind::InvalidArgument, "bad rational literal '" + s + "'");
  }
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(double d) { return d; }

// ---------------------------------------------------------------------------
// QuadSurd: a + b*sqrt(r), r > 1 squarefree (r = 0 when b == 0).

class QuadSurd {
 public:
  QuadSurd() = default;
  QuadSurd(const Rational& a) : a_(a) {}  // NOLINT(google-explicit-constructor)
  QuadSurd(long long a) : a_(a) {}        // NOLINT(google-explicit-constructor)
  QuadSurd(Rational a, Rational b, unsigned radicand) : a_(std::move(a)), b_(std::move(b)), r_(radicand) {
    normalize();
  }

  /// sqrt(n) for a positive integer n, with square factors pulled out.
  static QuadSurd sqrt_of(unsigned long long n) {
    if (n == 0) return QuadSurd();
    unsigned long long square = 1, rest = n;
    for (unsigned long long f = 2; f * f <= rest; ++f) {
      while (rest % (f * f) == 0) {
        rest /= f * f;
        square *= f;
      }
    }
    if (rest == 1) return QuadSurd(Rational(square));
    return QuadSurd(Rational(0), Rational(square), static_cast<unsigned>(rest));
  }

  const Rational& rational_part() const { return a_; }
  const Rational& surd_part() const { return b_; }
  unsigned radicand() const { return r_; }
  bool is_rational() const { return b_ == 0; }

  double to_double() const {
    return a_.convert_to<double>() + b_.convert_to<double>() * std::sqrt(static_cast<double>(r_));
  }

  int sign() const {
    const int sa = a_.sign();
    const int sb = b_.sign();
    if (sb == 0) return sa;
    if (sa == 0) return sb;
    if (sa == sb) return sa;
    // a and b*sqrt(r) have opposite signs: compare squares.
    const Rational a2 = a_ * a_;
    const Rational b2r = b_ * b_ * r_;
    if (a2 == b2r) return 0;
    return a2 > b2r ? sa : sb;
  }

  QuadSurd operator-() const { return QuadSurd(-a_, -b_, r_); }

  QuadSurd& operator+=(const QuadSurd& o) {
    const unsigned r = join(o);
    a_ += o.a_;
    b_ += o.b_;
    r_ = r;
    normalize();
    return *this;
  }
  QuadSurd& operator-=(const QuadSurd& o) { return *this += -o; }
  QuadSurd& operator*=(const QuadSurd& o) {
    const unsigned r = join(o);
    Rational a = a_ * o.a_ + b_ * o.b_ * r;
    Rational b = a_ * o.b_ + b_ * o.a_;
    a_ = std::move(a);
    b_ = std::move(b);
    r_ = r;
    normalize();
    return *this;
  }
  QuadSurd& operator/=(const QuadSurd& o) {
    if (o.sign() == 0) throw Error(ErrorKind::InvalidArgument, "division by zero");
    const unsigned r = join(o);
    // (a + b s)/(c + d s) = (a + b s)(c - d s)/(c^2 - d^2 r)
    const Rational norm = o.a_ * o.a_ - o.b_ * o.b_ * r;
    QuadSurd conj(o.a_, -o.b_, r);
    *this *= conj;
    a_ /= norm;
    b_ /= norm;
    normalize();
    return *this;
  }

  friend QuadSurd operator+(QuadSurd x, const QuadSurd& y) { return x += y; }
  friend QuadSurd operator-(QuadSurd x, const QuadSurd& y) { return x -= y; }
  friend QuadSurd operator*(QuadSurd x, const QuadSurd& y) { return x *= y; }
  friend QuadSurd operator/(QuadSurd x, const QuadSurd& y) { return x /= y; }

  friend bool operator==(const QuadSurd& x, const QuadSurd& y) { return x.a_ == y.a_ && x.b_ == y.b_; }
  friend std::strong_ordering operator<=>(const QuadSurd& x, const QuadSurd& y) {
    const int s = (x - y).sign();
    return s < 0 ? std::strong_ordering::less : s > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }

  friend std::ostream& operator<<(std::ostream& os, const QuadSurd& v) { return os << to_string(v); }

  friend std::string to_string(const QuadSurd& v) {
    if (v.b_ == 0) return riesz::to_string(v.a_);
    std::string s = v.a_ == 0 ? std::string() : riesz::to_string(v.a_) + " + ";
    return s + "(" + riesz::to_string(v.b_) + ")*sqrt(" + std::to_string(v.r_) + ")";
  }

 private:
  unsigned join(const QuadSurd& o) const {
    if (b_ == 0) return o.r_;
    if (o.b_ == 0) return r_;
    if (r_ != o.r_) throw Error(ErrorKind::InvalidArgument, "mixing different quadratic fields");
    return r_;
  }
  void normalize() {
    if (b_ == 0) r_ = 0;
  }

  Rational a_{0};
  Rational b_{0};
  unsigned r_{0};
};

inline double to_double(const QuadSurd& v) { return v.to_double(); }

// ---------------------------------------------------------------------------
// scalar_traits

template <class S>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
  static constexpr bool exact = true;
  static Rational from_rational(const Rational& r) { return r; }
  /// q^(num/den * j) when representable.
  static std::optional<Rational> qpow_frac(unsigned q, long long num, long long den) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    if (num % den != 0) return std::nullopt;
    return qpow(q, num / den);
  }
  static std::optional<Rational> rpow_frac(const Rational& base, long long num, long long den) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    if (num % den != 0) return std::nullopt;
    return rpow(base, num / den);
  }
  static std::string str(const Rational& v) { return to_string(v); }
};

template <>
struct scalar_traits<QuadSurd> {
  static constexpr bool exact = true;
  static QuadSurd from_rational(const Rational& r) { return QuadSurd(r); }
  static std::optional<QuadSurd> qpow_frac(unsigned q, long long num, long long den) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    if (num % den == 0) return QuadSurd(qpow(q, num / den));
    if ((2 * num) % den != 0) return std::nullopt;
    // q^(m/2) with m odd = q^((m-1)/2) * sqrt(q)
    const long long m = 2 * num / den;
    const long long whole = (m - 1) / 2;  // m is odd, so this is exact
    return QuadSurd(qpow(q, whole)) * QuadSurd::sqrt_of(q);
  }
  static std::optional<QuadSurd> rpow_frac(const Rational& base, long long num, long long den) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    if (num % den == 0) return QuadSurd(rpow(base, num / den));
    if ((2 * num) % den != 0 || base <= 0) return std::nullopt;
    // sqrt(a/b) = sqrt(a*b)/b
    const Integer ab = numerator_of(base) * denominator_of(base);
    if (ab > Integer(std::numeric_limits<unsigned long long>::max())) return std::nullopt;
    const QuadSurd root = QuadSurd::sqrt_of(ab.convert_to<unsigned long long>()) / QuadSurd(Rational(denominator_of(base)));
    const long long m = 2 * num / den;
    const long long whole = (m - 1) / 2;
    return QuadSurd(rpow(base, whole)) * root;
  }
  static std::string str(const QuadSurd& v) { return to_string(v); }
};

template <>
struct scalar_traits<double> {
  static constexpr bool exact = false;
  static double from_rational(const Rational& r) { return r.convert_to<double>(); }
  static std::optional<double> qpow_frac(unsigned q, long long num, long long den) {
    return std::pow(static_cast<double>(q), static_cast<double>(num) / static_cast<double>(den));
  }
  static std::optional<double> rpow_frac(const Rational& base, long long num, long long den) {
    return std::pow(base.convert_to<double>(), static_cast<double>(num) / static_cast<double>(den));
  }
  static std::string str(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
};

template <class S>
S from_rational(const Rational& r) {
  return scalar_traits<S>::from_rational(r);
}

template <class S>
std::string scalar_str(const S& v) {
  return scalar_traits<S>::str(v);
}

template <class S>
int scalar_sign(const S& v) {
  if constexpr (std::is_same_v<S, QuadSurd>) {
    return v.sign();
  } else if constexpr (std::is_same_v<S, Rational>) {
    return v.sign();
  } else {
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
  }
}

}  // namespace riesz
