#pragma once

#include <gmpxx.h>

#include <compare>
#include <concepts>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mmdom {

// Exact rational number in canonical reduced form (denominator > 0).
//
// Thin value wrapper over GMP's mpq_class. Every distance, mass and epsilon
// in the library is a Scalar; there is no floating point on any certificate
// path.
class Scalar {
 public:
  Scalar() = default;

  template <std::integral T>
  Scalar(T v) : value_(static_cast<long>(v)) {}  // NOLINT(implicit)

  template <std::integral N, std::integral D>
  Scalar(N num, D den) {
    if (den == 0) throw std::invalid_argument("Scalar: zero denominator");
    value_ = mpq_class(mpz_class(static_cast<long>(num)), mpz_class(static_cast<long>(den)));
    value_.canonicalize();
  }

  explicit Scalar(mpq_class v) : value_(std::move(v)) { value_.canonicalize(); }

  // Parses "p/q", "p" or "-p/q"; whitespace is not accepted.
  static Scalar parse(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("Scalar: empty rational literal");
    const auto slash = text.find('/');
    auto valid_int = [](std::string_view s) {
      if (s.empty()) return false;
      std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
      if (i == s.size()) return false;
      for (; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') return false;
      return true;
    };
    std::string_view num = text.substr(0, slash);
    std::string_view den = slash == std::string_view::npos ? std::string_view("1") : text.substr(slash + 1);
    if (!valid_int(num) || !valid_int(den) || den[0] == '-' || den[0] == '+')
      throw std::invalid_argument("Scalar: malformed rational literal '" + std::string(text) + "'");
    mpz_class n(std::string(num[0] == '+' ? num.substr(1) : num), 10);
    mpz_class d(std::string(den), 10);
    if (d == 0) throw std::invalid_argument("Scalar: zero denominator in '" + std::string(text) + "'");
    mpq_class q(n, d);
    q.canonicalize();
    return Scalar(std::move(q));
  }

  static Scalar from_parts(const std::string& num, const std::string& den) {
    return parse(num + "/" + den);
  }

  const mpq_class& raw() const { return value_; }

  std::string numerator_str() const { return value_.get_num().get_str(); }
  std::string denominator_str() const { return value_.get_den().get_str(); }
  bool numerator_fits_int64() const { return value_.get_num().fits_slong_p(); }
  bool denominator_fits_int64() const { return value_.get_den().fits_slong_p(); }
  long numerator_int64() const { return value_.get_num().get_si(); }
  long denominator_int64() const { return value_.get_den().get_si(); }

  // "p/q", or "p" when the value is an integer.
  std::string str() const { return value_.get_str(); }

  int sign() const { return sgn(value_); }
  bool is_zero() const { return sign() == 0; }
  bool is_positive() const { return sign() > 0; }
  bool is_negative() const { return sign() < 0; }

  // Display only; never used for decisions.
  double approx() const { return value_.get_d(); }

  Scalar& operator+=(const Scalar& o) { value_ += o.value_; return *this; }
  Scalar& operator-=(const Scalar& o) { value_ -= o.value_; return *this; }
  Scalar& operator*=(const Scalar& o) { value_ *= o.value_; return *this; }
  Scalar& operator/=(const Scalar& o) {
    if (o.is_zero()) throw std::domain_error("Scalar: division by zero");
    value_ /= o.value_;
    return *this;
  }

  friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
  friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
  friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
  friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }
  friend Scalar operator-(const Scalar& a) { return Scalar(mpq_class(-a.value_)); }

  friend bool operator==(const Scalar& a, const Scalar& b) { return cmp(a.value_, b.value_) == 0; }
  friend std::strong_ordering operator<=>(const Scalar& a, const Scalar& b) {
    const int c = cmp(a.value_, b.value_);
    return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }

  friend std::ostream& operator<<(std::ostream& os, const Scalar& s) { return os << s.str(); }

 private:
  mpq_class value_{0};
};

inline Scalar abs(const Scalar& s) { return s.is_negative() ? -s : s; }
inline const Scalar& min(const Scalar& a, const Scalar& b) { return b < a ? b : a; }
inline const Scalar& max(const Scalar& a, const Scalar& b) { return a < b ? b : a; }

// 2^-k as an exact rational.
inline Scalar pow2_neg(unsigned k) {
  mpz_class den(1);
  den <<= k;
  return Scalar(mpq_class(mpz_class(1), den));
}

}  // namespace mmdom

template <>
struct std::hash<mmdom::Scalar> {
  std::size_t operator()(const mmdom::Scalar& s) const noexcept { return std::hash<std::string>{}(s.str()); }
};
