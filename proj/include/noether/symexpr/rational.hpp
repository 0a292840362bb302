#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace noether {

/// Exact rational with 64-bit numerator/denominator. Every operation is
/// computed in 128 bits and reduced; results that do not fit throw
/// std::overflow_error instead of wrapping.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1) { assign(num, den); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_one() const { return num_ == 1 && den_ == 1; }
  bool is_integer() const { return den_ == 1; }
  bool is_negative() const { return num_ < 0; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  Rational operator-() const { return from128(-static_cast<__int128>(num_), den_); }
  Rational abs() const { return num_ < 0 ? -*this : *this; }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return from128(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                   static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return from128(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return from128(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend int compare(const Rational& a, const Rational& b) {
    const __int128 l = static_cast<__int128>(a.num_) * b.den_;
    const __int128 r = static_cast<__int128>(b.num_) * a.den_;
    return l < r ? -1 : (l > r ? 1 : 0);
  }
  friend bool operator<(const Rational& a, const Rational& b) { return compare(a, b) < 0; }

  /// Integer power; negative exponents invert.
  Rational pow(std::int64_t e) const {
    if (e < 0) return Rational(1) / pow(-e);
    Rational result(1), base = *this;
    while (e > 0) {
      if (e & 1) result *= base;
      e >>= 1;
      if (e > 0) base *= base;
    }
    return result;
  }

  /// Exact q-th root when numerator and denominator are perfect powers.
  std::optional<Rational> root(std::int64_t q) const {
    if (q <= 0) return std::nullopt;
    if (q == 1) return *this;
    if (num_ < 0 && q % 2 == 0) return std::nullopt;
    auto iroot = [q](std::int64_t v) -> std::optional<std::int64_t> {
      const bool neg = v < 0;
      const std::int64_t a = neg ? -v : v;
      std::int64_t lo = 0, hi = 1;
      while (ipow(hi, q) && *ipow(hi, q) < a) hi *= 2;
      lo = hi / 2;
      while (lo <= hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        auto p = ipow(mid, q);
        if (!p || *p > a) {
          hi = mid - 1;
        } else if (*p < a) {
          lo = mid + 1;
        } else {
          return neg ? -mid : mid;
        }
      }
      return std::nullopt;
    };
    auto n = iroot(num_);
    auto d = iroot(den_);
    if (!n || !d) return std::nullopt;
    return Rational(*n, *d);
  }

  /// Rational exponent power when the result is exactly rational.
  std::optional<Rational> pow(const Rational& e) const {
    if (is_zero()) {
      if (e.is_negative()) return std::nullopt;
      return e.is_zero() ? Rational(1) : Rational(0);
    }
    auto r = root(e.den());
    if (!r) return std::nullopt;
    return r->pow(e.num());
  }

  std::string to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  /// Exact value of a decimal literal such as "12", "1.25", "3e-4".
  static std::optional<Rational> from_decimal(std::string_view text) {
    __int128 mant = 0;
    int scale = 0;
    std::size_t i = 0;
    bool digits = false;
    for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
      mant = mant * 10 + (text[i] - '0');
      digits = true;
      if (mant > kLimit) return std::nullopt;
    }
    if (i < text.size() && text[i] == '.') {
      ++i;
      for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
        mant = mant * 10 + (text[i] - '0');
        --scale;
        digits = true;
        if (mant > kLimit) return std::nullopt;
      }
    }
    if (!digits) return std::nullopt;
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
      ++i;
      int sign = 1;
      if (i < text.size() && (text[i] == '+' || text[i] == '-')) sign = text[i++] == '-' ? -1 : 1;
      int ex = 0;
      bool exp_digits = false;
      for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
        ex = ex * 10 + (text[i] - '0');
        exp_digits = true;
        if (ex > 30) return std::nullopt;
      }
      if (!exp_digits) return std::nullopt;
      scale += sign * ex;
    }
    if (i != text.size()) return std::nullopt;
    __int128 den = 1;
    for (; scale > 0; --scale) {
      mant *= 10;
      if (mant > kLimit) return std::nullopt;
    }
    for (; scale < 0; ++scale) {
      den *= 10;
      if (den > kLimit) return std::nullopt;
    }
    try {
      return from128(mant, den);
    } catch (const std::overflow_error&) {
      return std::nullopt;
    }
  }

  /// Best rational approximation with denominator <= max_den, accepted only
  /// when within rel_tol of x.
  static std::optional<Rational> approximate(double x, std::int64_t max_den, double rel_tol) {
    if (!(x == x) || x > 1e15 || x < -1e15) return std::nullopt;
    const bool neg = x < 0;
    double v = neg ? -x : x;
    std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double frac = v;
    for (int it = 0; it < 64; ++it) {
      const double a_d = static_cast<double>(static_cast<std::int64_t>(frac));
      const std::int64_t a = static_cast<std::int64_t>(a_d);
      const std::int64_t h2 = a * h1 + h0;
      const std::int64_t k2 = a * k1 + k0;
      if (k2 > max_den) break;
      h0 = h1; h1 = h2; k0 = k1; k1 = k2;
      const double approx = static_cast<double>(h1) / static_cast<double>(k1);
      if (std::abs(approx - v) <= rel_tol * std::max(1.0, v)) {
        return Rational(neg ? -h1 : h1, k1);
      }
      const double rem = frac - a_d;
      if (rem < 1e-15) break;
      frac = 1.0 / rem;
    }
    if (k1 != 0) {
      const double approx = static_cast<double>(h1) / static_cast<double>(k1);
      if (std::abs(approx - v) <= rel_tol * std::max(1.0, v)) return Rational(neg ? -h1 : h1, k1);
    }
    return std::nullopt;
  }

 private:
  static constexpr __int128 kLimit = static_cast<__int128>(INT64_MAX);

  static std::optional<std::int64_t> ipow(std::int64_t b, std::int64_t e) {
    __int128 r = 1;
    for (std::int64_t i = 0; i < e; ++i) {
      r *= b;
      if (r > kLimit) return std::nullopt;
    }
    return static_cast<std::int64_t>(r);
  }

  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Rational from128(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const __int128 g = gcd128(n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    if (n > kLimit || n < -kLimit || d > kLimit) throw std::overflow_error("rational overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  void assign(std::int64_t n, std::int64_t d) { *this = from128(n, d); }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace noether
