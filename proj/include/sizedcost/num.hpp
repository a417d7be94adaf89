#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sizedcost {

// Exact rational arithmetic on 64-bit components with an explicit
// infinity, used everywhere bounds are computed.  The infinity rules
// follow the resource domain: inf + x = inf, c * inf = inf for c > 0,
// and 0 * inf = 0 (a zero-solution prefix nullifies downstream cost).
class Rat {
public:
  enum class Kind { Finite, PosInf, NegInf };

  Rat() : kind_(Kind::Finite), num_(0), den_(1) {}
  Rat(long long n) : kind_(Kind::Finite), num_(n), den_(1) {}
  Rat(long long n, long long d) : kind_(Kind::Finite), num_(n), den_(d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    normalize();
  }

  static Rat inf() { Rat r; r.kind_ = Kind::PosInf; return r; }
  static Rat neg_inf() { Rat r; r.kind_ = Kind::NegInf; return r; }

  bool is_finite() const { return kind_ == Kind::Finite; }
  bool is_pos_inf() const { return kind_ == Kind::PosInf; }
  bool is_neg_inf() const { return kind_ == Kind::NegInf; }
  long long num() const { return num_; }
  long long den() const { return den_; }

  bool is_zero() const { return kind_ == Kind::Finite && num_ == 0; }
  bool is_one() const { return kind_ == Kind::Finite && num_ == 1 && den_ == 1; }
  bool is_integer() const { return kind_ == Kind::Finite && den_ == 1; }

  int sign() const {
    if (kind_ == Kind::PosInf) return 1;
    if (kind_ == Kind::NegInf) return -1;
    return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0);
  }

  friend Rat operator-(const Rat& a) {
    if (a.is_pos_inf()) return neg_inf();
    if (a.is_neg_inf()) return inf();
    return make(-(__int128)a.num_, a.den_);
  }

  friend Rat operator+(const Rat& a, const Rat& b) {
    if (!a.is_finite() || !b.is_finite()) {
      if (a.is_pos_inf() && b.is_neg_inf()) throw std::domain_error("inf + -inf");
      if (a.is_neg_inf() && b.is_pos_inf()) throw std::domain_error("-inf + inf");
      return a.is_finite() ? b : a;
    }
    __int128 n = (__int128)a.num_ * b.den_ + (__int128)b.num_ * a.den_;
    __int128 d = (__int128)a.den_ * b.den_;
    return make(n, d);
  }

  friend Rat operator-(const Rat& a, const Rat& b) { return a + (-b); }

  friend Rat operator*(const Rat& a, const Rat& b) {
    if (!a.is_finite() || !b.is_finite()) {
      int sa = a.sign(), sb = b.sign();
      if (sa == 0 || sb == 0) return Rat(0);  // 0 * inf = 0
      return sa * sb > 0 ? inf() : neg_inf();
    }
    return make((__int128)a.num_ * b.num_, (__int128)a.den_ * b.den_);
  }

  friend Rat operator/(const Rat& a, const Rat& b) {
    if (b.is_zero()) throw std::domain_error("division by zero");
    if (!b.is_finite()) return Rat(0);
    if (!a.is_finite()) return b.sign() > 0 ? a : -a;
    return make((__int128)a.num_ * b.den_, (__int128)a.den_ * b.num_);
  }

  friend bool operator==(const Rat& a, const Rat& b) {
    if (a.kind_ != b.kind_) return false;
    if (a.kind_ != Kind::Finite) return true;
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }

  friend bool operator<(const Rat& a, const Rat& b) {
    if (a == b) return false;
    if (a.is_neg_inf() || b.is_pos_inf()) return true;
    if (a.is_pos_inf() || b.is_neg_inf()) return false;
    return (__int128)a.num_ * b.den_ < (__int128)b.num_ * a.den_;
  }
  friend bool operator<=(const Rat& a, const Rat& b) { return a == b || a < b; }
  friend bool operator>(const Rat& a, const Rat& b) { return b < a; }
  friend bool operator>=(const Rat& a, const Rat& b) { return b <= a; }

  static Rat min(const Rat& a, const Rat& b) { return a < b ? a : b; }
  static Rat max(const Rat& a, const Rat& b) { return a < b ? b : a; }

  // Floor/ceil to integer-valued rationals.
  Rat floor() const {
    if (!is_finite()) return *this;
    long long q = num_ / den_;
    if (num_ % den_ != 0 && num_ < 0) --q;
    return Rat(q);
  }
  Rat ceil() const {
    if (!is_finite()) return *this;
    return -((-*this).floor());
  }

  // Truncating integer division (Prolog's //).
  static Rat int_div(const Rat& a, const Rat& b) {
    Rat q = a / b;
    if (!q.is_finite()) return q;
    return q.sign() >= 0 ? q.floor() : q.ceil();
  }

  // Round outward to a denominator of at most 2^16, so chains of
  // multiplications by irrational-bracketing rationals stay in range.
  Rat round_up() const {
    if (!is_finite() || den_ <= 65536) return *this;
    return (*this * Rat(65536)).ceil() / Rat(65536);
  }
  Rat round_down() const {
    if (!is_finite() || den_ <= 65536) return *this;
    return (*this * Rat(65536)).floor() / Rat(65536);
  }

  double to_double() const {
    if (is_pos_inf()) return 1e300;
    if (is_neg_inf()) return -1e300;
    return (double)num_ / (double)den_;
  }

  std::string str() const {
    if (is_pos_inf()) return "inf";
    if (is_neg_inf()) return "-inf";
    std::string s = std::to_string(num_);
    if (den_ != 1) s += "/" + std::to_string(den_);
    return s;
  }

private:
  static Rat make(__int128 n, __int128 d) {
    if (d < 0) { n = -n; d = -d; }
    __int128 g = gcd128(n < 0 ? -n : n, d);
    if (g > 1) { n /= g; d /= g; }
    if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
      throw std::overflow_error("rational overflow");
    Rat r;
    r.num_ = (long long)n;
    r.den_ = (long long)d;
    return r;
  }

  static __int128 gcd128(__int128 a, __int128 b) {
    while (b != 0) { __int128 t = a % b; a = b; b = t; }
    return a == 0 ? 1 : a;
  }

  void normalize() {
    Rat r = make(num_, den_);
    num_ = r.num_;
    den_ = r.den_;
  }

  Kind kind_;
  long long num_;
  long long den_;
};

// Bracketing rationals for phi = (1+sqrt(5))/2, from consecutive
// Fibonacci quotients (they alternate around phi).
inline Rat phi_lower() { return Rat(46368, 28657); }
inline Rat phi_upper() { return Rat(28657, 17711); }

inline Rat rat_factorial(const Rat& x) {
  if (!x.is_finite()) return x;
  if (!x.is_integer() || x.num() < 0)
    throw std::domain_error("factorial of non-natural");
  Rat acc(1);
  for (long long i = 2; i <= x.num(); ++i) acc = acc * Rat(i);
  return acc;
}

// x^e with outward rounding for inexact bases; e must be a natural number.
enum class RoundDir { Down, Up };

inline Rat rat_pow(const Rat& base, long long e, RoundDir dir) {
  if (e < 0) throw std::domain_error("negative exponent");
  Rat acc(1);
  for (long long i = 0; i < e; ++i) {
    acc = acc * base;
    acc = dir == RoundDir::Up ? acc.round_up() : acc.round_down();
  }
  return acc;
}

}  // namespace sizedcost
