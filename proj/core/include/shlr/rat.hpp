#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>

namespace shlr {

/// Exact rational scalar. Thin wrapper over GMP's mpq_class so the rest of
/// the library controls construction, parsing and the "p/q" text form.
class Rat {
public:
  Rat() : v_(0) {}
  Rat(long n) : v_(n) {}
  Rat(long num, long den);

  static Rat from_mpq(mpq_class v) { return Rat(raw_tag{}, std::move(v)); }

  // Accepts "n" or "p/q" with optional leading '-'. Rejects zero denominators.
  static std::optional<Rat> parse(const std::string& s);

  bool is_zero() const { return sgn(v_) == 0; }
  bool is_one() const { return v_ == 1; }

  Rat operator-() const { return from_mpq(-v_); }
  Rat& operator+=(const Rat& o) { v_ += o.v_; return *this; }
  Rat& operator-=(const Rat& o) { v_ -= o.v_; return *this; }
  Rat& operator*=(const Rat& o) { v_ *= o.v_; return *this; }
  Rat& operator/=(const Rat& o);

  friend Rat operator+(Rat a, const Rat& b) { return a += b; }
  friend Rat operator-(Rat a, const Rat& b) { return a -= b; }
  friend Rat operator*(Rat a, const Rat& b) { return a *= b; }
  friend Rat operator/(Rat a, const Rat& b) { return a /= b; }
  friend bool operator==(const Rat& a, const Rat& b) { return a.v_ == b.v_; }
  friend bool operator!=(const Rat& a, const Rat& b) { return a.v_ != b.v_; }

  mpz_class num() const { return v_.get_num(); }
  mpz_class den() const { return v_.get_den(); }

  // "p/q" when the denominator is not 1, plain integer otherwise.
  std::string str() const;

private:
  struct raw_tag {};
  Rat(raw_tag, mpq_class v) : v_(std::move(v)) { v_.canonicalize(); }
  mpq_class v_;
};

}  // namespace shlr
