#include "shlr/rat.hpp"

#include <stdexcept>

namespace shlr {

Rat::Rat(long num, long den) : v_(num, den) {
  if (den == 0) throw std::invalid_argument("Rat: zero denominator");
  v_.canonicalize();
}

Rat& Rat::operator/=(const Rat& o) {
  if (o.is_zero()) throw std::invalid_argument("Rat: division by zero");
  v_ /= o.v_;
  return *this;
}

std::optional<Rat> Rat::parse(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const auto slash = s.find('/');
  const std::string num_s = s.substr(0, slash);
  const std::string den_s = slash == std::string::npos ? "1" : s.substr(slash + 1);
  mpz_class num, den;
  if (num.set_str(num_s, 10) != 0) return std::nullopt;
  if (den.set_str(den_s, 10) != 0) return std::nullopt;
  if (sgn(den) == 0) return std::nullopt;
  mpq_class q(num, den);
  q.canonicalize();
  return from_mpq(q);
}

std::string Rat::str() const {
  if (v_.get_den() == 1) return v_.get_num().get_str();
  return v_.get_num().get_str() + "/" + v_.get_den().get_str();
}

}  // namespace shlr
