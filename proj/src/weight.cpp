#include "lf/weight.hpp"

#include <cmath>

#include "lf/error.hpp"
#include "lf/format.hpp"

namespace lf {

Weight Weight::operator+(const Weight& o) const {
  if (exact_ && o.exact_) return Weight(Rational(q_ + o.q_));
  return Weight(d_ + o.d_);
}
Weight Weight::operator-(const Weight& o) const {
  if (exact_ && o.exact_) return Weight(Rational(q_ - o.q_));
  return Weight(d_ - o.d_);
}
Weight Weight::operator*(const Weight& o) const {
  if (exact_ && o.exact_) return Weight(Rational(q_ * o.q_));
  return Weight(d_ * o.d_);
}
Weight Weight::operator/(const Weight& o) const {
  if (o.is_zero()) fail(Errc::invalid_input, "weight division by zero");
  if (exact_ && o.exact_) return Weight(Rational(q_ / o.q_));
  return Weight(d_ / o.d_);
}

bool Weight::equals(const Weight& o, double tol) const {
  if (exact_ && o.exact_) return q_ == o.q_;
  return std::abs(d_ - o.d_) <= tol * std::max({1.0, std::abs(d_), std::abs(o.d_)});
}

std::string Weight::str() const {
  if (!exact_) return fmt_double(d_);
  return q_.str();
}

Weight Weight::parse(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos && s.find_first_of(".eE") == std::string::npos)
      return Weight(Rational(s));
    if (slash != std::string::npos) return Weight(Rational(s));
  } catch (const std::exception&) {
    fail(Errc::parse_error, "bad rational weight '" + s + "'");
  }
  return Weight(parse_double(s));
}

bool dyadic_rational(double x, Rational& out) {
  if (!std::isfinite(x) || std::abs(x) >= 1073741824.0) return false;
  double s = x * 1048576.0;
  if (s != std::floor(s)) return false;
  out = Rational(static_cast<long long>(s), 1048576LL);
  return true;
}

}  // namespace lf
