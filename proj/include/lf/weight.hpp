#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <string>

namespace lf {

using Rational = boost::multiprecision::mpq_rational;

/// Rational when every input was rational, otherwise double.
class Weight {
 public:
  Weight() : exact_(true), q_(0), d_(0) {}
  Weight(double d) : exact_(false), d_(d) {}
  Weight(int n) : exact_(true), q_(n), d_(n) {}
  Weight(const Rational& q) : exact_(true), q_(q), d_(q.convert_to<double>()) {}
  static Weight ratio(long long num, long long den) { return Weight(Rational(num, den)); }

  bool exact() const { return exact_; }
  double value() const { return d_; }
  const Rational& rational() const { return q_; }
  Weight as_double() const { return Weight(d_); }

  Weight operator+(const Weight& o) const;
  Weight operator-(const Weight& o) const;
  Weight operator*(const Weight& o) const;
  Weight operator/(const Weight& o) const;
  Weight& operator+=(const Weight& o) { return *this = *this + o; }
  Weight& operator-=(const Weight& o) { return *this = *this - o; }
  Weight& operator*=(const Weight& o) { return *this = *this * o; }

  /// Rationals compare exactly; otherwise values with relative tolerance.
  bool equals(const Weight& o, double tol = 1e-12) const;
  bool is_zero() const { return exact_ ? q_ == 0 : d_ == 0.0; }
  std::string str() const;
  static Weight parse(const std::string& s);

 private:
  bool exact_;
  Rational q_;
  double d_;
};

/// Exact rational if x is a dyadic number of modest size, else nullopt-like flag.
bool dyadic_rational(double x, Rational& out);

}  // namespace lf
