#include <boost/math/tools/minima.hpp>
#include <cmath>

#include "lf/error.hpp"
#include "lf/models.hpp"

namespace lf {

double qbar(double p, double b) { return (p - 1) / (std::pow(b, p - 1) + 1) + b / (b + 1); }

double qbar_db(double p, double b) {
  double e = std::pow(b, p - 1);
  return -(p - 1) * (p - 1) * e / b / ((e + 1) * (e + 1)) + 1 / ((b + 1) * (b + 1));
}

ExponentProfile exponent(const std::string& kind, const Params& params) {
  ExponentProfile e;
  e.kind = kind;
  e.params = params;
  if (kind == "elliptic") {
    auto it = params.find("K");
    if (it == params.end() || !(it->second > 1)) fail(Errc::invalid_input, "exponent: elliptic needs K > 1");
    double K = it->second;
    e.value = 2 * K / (K + 1);
    e.valid = true;
    e.range = "(1,2)";
    return e;
  }
  if (kind == "plaplace") {
    auto ip = params.find("p"), ib = params.find("b");
    if (ip == params.end() || !(ip->second > 1 && ip->second < 2))
      fail(Errc::invalid_input, "exponent: plaplace needs p in (1,2)");
    if (ib == params.end() || !(ib->second >= 1)) fail(Errc::invalid_input, "exponent: plaplace needs b >= 1");
    double p = ip->second;
    e.value = qbar(p, ib->second);
    e.valid = e.value > 1 && e.value < p;
    e.range = "(1,p)";
    return e;
  }
  fail(Errc::invalid_input, "exponent: kind must be elliptic or plaplace");
}

double select_b(double p) {
  if (!(p > 1 && p < 2)) fail(Errc::invalid_input, "select_b needs p in (1,2)");
  // minimize -qbar over log b in (0, log kBMax]
  auto f = [p](double u) { return -qbar(p, std::exp(u)); };
  auto r = boost::math::tools::brent_find_minima(f, 0.0, std::log(kBMax), 40);
  double b = std::exp(r.first);
  double q = qbar(p, b);
  if (!(q > 1 && q < p)) fail(Errc::internal, "select_b: no valid b found");
  return b;
}

}  // namespace lf
