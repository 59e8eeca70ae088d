#include <cmath>
#include <sstream>

#include "lf/error.hpp"
#include "lf/format.hpp"
#include "lf/staircase.hpp"

namespace lf {

namespace {

double param(const Params& p, const std::string& k, double dflt = NAN) {
  auto it = p.find(k);
  if (it != p.end()) return it->second;
  if (std::isnan(dflt)) fail(Errc::invalid_input, "missing parameter '" + k + "'");
  return dflt;
}

bool diagonal(const Mat& a) {
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j && a(i, j) != 0.0) return false;
  return true;
}

// Weight from a double: exact when dyadic and exact mode is on.
Weight wnum(double x, bool exact) {
  Rational q;
  if (exact && dyadic_rational(x, q)) return Weight(q);
  return Weight(x);
}

double to_d(const Weight& w) { return w.value(); }

StaircaseSpec det1(const Mat& A, const Params& params) {
  if (A.rows() != A.cols() || !diagonal(A)) fail(Errc::invalid_input, "det1: A must be square diagonal");
  bool unchecked = param(params, "unchecked", 0) != 0;
  const int d = A.rows();
  bool exact = true;
  for (int i = 0; i < d; ++i) {
    double a = std::abs(A(i, i));
    if (unchecked ? !(a > 1) : !(a >= 2))
      fail(Errc::invalid_input, std::string("det1: needs |a_i| ") + (unchecked ? "> 1" : ">= 2") + " for every diagonal entry");
    Rational q;
    exact = exact && dyadic_rational(A(i, i), q);
  }
  auto fn = [d, exact](int, const Mat& prev) {
    std::vector<Weight> a(d);
    Weight D(1);
    for (int i = 0; i < d; ++i) {
      a[i] = wnum(prev(i, i), exact);
      D *= a[i];
    }
    StepData s;
    Mat C = prev;
    Weight rest(1);  // alpha'_{j-1}
    Weight pow2(1);  // 2^{j-1}
    for (int j = 0; j < d; ++j) {
      Weight at = pow2 * D / (pow2 * Weight(2) * D - Weight(1));
      Mat B = C;
      B(j, j) = to_d(a[j] / (pow2 * D));
      Mat Cn = C;
      Cn(j, j) = 2 * prev(j, j);
      s.cert.steps.push_back({C, B, Cn, at, std::nullopt});
      s.mu.atoms.push_back({rest * at, B});
      rest = rest * (Weight(1) - at);
      C = Cn;
      pow2 = pow2 * Weight(2);
    }
    s.gamma = rest;
    s.A = C;
    for (auto& x : s.mu.atoms) x.w = x.w / (Weight(1) - rest);
    return s;
  };
  Params p = params;
  return StaircaseSpec(A, fn, "det1", p, SetId::parse("D&Sigma"));
}

StaircaseSpec rank_drop(const Mat& A, const Params& params) {
  if (!diagonal(A)) fail(Errc::invalid_input, "rank_drop: A must be diagonal");
  std::vector<int> pos;
  for (int i = 0; i < std::min(A.rows(), A.cols()); ++i)
    if (A(i, i) != 0.0) pos.push_back(i);
  const int m = static_cast<int>(pos.size());
  if (m < 2) fail(Errc::invalid_input, "rank_drop: needs rank m >= 2");
  if (params.count("m") && static_cast<int>(param(params, "m")) != m)
    fail(Errc::invalid_input, "rank_drop: declared m = " + fmt_double(param(params, "m")) + " but rank(A) = " + std::to_string(m));
  auto fn = [pos, m](int, const Mat& prev) {
    StepData s;
    Mat C = prev;
    Weight half = Weight::ratio(1, 2), rest(1);
    for (int j = 0; j < m; ++j) {
      Mat B = C;
      B(pos[j], pos[j]) = 0;
      Mat Cn = C;
      Cn(pos[j], pos[j]) = 2 * prev(pos[j], pos[j]);
      s.cert.steps.push_back({C, B, Cn, half, std::nullopt});
      s.mu.atoms.push_back({rest * half, B});
      rest = rest * half;
      C = Cn;
    }
    s.gamma = rest;
    s.A = C;
    for (auto& x : s.mu.atoms) x.w = x.w / (Weight(1) - rest);
    return s;
  };
  Params p = params;
  p["m"] = m;
  std::ostringstream t;
  t << "D&rank<=" << (m - 1);
  return StaircaseSpec(A, fn, "rank_drop", p, SetId::parse(t.str()));
}

StaircaseSpec elliptic(const Params& params) {
  double K = param(params, "K"), x = param(params, "x", 1);
  if (!(K > 1)) fail(Errc::invalid_input, "elliptic: needs K > 1");
  if (!(x >= 1)) fail(Errc::invalid_input, "elliptic: needs start x >= 1");
  auto fn = [K](int, const Mat& prev) {
    double xp = prev(1, 1);
    double a1 = 1 / (1 + xp * (1 + 1 / K));
    double s2 = 1 / ((xp + 1) * (1 + 1 / K));
    Mat B1 = diag({-xp, -xp / K});
    Mat C = diag({-xp, xp + 1});
    Mat B2 = diag({(xp + 1) / K, xp + 1});
    Mat An = diag({-(xp + 1), xp + 1});
    StepData s;
    s.cert.steps.push_back({prev, B1, C, Weight(a1), std::nullopt});
    s.cert.steps.push_back({C, B2, An, Weight(s2), std::nullopt});
    double g = (1 - a1) * (1 - s2);
    s.gamma = Weight(g);
    s.A = An;
    s.mu.atoms.push_back({Weight(a1 / (1 - g)), B1});
    s.mu.atoms.push_back({Weight((1 - a1) * s2 / (1 - g)), B2});
    return s;
  };
  std::ostringstream t;
  t << "E:" << fmt_double(K) << "|E:" << fmt_double(1 / K);
  Params p = params;
  p["x"] = x;
  return StaircaseSpec(diag({-x, x}), fn, "elliptic", p, SetId::parse(t.str()));
}

StaircaseSpec plaplace(const Params& params) {
  double p = param(params, "p"), b = param(params, "b"), x = param(params, "x", 1);
  if (!(p > 1 && p < 2)) fail(Errc::invalid_input, "plaplace: needs p in (1,2)");
  if (!(b > 1)) fail(Errc::invalid_input, "plaplace: needs b > 1");
  if (!(x >= 1)) fail(Errc::invalid_input, "plaplace: needs start x >= 1");
  auto fn = [p, b](int, const Mat& prev) {
    double xp = prev(0, 0) / b;
    double e = p - 1;
    double up = std::pow(xp + 1, e), xe = std::pow(xp, e), be = std::pow(b * xp, e);
    double a1 = (up - xe) / (be + up);
    double s2 = b / ((b + 1) * (xp + 1));
    Mat B1 = diag({b * xp, be});
    Mat C = diag({b * xp, -up});
    Mat B2 = diag({-(xp + 1), -up});
    Mat An = diag({b * (xp + 1), -up});
    StepData s;
    s.cert.steps.push_back({prev, B1, C, Weight(a1), std::nullopt});
    s.cert.steps.push_back({C, B2, An, Weight(s2), std::nullopt});
    double g = (1 - a1) * (1 - s2);
    s.gamma = Weight(g);
    s.A = An;
    s.mu.atoms.push_back({Weight(a1 / (1 - g)), B1});
    s.mu.atoms.push_back({Weight((1 - a1) * s2 / (1 - g)), B2});
    return s;
  };
  Params pp = params;
  pp["x"] = x;
  std::ostringstream t;
  t << "D&Kp:" << fmt_double(p);
  return StaircaseSpec(diag({b * x, -std::pow(x, p - 1)}), fn, "plaplace", pp, SetId::parse(t.str()));
}

}  // namespace

StaircaseSpec example_staircase(const std::string& kind, const Mat& A, const Params& params) {
  if (kind == "det1") return det1(A, params);
  if (kind == "rank_drop" || kind == "rankdrop") return rank_drop(A, params);
  if (kind == "elliptic") {
    Params p = params;
    if (A.size() > 0) {
      if (A.rows() != 2 || A.cols() != 2 || !diagonal(A) || A(0, 0) != -A(1, 1))
        fail(Errc::invalid_input, "elliptic: A must be diag(-x, x)");
      p["x"] = A(1, 1);
    }
    return elliptic(p);
  }
  if (kind == "plaplace") {
    StaircaseSpec s = plaplace(params);
    if (A.size() > 0 && (A.rows() != 2 || A.cols() != 2 || (A - s.A0()).norm() > 1e-12 * (1 + A.norm())))
      fail(Errc::invalid_input, "plaplace: A must be diag(b x, -x^(p-1)) for the given p, b, x");
    return s;
  }
  fail(Errc::invalid_input, "unknown staircase kind '" + kind + "'");
}

}  // namespace lf
