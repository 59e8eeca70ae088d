#include <cmath>
#include <sstream>

#include "lf/error.hpp"
#include "lf/format.hpp"
#include "lf/models.hpp"
#include "lf/staircase.hpp"

namespace lf {

namespace {

MatFn then(const MatFn& T, const MatFn& S) {
  return [T, S](const Mat& x) { return T(S(x)); };
}

bool near_diagonal(const Mat& x) { return std::abs(x(0, 1)) + std::abs(x(1, 0)) <= 1e-14 * (1 + x.norm()); }

struct Builder {
  std::vector<Atom> finite;
  std::vector<ExtendedMeasure::Tail> tails;
  Certificate cert;

  void split(const MatFn& T, const Mat& target, const Mat& left, const Mat& right, Weight lambda, Weight mass) {
    cert.steps.push_back({T(target), T(left), T(right), lambda, mass});
  }
  void leaf(const MatFn& T, const Mat& x, Weight w) { finite.push_back({w, T(x)}); }
  void tail(const StaircaseSpec& base, const MatFn& T, Weight w, const std::string& label) {
    StaircaseSpec s = base.pushforward(T, label);
    for (auto& t : tails)
      if ((t.spec.A0() - s.A0()).norm() <= 1e-12 * (1 + s.A0().norm())) {
        t.w += w;
        return;
      }
    tails.push_back({w, s});
  }
};

// Steps 4/5: general 2x2 matrix to diagonal pieces under X -> X R.
template <class Diag>
void general(const Mat& x, Weight w, const MatFn& T, Builder& b, const Diag& diag_case) {
  if (near_diagonal(x)) {
    diag_case(x(0, 0), x(1, 1), w, T);
    return;
  }
  auto cs = conformal_split(x);
  double np = cs.plus.norm(), nm = cs.minus.norm();
  auto conformal = [&](const Mat& c, Weight wc) {
    double s = c.norm() / std::sqrt(2.0);
    Mat R = c / s;
    diag_case(s, s, wc, then(T, [R](const Mat& y) { return Mat(y * R); }));
  };
  auto anticonformal = [&](const Mat& c, Weight wc) {
    double s = c.norm() / std::sqrt(2.0);
    Mat R = diag({1, -1}) * c / s;
    diag_case(s, -s, wc, then(T, [R](const Mat& y) { return Mat(y * R); }));
  };
  const double tiny = 1e-14 * (1 + x.norm());
  if (nm <= tiny) {
    conformal(x, w);
    return;
  }
  if (np <= tiny) {
    anticonformal(x, w);
    return;
  }
  double lam = np / (np + nm);
  Mat B = cs.plus / lam, C = cs.minus / (1 - lam);
  b.split(T, x, B, C, Weight(lam), w);
  conformal(B, w * Weight(lam));
  anticonformal(C, w * Weight(1 - lam));
}

struct Elliptic {
  double K;
  StaircaseSpec base;
  Builder& b;

  void diag_case(double x, double y, Weight w, const MatFn& T) const {
    if (x == -y && x != 0) {
      double c = y;
      b.tail(base, then(T, [c](const Mat& z) { return Mat(c * z); }), w, "ext");
      return;
    }
    if (std::max(std::abs(x), std::abs(y)) < 2) {
      double a1 = (2 - x) / 4, a2 = (2 - y) / 4;
      b.split(T, diag({x, y}), diag({-2, y}), diag({2, y}), Weight(a1), w);
      for (double sx : {-2.0, 2.0}) {
        Weight ws = w * Weight(sx < 0 ? a1 : 1 - a1);
        b.split(T, diag({sx, y}), diag({sx, -2}), diag({sx, 2}), Weight(a2), ws);
        diag_case(sx, -2, ws * Weight(a2), T);
        diag_case(sx, 2, ws * Weight(1 - a2), T);
      }
      return;
    }
    if (std::abs(x) > std::abs(y)) {
      Mat P(2, 2);
      P << 0, 1, 1, 0;
      diag_case(y, x, w, then(T, [P](const Mat& z) { return Mat(P * z * P); }));
      return;
    }
    if (y < 0) {
      diag_case(-x, -y, w, then(T, [](const Mat& z) { return Mat(-z); }));
      return;
    }
    double a = (K - x / y) / (K + 1);
    b.split(T, diag({x, y}), diag({-y, y}), diag({K * y, y}), Weight(a), w);
    diag_case(-y, y, w * Weight(a), T);
    b.leaf(T, diag({K * y, y}), w * Weight(1 - a));
  }
};

struct PLaplace {
  double p, bb;
  StaircaseSpec base;
  Builder& b;

  void diag_case(double x, double y, Weight w, const MatFn& T) const {
    if (std::max(std::abs(x), std::abs(y)) <= 0.5) {
      double a1 = (1 - y) / 2, a2 = (bb - x) / (bb + 1), a3 = (1 - x) / (bb + 1);
      b.split(T, diag({x, y}), diag({x, -1}), diag({x, 1}), Weight(a1), w);
      Weight wl = w * Weight(a1), wr = w * Weight(1 - a1);
      b.split(T, diag({x, -1}), diag({-1, -1}), diag({bb, -1}), Weight(a2), wl);
      b.leaf(T, diag({-1, -1}), wl * Weight(a2));
      b.tail(base, T, wl * Weight(1 - a2), "ext");
      b.split(T, diag({x, 1}), diag({-bb, 1}), diag({1, 1}), Weight(a3), wr);
      b.tail(base, then(T, [](const Mat& z) { return Mat(-z); }), wr * Weight(a3), "ext");
      b.leaf(T, diag({1, 1}), wr * Weight(1 - a3));
      return;
    }
    double lam = std::max(2 * std::abs(x), std::pow(2 * std::abs(y), 1 / (p - 1)));
    double le = std::pow(lam, p - 1);
    Mat S = diag({lam, le});
    diag_case(x / lam, y / le, w, then(T, [S](const Mat& z) { return Mat(S * z); }));
  }
};

}  // namespace

Measure ExtendedMeasure::truncate(int N) const {
  Measure nu;
  for (const auto& a : finite) nu.atoms.push_back(a);
  Certificate cert = root_cert;
  for (const auto& t : tails) {
    Measure m = build_truncation(t.spec, N);
    Certificate abs;
    replay(t.spec.A0(), t.w, m.cert->scaled(t.w), 1e-9, &abs);
    for (auto& s : abs.steps) cert.steps.push_back(std::move(s));
    for (const auto& a : m.atoms) nu.atoms.push_back({t.w * a.w, a.M, a.residual});
  }
  nu.normalize();
  nu.cert = std::move(cert);
  return nu;
}

double ExtendedMeasure::residual_bound(int N) const {
  double s = 0;
  for (const auto& t : tails) s += t.w.value() * t.spec.beta(N).value();
  return s;
}

ExtendedMeasure extended_measure(const std::string& kind, const Mat& A, const Params& params) {
  if (A.rows() != 2 || A.cols() != 2) fail(Errc::invalid_input, "extended_measure: needs a 2x2 matrix");
  if (!all_finite(A)) fail(Errc::invalid_input, "extended_measure: non-finite entry");
  Builder b;
  ExtendedMeasure out;
  out.A = A;
  out.kind = kind;
  out.params = params;
  MatFn id = [](const Mat& x) { return x; };
  if (kind == "elliptic") {
    auto it = params.find("K");
    if (it == params.end() || !(it->second > 1)) fail(Errc::invalid_input, "elliptic: needs K > 1");
    double K = it->second;
    Params bp{{"K", K}, {"x", 1}};
    Elliptic e{K, example_staircase("elliptic", Mat(), bp), b};
    general(A, Weight(1), id, b, [&](double x, double y, Weight w, const MatFn& T) { e.diag_case(x, y, w, T); });
    std::ostringstream t;
    t << "E:" << fmt_double(K) << "|E:" << fmt_double(1 / K);
    out.target = SetId::parse(t.str());
  } else if (kind == "plaplace") {
    auto it = params.find("p");
    if (it == params.end() || !(it->second > 1 && it->second < 2))
      fail(Errc::invalid_input, "plaplace: needs p in (1,2)");
    double p = it->second;
    double bb = params.count("b") ? params.at("b") : select_b(p);
    if (!(bb > 1)) fail(Errc::invalid_input, "plaplace: needs b > 1");
    out.params["b"] = bb;
    Params bp{{"p", p}, {"b", bb}, {"x", 1}};
    PLaplace pl{p, bb, example_staircase("plaplace", Mat(), bp), b};
    general(A, Weight(1), id, b, [&](double x, double y, Weight w, const MatFn& T) { pl.diag_case(x, y, w, T); });
    std::ostringstream t;
    t << "Kp:" << fmt_double(p);
    out.target = SetId::parse(t.str());
  } else {
    fail(Errc::invalid_input, "extended_measure: kind must be elliptic or plaplace");
  }
  out.finite = std::move(b.finite);
  out.tails = std::move(b.tails);
  out.root_cert = std::move(b.cert);
  return out;
}

TwoSided fit_two_sided(const Measure& nu, double q, double normA, const std::vector<double>& grid, double M_cap) {
  TailFn tf(nu);
  TwoSided r;
  const double k = 1 + std::pow(normA, q);
  for (double t : grid) {
    double env = k * std::pow(t, -q), tail = tf(t);
    r.M_upper = std::max(r.M_upper, tail / env);
    r.M_lower = std::max(r.M_lower, tail > 0 ? env / tail : INFINITY);
  }
  r.M = std::max({1.0, r.M_upper, r.M_lower});
  const double M = r.M;
  r.report = check_envelopes([&](double t) { return tf(t); }, grid, [=](double t) { return M * k * std::pow(t, -q); },
                             [=](double t) { return k * std::pow(t, -q) / M; });
  r.report.pass = r.report.pass && M <= M_cap;
  r.report.norm_sensitive = true;
  r.report.notes.push_back("fitted M = " + fmt_double(M));
  return r;
}

}  // namespace lf
