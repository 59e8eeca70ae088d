// Acceptance run: one line per criterion, exit status 1 when any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lf/error.hpp"
#include "lf/format.hpp"
#include "lf/io.hpp"
#include "lf/models.hpp"
#include "lf/stages.hpp"
#include "lf/staircase.hpp"
#include "lf/synth.hpp"

using namespace lf;

namespace {

struct Result {
  bool pass = true;
  std::ostringstream detail;
  std::string artifact;  // serialized outputs, compared on re-run

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
  template <class T>
  Result& note(const std::string& k, const T& v) {
    detail << ' ' << k << '=' << v;
    return *this;
  }
};

std::string f(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", x);
  return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool close_mat(const Mat& a, const Mat& b, double tol = 1e-12) { return norm(a - b) <= tol * (1 + norm(b)); }

const Domain kUnit = Domain::make_box({0, 0}, {1, 1});

// 2^{-2n-1} <= beta_n <= 2^{-2n+1} exactly; nu^30 tail in [2^-4, 2^3] |A|^2 t^-2 on [|A|, 2|A_25|]
void c1(Result& r) {
  auto s = example_staircase("det1", diag({2, 2}), {});
  bool exact = true;
  for (int n = 1; n <= 20; ++n) {
    Rational b = s.beta(n).rational();
    Rational lo = 1;
    for (int k = 0; k < 2 * n + 1; ++k) lo /= 2;
    exact = exact && s.beta(n).exact() && b >= lo && b <= lo * 4;
  }
  r.check(exact, "beta_n bounds");
  Measure nu = build_truncation(s, 30);
  double a = norm(s.A0());
  double slack = s.beta(30).value();
  auto grid = log_grid(a, 2 * norm(s.A(25)), 60);
  TailFn tf(nu);
  TailReport rep = check_envelopes(
      tf, grid, [&](double t) { return 8 * a * a / (t * t); }, [&](double t) { return a * a / (16 * t * t); }, slack);
  r.check(rep.pass, "tail envelope");
  r.note("beta20", s.beta(20).str()).note("beta30", f(slack));
  r.artifact = dump_json(to_json(nu), true) + rep.csv();
}

// gamma_n = 2^-m, atoms of rank <= m-1, tail in [2^{-m(2+m)}, 2^{1+m}] |A|^m t^-m
void c2(Result& r) {
  for (int m = 2; m <= 4; ++m) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<double> d(2 * m, 0.0);
    for (int i = 0; i < m; ++i) d[i] = 3 + 2 * i;
    auto s = example_staircase("rank_drop", diag(d), {{"m", double(m)}});
    const int N = 30;
    Measure nu = build_truncation(s, N);
    Rational g = 1;
    for (int k = 0; k < m; ++k) g /= 2;
    bool gam = true;
    for (int n = 1; n <= N; ++n) gam = gam && s.step(n).gamma.exact() && s.step(n).gamma.rational() == g;
    r.check(gam, "gamma m=" + std::to_string(m));
    bool rk = true;
    for (int n = 1; n <= N; ++n)
      for (const auto& a : s.step(n).mu.atoms) rk = rk && rank(a.M, 1e-9) <= m - 1;
    r.check(rk, "mu rank m=" + std::to_string(m));
    double a = norm(s.A0());
    double up = std::pow(2.0, 1 + m), lo = std::pow(2.0, -m * (2 + m));
    auto grid = log_grid(a, 2 * norm(s.A(N - 5)), 60);
    TailReport rep = check_envelopes(
        TailFn(nu), grid, [&](double t) { return up * std::pow(a / t, m); },
        [&](double t) { return lo * std::pow(a / t, m); }, s.beta(N).value());
    r.check(rep.pass, "tail m=" + std::to_string(m));
    double el = seconds_since(t0);
    r.check(el < 1, "runtime m=" + std::to_string(m));
    r.artifact += dump_json(to_json(nu), true) + rep.csv();
  }
}

// beta_n slope -2K/(K+1) within 1% on [1e2, 1e4]
void c3(Result& r) {
  for (double K : {1.5, 3.0, 10.0}) {
    auto s = example_staircase("elliptic", Mat(), {{"K", K}, {"x", 1}});
    double slope = beta_slope(s, 100, 10000);
    double want = -2 * K / (K + 1);
    r.check(std::abs(slope / want - 1) <= 0.01, "slope K=" + f(K));
    r.note("K" + f(K), f(slope) + "/" + f(want));
    r.artifact += fmt_double(slope) + "\n";
  }
}

// qbar in (1,p), slope -qbar within 1%, qbar(1.5, 9) = 1.025
void c4(Result& r) {
  for (double p : {1.1, 1.5, 1.9}) {
    double b = select_b(p);
    double q = qbar(p, b);
    r.check(q > 1 && q < p, "qbar range p=" + f(p));
    auto s = example_staircase("plaplace", Mat(), {{"p", p}, {"b", b}, {"x", 1}});
    double slope = beta_slope(s, 100, 10000);
    r.check(std::abs(slope / -q - 1) <= 0.01, "slope p=" + f(p));
    r.note("p" + f(p), f(slope) + "/" + f(-q));
    r.artifact += fmt_double(b) + "," + fmt_double(slope) + "\n";
  }
  double q9 = qbar(1.5, 9);
  r.check(std::abs(q9 - 1.025) <= 1e-15, "qbar(1.5,9)");
  r.note("qbar(1.5,9)", fmt_double(q9));
}

// randomized splits: exact mass, barycenter 1e-10, replay, rejections
void c5(Result& r) {
  std::mt19937_64 g(5);
  std::uniform_int_distribution<int> small(-8, 8), den(2, 9), coin(0, 1);
  Mat A = diag({1, 2});
  Measure nu = Measure::dirac(A);
  bool mass = true, bary = true;
  for (int rep = 0; rep < 1000; ++rep) {
    const Atom& a = nu.atoms[rep % nu.atoms.size()];
    int dd = den(g);
    Weight lam = Weight::ratio(std::uniform_int_distribution<int>(1, dd - 1)(g), dd);
    Vec u(2), v(2);
    u << small(g), small(g);
    v << coin(g), 1;
    if (u.norm() == 0) u(0) = 1;
    Mat dir = outer(u, v) / 8.0;
    Mat L = a.M + (1.0 - lam.value()) * dir;
    nu = elementary_split(nu, {a.M, L, Mat(L - dir), lam, std::nullopt});
    mass = mass && nu.mass().exact() && nu.mass().rational() == 1;
    bary = bary && norm(barycenter(nu) - A) <= 1e-10 * (1 + norm(A));
  }
  r.check(mass, "mass");
  r.check(bary, "barycenter");
  r.check(nu.cert && verify_laminate(nu, *nu.cert).pass, "certificate");
  // replay round trip, also through JSON
  Measure back = replay(A, Weight(1), *nu.cert);
  back.normalize();
  Measure mine = nu;
  mine.normalize();
  bool same = back.atoms.size() == mine.atoms.size();
  for (std::size_t i = 0; same && i < back.atoms.size(); ++i)
    same = close_mat(back.atoms[i].M, mine.atoms[i].M) && back.atoms[i].w.equals(mine.atoms[i].w);
  r.check(same, "replay");
  Measure parsed = measure_from_json(parse_json(dump_json(to_json(nu))));
  r.check(verify_laminate(parsed, *parsed.cert).pass && dump_json(to_json(parsed)) == dump_json(to_json(nu)),
          "json round trip");
  // rank 2 difference and broken convexity
  bool rejected = false;
  try {
    elementary_split(Measure::dirac(A), {A, diag({0, 1}), diag({2, 3}), Weight::ratio(1, 2), std::nullopt});
  } catch (const Error& e) {
    rejected = e.code() == Errc::invalid_split;
  }
  r.check(rejected, "rank-2 split accepted");
  Certificate bad = *nu.cert;
  bad.steps[7].lambda = Weight(bad.steps[7].lambda.value() + 1e-3);
  auto rep = verify_laminate(nu, bad);
  r.check(!rep.pass && rep.failed_step == 7, "perturbed certificate");
  r.note("atoms", nu.atoms.size());
  r.artifact = dump_json(to_json(nu), true);
}

// roof on the unit square
void c6(Result& r) {
  Mat A1 = Mat::Zero(2, 2), A2 = Mat::Zero(2, 2);
  A1 << 1, 0.5, 2, -1;
  A2 = A1 + outer(Vec2(1, -2), Vec2(0.6, 0.8)) * 3;
  for (double lam : {0.3, 0.5, 0.7}) {
    Mat A = lam * A1 + (1 - lam) * A2;
    Vec b(2);
    b << 0.25, -1;
    PiecewiseAffineMap m = roof(A, b, A1, A2, lam, kUnit, 0.05);
    MapReport mr = verify_map(m, 0.5, 10000);
    r.check(mr.boundary_residual <= 1e-9 && mr.boundary_samples >= 10000, "boundary lam=" + f(lam));
    GradientDistribution d = gradient_distribution(m);
    double v1 = 0, v2 = 0, sup = 0;
    for (const auto& a : d.cells.atoms) {
      if (close_mat(a.M, A1, 1e-9)) v1 += a.w.value();
      if (close_mat(a.M, A2, 1e-9)) v2 += a.w.value();
      sup = std::max(sup, norm(a.M));
    }
    double e = 0.05;
    r.check(v1 >= (1 - e) * lam && v1 <= (1 + e) * lam, "fraction A1 lam=" + f(lam));
    r.check(v2 >= (1 - e) * (1 - lam) && v2 <= (1 + e) * (1 - lam), "fraction A2 lam=" + f(lam));
    r.check(sup <= std::max(norm(A1), norm(A2)) * (1 + 1e-12), "sup norm lam=" + f(lam));
    r.note("lam" + f(lam), f(v1 / lam) + "," + f(v2 / (1 - lam)));
    r.artifact += dump_json(to_json(m), true) + dump_json(to_json(mr));
  }
}

// Example-1 staircase realization, N = 6, eta = 0.1, s = 4
void c7(Result& r) {
  auto s = example_staircase("det1", diag({2, 2}), {});
  const double eta = 0.1;
  Vec b = Vec::Zero(2);
  StaircaseRealization sr = realize_staircase(s, 6, kUnit, b, eta, 0.5, 4);
  GradientDistribution d = gradient_distribution(sr.map);
  double worst = 0;
  bool frac = true;
  for (const auto& a : sr.nuN.atoms) {
    double v = 0;
    for (const auto& c : d.cells.atoms)
      if (close_mat(c.M, a.M, 1e-9)) v += c.w.value();
    double ratio = v / a.w.value();
    worst = std::max(worst, std::abs(std::log(ratio)));
    frac = frac && ratio >= std::exp(-eta) && ratio <= std::exp(eta);
  }
  r.check(frac, "volume fractions");
  double em = d.error_moment(4, true);
  r.check(em <= eta, "error moment");
  MapReport mr = verify_map(sr.map, 0.5, 10000);
  r.check(mr.boundary_residual <= 1e-9, "boundary");
  r.note("max|log ratio|", f(worst)).note("error_moment", f(em)).note("templates", sr.map.templates.size());
  r.artifact = dump_json(to_json(sr.map), true) + dump_json(to_json(mr));
}

// exact recursion, K = 8, stage 3 builder, n = 1
void c8(Result& r) {
  Mat A = diag({1, 2});
  PipelineOptions o;
  ReduceReport rep;
  GoodFn in_K = [](const Mat& X) { return member(X, SetId::parse("L&Sigma"), 1e-8); };
  const int K = 8;
  PiecewiseAffineMap m =
      reduce_exact(stage3_builder(o, 2, 2), kUnit, A, Vec::Zero(2), 1.0, 0.5, K, 2, 2, in_K, rep, 64, 2);
  bool rounds = static_cast<int>(rep.rounds.size()) == K;
  // tail_constant is already divided by 1+|A|^p
  for (const auto& k : rep.rounds) rounds = rounds && k.tail_constant <= 2 * rep.Mp * (1 + 1e-12);
  r.check(rounds, "tail bound per round");
  double em = rep.rounds.empty() ? 1 : rep.rounds.back().error_moment;
  r.check(em <= std::ldexp(1.0, -K), "error moment");
  MapReport mr = verify_map(m, 0.5, 4000);
  r.check(mr.boundary_residual <= 1e-9, "boundary");
  r.note("error_moment", f(em)).note("Mp", f(rep.Mp));
  if (!rep.rounds.empty()) r.note("tail", f(rep.rounds.back().tail_constant));
  r.artifact = dump_json(to_json(m), true) + dump_json(to_json(rep));
}

// product pipeline, measure mode, n = 1, and the n = 2 smoke run
void c9(Result& r) {
  Mat A(2, 2);
  A << 1, 1, 0, 1;
  PipelineOptions o;
  o.beta_tol = 1e-4;
  o.member_tol = 1e-8;
  Measure nu = product_measure(A, o);
  PipelineReport rep = pipeline_report(A, nu, o, 10, 1000);
  r.check(rep.good_mass >= 0.999, "mass in L cap Sigma");
  r.check(norm(barycenter(nu) - A) <= 1e-9, "barycenter");
  r.check(rep.slope >= -2.1 && rep.slope <= -1.9, "tail slope");
  r.note("good", f(rep.good_mass)).note("slope", f(rep.slope)).note("atoms", rep.atoms);
  r.artifact = dump_json(to_json(nu), true) + dump_json(to_json(rep));

  auto t0 = std::chrono::steady_clock::now();
  Mat B = Mat::Identity(4, 4);
  B(0, 1) = 1;
  B(2, 3) = 1;
  B(1, 2) = 0.5;
  PipelineOptions o2;
  o2.beta_tol = 1e-2;
  Measure nu2 = product_measure(B, o2);
  PipelineReport rep2 = pipeline_report(B, nu2, o2, 10, 1000);
  double el = seconds_since(t0);
  r.check(el < 300, "n=2 smoke runtime");
  r.note("n2_good", f(rep2.good_mass)).note("n2_slope", f(rep2.slope)).note("n2_s", f(el));
  r.artifact += dump_json(to_json(rep2));
}

// approximate sequence for (e1+e2) (x) e1, j <= 6
void c10(Result& r) {
  Mat A(2, 2);
  A << 1, 0, 1, 0;
  PipelineOptions o;
  o.t_cover = 1e3;
  std::vector<double> em;
  double d1 = INFINITY, d2 = INFINITY, floor = 0;
  bool slopes = true;
  for (int j = 1; j <= 6; ++j) {
    ApproxReport rep;
    PiecewiseAffineMap m = approximate_sequence(A, kUnit, Vec::Zero(2), j, 0.25, o, rep);
    em.push_back(rep.error_moment);
    d1 = std::min(d1, rep.dist_L1);
    d2 = std::min(d2, rep.dist_L2);
    floor = rep.dist_floor;
    slopes = slopes && std::abs(rep.slope / -2.0 - 1) <= 0.05;
    r.check(rep.map.boundary_residual <= 1e-9, "boundary j=" + std::to_string(j));
    r.artifact += dump_json(to_json(rep));
    if (j == 6) r.note("slope6", f(rep.slope));
  }
  bool dec = true;
  for (int j = 0; j + 2 < 6; ++j) dec = dec && em[j] >= 4 * em[j + 2];
  r.check(dec, "moment decrease x4 per two steps");
  // Jensen: the integral of dist(grad u, L_i) is at least dist(A, L_i)
  r.check(floor > 0 && d1 >= floor * (1 - 1e-9) && d2 >= floor * (1 - 1e-9), "distance floor");
  r.check(slopes, "tail exponent");
  r.note("em1", f(em[0])).note("em6", f(em[5])).note("dL1", f(d1)).note("dL2", f(d2)).note("floor", f(floor));
}

// randomized diamond compositions and the equal-exponent example
void c11(Result& r) {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> U(0, 1);
  int passed = 0;
  double worst = 0;
  for (int k = 0; k < 50; ++k) {
    int m = 2 + static_cast<int>(U(g) * 3);
    std::vector<double> d(2 * m, 0.0);
    for (int i = 0; i < m; ++i) d[i] = 1 + 4 * U(g);
    auto s = example_staircase("rank_drop", diag(d), {{"m", double(m)}});
    Measure outer = build_truncation(s, 8 + static_cast<int>(U(g) * 8));
    double p = m;
    double q;
    do {
      q = 0.5 + 7.5 * U(g);
    } while (std::abs(q - p) < 0.25);
    // family: rank-one laminate into L for one-rank atoms, Dirac otherwise
    Family fam = [&](std::size_t, const Atom& a) {
      if (m == 2 && !a.residual && norm(a.M) > 0) return stage2_laminate(a.M);
      return Measure::dirac(a.M);
    };
    double top = 0;
    for (const auto& a : outer.atoms) top = std::max(top, norm(a.M));
    DiamondCheck ck;
    Measure nu = diamond_compose_checked(outer, fam, p, q, log_grid(0.1, 8 * top, 60), ck);
    bool ok = ck.report.pass && std::abs(nu.mass().value() - 1) <= 1e-12;
    if (ok) ++passed;
    worst = std::max(worst, ck.C);
    r.artifact += ck.report.csv();
  }
  r.check(passed == 50, std::to_string(50 - passed) + " compositions outside the envelope");
  bool grows = true;
  double last = 0;
  for (double p : {1.5, 2.0, 3.0}) {
    auto ex = equal_exponent_example(p, 80);
    auto y = ex.scaled_tail(40);
    for (std::size_t l = 1; l < y.size(); ++l) grows = grows && y[l] > y[l - 1];
    last = y.back() / y.front();
    std::string row;
    for (double v : y) row += fmt_double(v) + ",";
    r.artifact += row + "\n";
  }
  r.check(grows, "t^p tail not increasing");
  r.note("passed", passed).note("max C", f(worst)).note("growth(p=3)", f(last));
}

// AFS two-sided fit
void c12(Result& r) {
  AfsOptions o;
  o.K = 3;
  o.N = 200;
  AfsReport rep;
  Measure nu = afs_measure(diag({-1, 1}), o, rep);
  r.check(rep.fit.report.pass, "two-sided envelope");
  r.check(rep.fit.M <= 1e3, "M cap");
  r.check(rep.pass, "verdict");
  r.note("M", f(rep.fit.M)).note("q", f(rep.q)).note("slope", f(rep.slope));
  r.artifact = dump_json(to_json(nu), true) + dump_json(to_json(rep));
}

// p-Laplace divergence proxy
void c13(Result& r) {
  PlapOptions o;
  o.p = 1.5;
  PlapReport rep = plap_pipeline(Mat::Zero(2, 2), o);
  bool growth = !rep.growth.empty();
  for (double gr : rep.growth) growth = growth && gr >= 0.10;
  r.check(growth && rep.rows.back().N == 10000, "qbar moment growth");
  r.check(rep.max_increment < 1e-3, "Cauchy increments");
  r.check(rep.support_ok, "support in K_p");
  r.note("qbar", f(rep.qbar)).note("b", f(rep.b)).note("max_inc", f(rep.max_increment));
  for (double gr : rep.growth) r.note("growth", f(gr));
  r.artifact = dump_json(to_json(rep));
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    double limit;  // seconds
    std::function<void(Result&)> run;
  };
  std::vector<Criterion> all = {{1, 1, c1},    {2, 3, c2},    {3, 5, c3},    {4, 5, c4},  {5, 5, c5},
                                {6, 2, c6},    {7, 30, c7},   {8, 60, c8},   {9, 360, c9}, {10, 120, c10},
                                {11, 10, c11}, {12, 10, c12}, {13, 30, c13}};
  std::vector<std::string> first;
  bool all_pass = true;
  for (const auto& c : all) {
    Result r;
    auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(r);
    } catch (const std::exception& e) {
      r.check(false, std::string("exception: ") + e.what());
    }
    double el = seconds_since(t0);
    r.check(el < c.limit, "runtime");
    all_pass = all_pass && r.pass;
    first.push_back(r.artifact);
    std::printf("criterion %2d: %s  (%.2fs)%s\n", c.id, r.pass ? "PASS" : "FAIL", el, r.detail.str().c_str());
    std::fflush(stdout);
  }
  // determinism: every artifact again, byte for byte
  Result r14;
  auto t0 = std::chrono::steady_clock::now();
  std::size_t bytes = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    Result again;
    try {
      all[i].run(again);
    } catch (const std::exception& e) {
      again.artifact = e.what();
    }
    bytes += again.artifact.size();
    r14.check(!first[i].empty() && again.artifact == first[i], "criterion " + std::to_string(all[i].id) + " differs");
  }
  r14.note("bytes", bytes);
  all_pass = all_pass && r14.pass;
  std::printf("criterion 14: %s  (%.2fs)%s\n", r14.pass ? "PASS" : "FAIL", seconds_since(t0), r14.detail.str().c_str());
  return all_pass ? 0 : 1;
}
