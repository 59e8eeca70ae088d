#include <doctest.h>

#include <cmath>
#include <random>

#include "lf/error.hpp"
#include "lf/format.hpp"
#include "lf/measure.hpp"

using namespace lf;

TEST_CASE("elementary split examples") {
  Measure d = Measure::dirac(diag({2, 2}));
  SplitStep st{diag({2, 2}), diag({0.5, 2}), diag({4, 2}), Weight::ratio(4, 7), std::nullopt};
  Measure m = elementary_split(d, st);
  m.normalize();
  REQUIRE(m.atoms.size() == 2);
  CHECK(m.atoms[0].w.rational() == Rational(4, 7));
  CHECK(m.atoms[1].w.rational() == Rational(3, 7));
  CHECK(m.mass().rational() == 1);
  CHECK((barycenter(m) - diag({2, 2})).norm() < 1e-15);

  SplitStep same{diag({2, 2}), diag({2, 2}), diag({2, 2}), Weight::ratio(1, 2), std::nullopt};
  CHECK_THROWS_AS(elementary_split(d, same), Error);
  SplitStep rank2{diag({2, 2}), diag({1, 1}), diag({3, 3}), Weight::ratio(1, 2), std::nullopt};
  try {
    elementary_split(d, rank2);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_split);
  }
  SplitStep missing{diag({5, 5}), diag({4, 5}), diag({6, 5}), Weight::ratio(1, 2), std::nullopt};
  try {
    elementary_split(d, missing);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_found);
  }
}

TEST_CASE("barycenter examples") {
  Mat a = diag({1, -3});
  CHECK((barycenter(Measure::dirac(a)) - a).norm() == 0);
  Measure m;
  Mat e11 = outer(unit(2, 0), unit(2, 0)), e21 = outer(unit(2, 1), unit(2, 0));
  for (Mat x : {Mat(4 * e11), Mat(Mat::Zero(2, 2)), Mat(4 * e21), Mat(Mat::Zero(2, 2))})
    m.atoms.push_back({Weight::ratio(1, 4), x});
  m.normalize();
  CHECK(m.atoms.size() == 3);
  CHECK((barycenter(m) - outer(unit(2, 0) + unit(2, 1), unit(2, 0))).norm() < 1e-15);
  CHECK_THROWS_AS(barycenter(Measure{}), Error);
}

TEST_CASE("random splits conserve mass and barycenter") {
  std::mt19937_64 g(2024);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> small(-8, 8);
  std::uniform_int_distribution<int> den(2, 9);
  Measure nu = Measure::dirac(diag({1, 2}));
  Mat bary = diag({1, 2});
  for (int rep = 0; rep < 1000; ++rep) {
    const Atom& a = nu.atoms[rep % nu.atoms.size()];
    int dd = den(g);
    int num = std::uniform_int_distribution<int>(1, dd - 1)(g);
    Weight lam = Weight::ratio(num, dd);
    Vec u(2), v(2);
    u << small(g), small(g);
    v << (coin(g) ? 1 : 0), 1;
    if (u.norm() == 0) u(0) = 1;
    Mat dir = outer(u, v) / 8.0;
    // target = lam L + (1-lam) R with L - R = dir
    Mat L = a.M + (1.0 - lam.value()) * dir;
    Mat R = L - dir;
    SplitStep st{a.M, L, R, lam, std::nullopt};
    Weight before = nu.mass();
    nu = elementary_split(nu, st);
    CHECK(nu.mass().rational() == before.rational());
    CHECK((barycenter(nu) - bary).norm() <= 1e-10 * (1 + bary.norm()));
  }
  REQUIRE(nu.cert);
  CHECK(verify_laminate(nu, *nu.cert).pass);
}

TEST_CASE("perturbed certificate fails with the step index") {
  Measure nu = Measure::dirac(diag({2, 2}));
  nu = elementary_split(nu, {diag({2, 2}), diag({0.5, 2}), diag({4, 2}), Weight::ratio(4, 7), std::nullopt});
  nu = elementary_split(nu, {diag({4, 2}), diag({4, 0.25}), diag({4, 4}), Weight::ratio(8, 15), std::nullopt});
  REQUIRE(verify_laminate(nu, *nu.cert).pass);
  Certificate bad = *nu.cert;
  bad.steps[1].lambda = Weight(8.0 / 15.0 + 1e-3);
  auto rep = verify_laminate(nu, bad);
  CHECK_FALSE(rep.pass);
  CHECK(rep.failed_step == 1);
  CHECK(verify_laminate(Measure::dirac(diag({3, 3})), Certificate{}).pass);
}

TEST_CASE("partial split masses") {
  Measure nu;
  nu.atoms.push_back({Weight::ratio(1, 2), diag({1, 1})});
  nu.atoms.push_back({Weight::ratio(1, 2), diag({3, 1})});
  SplitStep st{diag({1, 1}), diag({0, 1}), diag({2, 1}), Weight::ratio(1, 2), Weight::ratio(1, 4)};
  Measure out = elementary_split(nu, st);
  out.normalize();
  CHECK(out.atoms.size() == 4);
  CHECK(out.mass().rational() == 1);
  st.mass = Weight::ratio(3, 4);
  CHECK_THROWS_AS(elementary_split(nu, st), Error);
}

TEST_CASE("orthogonal pushforward keeps the tail function") {
  std::mt19937_64 g(9);
  std::normal_distribution<double> N(0, 2);
  Measure nu;
  for (int i = 0; i < 30; ++i) {
    Mat x(2, 2);
    x << N(g), N(g), N(g), N(g);
    nu.atoms.push_back({Weight(1.0 / 30), x});
  }
  Mat U = rotation(0.3), V = rotation(-1.2);
  Measure pf = pushforward(nu, [&](const Mat& x) { return Mat(U * x * V); });
  for (double t = 0; t < 8; t += 0.05) CHECK(tail_mass(pf, t) == doctest::Approx(tail_mass(nu, t)).epsilon(1e-12));
  CHECK((barycenter(pushforward(nu, [](const Mat& x) { return x; })) - barycenter(nu)).norm() < 1e-14);
}

TEST_CASE("rank-losing pushforward is rejected") {
  Measure nu = Measure::dirac(diag({2, 2}));
  nu = elementary_split(nu, {diag({2, 2}), diag({0.5, 2}), diag({4, 2}), Weight::ratio(4, 7), std::nullopt});
  Mat P = Mat::Zero(2, 2);
  P(1, 1) = 1;
  CHECK_THROWS_AS(pushforward(nu, [&](const Mat& x) { return Mat(P * x); }, true), Error);
}

TEST_CASE("tail function is non-increasing and right-continuous") {
  Measure nu;
  for (int i = 1; i <= 6; ++i) nu.atoms.push_back({Weight::ratio(1, 6), diag({double(i), 0})});
  TailFn tf(nu);
  CHECK(tf(0) == doctest::Approx(1));
  CHECK(tf(3) == doctest::Approx(0.5));
  CHECK(tf(3 - 1e-12) == doctest::Approx(4.0 / 6));
  CHECK(tf(3 + 1e-12) == doctest::Approx(0.5));
  double prev = 2;
  for (double t = 0; t < 7; t += 0.01) {
    CHECK(tf(t) <= prev);
    CHECK(tf(t) == doctest::Approx(tail_mass(nu, t)));
    prev = tf(t);
  }
  // sup t tail attained below atom 3 or 4: 3*4/6 = 4*3/6 = 2
  CHECK(tf.sup_tp_tail(1) == doctest::Approx(2));
}

TEST_CASE("weak tail verification") {
  Measure z = Measure::dirac(Mat::Zero(2, 2));
  auto rep = verify_weak_tail(z, 2, 1, 0, Side::upper, log_grid(1e-3, 1e3, 30));
  CHECK(rep.pass);
  CHECK(rep.csv().rfind("t,tail,upper_env,lower_env,verdict\n", 0) == 0);
}

TEST_CASE("strong from weak") {
  CHECK(strong_from_weak(2, 1, 1, 0) == doctest::Approx(2));
  CHECK_THROWS_AS(strong_from_weak(2, 2, 1, 0), Error);
  // decreasing while p < 4.59 q (root of log(x-1) = x/(x-1) with x = p/q); increasing beyond
  for (double q : {1.0, 1.3})
    for (double p = q + 0.1; p + 0.1 < 4.5 * q; p += 0.1)
      CHECK(strong_from_weak(p + 0.1, q, 2, 1.5) < strong_from_weak(p, q, 2, 1.5));
  CHECK(strong_from_weak(8, 1, 2, 1.5) > strong_from_weak(6, 1, 2, 1.5));
  for (double a : {0.0, 0.5, 1.0, 3.0})
    for (double p = 1; p < 10; p += 0.25) CHECK(bracket_norm(p + 0.25, a) <= bracket_norm(p, a));
}

TEST_CASE("diamond with Dirac family is the identity") {
  Mat a = diag({1, 2});
  Measure out = diamond_compose(Measure::dirac(a), [&](std::size_t, const Atom& x) { return Measure::dirac(x.M); });
  REQUIRE(out.atoms.size() == 1);
  CHECK((out.atoms[0].M - a).norm() == 0);
  CHECK(out.atoms[0].w.rational() == 1);
  DiamondCheck chk;
  CHECK_THROWS_AS(diamond_compose_checked(Measure::dirac(a), [&](std::size_t, const Atom& x) { return Measure::dirac(x.M); },
                                          2, 2, {1.0}, chk),
                  Error);
}
