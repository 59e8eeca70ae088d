#include <doctest.h>

#include <cmath>

#include "lf/error.hpp"
#include "lf/format.hpp"
#include "lf/models.hpp"
#include "lf/staircase.hpp"

using namespace lf;

namespace {

const Atom* find_atom(const Measure& m, const Mat& x) {
  for (const auto& a : m.atoms)
    if ((a.M - x).norm() < 1e-12 * (1 + x.norm())) return &a;
  return nullptr;
}

}  // namespace

TEST_CASE("det1 one-step laminate at diag(2,2)") {
  auto s = example_staircase("det1", diag({2, 2}), {});
  CHECK(s.step(1).gamma.rational() == Rational(1, 5));
  Measure nu = build_truncation(s, 1);
  REQUIRE(nu.atoms.size() == 3);
  const Atom* a = find_atom(nu, diag({0.5, 2}));
  const Atom* b = find_atom(nu, diag({4, 0.25}));
  const Atom* c = find_atom(nu, diag({4, 4}));
  REQUIRE(a);
  REQUIRE(b);
  REQUIRE(c);
  CHECK(a->w.rational() == Rational(4, 7));
  CHECK(b->w.rational() == Rational(8, 35));
  CHECK(c->w.rational() == Rational(1, 5));
  CHECK(c->residual);
  CHECK((barycenter(nu) - diag({2, 2})).norm() < 1e-15);
  CHECK(verify_laminate(nu, *nu.cert).pass);
}

TEST_CASE("det1 second truncation tail") {
  auto s = example_staircase("det1", diag({2, 2}), {});
  Measure nu = build_truncation(s, 2);
  CHECK(tail_mass(nu, 9) == doctest::Approx(1.0 / 21).epsilon(1e-15));
  CHECK(s.beta(2).rational() == Rational(1, 21));
}

TEST_CASE("det1 beta bounds and telescoping") {
  auto s = example_staircase("det1", diag({2, 2}), {});
  for (int n = 1; n <= 20; ++n) {
    Rational b = s.beta(n).rational();
    // 2^{-2n-1} <= beta_n <= 2^{-2n+1}
    Rational p = 1;
    for (int k = 0; k < 2 * n; ++k) p /= 2;
    CHECK(b >= p / 2);
    CHECK(b <= p * 2);
    CHECK(b == s.beta(n - 1).rational() * s.step(n).gamma.rational());
    // closed form (D-1)/(2^{nd} D - 1) with D = 4
    Rational closed = Rational(3) / (Rational(4) / p - 1);
    CHECK(b == closed);
  }
  Measure nu = build_truncation(s, 12);
  CHECK(nu.atoms.back().w.rational() == s.beta(12).rational());
  CHECK(std::abs(nu.mass().value() - 1) == 0);
  CHECK(nu.mass().rational() == 1);
  for (const auto& a : nu.atoms)
    if (!a.residual) CHECK(member(a.M, SetId::parse("D&Sigma"), 1e-9));
}

TEST_CASE("det1 negative determinant and preconditions") {
  auto s = example_staircase("det1", diag({2, -2}), {});
  // D = -4
  CHECK(s.step(1).cert.steps[0].lambda.rational() == Rational(4, 9));
  CHECK(s.step(1).cert.steps[1].lambda.rational() == Rational(8, 17));
  CHECK(s.step(1).gamma.rational() == Rational(5, 17));
  CHECK_THROWS_AS(example_staircase("det1", diag({1.5, 3}), {}), Error);
  CHECK_NOTHROW(example_staircase("det1", diag({1.5, 3}), {{"unchecked", 1}}));
  CHECK_THROWS_AS(example_staircase("det1", diag({1.0, 3}), {{"unchecked", 1}}), Error);
}

TEST_CASE("check_hypotheses on det1") {
  auto s = example_staircase("det1", diag({2, 2}), {});
  double a2 = 8;  // |A|^2
  auto strict = check_hypotheses(s, 2, 20, 2, 2, 2 * a2, 0.5, a2 / 2);
  CHECK(strict.upper_pass);
  CHECK(strict.lower_beta);
  // mu_n gives |X| >= |A_n|/2 mass about 1/3 only
  CHECK_FALSE(strict.lower_mass);
  auto r = check_hypotheses(s, 2, 20, 2, 2, 2 * a2, 0.25, a2 / 2);
  CHECK(r.pass);
  CHECK(r.tails.pass);
  CHECK(r.mu_min_weight > 0.2);
}

TEST_CASE("rank_drop example") {
  Mat A = diag({3, 5, 0, 0});
  auto s = example_staircase("rank_drop", A, {{"m", 2}});
  Measure nu = build_truncation(s, 10);
  for (int n = 1; n <= 10; ++n) CHECK(s.step(n).gamma.rational() == Rational(1, 4));
  CHECK(verify_laminate(nu, *nu.cert).pass);
  for (const auto& a : nu.atoms)
    if (!a.residual) CHECK(rank(a.M) <= 1);
  CHECK((barycenter(nu) - A).norm() < 1e-12);
  auto s3 = example_staircase("rank_drop", diag({1, 2, 3, 0}), {});
  CHECK(s3.step(4).gamma.rational() == Rational(1, 8));
  CHECK_THROWS_AS(example_staircase("rank_drop", A, {{"m", 3}}), Error);
  CHECK_THROWS_AS(example_staircase("rank_drop", diag({1, 0}), {}), Error);
  auto h = check_hypotheses(s, 2, 10, 2, 2, 2 * 34, 0.25, 34.0 / 4);
  CHECK(h.upper_pass);
}

TEST_CASE("elliptic first step") {
  auto s = example_staircase("elliptic", Mat(), {{"K", 3}, {"x", 1}});
  const auto& st = s.step(1);
  CHECK(st.cert.steps[0].lambda.value() == doctest::Approx(3.0 / 7).epsilon(1e-15));
  CHECK(st.gamma.value() == doctest::Approx(5.0 / 14).epsilon(1e-15));
  Measure nu = build_truncation(s, 50);
  CHECK(verify_laminate(nu, *nu.cert).pass);
  for (const auto& a : nu.atoms)
    if (!a.residual) CHECK(member(a.M, SetId::parse("E:3|E:0.3333333333333333"), 1e-9));
  CHECK_THROWS_AS(example_staircase("elliptic", Mat(), {{"K", 1}}), Error);
}

TEST_CASE("plaplace staircase atoms lie in K_p") {
  auto s = example_staircase("plaplace", Mat(), {{"p", 1.5}, {"b", 9}, {"x", 1}});
  Measure nu = build_truncation(s, 30);
  CHECK(verify_laminate(nu, *nu.cert).pass);
  CHECK((barycenter(nu) - diag({9, -1})).norm() < 1e-10);
  for (const auto& a : nu.atoms) {
    if (a.residual) continue;
    CHECK(member(a.M, SetId::parse("Kp:1.5"), 1e-9));
    // |second entry| = |first entry|^{p-1}
    CHECK(std::abs(a.M(1, 1)) == doctest::Approx(std::pow(std::abs(a.M(0, 0)), 0.5)).epsilon(1e-12));
  }
}

TEST_CASE("pushforward of a spec") {
  auto s = example_staircase("rank_drop", diag({1, 1, 0, 0}), {});
  Mat R = Mat::Identity(4, 4);
  R.block(0, 0, 2, 2) = rotation(0.3);
  Mat Q = Mat::Identity(4, 4);
  Q.block(2, 2, 2, 2) = rotation(-0.9);
  auto t = s.pushforward([&](const Mat& x) { return Mat(R * x * Q); }, "rot");
  Measure nu = build_truncation(t, 6);
  CHECK(verify_laminate(nu, *nu.cert).pass);
  for (const auto& a : nu.atoms)
    if (!a.residual) CHECK(rank(a.M) <= 1);
  // -X on plaplace gives the same tail function
  auto pl = example_staircase("plaplace", Mat(), {{"p", 1.5}, {"b", 9}});
  auto neg = pl.pushforward([](const Mat& x) { return Mat(-x); }, "neg");
  Measure a = build_truncation(pl, 40), b = build_truncation(neg, 40);
  for (double tt : log_grid(1, 1e3, 50)) CHECK(tail_mass(a, tt) == doctest::Approx(tail_mass(b, tt)).epsilon(1e-14));
}

TEST_CASE("extended elliptic") {
  Params P{{"K", 3}};
  auto e = extended_measure("elliptic", diag({-1, 1}), P);
  CHECK(e.finite.empty());
  CHECK(e.tails.size() == 1);
  CHECK(e.root_cert.steps.empty());

  auto z = extended_measure("elliptic", Mat::Zero(2, 2), P);
  REQUIRE(z.root_cert.steps.size() >= 3);
  CHECK(z.root_cert.steps[0].lambda.value() == doctest::Approx(0.5));
  CHECK(z.root_cert.steps[1].lambda.value() == doctest::Approx(0.5));
  CHECK(z.root_cert.steps[2].lambda.value() == doctest::Approx(0.5));
  CHECK(z.tails.size() == 2);
  CHECK(z.finite.size() == 2);

  for (Mat A : {Mat(diag({0.3, -1.7})), Mat(diag({5, 1})), Mat(diag({-3, 7})), Mat(rotation(0.4) * 3),
                Mat(diag({1, -1}) * rotation(1.0) * 2.5)}) {
    Mat B = A;
    if (A(0, 0) == 5) B(0, 1) = 0.7;
    auto x = extended_measure("elliptic", B, P);
    Measure nu = x.truncate(60);
    CHECK(nu.mass().value() == doctest::Approx(1).epsilon(1e-12));
    CHECK((barycenter(nu) - B).norm() < 1e-9 * (1 + B.norm()));
    CHECK(verify_laminate(nu, *nu.cert, 1e-9).pass);
    double bad = 0;
    for (const auto& a : nu.atoms)
      if (!member(a.M, x.target, 1e-9)) bad += a.w.value();
    CHECK(bad <= x.residual_bound(60) * (1 + 1e-9));
  }
}

TEST_CASE("extended plaplace bounded case weights") {
  Params P{{"p", 1.5}, {"b", 9}};
  for (double x : {-0.5, -0.2, 0.0, 0.3, 0.5})
    for (double y : {-0.5, 0.1, 0.5}) {
      auto e = extended_measure("plaplace", diag({x, y}), P);
      REQUIRE(e.root_cert.steps.size() == 3);
      double a1 = e.root_cert.steps[0].lambda.value();
      double a2 = e.root_cert.steps[1].lambda.value();
      double a3 = e.root_cert.steps[2].lambda.value();
      CHECK(std::min(a1, 1 - a1) >= 0.25 - 1e-15);
      CHECK(1 - a2 >= 1.0 / 20 - 1e-15);
      CHECK(a3 >= 1.0 / 20 - 1e-15);
      double l1 = 0, l2 = 0;
      for (const auto& t : e.tails) {
        if (t.spec.A0()(0, 0) > 0) l1 = t.w.value();
        else l2 = t.w.value();
      }
      CHECK(l1 == doctest::Approx(a1 * (1 - a2)));
      CHECK(l2 == doctest::Approx((1 - a1) * a3));
    }
  for (Mat A : {Mat(diag({3, -0.2})), Mat(rotation(2.0) * 4), Mat(Mat::Identity(2, 2) + Mat::Ones(2, 2))}) {
    auto e = extended_measure("plaplace", A, P);
    Measure nu = e.truncate(40);
    CHECK((barycenter(nu) - A).norm() < 1e-9 * (1 + A.norm()));
    CHECK(verify_laminate(nu, *nu.cert, 1e-9).pass);
    for (const auto& a : nu.atoms)
      if (!a.residual) CHECK(member(a.M, e.target, 1e-9));
  }
}

TEST_CASE("exponents") {
  CHECK(exponent("elliptic", {{"K", 3}}).value == doctest::Approx(1.5));
  auto e = exponent("plaplace", {{"p", 1.5}, {"b", 9}});
  CHECK(e.value == doctest::Approx(1.025).epsilon(1e-15));
  CHECK(e.valid);
  auto f = exponent("plaplace", {{"p", 1.5}, {"b", 1}});
  CHECK(f.value == doctest::Approx(0.75));
  CHECK_FALSE(f.valid);
  CHECK_THROWS_AS(exponent("plaplace", {{"p", 2.5}, {"b", 3}}), Error);
  double prev = 1;
  for (double K = 1.1; K < 1000; K *= 1.3) {
    double v = exponent("elliptic", {{"K", K}}).value;
    CHECK(v > prev);
    CHECK(v < 2);
    prev = v;
  }
  CHECK(exponent("elliptic", {{"K", 1e9}}).value == doctest::Approx(2).epsilon(1e-8));
}

TEST_CASE("select_b") {
  CHECK(qbar(1.5, select_b(1.5)) >= 1.025);
  for (int i = 1; i <= 20; ++i) {
    double p = 1 + i / 21.0;
    double b = select_b(p);
    double q = qbar(p, b);
    CHECK(q > 1);
    CHECK(q < p);
    CHECK(std::abs(qbar_db(p, b)) < 1e-6);
  }
}
