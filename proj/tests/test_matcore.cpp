#include <doctest.h>

#include <cmath>
#include <random>

#include "lf/error.hpp"
#include "lf/matcore.hpp"

using namespace lf;

namespace {

Mat random_orthogonal(std::mt19937_64& g, int n) {
  std::normal_distribution<double> N(0, 1);
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = N(g);
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ();
}

Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("rank examples") {
  CHECK(rank(diag({1, 0, 0, 0})) == 1);
  Mat a = outer(unit(2, 0) + unit(2, 1), unit(2, 0));
  CHECK(rank(a) == 1);
  CHECK(rank(diag({0.5, 2}) - diag({4, 2})) == 1);
  CHECK(rank(Mat::Zero(3, 3)) == 0);
  Mat bad = Mat::Identity(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(rank(bad), Error);
}

TEST_CASE("rank is invariant under transpose and orthogonal multiplication") {
  std::mt19937_64 g(7);
  std::normal_distribution<double> N(0, 1);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int rep = 0; rep < 200; ++rep) {
    int r = dim(g), c = dim(g);
    int k = std::uniform_int_distribution<int>(0, std::min(r, c))(g);
    Mat x = Mat::Zero(r, c);
    for (int i = 0; i < k; ++i) {
      Vec u(r), v(c);
      for (int j = 0; j < r; ++j) u(j) = N(g);
      for (int j = 0; j < c; ++j) v(j) = N(g);
      x += u * v.transpose();
    }
    int rk = rank(x);
    CHECK(rk == k);
    CHECK(rank(x.transpose()) == rk);
    CHECK(rank(random_orthogonal(g, r) * x * random_orthogonal(g, c)) == rk);
  }
}

TEST_CASE("rank one connections") {
  Mat b = diag({1, 2});
  CHECK_FALSE(rank_one_connected(b, b));
  CHECK(rank_one_connected(outer(unit(2, 0), unit(2, 0)), outer(unit(2, 1), unit(2, 0))));
  CHECK_FALSE(rank_one_connected(diag({1, 1}), diag({2, 2})));
  CHECK_THROWS_AS(rank_one_connected(Mat::Zero(2, 2), Mat::Zero(3, 3)), Error);
}

TEST_CASE("signed block svd examples") {
  auto s = signed_block_svd(Mat::Identity(4, 4));
  CHECK((s.R - Mat::Identity(4, 4)).norm() == 0);
  CHECK((s.D - Mat::Identity(4, 4)).norm() == 0);
  s = signed_block_svd(diag({2, -3}));
  CHECK((s.R - Mat::Identity(2, 2)).norm() == 0);
  CHECK((s.D - diag({2, -3})).norm() == 0);
  CHECK((s.Q - Mat::Identity(2, 2)).norm() == 0);

  Mat a = Mat::Identity(4, 4);
  a.block(0, 0, 2, 2) = rotation(0.7);
  s = signed_block_svd(a);
  CHECK((s.R - a).norm() < 1e-14);
  CHECK((s.D - Mat::Identity(4, 4)).norm() < 1e-14);
  CHECK((s.Q - Mat::Identity(4, 4)).norm() < 1e-14);

  Mat off = Mat::Identity(2, 2);
  off(0, 1) = 1;
  CHECK_THROWS_AS(signed_block_svd(off), Error);
}

TEST_CASE("signed block svd property") {
  std::mt19937_64 g(11);
  std::normal_distribution<double> N(0, 3);
  for (int rep = 0; rep < 200; ++rep) {
    int n = 1 + rep % 4;
    Mat a = Mat::Zero(2 * n, 2 * n);
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(k * n + i, k * n + j) = N(g);
    auto s = signed_block_svd(a);
    CHECK((a - s.R * s.D * s.Q.transpose()).norm() <= 1e-10 * (1 + a.norm()));
    CHECK(std::abs(s.R.determinant() - 1) < 1e-10);
    CHECK(std::abs(s.Q.determinant() - 1) < 1e-10);
    CHECK(is_block_diagonal(s.R, 0));
    CHECK(is_block_diagonal(s.Q, 0));
    CHECK((s.R.transpose() * s.R - Mat::Identity(2 * n, 2 * n)).norm() < 1e-10);
    for (int i = 0; i < 2 * n; ++i)
      for (int j = 0; j < 2 * n; ++j)
        if (i != j) CHECK(s.D(i, j) == 0);
  }
}

TEST_CASE("membership") {
  CHECK(member(diag({1, 1}), SetId::parse("Sigma")));
  CHECK_FALSE(member(outer(unit(2, 0) + unit(2, 1), unit(2, 0)), SetId::parse("L")));
  for (double x : {0.0, 0.5, 3.0}) CHECK(member(diag({x, 3 * x}), SetId::parse("E:3")));
  CHECK_FALSE(member(diag({1, 2}), SetId::parse("E:3")));
  // rotated parametrization diag(l, rho l) R
  CHECK(member(diag({2, 6}) * rotation(0.4), SetId::parse("E:3")));
  CHECK(member(diag({2, std::pow(2, 0.5)}) * rotation(-1.1), SetId::parse("Kp:1.5")));
  CHECK_FALSE(member(diag({2, 2}), SetId::parse("Kp:1.5")));
  CHECK(member(diag({3, -2}), SetId::parse("D>=2")));
  CHECK_FALSE(member(diag({3, 1}), SetId::parse("D>=2")));
  CHECK(member(diag({0, 0, 1, 0}), SetId::parse("rank<=1")));
  CHECK_THROWS_AS(member(Mat::Identity(3, 3), SetId::parse("L")), Error);
  CHECK_THROWS_AS(member(Mat::Identity(3, 3), SetId::parse("E:2")), Error);
  CHECK_THROWS_AS(SetId::parse("E:-1"), Error);
  CHECK(SetId::parse("L&Sigma").str() == "L&Sigma");
}

TEST_CASE("intersection is the conjunction") {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> U(-3, 3);
  SetId both = SetId::parse("L1&Sigma");
  SetId l1 = SetId::parse("L1"), sig = SetId::parse("Sigma");
  for (int rep = 0; rep < 200; ++rep) {
    Mat x(2, 2);
    x << U(g), (rep % 2 ? 0.0 : U(g)), (rep % 3 ? 0.0 : U(g)), U(g);
    if (rep % 4 == 0) x(1, 1) = (1 + x(0, 1) * x(1, 0)) / (x(0, 0) == 0 ? 1 : x(0, 0));
    CHECK(member(x, both) == (member(x, l1) && member(x, sig)));
  }
}

TEST_CASE("conformal split") {
  auto c = conformal_split(Mat::Identity(2, 2));
  CHECK((c.plus - Mat::Identity(2, 2)).norm() == 0);
  CHECK(c.minus.norm() == 0);
  c = conformal_split(m2(1, 0, 0, -1));
  CHECK(c.plus.norm() == 0);
  CHECK((c.minus - m2(1, 0, 0, -1)).norm() == 0);
  c = conformal_split(m2(1, 2, 3, 4));
  CHECK((c.plus - 0.5 * m2(5, -1, 1, 5)).norm() == 0);
  CHECK((c.minus - 0.5 * m2(-3, 5, 5, 3)).norm() == 0);

  std::mt19937_64 g(3);
  std::normal_distribution<double> N(0, 2);
  for (int rep = 0; rep < 100; ++rep) {
    Mat a = m2(N(g), N(g), N(g), N(g));
    c = conformal_split(a);
    CHECK(std::abs(a.squaredNorm() - c.plus.squaredNorm() - c.minus.squaredNorm()) <= 1e-12 * (1 + a.squaredNorm()));
    CHECK((c.plus + c.minus - a).norm() <= 1e-15 * (1 + a.norm()));
    CHECK(c.plus(0, 0) == c.plus(1, 1));
    CHECK(c.plus(0, 1) == -c.plus(1, 0));
    CHECK(c.minus(0, 0) == -c.minus(1, 1));
    CHECK(c.minus(0, 1) == c.minus(1, 0));
  }
}
