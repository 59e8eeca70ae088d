#include <doctest.h>

#include <cmath>

#include "lf/error.hpp"
#include "lf/format.hpp"
#include "lf/models.hpp"

using namespace lf;

TEST_CASE("AFS two-sided fit") {
  AfsOptions o;
  AfsReport r;
  Measure nu = afs_measure(diag({-1, 1}), o, r);
  CHECK(r.q == doctest::Approx(1.5));
  CHECK(r.pass);
  CHECK(r.fit.M >= 1);
  CHECK(r.fit.M <= o.M_cap);
  CHECK(r.fit.report.pass);
  CHECK(verify_laminate(nu, *nu.cert, 1e-9).pass);
  CHECK(norm(barycenter(nu) - diag({-1, 1})) <= 1e-9);
  // the fitted M is the smallest one: shrinking it breaks one side
  TwoSided tighter = fit_two_sided(nu, r.q, norm(diag({-1, 1})), log_grid(o.t0, o.t1, o.points), o.M_cap);
  CHECK(tighter.M == doctest::Approx(r.fit.M));
  CHECK(r.slope == doctest::Approx(-1.5).epsilon(0.02));
}

TEST_CASE("AFS on a matrix already in the target") {
  AfsOptions o;
  AfsReport r;
  afs_measure(diag({1, 3}), o, r);
  CHECK(r.trivial);
}

TEST_CASE("partial moments are non-decreasing") {
  ExtendedMeasure E = extended_measure("plaplace", Mat::Zero(2, 2), {{"p", 1.5}});
  auto m = partial_moments(E, 1.0, 200);
  REQUIRE(m.size() == 200);
  for (std::size_t i = 1; i < m.size(); ++i) CHECK(m[i] >= m[i - 1]);
}

TEST_CASE("p-Laplace divergence proxy") {
  PlapOptions o;
  o.Ns = {100, 1000};
  o.cauchy_from = 500;
  PlapReport r = plap_pipeline(Mat::Zero(2, 2), o);
  CHECK(r.b == doctest::Approx(select_b(1.5)));
  CHECK(r.qbar == doctest::Approx(qbar(1.5, r.b)));
  CHECK(r.q == doctest::Approx(0.95 * r.qbar));
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[1].m_qbar > r.rows[0].m_qbar);
  CHECK(r.growth_ok);
  CHECK(r.support_ok);
  CHECK_THROWS_AS(plap_pipeline(Mat::Zero(2, 2), PlapOptions{2.5}), Error);
}

TEST_CASE("duality swap on measures") {
  ExtendedMeasure E = extended_measure("plaplace", diag({2, -0.3}), {{"p", 1.5}});
  Measure nu = E.truncate(40);
  DualityReport r;
  Measure d = duality_swap(nu, 1.5, r);
  CHECK(r.pass);
  CHECK(r.p_dual == doctest::Approx(3));
  CHECK(r.mass_out == doctest::Approx(r.mass_in));
  for (const auto& a : d.atoms)
    if (!a.residual) CHECK(member(a.M, SetId::parse("Kp:3"), 1e-8));
  CHECK(norm(barycenter(d) - dual_matrix(diag({2, -0.3}))) <= 1e-9);
  REQUIRE(d.cert);
  CHECK(verify_laminate(d, *d.cert, 1e-9).pass);
  DualityReport back;
  Measure dd = duality_swap(d, 3, back);
  CHECK(back.pass);
  for (std::size_t i = 0; i < nu.atoms.size(); ++i) CHECK(norm(dd.atoms[i].M - nu.atoms[i].M) <= 1e-12);
  Measure off = Measure::dirac(diag({2, 2}));
  CHECK_THROWS_AS(duality_swap(off, 1.5, r), Error);
}

TEST_CASE("dual matrix example") {
  double l = 4, p = 1.5;
  Mat X = diag({l, std::pow(l, p - 1)});
  Mat Y = dual_matrix(X);
  CHECK(Y(0, 0) == doctest::Approx(std::pow(l, p - 1)));
  CHECK(Y(1, 1) == doctest::Approx(l));
  CHECK(norm(dual_matrix(Y) - X) == 0);
}
