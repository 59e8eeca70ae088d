#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>

#include "lf/error.hpp"
#include "lf/io.hpp"

using namespace lf;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::internal;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("matrix json") {
  Mat m(2, 3);
  m << 1, -2.5, 0, 1e-300, 3, 0.1;
  Json j = to_json(m);
  CHECK(j["rows"] == 2);
  CHECK(j["cols"] == 3);
  Mat back = mat_from_json(parse_json(dump_json(j)));
  CHECK(back == m);
  CHECK(parse_matrix_arg("diag(3,5,0,0)") == diag({3, 5, 0, 0}));
  CHECK(parse_matrix_arg(R"({"rows":1,"cols":2,"entries":[[1,2]]})")(0, 1) == 2);
  CHECK(code_of([] { mat_from_json(parse_json(R"({"rows":2,"cols":2,"entries":[[1,2]]})")); }) == Errc::parse_error);
  CHECK(code_of([] { mat_from_json(parse_json(R"({"rows":1,"cols":2,"entries":[[1,"x"]]})")); }) ==
        Errc::parse_error);
}

TEST_CASE("parse errors carry line and column") {
  std::string text = "{\"rows\":2,\n \"cols\":2,\n \"entries\":[[1,2],[3,]]}";
  std::string msg = message_of([&] { parse_json(text, "a.json"); });
  CHECK(msg.rfind("a.json:3:", 0) == 0);
  CHECK(code_of([&] { parse_json(text); }) == Errc::parse_error);
  CHECK(message_of([] { parse_json("[1 2]", "x"); }).rfind("x:1:4", 0) == 0);
}

TEST_CASE("weights keep exactness") {
  CHECK(to_json(Weight::ratio(1, 4)) == "1/4");
  CHECK(weight_from_json(Json("3/8")).rational() == Rational(3, 8));
  CHECK(weight_from_json(Json(2)).exact());
  CHECK_FALSE(weight_from_json(Json(0.25)).exact());
  CHECK(code_of([] { weight_from_json(Json("a/b")); }) == Errc::parse_error);
}

TEST_CASE("measure round trip") {
  auto s = example_staircase("rank_drop", diag({3, 5, 0, 0}), {{"m", 2}});
  Measure nu = build_truncation(s, 6);
  std::string a = dump_json(to_json(nu), true);
  Measure back = measure_from_json(parse_json(a));
  CHECK(dump_json(to_json(back), true) == a);
  CHECK(verify_laminate(back, *back.cert).pass);
  CHECK(back.mass().rational() == 1);
  int residual = 0;
  for (const auto& x : back.atoms) residual += x.residual;
  CHECK(residual == 1);
}

TEST_CASE("map round trip") {
  Mat A1 = Mat::Zero(2, 2), A2 = Mat::Zero(2, 2);
  A1(0, 0) = 1;
  A2(0, 0) = -1;
  PiecewiseAffineMap m = roof(Mat::Zero(2, 2), Vec::Zero(2), A1, A2, 0.5, Domain::make_box({0, 0}, {1, 1}), 0.05);
  std::string a = dump_json(to_json(m));
  PiecewiseAffineMap back = map_from_json(parse_json(a));
  CHECK(dump_json(to_json(back)) == a);
  for (double x : {0.1, 0.37, 0.8})
    for (double y : {0.05, 0.5, 0.93}) CHECK((back.eval(Vec2(x, y)).u - m.eval(Vec2(x, y)).u).norm() == 0);
  CHECK(verify_map(back, 0.5, 1000).pass);
  Json bad = parse_json(a);
  bad["root"] = 7;
  CHECK(code_of([&] { map_from_json(bad); }) == Errc::parse_error);
  Json cyc = parse_json(a);
  cyc["templates"][0]["classes"][0]["child"] = 0;
  CHECK(code_of([&] { map_from_json(cyc); }) == Errc::parse_error);
}

TEST_CASE("non-finite numbers") {
  CHECK(num(INFINITY) == "inf");
  CHECK(std::isinf(get_num(Json("inf"), "x")));
  CHECK(get_num(Json(1.5), "x") == 1.5);
  CHECK(code_of([] { get_num(Json("one"), "x"); }) == Errc::parse_error);
}

TEST_CASE("tail report json mirrors the csv") {
  Measure nu = Measure::dirac(diag({2, 0}));
  TailReport r = verify_weak_tail(nu, 2, 2, 2, Side::upper, {1, 3});
  Json j = to_json(r);
  REQUIRE(j["rows"].size() == 2);
  CHECK(j["rows"][0]["verdict"] == "pass");
  CHECK(r.csv().rfind("t,tail,upper_env,lower_env,verdict\n", 0) == 0);
}
