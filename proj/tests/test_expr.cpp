#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ldt/expr.hpp"

using namespace ldt;

TEST_CASE("arithmetic, precedence, right-associative power") {
  auto e = expr::compile("1 + 2*3 - 4/2", 1);
  CHECK(e({0.0}) == doctest::Approx(5.0));
  CHECK(expr::compile("2^3^2", 1)({0.0}) == doctest::Approx(512.0));  // 2^(3^2)
  CHECK(expr::compile("-x1^2", 1)({3.0}) == doctest::Approx(-9.0));
  CHECK(expr::compile("(1+2)*(3-5)", 1)({0.0}) == doctest::Approx(-6.0));
}

TEST_CASE("state variables and functions") {
  auto e = expr::compile("x1 - x1^3", 1);
  CHECK(e({0.5}) == doctest::Approx(0.5 - 0.125));
  auto trig = expr::compile("sin(x1)^2 + cos(x1)^2", 1);
  CHECK(trig({0.7}) == doctest::Approx(1.0));
  CHECK(expr::compile("exp(x1)", 1)({1.0}) == doctest::Approx(std::exp(1.0)));
  auto two = expr::compile("x2 - x1", 2);
  CHECK(two({1.0, 4.0}) == doctest::Approx(3.0));
}

TEST_CASE("named parameters fold to constants") {
  auto e = expr::compile("-b*x1", 1, {{"b", 2.5}});
  CHECK(e({2.0}) == doctest::Approx(-5.0));
}

TEST_CASE("momentum variables need a second argument") {
  auto e = expr::compile("x1*y1", 1);
  CHECK(e({2.0}, {3.0}) == doctest::Approx(6.0));
  CHECK_THROWS_AS(e({2.0}), InvalidParam);
}

TEST_CASE("parse errors carry position and reason") {
  CHECK_THROWS_AS(expr::compile("x1 +", 1), ConfigError);
  CHECK_THROWS_AS(expr::compile("foo(x1)", 1), ConfigError);
  CHECK_THROWS_AS(expr::compile("x3", 2), ConfigError);
  CHECK_THROWS_AS(expr::compile("x1 @ 2", 1), ConfigError);
  CHECK_THROWS_AS(expr::compile("(x1", 1), ConfigError);
  CHECK_THROWS_AS(expr::compile("unknown_symbol", 1), ConfigError);
}

TEST_CASE("evaluation is re-entrant on a shared tree") {
  auto e = expr::compile("exp(-x1^2)", 1);
  const auto copy = e;  // shares the tree
  CHECK(e({1.0}) == copy({1.0}));
}
