#include <doctest.h>

#include <cmath>
#include <string>

#include "ergo/errors.hpp"
#include "ergo/expr.hpp"

using namespace ergo;

namespace {
double ev(const std::string& s, double x = 0.0) { return parse_expression(s)->eval(x); }
}  // namespace

TEST_SUITE("expr") {

TEST_CASE("literals and arithmetic precedence") {
  CHECK(ev("2+3*4") == doctest::Approx(14.0).epsilon(1e-15));
  CHECK(ev("(2+3)*4") == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(ev("1/4") == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(ev("7-2-3") == doctest::Approx(2.0).epsilon(1e-15));  // left associative
  CHECK(ev("12/3/2") == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(ev(" 1 +\t2 ") == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(ev("2.5e-1") == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("power is right associative and binds above unary minus") {
  CHECK(ev("2^3^2") == doctest::Approx(512.0).epsilon(1e-15));
  CHECK(ev("2*3^2") == doctest::Approx(18.0).epsilon(1e-15));
  // factor := unary ('^' factor)?  so the minus is part of the base
  CHECK(ev("-2^2") == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(ev("-(2^2)") == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(ev("--3") == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("functions and the variable") {
  CHECK(ev("exp(1)") == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(ev("ln(exp(2))") == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(ev("sin(0)") == doctest::Approx(0.0));
  CHECK(ev("cos(0)") == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ev("x^2+1", 3.0) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(ev("x*exp(-x)", 2.0) == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-15));
  CHECK(ev("sin(x)^2+cos(x)^2", 0.7) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("compile_expression wraps the parse") {
  auto f = compile_expression("3*x - 1");
  CHECK(f(2.0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(f(-1.0) == doctest::Approx(-4.0).epsilon(1e-15));
}

TEST_CASE("syntax errors name the position") {
  CHECK_THROWS_AS(parse_expression("2+"), validation_error);
  CHECK_THROWS_AS(parse_expression("(1"), validation_error);
  CHECK_THROWS_AS(parse_expression("1 2"), validation_error);
  CHECK_THROWS_AS(parse_expression("foo(2)"), validation_error);
  CHECK_THROWS_AS(parse_expression(""), validation_error);
  try {
    parse_expression("2+*3");
    FAIL("expected a validation_error");
  } catch (const validation_error& e) {
    CHECK(std::string(e.what()).find("position") != std::string::npos);
  }
}

}  // TEST_SUITE
