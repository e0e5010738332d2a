#include <doctest.h>

#include <cmath>
#include <vector>

#include "distcurv/expr.hpp"

using namespace distcurv;
namespace ex = distcurv::expr;

namespace {

double ev(const ex::ExprPtr& e, double u1, double u2, double u3) {
  return ex::eval(e, Vec3{u1, u2, u3});
}

double ev(const std::string& text, double u1, double u2, double u3) {
  return ev(ex::parse(text), u1, u2, u3);
}

// Central finite difference of e along axis.
double fd(const ex::ExprPtr& e, int axis, Vec3 u, double h = 1e-6) {
  Vec3 up = u, dn = u;
  up[axis] += h;
  dn[axis] -= h;
  return (ex::eval(e, up) - ex::eval(e, dn)) / (2 * h);
}

}  // namespace

TEST_CASE("parse/eval basics") {
  CHECK(ev("1+2*3", 0, 0, 0) == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(ev("(1+2)*3", 0, 0, 0) == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(ev("u1+10*u2+100*u3", 1, 2, 3) == doctest::Approx(321.0));
  CHECK(ev("2*pi", 0, 0, 0) == doctest::Approx(2 * M_PI));
  CHECK(ev("sin(pi/2)", 0, 0, 0) == doctest::Approx(1.0));
  CHECK(ev("sqrt(u1^2+u2^2)", 3, 4, 0) == doctest::Approx(5.0));
  CHECK(ev("1.5e-3", 0, 0, 0) == doctest::Approx(0.0015));
  CHECK(ev(".5", 0, 0, 0) == doctest::Approx(0.5));
  CHECK(ev("atan(1)*4", 0, 0, 0) == doctest::Approx(M_PI));
  CHECK(ev("tanh(0)", 0, 0, 0) == doctest::Approx(0.0));
  CHECK(ev("cosh(1)-sinh(1)", 0, 0, 0) == doctest::Approx(std::exp(-1.0)));
  CHECK(ev("log(exp(2))", 0, 0, 0) == doctest::Approx(2.0));
}

TEST_CASE("operator precedence and associativity") {
  // '^' is right-associative: 2^3^2 = 2^9.
  CHECK(ev("2^3^2", 0, 0, 0) == doctest::Approx(512.0));
  // Unary minus binds looser than '^'.
  CHECK(ev("-2^2", 0, 0, 0) == doctest::Approx(-4.0));
  CHECK(ev("(-2)^2", 0, 0, 0) == doctest::Approx(4.0));
  CHECK(ev("2^-3", 0, 0, 0) == doctest::Approx(0.125));
  CHECK(ev("1-2-3", 0, 0, 0) == doctest::Approx(-4.0));
  CHECK(ev("8/4/2", 0, 0, 0) == doctest::Approx(1.0));
  CHECK(ev("2--3", 0, 0, 0) == doctest::Approx(5.0));
  // Non-constant exponent lowers to exp/log and matches pow.
  CHECK(ev("u1^u2", 2.0, 3.5, 0) == doctest::Approx(std::pow(2.0, 3.5)));
}

TEST_CASE("parse errors carry byte offsets and expectations") {
  auto expect_throw = [](const std::string& text, std::size_t offset) {
    try {
      ex::parse(text);
      FAIL("no exception for: " << text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::parse_error);
      const std::string want = "byte " + std::to_string(offset);
      CHECK_MESSAGE(std::string(e.what()).find(want) != std::string::npos,
                    e.what());
    }
  };
  expect_throw("sin(", 4);       // missing argument
  expect_throw("1+", 2);         // missing rhs
  expect_throw("(1+2", 4);       // missing ')'
  expect_throw("1+2)", 3);       // trailing ')'
  expect_throw("bogus(1)", 0);   // unknown identifier
  expect_throw("sin 1", 4);      // missing '(' after function
  expect_throw("", 0);           // empty input
}

TEST_CASE("constant folding") {
  double v = 0.0;
  CHECK(ex::is_const(ex::parse("1+2*3"), &v));
  CHECK(v == 7.0);
  CHECK(ex::is_const(ex::parse("sin(0)"), &v));
  CHECK(v == 0.0);
  // Folding must not manufacture non-finite constants.
  CHECK_FALSE(ex::is_const(ex::parse("1/0")));
  CHECK_FALSE(ex::is_const(ex::parse("log(0)")));
  // x*0 and x+0 simplify away.
  auto e = ex::mul(ex::coord(0), ex::num(0.0));
  CHECK(ex::is_const(e, &v));
  CHECK(v == 0.0);
  CHECK(ex::add(ex::coord(1), ex::num(0.0))->op == ex::Op::coord);
}

TEST_CASE("derivatives: exact cases") {
  // d/du1 of sin(u1^2) = 2*u1*cos(u1^2)
  auto e = ex::parse("sin(u1^2)");
  auto d = ex::derive(e, 0);
  const double x = 0.7;
  CHECK(ev(d, x, 0, 0) ==
        doctest::Approx(2 * x * std::cos(x * x)).epsilon(1e-14));

  // d/du3 of cos(2*u3) at pi/4 is -2*sin(pi/2) = -2; second derivative -4cos.
  auto c = ex::parse("cos(2*u3)");
  auto dc = ex::derive(c, 2);
  auto ddc = ex::derive(dc, 2);
  CHECK(ev(dc, 0, 0, M_PI / 4) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(ev(ddc, 0, 0, M_PI / 4) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(ev(ddc, 0, 0, 0.0) == doctest::Approx(-4.0).epsilon(1e-14));

  // Derivative of a coordinate w.r.t. the others vanishes.
  CHECK(ex::is_const(ex::derive(ex::coord(0), 1)));
  CHECK(ev(ex::derive(ex::coord(0), 0), 1, 1, 1) == doctest::Approx(1.0));
}

TEST_CASE("derivatives match finite differences on a pool of expressions") {
  const std::vector<std::string> pool = {
      "u1*u2*u3",
      "sin(u1)*cos(u2)+tan(u3/4)",
      "exp(-u1^2-u2^2)",
      "log(2+sin(u3))",
      "sqrt(1+u1^2+u2^2+u3^2)",
      "u1^3-2*u2^2+u3",
      "sinh(u1)*tanh(u2)+cosh(u3/2)",
      "atan(u1*u2)",
      "(1+u3^2)^1.5",
      "u1/(2+cos(u2))",
      "2^(u1/2)",
  };
  SplitMix64 rng(20260819ULL);
  for (const auto& text : pool) {
    auto e = ex::parse(text);
    for (int axis = 0; axis < 3; ++axis) {
      auto d = ex::derive(e, axis);
      for (int k = 0; k < 8; ++k) {
        Vec3 u{rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9),
               rng.uniform(-0.9, 0.9)};
        const double got = ex::eval(d, u);
        const double want = fd(e, axis, u);
        CHECK_MESSAGE(std::abs(got - want) <=
                          1e-5 * (1.0 + std::abs(want)),
                      text << " axis " << axis);
      }
    }
  }
}

TEST_CASE("mixed partial derivatives commute") {
  auto e = ex::parse("sin(u1*u2)*exp(u3/3)+u1^2*u2");
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      auto dij = ex::derive(ex::derive(e, i), j);
      auto dji = ex::derive(ex::derive(e, j), i);
      SplitMix64 rng(7);
      for (int k = 0; k < 5; ++k) {
        Vec3 u{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        CHECK(ex::eval(dij, u) ==
              doctest::Approx(ex::eval(dji, u)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("printer round-trips through the parser") {
  const std::vector<std::string> pool = {
      "1+2*u1",
      "-u1^2",
      "(u1+u2)*(u1-u2)",
      "u1/(u2*u3)",
      "2^3^2",
      "sin(u1)^2+cos(u1)^2",
      "-(u1+u2)",
      "u3^(-2)",
      "1-(2-u1)",
      "exp(u1^u2)",
      "sqrt(u1^2+1)/(1+atan(u2))",
  };
  SplitMix64 rng(99);
  for (const auto& text : pool) {
    auto e = ex::parse(text);
    auto printed = ex::to_string(e);
    auto re = ex::parse(printed);
    for (int k = 0; k < 10; ++k) {
      Vec3 u{rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8),
             rng.uniform(-0.8, 0.8)};
      const double a = ex::eval(e, u);
      const double b = ex::eval(re, u);
      if (std::isnan(a) && std::isnan(b)) continue;  // same domain failure
      CHECK_MESSAGE(a == doctest::Approx(b).epsilon(1e-12),
                    text << " -> " << printed);
    }
  }
  // Negative literals print wrapped so they re-parse in any position.
  CHECK(ex::to_string(ex::num(-4.0)) == "(-4)");
}

TEST_CASE("derivative memoisation returns identical nodes") {
  auto e = ex::parse("sin(u1*u2)+cos(u1*u2)");
  auto d1 = ex::derive(e, 0);
  auto d2 = ex::derive(e, 0);
  CHECK(d1.get() == d2.get());
}

TEST_CASE("EvalTape agrees with tree evaluation") {
  auto e = ex::parse("sin(u1*u2)*exp(u3/3)+u1^2*u2-1/(2+cos(u3))");
  std::vector<ex::ExprPtr> roots = {e};
  for (int axis = 0; axis < 3; ++axis) roots.push_back(ex::derive(e, axis));
  ex::EvalTape tape(roots);
  CHECK(tape.num_roots() == 4);
  ex::EvalTape::Scratch scratch;
  std::vector<double> out(roots.size());
  SplitMix64 rng(123);
  for (int k = 0; k < 50; ++k) {
    Vec3 u{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    tape.eval(u, scratch, out);
    for (std::size_t r = 0; r < roots.size(); ++r) {
      CHECK(out[r] == doctest::Approx(ex::eval(roots[r], u)).epsilon(1e-14));
    }
  }
}

TEST_CASE("evaluation uses IEEE semantics; callers see non-finite values") {
  auto e = ex::parse("1/u1");
  CHECK(std::isinf(ev(e, 0.0, 0, 0)));
  auto l = ex::parse("log(u1)");
  CHECK(std::isnan(ev(l, -1.0, 0, 0)));
}
