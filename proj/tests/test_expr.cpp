#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "foamck/error.hpp"
#include "foamck/expr.hpp"
#include "oracles.hpp"

using namespace foamck;

namespace {

double at(const Expr& e, std::vector<double> x) { return evaluate(e, x); }

}  // namespace

TEST_CASE("derivative of sin(y1 + t) along t is cos(y1 + t)") {
  const Expr e = parse_expr("sin(y1 + t)");
  const Expr d = differentiate(e, MultiIndex{1, 0});
  for (double t : {0.1, 0.7, 2.0}) {
    for (double y : {0.0, 1.3}) CHECK(at(d, {t, y}) == doctest::Approx(std::cos(y + t)).epsilon(1e-14));
  }
}

TEST_CASE("constants differentiate to zero") {
  CHECK(is_zero(differentiate(constant(5.0), MultiIndex{0, 1})));
}

TEST_CASE("bump derivatives vanish outside the support") {
  const Expr b = bump({0.0}, 1.0);
  for (int k = 0; k <= 4; ++k) {
    const Expr d = differentiate(b, MultiIndex{k});
    CHECK(at(d, {2.0}) == 0.0);
    auto f = [&](const std::vector<double>& x) { return evaluate(b, x); };
    CHECK(std::abs(oracle::mixed_difference(f, {2.0}, std::vector<int>(static_cast<std::size_t>(k), 0), 1e-2)) < 1e-12);
  }
  CHECK(outside_support(b, std::vector<double>{2.0}));
}

TEST_CASE("evaluation examples") {
  CHECK(at(parse_expr("t * y1"), {2.0, 3.0}) == 6.0);
  CHECK(at(bump({0.0}, 1.0), {0.0}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(std::abs(at(parse_expr("sin(t)"), {std::numbers::pi})) < 1e-12);
  CHECK(at(bump({0.0}, 1.0), {1.0}) == 0.0);
  CHECK(at(bump({0.0}, 1.0), {-1.5}) == 0.0);
}

TEST_CASE("support boxes") {
  const auto sb = support_box(bump({0.5}, 0.25));
  REQUIRE(sb);
  CHECK(sb->axis(0).lo == doctest::Approx(0.25));
  CHECK(sb->axis(0).hi == doctest::Approx(0.75));

  const Expr two = bump({0.0}, 1.0) + bump({3.0}, 1.0);
  const auto& boxes = support_boxes(two);
  REQUIRE(boxes);
  CHECK(boxes->size() == 2);
  CHECK(outside_support(two, std::vector<double>{1.5}));
  CHECK_FALSE(outside_support(two, std::vector<double>{0.5}));
  CHECK_FALSE(outside_support(two, std::vector<double>{3.5}));

  CHECK_FALSE(support_box(parse_expr("sin(t)")));

  const auto prod = support_box(bump({0.0}, 1.0) * parse_expr("sin(t)"));
  REQUIRE(prod);
  CHECK(prod->axis(0).lo == doctest::Approx(-1.0));
  CHECK(prod->axis(0).hi == doctest::Approx(1.0));
}

TEST_CASE("parser") {
  const Expr e = parse_expr("sin(y1 + t)");
  CHECK(e->op == Op::Sin);
  CHECK(e->args.size() == 1);
  CHECK(e->args[0]->op == Op::Sum);

  CHECK_THROWS_AS(parse_expr("U"), ParseError);
  CHECK_THROWS_AS(parse_expr("J[0,(0)]"), ParseError);
  CHECK(parse_expr("J[0,(1)]", ParseOptions{true})->op == Op::Jet);

  const Expr b = parse_expr("bump((0.5,0.5), 0.1)");
  CHECK(b->op == Op::Bump);
  CHECK(b->center == Point{0.5, 0.5});
  CHECK(b->radius == 0.1);

  CHECK_THROWS_AS(parse_expr("bump((0.5), -1)"), ParseError);
  CHECK_THROWS_AS(parse_expr("sin(t"), ParseError);
  CHECK_THROWS_AS(parse_expr("t + * y1"), ParseError);
}

TEST_CASE("round trip through text") {
  oracle::Gen g(7);
  for (int i = 0; i < 50; ++i) {
    const Expr e = parse_expr(g.analytic(3));
    const Expr back = parse_expr(to_string(e));
    const std::vector<double> x{g.uniform(0, 1), g.uniform(0, 1)};
    CHECK(evaluate(back, x) == doctest::Approx(evaluate(e, x)).epsilon(1e-12));
  }
}

TEST_CASE("smooth step profile") {
  CHECK(smooth_step(0.0) == 0.0);
  CHECK(smooth_step(1.0) == 1.0);
  CHECK(smooth_step(0.5) == doctest::Approx(0.5));
  const Expr s = step(0, 0.2, 0.4, true);
  CHECK(at(s, {0.1}) == 0.0);
  CHECK(at(s, {0.5}) == 1.0);
  const Expr f = step(0, 0.2, 0.4, false);
  CHECK(at(f, {0.1}) == 1.0);
  CHECK(at(f, {0.5}) == 0.0);
}

TEST_CASE("property: symbolic derivatives agree with finite differences") {
  oracle::Gen g(2024);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Expr e = parse_expr(g.analytic(3));
    MultiIndex p{0, 0};
    const int order = g.integer(1, 3);
    std::vector<int> axes;
    for (int k = 0; k < order; ++k) {
      const int a = g.integer(0, 1);
      ++p[static_cast<std::size_t>(a)];
      axes.push_back(a);
    }
    const std::vector<double> x{g.uniform(0.1, 0.9), g.uniform(0.1, 0.9)};
    const double sym = evaluate(differentiate(e, p), x);
    auto f = [&](const std::vector<double>& y) { return evaluate(e, y); };
    const double step = order == 3 ? 1e-2 : 2e-3;
    const double fd = oracle::mixed_difference(f, x, axes, step);
    CHECK(std::abs(sym - fd) <= std::max(1e-6, 1e-6 * std::abs(sym)));
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("property: derivatives of cutoff expressions agree with finite differences inside the support") {
  const Expr e = bump({0.5, 0.5}, 0.4) * parse_expr("cos(t + 2 * y1)") + step(1, 0.3, 0.7, true) * parse_expr("t^2");
  oracle::Gen g(11);
  for (int trial = 0; trial < 60; ++trial) {
    const std::vector<double> x{g.uniform(0.35, 0.65), g.uniform(0.35, 0.65)};
    const int order = g.integer(1, 3);
    MultiIndex p{0, 0};
    std::vector<int> axes;
    for (int k = 0; k < order; ++k) {
      const int a = g.integer(0, 1);
      ++p[static_cast<std::size_t>(a)];
      axes.push_back(a);
    }
    // The step profile is too steep for nested differences; difference the
    // next lower derivative once instead, so each order is checked against
    // the one below it.
    const double sym = evaluate(differentiate(e, p), x);
    MultiIndex lower = p;
    --lower[static_cast<std::size_t>(axes.back())];
    const Expr below = differentiate(e, lower);
    auto f = [&](const std::vector<double>& y) { return evaluate(below, y); };
    const double fd = oracle::central_difference(f, x, axes.back(), 1e-4);
    CHECK(std::abs(sym - fd) <= std::max(1e-6, 1e-6 * std::abs(sym)));
  }
}

TEST_CASE("differentiator memo reuses shared subtrees") {
  Differentiator d;
  const Expr e = parse_expr("sin(t * y1) * cos(t * y1)");
  const Expr a = d.derive(e, 0);
  const Expr b = d.derive(e, 0);
  CHECK(a.get() == b.get());
  CHECK(structurally_equal(d.derive(e, MultiIndex{1, 1}), differentiate(e, MultiIndex{1, 1})));
}
