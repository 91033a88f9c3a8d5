#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "foamck/error.hpp"
#include "foamck/sets.hpp"
#include "oracles.hpp"

using namespace foamck;

namespace {

DomainBox unit1() { return DomainBox({Interval{0.0, 1.0}}); }
DomainBox square(double u) { return DomainBox({Interval{0.0, u}, Interval{0.0, u}}); }

SingularitySet slice_t(const DomainBox& d, double t) {
  SingularitySet s(d, SetClass::NowhereDense);
  s.add(SingPrimitive::make_box(Box({Interval{t, t}, d.axis(1)})));
  return s;
}

SingularitySet points1(std::initializer_list<double> xs) {
  SingularitySet s(unit1(), SetClass::NowhereDense);
  for (double x : xs) s.add(SingPrimitive::point(std::vector<double>{x}));
  return s;
}

SingularitySet dyadics(std::size_t budget = 256) {
  SingularitySet s(unit1(), SetClass::BaireI);
  s.set_enumerator(adic_points(unit1(), 2), budget);
  return s;
}

}  // namespace

TEST_CASE("class names round trip and join as max") {
  for (SetClass c : {SetClass::NowhereDense, SetClass::BaireI, SetClass::DenseComplement}) {
    CHECK(parse_class(class_name(c)) == c);
  }
  CHECK(class_name(SetClass::NowhereDense) == "ND");
  CHECK_THROWS(parse_class("XYZ"));
}

TEST_CASE("unions") {
  const auto d = square(3.0);
  const auto u = union_sets(slice_t(d, 1.0), slice_t(d, 2.0), 0.1);
  CHECK(u.set_class() == SetClass::NowhereDense);
  CHECK(u.primitives().size() == 2);
  CHECK(u.contains(std::vector<double>{1.0, 0.5}));
  CHECK(u.contains(std::vector<double>{2.0, 2.5}));
  CHECK_FALSE(u.contains(std::vector<double>{1.5, 0.5}));

  SingularitySet tri(unit1(), SetClass::BaireI);
  tri.set_enumerator(adic_points(unit1(), 3), 64);
  const auto both = union_sets(dyadics(64), tri, 0.01);
  CHECK(both.set_class() == SetClass::BaireI);
  CHECK(both.contains(std::vector<double>{0.5}));
  CHECK(both.contains(std::vector<double>{1.0 / 3.0}));
  CHECK(both.contains(std::vector<double>{0.25}));
  CHECK(both.contains(std::vector<double>{2.0 / 9.0}));
  // Interleaving alternates the two families.
  std::size_t dy = 0, tr = 0;
  for (std::size_t k = 0; k < 20; ++k) {
    const double x = both.primitives()[k].as_point()[0];
    if (oracle::is_dyadic(x, 20)) ++dy;
    else ++tr;
  }
  CHECK(dy == 10);
  CHECK(tr == 10);

  const SingularitySet s = slice_t(d, 1.0);
  const SingularitySet e(d, SetClass::NowhereDense);
  CHECK(same_set(union_sets(s, e, 0.1), s));

  const SingularitySet fat = [&] {
    SingularitySet f(d, SetClass::NowhereDense);
    f.set_enumerator(grid_points(d, 0.05), 4000);
    return f;
  }();
  DenseCheckOptions nodes;
  nodes.mode = SampleMode::GridNodes;
  CHECK_THROWS_AS(union_sets(fat, s, 0.1, nodes), ComplementNotDense);
}

TEST_CASE("dense complement checks") {
  CHECK(is_complement_dense_at(slice_t(square(2.0), 1.0), 0.1).outcome == DenseOutcome::Dense);

  SingularitySet q(unit1(), SetClass::DenseComplement);
  q.set_enumerator(rational_points(unit1(), 64));
  CHECK(is_complement_dense_at(q, 0.01).outcome == DenseOutcome::Dense);

  // Every cell corner is a node of a grid twice as fine as the cells.
  SingularitySet g(square(2.0), SetClass::NowhereDense);
  g.set_enumerator(grid_points(square(2.0), 0.25), 1000);
  DenseCheckOptions nodes;
  nodes.mode = SampleMode::GridNodes;
  nodes.parallel = false;
  const auto r = is_complement_dense_at(g, 0.5, nodes);
  CHECK(r.outcome == DenseOutcome::NotDense);
  REQUIRE(r.failing_cell);
  CHECK(r.failing_cell->axis(0).lo == 0.0);
  // Jittered samples avoid the nodes.
  CHECK(is_complement_dense_at(g, 0.5).outcome == DenseOutcome::Dense);

  DenseCheckOptions tiny;
  tiny.sample_budget = 10;
  CHECK(is_complement_dense_at(q, 0.01, tiny).outcome == DenseOutcome::Inconclusive);
  CHECK_THROWS_AS(is_complement_dense_at(q, 2.0), PreconditionError);
}

TEST_CASE("dense check witnesses lie outside the set, serial and parallel agree") {
  const auto s = slice_t(square(2.0), 1.0);
  DenseCheckOptions a, b;
  a.keep_witnesses = b.keep_witnesses = true;
  b.parallel = false;
  const auto ra = is_complement_dense_at(s, 0.1, a);
  const auto rb = is_complement_dense_at(s, 0.1, b);
  CHECK(ra.witnesses == rb.witnesses);
  CHECK(ra.samples_used == rb.samples_used);
  for (const auto& w : ra.witnesses) CHECK_FALSE(s.contains(w));
}

TEST_CASE("enumerations against direct membership") {
  const auto d = dyadics(200);
  std::set<double> seen;
  for (const auto& p : d.primitives()) {
    const double x = p.as_point()[0];
    CHECK(oracle::is_dyadic(x, 30));
    CHECK(x > 0.0);
    CHECK(x < 1.0);
    seen.insert(x);
  }
  CHECK(seen.size() == 200);
  CHECK(d.truncated());
  // Levels come in order: the first 2^L - 1 members are exactly the level <= L points.
  for (std::size_t k = 0; k < 127; ++k) CHECK(oracle::is_dyadic(d.primitives()[k].as_point()[0], 7));

  const auto q = rational_points(unit1(), 64);
  REQUIRE(q->count());
  CHECK(*q->count() == oracle::farey_interior_count(64));
  for (std::size_t k = 0; k < *q->count(); ++k) CHECK(oracle::is_rational_with_den(q->at(k)->as_point()[0], 64));
  CHECK_FALSE(q->at(*q->count()));
  CHECK_THROWS_AS(rational_points(square(1.0), 4), PreconditionError);
}

TEST_CASE("limsup representations") {
  SUBCASE("constant family over N") {
    const auto s = points1({0.25, 0.5});
    const auto f = constant_family(s);
    CHECK(limsup_contains(f, std::vector<double>{0.25}, 16).outcome == LimsupOutcome::In);
    const auto out = limsup_contains(f, std::vector<double>{0.3}, 16);
    CHECK(out.outcome == LimsupOutcome::Out);
    CHECK(out.lambda);
  }
  SUBCASE("finite subsets of a three-point set") {
    const auto s = points1({0.25, 0.5, 0.75});
    const auto f = finite_subset_representation(s);
    REQUIRE(f.poset->size());
    CHECK(*f.poset->size() == 7);
    for (double x : {0.25, 0.5, 0.75}) CHECK(limsup_contains(f, std::vector<double>{x}, 64).outcome == LimsupOutcome::In);
    CHECK(limsup_contains(f, std::vector<double>{0.6}, 64).outcome == LimsupOutcome::Out);
    for (std::size_t k = 0; k < 7; ++k) {
      const Index a = f.poset->element(k);
      CHECK(f.sigma(a).size() == a.key.size());
    }
  }
  SUBCASE("singleton set needs one element") {
    const auto f = finite_subset_representation(points1({0.5}));
    REQUIRE(f.poset->size());
    CHECK(*f.poset->size() == 1);
    CHECK(limsup_contains(f, std::vector<double>{0.5}, 1).outcome == LimsupOutcome::In);
    CHECK(limsup_contains(f, std::vector<double>{0.4}, 1).outcome == LimsupOutcome::Out);
  }
  SUBCASE("alternating family") {
    const double a = 0.2, b = 0.7;
    LimsupFamily f{std::make_shared<NaturalPoset>(),
                   [=](const Index& i) {
                     return std::vector<SingPrimitive>{SingPrimitive::point(std::vector<double>{i.key[0] % 2 ? b : a})};
                   },
                   "alternating"};
    CHECK(limsup_contains(f, std::vector<double>{a}, 32).outcome == LimsupOutcome::In);
    CHECK(limsup_contains(f, std::vector<double>{b}, 32).outcome == LimsupOutcome::In);
    CHECK(limsup_contains(f, std::vector<double>{0.5}, 32).outcome == LimsupOutcome::Out);
    CHECK(limsup_contains(f, std::vector<double>{a}, 1).outcome == LimsupOutcome::Inconclusive);
  }
  SUBCASE("dyadics: lazy subsets agree with direct membership on 50 points") {
    const auto s = dyadics(256);
    const auto f = finite_subset_representation(s);
    CHECK_FALSE(f.poset->size());
    oracle::Gen g(5);
    for (int i = 0; i < 50; ++i) {
      const double x = i % 2 ? s.primitives()[static_cast<std::size_t>(g.integer(0, 100))].as_point()[0]
                             : g.uniform(0.0, 1.0);
      const bool direct = oracle::is_dyadic(x, 8);
      const auto v = limsup_contains(f, std::vector<double>{x}, 512);
      CHECK(v.outcome == (direct ? LimsupOutcome::In : LimsupOutcome::Out));
    }
  }
}

TEST_CASE("measure bounds") {
  const auto d = square(3.0);
  SingularitySet s(d, SetClass::NowhereDense);
  for (double t : {0.5, 1.0, 1.5}) s.add(SingPrimitive::make_box(Box({Interval{t, t}, d.axis(1)})));
  CHECK(measure_bound(s).bound == 0.0);

  const double eps = 0.05;
  SingularitySet slabs(DomainBox({Interval{0.0, 1.0}, Interval{0.0, 1.0}}), SetClass::NowhereDense);
  double widths = 0.0;
  for (int k = 1; k <= 30; ++k) {
    const double w = eps / std::ldexp(1.0, k);
    const double c = 1.0 / (k + 1.0);
    slabs.add(SingPrimitive::make_slab(Box({Interval{c - w / 2, c + w / 2}, Interval{0.0, 1.0}}), SlabInfo{0, c, w}));
    widths += w;
  }
  CHECK(measure_bound(slabs).bound <= eps);
  CHECK(measure_bound(slabs).bound == doctest::Approx(widths));

  CHECK(measure_bound(SingularitySet(d, SetClass::NowhereDense)).bound == 0.0);
  CHECK(measure_bound(dyadics()).partial);
}

TEST_CASE("primitives validate their shape") {
  CHECK_THROWS_AS(SingPrimitive::make_box(Box({Interval{0.0, 1.0}, Interval{0.0, 1.0}})), PreconditionError);
  CHECK_THROWS_AS(SingPrimitive::point(std::vector<double>{std::nan("")}), PreconditionError);
  const auto p = SingPrimitive::point(std::vector<double>{0.5, 0.25});
  CHECK(p.is_point());
  CHECK(p.as_point() == Point{0.5, 0.25});
}

TEST_CASE("text format round trip") {
  const auto d = square(2.0);
  SingularitySet s(d, SetClass::BaireI);
  s.add(SingPrimitive::point(std::vector<double>{0.5, 0.5}));
  s.add(SingPrimitive::make_box(Box({Interval{1.0, 1.0}, Interval{0.0, 2.0}})));
  s.set_enumerator(adic_points(d, 2), 40);
  s.epsilon = 0.01;
  const auto back = parse_sigma(to_text(s));
  CHECK(same_set(back, s));
  CHECK(back.set_class() == SetClass::BaireI);
  CHECK(back.budget() == 40);
  REQUIRE(back.epsilon);
  CHECK(*back.epsilon == 0.01);

  CHECK_THROWS_AS(parse_sigma("sigma ND 0 1\npoint 0.5 0.5\n"), ParseError);
  CHECK_THROWS_AS(parse_sigma("sigma QQ 0 1\n"), ParseError);
  CHECK_THROWS_AS(parse_sigma("sigma ND 0 1\nenum bogus\n"), ParseError);
  const auto r = parse_sigma("sigma DENSE 0 1\nenum rational 8\n");
  CHECK(r.primitives().size() == oracle::farey_interior_count(8));
}
